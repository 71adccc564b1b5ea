#include "spectralcf/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

namespace spectralcf {

ItemKnnModel fit_itemknn(const InteractionSet& train, Index k_neighbors) {
  if (k_neighbors < 1) throw Error("k_neighbors must be >= 1");
  const Index n_items = train.n_items();
  std::vector<std::vector<Index>> users_of(static_cast<std::size_t>(n_items));
  for (Index u = 0; u < train.n_users(); ++u) {
    for (Index i : train.items_of(u)) users_of[i].push_back(u);
  }

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<Index> co(static_cast<std::size_t>(n_items), 0);
  std::vector<Index> touched;
  for (Index i = 0; i < n_items; ++i) {
    touched.clear();
    for (Index u : users_of[i]) {
      for (Index j : train.items_of(u)) {
        if (j <= i) continue;
        if (co[j]++ == 0) touched.push_back(j);
      }
    }
    std::sort(touched.begin(), touched.end());
    const auto deg_i = static_cast<double>(users_of[i].size());
    for (Index j : touched) {
      const auto deg_j = static_cast<double>(users_of[j].size());
      const double s = std::min(1.0, static_cast<double>(co[j]) / std::sqrt(deg_i * deg_j));
      triplets.emplace_back(i, j, s);
      triplets.emplace_back(j, i, s);
      co[j] = 0;
    }
  }

  ItemKnnModel model;
  model.k_neighbors = k_neighbors;
  model.similarity.resize(n_items, n_items);
  model.similarity.setFromTriplets(triplets.begin(), triplets.end());
  model.similarity.makeCompressed();

  model.neighbors.resize(static_cast<std::size_t>(n_items));
  for (Index i = 0; i < n_items; ++i) {
    auto& list = model.neighbors[i];
    for (SparseMatrix::InnerIterator it(model.similarity, i); it; ++it) list.push_back({it.col(), it.value()});
    const auto better = [](const Neighbor& a, const Neighbor& b) {
      if (a.similarity != b.similarity) return a.similarity > b.similarity;
      return a.item < b.item;
    };
    const auto keep = std::min<std::size_t>(list.size(), static_cast<std::size_t>(k_neighbors));
    std::partial_sort(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(keep), list.end(), better);
    list.resize(keep);
  }
  return model;
}

ItemKnnModel itemknn_from_neighbors(Index k_neighbors, std::vector<std::vector<Neighbor>> neighbors) {
  ItemKnnModel model;
  model.k_neighbors = k_neighbors;
  model.neighbors = std::move(neighbors);
  return model;
}

double score_itemknn(const ItemKnnModel& model, const InteractionSet& train, Index user, Index item) {
  if (item < 0 || item >= static_cast<Index>(model.neighbors.size())) throw DimensionError("item index out of range");
  double s = 0.0;
  for (const auto& nb : model.neighbors[item]) {
    if (train.contains(user, nb.item)) s += nb.similarity;
  }
  return s;
}

Scorer itemknn_scorer(const ItemKnnModel& model, const InteractionSet& train) {
  return [&model, &train](Index user, std::span<double> scores) {
    if (scores.size() != model.neighbors.size()) throw DimensionError("score buffer size mismatch");
    std::vector<char> liked(scores.size(), 0);
    for (Index j : train.items_of(user)) liked[j] = 1;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      double s = 0.0;
      for (const auto& nb : model.neighbors[i]) {
        if (liked[nb.item]) s += nb.similarity;
      }
      scores[i] = s;
    }
  };
}

BprMfTrainResult fit_bpr_mf(const InteractionSet& train, const BprMfConfig& config, const TrainConfig& train_config,
                            const EpochCallback& on_epoch) {
  if (config.dim < 1) throw Error("latent dimension must be >= 1");
  train_config.validate();

  BprMfTrainResult result;
  std::mt19937_64 init_rng(config.seed);
  std::normal_distribution<double> dist(config.init_mean, config.init_stddev);
  auto gaussian = [&](Index rows) {
    Matrix m(rows, config.dim);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < config.dim; ++c) m(r, c) = dist(init_rng);
    }
    return m;
  };
  BprMfModel& model = result.model;
  model.user_factors = gaussian(train.n_users());
  model.item_factors = gaussian(train.n_items());

  Matrix acc_users = Matrix::Zero(model.user_factors.rows(), config.dim);
  Matrix acc_items = Matrix::Zero(model.item_factors.rows(), config.dim);
  TripleSampler sampler(train, train_config.seed);
  const RmsProp opt{train_config.learning_rate, train_config.rms_decay, train_config.rms_epsilon};
  const Regularizer reg = train_config.regularizer();
  std::optional<double> last_finite;

  for (Index epoch = 1; epoch <= train_config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (Index step = 0; step < train_config.steps_per_epoch; ++step) {
      const auto batch = sampler.next_batch(train_config.batch_size);
      FactorGradient g;
      try {
        g = bpr_factor_gradient(model.user_factors, model.item_factors, batch, reg);
      } catch (const NumericError& e) {
        throw TrainingError(epoch, last_finite, e.what());
      }
      rmsprop_update(model.user_factors, g.users, acc_users, opt);
      rmsprop_update(model.item_factors, g.items, acc_items, opt);
      if (!model.user_factors.allFinite() || !model.item_factors.allFinite()) {
        throw TrainingError(epoch, last_finite, "parameters became non-finite");
      }
      epoch_loss += g.loss;
    }
    epoch_loss /= static_cast<double>(train_config.steps_per_epoch);
    last_finite = epoch_loss;
    result.loss_history.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return result;
}

PopularityModel fit_popularity(const InteractionSet& train) {
  PopularityModel model;
  for (Index c : train.item_counts()) model.counts.push_back(static_cast<double>(c));
  return model;
}

Scorer popularity_scorer(const PopularityModel& model) {
  return [&model](Index, std::span<double> scores) {
    if (scores.size() != model.counts.size()) throw DimensionError("score buffer size mismatch");
    std::copy(model.counts.begin(), model.counts.end(), scores.begin());
  };
}

}  // namespace spectralcf

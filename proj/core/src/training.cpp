#include "spectralcf/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spectralcf {

namespace {

// -ln sigmoid(x) without overflow for either sign of x.
double neg_log_sigmoid(double x) {
  if (x > 0) return std::log1p(std::exp(-x));
  return -x + std::log1p(std::exp(x));
}

std::vector<Index> unique_rows(std::span<const Triple> batch, bool users) {
  std::vector<Index> rows;
  rows.reserve(batch.size() * 2);
  for (const auto& t : batch) {
    if (users) {
      rows.push_back(t.user);
    } else {
      rows.push_back(t.positive);
      rows.push_back(t.negative);
    }
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

double penalty_scale(const Regularizer& reg, std::size_t batch) {
  return reg.divide_by_batch ? reg.weight / static_cast<double>(batch) : reg.weight;
}

void check_triple(const Triple& t, Index n_users, Index n_items) {
  if (t.user < 0 || t.user >= n_users || t.positive < 0 || t.positive >= n_items || t.negative < 0 ||
      t.negative >= n_items) {
    throw DimensionError("triple references an index outside the factor tables");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error("batch size must be >= 1");
  if (epochs < 1) throw Error("epoch count must be >= 1");
  if (steps_per_epoch < 1) throw Error("steps_per_epoch must be >= 1");
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (!(reg >= 0.0)) throw Error("regularization weight must be non-negative");
  if (!(rms_decay > 0.0 && rms_decay < 1.0)) throw Error("rms_decay must lie in (0, 1)");
  if (!(rms_epsilon > 0.0)) throw Error("rms_epsilon must be positive");
}

// --- sampling ------------------------------------------------------------------

namespace {

std::vector<Index> eligible_users(const InteractionSet& train, std::vector<Index>* excluded) {
  std::vector<Index> eligible;
  for (Index u = 0; u < train.n_users(); ++u) {
    const auto n_pos = static_cast<Index>(train.items_of(u).size());
    if (n_pos >= 1 && n_pos < train.n_items()) {
      eligible.push_back(u);
    } else if (excluded != nullptr) {
      excluded->push_back(u);
    }
  }
  if (eligible.empty()) throw EmptyDatasetError("no user has both a positive and a negative item");
  return eligible;
}

std::vector<Triple> draw_batch(const InteractionSet& train, const std::vector<Index>& eligible, Index batch_size,
                               std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick_user(0, eligible.size() - 1);
  std::uniform_int_distribution<Index> pick_item(0, train.n_items() - 1);
  std::vector<Triple> batch;
  batch.reserve(static_cast<std::size_t>(batch_size));
  for (Index b = 0; b < batch_size; ++b) {
    const Index u = eligible[pick_user(rng)];
    const auto items = train.items_of(u);
    std::uniform_int_distribution<std::size_t> pick_pos(0, items.size() - 1);
    const Index pos = items[pick_pos(rng)];
    Index neg = pick_item(rng);
    while (std::binary_search(items.begin(), items.end(), neg)) neg = pick_item(rng);
    batch.push_back({u, pos, neg});
  }
  return batch;
}

}  // namespace

TripleSampler::TripleSampler(const InteractionSet& train, std::uint64_t seed)
    : train_(&train), eligible_(eligible_users(train, &excluded_)), rng_(seed) {}

std::vector<Triple> TripleSampler::next_batch(Index batch_size) {
  return draw_batch(*train_, eligible_, batch_size, rng_);
}

std::vector<Triple> sample_batch(const InteractionSet& train, Index batch_size, std::mt19937_64& rng) {
  return draw_batch(train, eligible_users(train, nullptr), batch_size, rng);
}

// --- loss ----------------------------------------------------------------------

FactorGradient bpr_factor_gradient(const Matrix& users, const Matrix& items, std::span<const Triple> batch,
                                   const Regularizer& reg) {
  if (batch.empty()) throw Error("batch must not be empty");
  FactorGradient g;
  g.users = Matrix::Zero(users.rows(), users.cols());
  g.items = Matrix::Zero(items.rows(), items.cols());
  for (const auto& t : batch) {
    check_triple(t, users.rows(), items.rows());
    const auto vu = users.row(t.user);
    const auto vp = items.row(t.positive);
    const auto vn = items.row(t.negative);
    const double x = vu.dot(vp) - vu.dot(vn);
    g.loss += neg_log_sigmoid(x);
    // d/dx of -ln sigmoid(x) is -sigmoid(-x)
    const double coeff = -1.0 / (1.0 + std::exp(std::min(x, 700.0)));
    g.users.row(t.user) += coeff * (vp - vn);
    g.items.row(t.positive) += coeff * vu;
    g.items.row(t.negative) -= coeff * vu;
  }

  const double w = penalty_scale(reg, batch.size());
  if (w != 0.0) {
    if (reg.scope == RegScope::full_tables) {
      g.loss += w * (users.squaredNorm() + items.squaredNorm());
      g.users += 2.0 * w * users;
      g.items += 2.0 * w * items;
    } else {
      for (Index u : unique_rows(batch, true)) {
        g.loss += w * users.row(u).squaredNorm();
        g.users.row(u) += 2.0 * w * users.row(u);
      }
      for (Index i : unique_rows(batch, false)) {
        g.loss += w * items.row(i).squaredNorm();
        g.items.row(i) += 2.0 * w * items.row(i);
      }
    }
  }
  if (!std::isfinite(g.loss)) throw NumericError("BPR loss is not finite");
  return g;
}

double bpr_loss(const FactorTable& factors, std::span<const Triple> batch, const Regularizer& reg) {
  if (batch.empty()) throw Error("batch must not be empty");
  double loss = 0.0;
  for (const auto& t : batch) {
    check_triple(t, factors.users.rows(), factors.items.rows());
    loss += neg_log_sigmoid(score(factors, t.user, t.positive) - score(factors, t.user, t.negative));
  }
  const double w = penalty_scale(reg, batch.size());
  if (reg.scope == RegScope::full_tables) {
    loss += w * (factors.users.squaredNorm() + factors.items.squaredNorm());
  } else {
    for (Index u : unique_rows(batch, true)) loss += w * factors.users.row(u).squaredNorm();
    for (Index i : unique_rows(batch, false)) loss += w * factors.items.row(i).squaredNorm();
  }
  if (!std::isfinite(loss)) throw NumericError("BPR loss is not finite");
  return loss;
}

double bpr_loss(const FactorTable& factors, std::span<const Triple> batch, double reg_weight) {
  return bpr_loss(factors, batch, Regularizer{reg_weight, RegScope::full_tables, false});
}

// --- backward --------------------------------------------------------------------

Gradients backward(const ModelParams& params, const ConvKernel& kernel, const ModelConfig& config,
                   const ForwardResult& pass, std::span<const Triple> batch, const Regularizer& reg) {
  const LayerTrace& trace = pass.trace;
  const auto layers = static_cast<std::size_t>(config.layers);
  if (trace.activations.size() != layers + 1 || trace.propagated.size() != layers ||
      trace.pre_activations.size() != layers) {
    throw ContractError("backward needs the trace of a forward pass with K=" + std::to_string(config.layers));
  }
  params.check_shapes(config);
  const Index n_users = params.n_users();
  const Index n = n_users + params.n_items();
  if (trace.activations.front().rows() != n || pass.factors.width() != config.factor_width()) {
    throw ContractError("trace does not belong to these parameters");
  }

  const FactorGradient fg = bpr_factor_gradient(pass.factors.users, pass.factors.items, batch, reg);
  Matrix dv(n, config.factor_width());
  dv.topRows(n_users) = fg.users;
  dv.bottomRows(params.n_items()) = fg.items;

  // Column offset of X_k inside V.
  const auto offset = [&](Index k) { return k == 0 ? Index{0} : config.input_dim + (k - 1) * config.filters; };

  Gradients out;
  out.loss = fg.loss;
  out.params = params.zeros_like();

  Matrix dx = dv.middleCols(offset(config.layers), config.filters);
  for (Index k = config.layers - 1; k >= 0; --k) {
    const Matrix& x_next = trace.activations[k + 1];
    const Matrix dz = dx.cwiseProduct(x_next.cwiseProduct((1.0 - x_next.array()).matrix()));
    out.params.filters[k] = trace.propagated[k].transpose() * dz;
    const Index width = k == 0 ? config.input_dim : config.filters;
    dx = dv.middleCols(offset(k), width) + kernel.apply_transpose(dz * params.filters[k].transpose());
  }
  out.params.user_embedding = dx.topRows(n_users);
  out.params.item_embedding = dx.bottomRows(params.n_items());
  return out;
}

// --- optimizer -------------------------------------------------------------------

void rmsprop_update(Matrix& param, const Matrix& grad, Matrix& acc, const RmsProp& opt) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols() || acc.rows() != grad.rows() ||
      acc.cols() != grad.cols()) {
    throw DimensionError("RMSprop shape mismatch");
  }
  acc = opt.decay * acc + (1.0 - opt.decay) * grad.cwiseAbs2();
  param.array() -= opt.learning_rate * grad.array() / (acc.array() + opt.epsilon).sqrt();
}

void rmsprop_step(ModelParams& params, const ModelParams& grads, OptState& state, const RmsProp& opt) {
  if (params.filters.size() != grads.filters.size() || params.filters.size() != state.mean_square.filters.size()) {
    throw DimensionError("RMSprop layer count mismatch");
  }
  rmsprop_update(params.user_embedding, grads.user_embedding, state.mean_square.user_embedding, opt);
  rmsprop_update(params.item_embedding, grads.item_embedding, state.mean_square.item_embedding, opt);
  for (std::size_t k = 0; k < params.filters.size(); ++k) {
    rmsprop_update(params.filters[k], grads.filters[k], state.mean_square.filters[k], opt);
  }
}

// --- training loop ---------------------------------------------------------------

TrainingError::TrainingError(Index epoch, std::optional<double> last_finite_loss, const std::string& what)
    : NumericError("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch), last_finite_loss_(last_finite_loss) {}

TrainResult train(const InteractionSet& train_set, const ConvKernel& kernel, const ModelConfig& model_config,
                  const TrainConfig& train_config, const EpochCallback& on_epoch) {
  model_config.validate();
  train_config.validate();
  if (kernel.size() != train_set.n_users() + train_set.n_items()) {
    throw DimensionError("kernel size does not match the training set");
  }

  TrainResult result;
  result.params = init_params(model_config, train_set.n_users(), train_set.n_items());
  OptState state = OptState::zeros_like(result.params);
  TripleSampler sampler(train_set, train_config.seed);
  result.excluded_users = sampler.excluded_users();

  const RmsProp opt{train_config.learning_rate, train_config.rms_decay, train_config.rms_epsilon};
  const Regularizer reg = train_config.regularizer();
  std::optional<double> last_finite;

  for (Index epoch = 1; epoch <= train_config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (Index step = 0; step < train_config.steps_per_epoch; ++step) {
      const auto batch = sampler.next_batch(train_config.batch_size);
      Gradients grads;
      try {
        const ForwardResult pass = forward(result.params, kernel, model_config);
        grads = backward(result.params, kernel, model_config, pass, batch, reg);
      } catch (const NumericError& e) {
        throw TrainingError(epoch, last_finite, e.what());
      }
      rmsprop_step(result.params, grads.params, state, opt);
      if (!result.params.all_finite()) throw TrainingError(epoch, last_finite, "parameters became non-finite");
      epoch_loss += grads.loss;
    }
    epoch_loss /= static_cast<double>(train_config.steps_per_epoch);
    last_finite = epoch_loss;
    result.loss_history.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return result;
}

}  // namespace spectralcf

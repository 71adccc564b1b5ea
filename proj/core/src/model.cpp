#include "spectralcf/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "spectralcf/errors.hpp"

namespace spectralcf {

namespace {

Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng, std::normal_distribution<double>& dist) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

}  // namespace

void ModelConfig::validate() const {
  if (layers < 1) throw Error("layer count K must be >= 1");
  if (input_dim < 1) throw Error("embedding dimension C must be >= 1");
  if (filters < 1) throw Error("filter count F must be >= 1");
  if (!(init_stddev >= 0.0) || !std::isfinite(init_mean)) throw Error("invalid initializer parameters");
}

void ModelParams::check_shapes(const ModelConfig& config) const {
  if (user_embedding.cols() != config.input_dim || item_embedding.cols() != config.input_dim) {
    throw DimensionError("embedding width differs from C=" + std::to_string(config.input_dim));
  }
  if (static_cast<Index>(filters.size()) != config.layers) {
    throw DimensionError("expected " + std::to_string(config.layers) + " filter matrices, got " +
                         std::to_string(filters.size()));
  }
  for (Index k = 0; k < config.layers; ++k) {
    const Index rows = k == 0 ? config.input_dim : config.filters;
    if (filters[k].rows() != rows || filters[k].cols() != config.filters) {
      throw DimensionError("filter " + std::to_string(k) + " has shape " + std::to_string(filters[k].rows()) + "x" +
                           std::to_string(filters[k].cols()));
    }
  }
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z;
  z.user_embedding = Matrix::Zero(user_embedding.rows(), user_embedding.cols());
  z.item_embedding = Matrix::Zero(item_embedding.rows(), item_embedding.cols());
  for (const auto& f : filters) z.filters.push_back(Matrix::Zero(f.rows(), f.cols()));
  return z;
}

bool ModelParams::all_finite() const {
  if (!user_embedding.allFinite() || !item_embedding.allFinite()) return false;
  return std::all_of(filters.begin(), filters.end(), [](const Matrix& f) { return f.allFinite(); });
}

ModelParams init_params(const ModelConfig& config, Index n_users, Index n_items) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> dist(config.init_mean, config.init_stddev);
  ModelParams p;
  p.user_embedding = gaussian(n_users, config.input_dim, rng, dist);
  p.item_embedding = gaussian(n_items, config.input_dim, rng, dist);
  for (Index k = 0; k < config.layers; ++k) {
    const Index rows = k == 0 ? config.input_dim : config.filters;
    p.filters.push_back(gaussian(rows, config.filters, rng, dist));
  }
  return p;
}

double sigmoid(double z) {
  const double c = std::clamp(z, -500.0, 500.0);
  return 1.0 / (1.0 + std::exp(-c));
}

ForwardResult forward(const ModelParams& params, const ConvKernel& kernel, const ModelConfig& config) {
  params.check_shapes(config);
  const Index n_users = params.n_users();
  const Index n = n_users + params.n_items();
  if (kernel.size() != n) {
    throw DimensionError("kernel has " + std::to_string(kernel.size()) + " vertices, model has " + std::to_string(n));
  }

  ForwardResult out;
  LayerTrace& trace = out.trace;
  Matrix x0(n, config.input_dim);
  x0.topRows(n_users) = params.user_embedding;
  x0.bottomRows(params.n_items()) = params.item_embedding;
  trace.activations.push_back(std::move(x0));

  for (Index k = 0; k < config.layers; ++k) {
    Matrix propagated = kernel.apply(trace.activations.back());
    Matrix z = propagated * params.filters[k];
    Matrix x = z.unaryExpr([](double v) { return sigmoid(v); });
    if (!z.allFinite() || !x.allFinite()) {
      throw NumericError("non-finite activation in layer " + std::to_string(k + 1));
    }
    trace.propagated.push_back(std::move(propagated));
    trace.pre_activations.push_back(std::move(z));
    trace.activations.push_back(std::move(x));
  }

  Matrix v(n, config.factor_width());
  Index col = 0;
  for (const auto& x : trace.activations) {
    v.middleCols(col, x.cols()) = x;
    col += x.cols();
  }
  out.factors.users = v.topRows(n_users);
  out.factors.items = v.bottomRows(params.n_items());
  return out;
}

double score(const FactorTable& factors, Index user, Index item) {
  if (user < 0 || user >= factors.users.rows()) throw DimensionError("user index " + std::to_string(user) + " out of range");
  if (item < 0 || item >= factors.items.rows()) throw DimensionError("item index " + std::to_string(item) + " out of range");
  return factors.users.row(user).dot(factors.items.row(item));
}

Vector score_all(const FactorTable& factors, Index user) {
  if (user < 0 || user >= factors.users.rows()) throw DimensionError("user index " + std::to_string(user) + " out of range");
  return factors.items * factors.users.row(user).transpose();
}

std::vector<Index> top_m(std::span<const double> scores, std::span<const Index> exclude, Index m) {
  if (m < 1) throw Error("cutoff M must be >= 1");
  std::vector<Index> candidates;
  candidates.reserve(scores.size());
  std::size_t ex = 0;
  for (Index i = 0; i < static_cast<Index>(scores.size()); ++i) {
    while (ex < exclude.size() && exclude[ex] < i) ++ex;
    if (ex < exclude.size() && exclude[ex] == i) continue;
    candidates.push_back(i);
  }
  const auto better = [&](Index a, Index b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(m), candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                    better);
  candidates.resize(keep);
  return candidates;
}

std::vector<Index> rank_items(const FactorTable& factors, Index user, std::span<const Index> exclude, Index m) {
  const Vector scores = score_all(factors, user);
  return top_m(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), exclude, m);
}

}  // namespace spectralcf

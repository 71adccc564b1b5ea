#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spectralcf/graph.hpp"
#include "spectralcf/types.hpp"

namespace spectralcf {

struct ModelConfig {
  Index layers = 3;       // K
  Index input_dim = 16;   // C
  Index filters = 16;     // F
  std::uint64_t seed = 0;
  // Gaussian initializer; the second parameter is a standard deviation.
  double init_mean = 0.01;
  double init_stddev = 0.02;

  void validate() const;
  // C + K * F
  Index factor_width() const { return input_dim + layers * filters; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Trainable parameter set: initial user/item embeddings and one filter matrix
// per layer (C x F for layer 0, F x F after that).
struct ModelParams {
  Matrix user_embedding;
  Matrix item_embedding;
  std::vector<Matrix> filters;

  Index n_users() const { return user_embedding.rows(); }
  Index n_items() const { return item_embedding.rows(); }

  // Throws DimensionError when the shape chain does not match `config`.
  void check_shapes(const ModelConfig& config) const;
  ModelParams zeros_like() const;
  bool all_finite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Final latent factors, one row per user / item.
struct FactorTable {
  Matrix users;
  Matrix items;

  Index width() const { return users.cols(); }
};

// Intermediates of one forward pass, kept for the backward pass.
struct LayerTrace {
  // X_0 .. X_K, each N x width.
  std::vector<Matrix> activations;
  // Z_1 .. Z_K
  std::vector<Matrix> pre_activations;
  // kernel * X_k for k = 0 .. K-1
  std::vector<Matrix> propagated;
};

struct ForwardResult {
  FactorTable factors;
  LayerTrace trace;
};

ModelParams init_params(const ModelConfig& config, Index n_users, Index n_items);

// Logistic function with its argument clamped to [-500, 500].
double sigmoid(double z);

// X_{k+1} = sigmoid(kernel * X_k * Theta_k), then V = [X_0, X_1, .., X_K]
// split back into user rows and item rows. Throws NumericError naming the
// layer on overflow.
ForwardResult forward(const ModelParams& params, const ConvKernel& kernel, const ModelConfig& config);

double score(const FactorTable& factors, Index user, Index item);

// Scores of every item for `user`.
Vector score_all(const FactorTable& factors, Index user);

// Items not in `exclude` (sorted ascending), by descending score with ties to
// the lower index, at most `m` of them.
std::vector<Index> top_m(std::span<const double> scores, std::span<const Index> exclude, Index m);

std::vector<Index> rank_items(const FactorTable& factors, Index user, std::span<const Index> exclude, Index m);

}  // namespace spectralcf

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "spectralcf/errors.hpp"
#include "spectralcf/graph.hpp"
#include "spectralcf/ingest.hpp"
#include "spectralcf/model.hpp"

namespace spectralcf {

// (user, liked item, item the user has not interacted with)
struct Triple {
  Index user = 0;
  Index positive = 0;
  Index negative = 0;

  friend bool operator==(const Triple&, const Triple&) = default;
};

enum class RegScope {
  full_tables,  // lambda * (||V_u||^2 + ||V_i||^2) over every row
  batch_rows,   // only rows referenced by the batch, each counted once
};

struct Regularizer {
  double weight = 0.001;
  RegScope scope = RegScope::full_tables;
  // Scale the penalty by 1/B instead of applying it once per batch.
  bool divide_by_batch = false;
};

struct TrainConfig {
  Index batch_size = 1024;
  Index epochs = 200;
  double learning_rate = 0.001;
  double reg = 0.001;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;
  std::uint64_t seed = 0;
  Index steps_per_epoch = 1;
  RegScope reg_scope = RegScope::full_tables;
  bool reg_divide_by_batch = false;

  void validate() const;
  Regularizer regularizer() const { return {reg, reg_scope, reg_divide_by_batch}; }
};

// Draws BPR triples: user uniformly among users that have at least one
// negative, positive uniformly from the user's items, negative uniformly from
// the complement by rejection.
class TripleSampler {
 public:
  TripleSampler(const InteractionSet& train, std::uint64_t seed);

  std::vector<Triple> next_batch(Index batch_size);
  // Users that like every item and therefore never get sampled.
  const std::vector<Index>& excluded_users() const { return excluded_; }

 private:
  const InteractionSet* train_;
  std::vector<Index> excluded_;  // declared first: filled while eligible_ is built
  std::vector<Index> eligible_;
  std::mt19937_64 rng_;
};

std::vector<Triple> sample_batch(const InteractionSet& train, Index batch_size, std::mt19937_64& rng);

// sum_b -ln sigmoid(v_r . v_j - v_r . v_j') + penalty.
double bpr_loss(const FactorTable& factors, std::span<const Triple> batch, const Regularizer& reg);
double bpr_loss(const FactorTable& factors, std::span<const Triple> batch, double reg_weight);

struct FactorGradient {
  double loss = 0.0;
  Matrix users;
  Matrix items;
};

// Loss and its gradient with respect to the factor tables themselves.
FactorGradient bpr_factor_gradient(const Matrix& users, const Matrix& items, std::span<const Triple> batch,
                                   const Regularizer& reg);

struct Gradients {
  double loss = 0.0;
  ModelParams params;
};

// Reverse-mode gradient of bpr_loss through the concatenation, the sigmoid
// layers and the kernel. `pass` must come from forward() on the same params.
Gradients backward(const ModelParams& params, const ConvKernel& kernel, const ModelConfig& config,
                   const ForwardResult& pass, std::span<const Triple> batch, const Regularizer& reg);

// Running mean of squared gradients, shaped like ModelParams.
struct OptState {
  ModelParams mean_square;

  static OptState zeros_like(const ModelParams& params) { return {params.zeros_like()}; }
};

struct RmsProp {
  double learning_rate = 0.001;
  double decay = 0.9;
  double epsilon = 1e-8;
};

// acc <- decay * acc + (1 - decay) * g^2;  p <- p - lr * g / sqrt(acc + eps)
void rmsprop_update(Matrix& param, const Matrix& grad, Matrix& acc, const RmsProp& opt);
void rmsprop_step(ModelParams& params, const ModelParams& grads, OptState& state, const RmsProp& opt);

class TrainingError : public NumericError {
 public:
  TrainingError(Index epoch, std::optional<double> last_finite_loss, const std::string& what);
  Index epoch() const { return epoch_; }
  std::optional<double> last_finite_loss() const { return last_finite_loss_; }

 private:
  Index epoch_;
  std::optional<double> last_finite_loss_;
};

struct TrainResult {
  ModelParams params;
  // Mean batch loss per epoch, measured before that epoch's updates.
  std::vector<double> loss_history;
  std::vector<Index> excluded_users;
};

using EpochCallback = std::function<void(Index epoch, double loss)>;

TrainResult train(const InteractionSet& train_set, const ConvKernel& kernel, const ModelConfig& model_config,
                  const TrainConfig& train_config, const EpochCallback& on_epoch = {});

}  // namespace spectralcf

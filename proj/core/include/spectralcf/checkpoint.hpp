#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <variant>

#include "spectralcf/baselines.hpp"
#include "spectralcf/model.hpp"

namespace spectralcf {

enum class ModelType : std::uint8_t { spectralcf = 0, bpr_mf = 1, itemknn = 2 };

struct OptimizerSettings {
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;

  friend bool operator==(const OptimizerSettings&, const OptimizerSettings&) = default;
};

struct SpectralCfCheckpoint {
  ModelConfig config;
  OptimizerSettings optimizer;
  ModelParams params;

  friend bool operator==(const SpectralCfCheckpoint&, const SpectralCfCheckpoint&) = default;
};

struct BprMfCheckpoint {
  OptimizerSettings optimizer;
  BprMfModel model;

  friend bool operator==(const BprMfCheckpoint&, const BprMfCheckpoint&) = default;
};

struct ItemKnnCheckpoint {
  Index n_users = 0;
  Index n_items = 0;
  ItemKnnModel model;
};

using Checkpoint = std::variant<SpectralCfCheckpoint, BprMfCheckpoint, ItemKnnCheckpoint>;

ModelType model_type(const Checkpoint& checkpoint);
// (n_users, n_items) the checkpoint was trained on.
std::pair<Index, Index> checkpoint_dimensions(const Checkpoint& checkpoint);

// Layout (all integers and floats little-endian):
//   "SPCK" | u32 version | u8 model type | body
// spectralcf body: u64 K, C, F, n_users, n_items, seed | f64 init_mean,
//   init_stddev, rms_decay, rms_epsilon | X_u0 | X_i0 | Theta_0 .. Theta_{K-1}
// bpr_mf body: u64 d, n_users, n_items | f64 rms_decay, rms_epsilon | P | Q
// itemknn body: u64 k, n_users, n_items | per item: u64 count, count x (u64 item, f64 similarity)
// Matrices are row-major f64.
void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

// Writes through a temporary file and renames, so a failed write leaves no
// partial checkpoint behind.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace spectralcf

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spectralcf/baselines.hpp"
#include "spectralcf/evaluation.hpp"
#include "spectralcf/graph.hpp"
#include "spectralcf/ingest.hpp"
#include "spectralcf/model.hpp"
#include "spectralcf/training.hpp"

namespace spectralcf::cli {

// Exit codes beyond 0 (success) and 1 (any other failure).
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitDimension = 4;

// Relative output paths land under `output_dir`; absolute ones are kept.
std::filesystem::path resolve_output(const std::filesystem::path& output_dir, const std::filesystem::path& name);

struct SplitOptions {
  std::filesystem::path input;
  std::string format = "tsv";
  std::string protocol = "standard";  // standard | cold-start
  double fraction = 0.8;
  Index items_per_user = 1;
  std::uint64_t seed = 0;
  Index min_user_interactions = 1;
  std::filesystem::path output_dir = ".";
  std::filesystem::path split_dir = "split";
};

struct TrainOptions {
  std::filesystem::path split;
  std::string model = "spectralcf";  // spectralcf | bpr-mf | itemknn
  std::string kernel = "closed-sparse";
  std::string basis = "sym";  // sym | rw, dense-eig only
  ModelConfig model_config;
  TrainConfig train_config;
  std::optional<std::uint64_t> sampler_seed;  // defaults to seed + 1
  std::string reg_scope = "full";             // full | batch-rows
  Index bpr_dim = 16;
  Index k_neighbors = 50;
  std::filesystem::path output_dir = ".";
  std::filesystem::path checkpoint = "model.spck";
  std::filesystem::path loss_log = "loss.tsv";
  std::filesystem::path basis_cache_dir = "basis-cache";
};

struct EvaluateOptions {
  std::filesystem::path split;
  std::filesystem::path checkpoint;
  std::vector<Index> cutoffs{20, 40, 60, 80, 100};
  std::string map_denominator = "min";  // min | relevant
  std::filesystem::path output_dir = ".";
  std::filesystem::path report = "report.tsv";
};

struct RecommendOptions {
  std::filesystem::path split;
  std::filesystem::path checkpoint;
  std::string user;
  Index m = 10;
  bool exclude_seen = true;
};

struct EmbedOptions {
  std::filesystem::path input;  // training interactions, tsv
  Index k = 2;
  std::string basis = "sym";
  std::filesystem::path output_dir = ".";
  std::filesystem::path out = "coordinates.tsv";
  std::filesystem::path basis_cache_dir = "basis-cache";
};

// Each command writes its primary outputs and a short human summary to `log`.
void cmd_split(const SplitOptions& opts, std::ostream& log);
void cmd_train(const TrainOptions& opts, std::ostream& log);
void cmd_evaluate(const EvaluateOptions& opts, std::ostream& log);
void cmd_recommend(const RecommendOptions& opts, std::ostream& out);
void cmd_spectral_embed(const EmbedOptions& opts, std::ostream& log);

// 64-bit FNV-1a over the file's bytes.
std::uint64_t fnv1a_file(const std::filesystem::path& path);

// Loads `<cache_dir>/<hash>-<tag>.spcf` when present, otherwise computes the
// basis and stores it there.
SpectralBasis cached_basis(const BipartiteGraph& graph, const std::filesystem::path& train_file,
                           BasisNormalization normalization, const std::filesystem::path& cache_dir,
                           std::ostream& log);

}  // namespace spectralcf::cli

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "spectralcf/errors.hpp"

using namespace spectralcf;
using namespace spectralcf::cli;

namespace {

constexpr const char* kOutputEnv = "SPECTRALCF_OUTPUT_DIR";

std::filesystem::path config_file;  // bound by every subcommand; read by the pre-pass below

void add_config(CLI::App* cmd) {
  cmd->add_option("--config", config_file, "Flat key=value file; keys are long option names without dashes");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// True when `--name` appears among the subcommand's own arguments.
bool given_on_command_line(const std::vector<std::string>& args, std::size_t from, const std::string& name) {
  const std::string flag = "--" + name;
  for (std::size_t k = from; k < args.size(); ++k) {
    if (args[k] == flag || args[k].rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

// Expands a subcommand's `--config FILE` into `--key=value` arguments placed
// right after the subcommand name. Keys already given as flags, or supplied
// through an option's environment variable, are skipped, which yields
// flags > environment > config file > built-in defaults.
std::vector<std::string> expand_config(CLI::App& app, std::vector<std::string> args) {
  std::size_t sub_pos = 1;
  while (sub_pos < args.size() && app.get_subcommand_no_throw(args[sub_pos]) == nullptr) ++sub_pos;
  if (sub_pos >= args.size()) return args;
  CLI::App* sub = app.get_subcommand(args[sub_pos]);

  std::string file;
  for (std::size_t k = sub_pos + 1; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) file = args[k + 1];
    if (args[k].rfind("--config=", 0) == 0) file = args[k].substr(9);
  }
  if (file.empty()) return args;

  std::ifstream in(file);
  if (!in) throw CLI::FileError::Missing(file);
  std::vector<std::string> inserted;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CLI::ConversionError(file + ":" + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") {
      throw CLI::ConversionError(file + ":" + std::to_string(line_no) + ": unknown key '" + key + "' for " +
                             sub->get_name());
    }
    if (given_on_command_line(args, sub_pos + 1, key)) continue;
    const std::string& env = opt->get_envname();
    if (!env.empty()) {
      const char* env_value = std::getenv(env.c_str());
      if (env_value != nullptr && *env_value != '\0') continue;
    }
    inserted.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, inserted.begin(), inserted.end());
  return args;
}

void add_output_dir(CLI::App* cmd, std::filesystem::path& dir) {
  cmd->add_option("--output-dir", dir, "Directory for relative output paths")->envname(kOutputEnv);
}

void setup_split(CLI::App& app, SplitOptions& o) {
  auto* cmd = app.add_subcommand("split", "Convert interactions to implicit feedback and write a train/test split");
  add_config(cmd);
  cmd->add_option("--input", o.input, "Interaction file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--format", o.format, "movielens_dat or tsv")->capture_default_str();
  cmd->add_option("--protocol", o.protocol, "standard or cold-start")->capture_default_str();
  cmd->add_option("--fraction", o.fraction, "Training share per user (standard)")->capture_default_str();
  cmd->add_option("--p", o.items_per_user, "Training items per user (cold-start)")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Split seed")->capture_default_str();
  cmd->add_option("--min-user-interactions", o.min_user_interactions, "Drop lighter users")->capture_default_str();
  add_output_dir(cmd, o.output_dir);
  cmd->add_option("--split-dir", o.split_dir, "Split directory name")->capture_default_str();
}

void setup_train(CLI::App& app, TrainOptions& o) {
  auto* cmd = app.add_subcommand("train", "Train a model on a split and write a checkpoint");
  add_config(cmd);
  ModelConfig& mc = o.model_config;
  TrainConfig& tc = o.train_config;
  cmd->add_option("--split", o.split, "Split directory")->required()->check(CLI::ExistingDirectory);
  cmd->add_option("--model", o.model, "spectralcf, bpr-mf or itemknn")->capture_default_str();
  cmd->add_option("--kernel", o.kernel, "closed-sparse or dense-eig")->capture_default_str();
  cmd->add_option("--basis", o.basis, "Eigenbasis for dense-eig: sym or rw")->capture_default_str();
  cmd->add_option("--layers", mc.layers, "K")->capture_default_str();
  cmd->add_option("--embedding-dim", mc.input_dim, "C")->capture_default_str();
  cmd->add_option("--filters", mc.filters, "F")->capture_default_str();
  cmd->add_option("--init-mean", mc.init_mean, "Gaussian initializer mean")->capture_default_str();
  cmd->add_option("--init-stddev", mc.init_stddev, "Gaussian initializer standard deviation")->capture_default_str();
  cmd->add_option("--seed", mc.seed, "Initialization seed")->capture_default_str();
  cmd->add_option("--sampler-seed", o.sampler_seed, "Triple sampler seed (default: seed + 1)");
  cmd->add_option("--batch-size", tc.batch_size, "B")->capture_default_str();
  cmd->add_option("--epochs", tc.epochs, "E")->capture_default_str();
  cmd->add_option("--steps-per-epoch", tc.steps_per_epoch, "Batches per epoch")->capture_default_str();
  cmd->add_option("--learning-rate", tc.learning_rate, "RMSprop step size")->capture_default_str();
  cmd->add_option("--reg", tc.reg, "Regularization weight")->capture_default_str();
  cmd->add_option("--reg-scope", o.reg_scope, "full or batch-rows")->capture_default_str();
  cmd->add_option("--reg-divide-by-batch", tc.reg_divide_by_batch, "Scale the penalty by 1/B")->capture_default_str();
  cmd->add_option("--rms-decay", tc.rms_decay, "RMSprop decay")->capture_default_str();
  cmd->add_option("--rms-epsilon", tc.rms_epsilon, "RMSprop epsilon")->capture_default_str();
  cmd->add_option("--d", o.bpr_dim, "Latent dimension for bpr-mf")->capture_default_str();
  cmd->add_option("--k-neighbors", o.k_neighbors, "Neighbor count for itemknn")->capture_default_str();
  add_output_dir(cmd, o.output_dir);
  cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->capture_default_str();
  cmd->add_option("--loss-log", o.loss_log, "Per-epoch loss log")->capture_default_str();
  cmd->add_option("--basis-cache-dir", o.basis_cache_dir, "Eigenbasis cache")->capture_default_str();
}

void setup_evaluate(CLI::App& app, EvaluateOptions& o) {
  auto* cmd = app.add_subcommand("evaluate", "Compute Recall@M and MAP@M of a checkpoint on a split");
  add_config(cmd);
  cmd->add_option("--split", o.split, "Split directory")->required()->check(CLI::ExistingDirectory);
  cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--cutoffs", o.cutoffs, "Comma-separated cutoffs")->delimiter(',')->capture_default_str();
  cmd->add_option("--map-denominator", o.map_denominator, "min or relevant")->capture_default_str();
  add_output_dir(cmd, o.output_dir);
  cmd->add_option("--report", o.report, "Report file")->capture_default_str();
}

void setup_recommend(CLI::App& app, RecommendOptions& o) {
  auto* cmd = app.add_subcommand("recommend", "Print a user's top-M items");
  add_config(cmd);
  cmd->add_option("--split", o.split, "Split directory")->required()->check(CLI::ExistingDirectory);
  cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--user", o.user, "External user id")->required();
  cmd->add_option("--M", o.m, "List length")->capture_default_str();
  cmd->add_option("--exclude-seen", o.exclude_seen, "Skip the user's training items")->capture_default_str();
}

void setup_embed(CLI::App& app, EmbedOptions& o) {
  auto* cmd = app.add_subcommand("spectral-embed", "Export vertex coordinates from the Laplacian eigenvectors");
  add_config(cmd);
  cmd->add_option("--input", o.input, "Training interactions (tsv)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--k", o.k, "Number of non-trivial eigenvectors")->capture_default_str();
  cmd->add_option("--basis", o.basis, "sym or rw")->capture_default_str();
  add_output_dir(cmd, o.output_dir);
  cmd->add_option("--out", o.out, "Coordinates file")->capture_default_str();
  cmd->add_option("--basis-cache-dir", o.basis_cache_dir, "Eigenbasis cache")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral collaborative filtering on user-item bipartite graphs", "spectralcf"};
  app.require_subcommand(1);

  SplitOptions split_opts;
  TrainOptions train_opts;
  EvaluateOptions eval_opts;
  RecommendOptions rec_opts;
  EmbedOptions embed_opts;
  setup_split(app, split_opts);
  setup_train(app, train_opts);
  setup_evaluate(app, eval_opts);
  setup_recommend(app, rec_opts);
  setup_embed(app, embed_opts);

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(app, std::move(args));
    // CLI11 consumes a reversed argument vector without the program name.
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand("split")) cmd_split(split_opts, std::cout);
    if (app.got_subcommand("train")) cmd_train(train_opts, std::cout);
    if (app.got_subcommand("evaluate")) cmd_evaluate(eval_opts, std::cout);
    if (app.got_subcommand("recommend")) cmd_recommend(rec_opts, std::cout);
    if (app.got_subcommand("spectral-embed")) cmd_spectral_embed(embed_opts, std::cout);
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDimension;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

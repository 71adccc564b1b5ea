#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <memory>

#include "spectralcf/checkpoint.hpp"
#include "spectralcf/errors.hpp"

namespace spectralcf::cli {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

BasisNormalization parse_basis(const std::string& name) {
  if (name == "sym") return BasisNormalization::sym_orthonormal;
  if (name == "rw") return BasisNormalization::rw_raw;
  throw Error("unknown basis '" + name + "', expected sym or rw");
}

const char* basis_tag(BasisNormalization n) { return n == BasisNormalization::rw_raw ? "rw" : "sym"; }

RegScope parse_reg_scope(const std::string& name) {
  if (name == "full") return RegScope::full_tables;
  if (name == "batch-rows") return RegScope::batch_rows;
  throw Error("unknown regularizer scope '" + name + "', expected full or batch-rows");
}

ApDenominator parse_denominator(const std::string& name) {
  if (name == "min") return ApDenominator::min_relevant_cutoff;
  if (name == "relevant") return ApDenominator::relevant;
  throw Error("unknown MAP denominator '" + name + "', expected min or relevant");
}

const char* model_name(ModelType t) {
  switch (t) {
    case ModelType::spectralcf:
      return "spectralcf";
    case ModelType::bpr_mf:
      return "bpr-mf";
    case ModelType::itemknn:
      return "itemknn";
  }
  return "unknown";
}

// Keeps the checkpoint and any derived factors alive for the scorer.
struct LoadedModel {
  std::shared_ptr<const Checkpoint> checkpoint;
  std::shared_ptr<const FactorTable> factors;
  Scorer scorer;
};

LoadedModel load_model(const std::filesystem::path& path, const InteractionSet& train) {
  LoadedModel m;
  m.checkpoint = std::make_shared<const Checkpoint>(load_checkpoint(path));
  const auto [n_users, n_items] = checkpoint_dimensions(*m.checkpoint);
  if (n_users != train.n_users() || n_items != train.n_items()) {
    throw DimensionError("checkpoint was trained on " + std::to_string(n_users) + " users x " +
                         std::to_string(n_items) + " items, split has " + std::to_string(train.n_users()) +
                         " x " + std::to_string(train.n_items()));
  }
  if (const auto* s = std::get_if<SpectralCfCheckpoint>(m.checkpoint.get())) {
    m.factors = std::make_shared<const FactorTable>(forward(s->params, closed_form_kernel(build_graph(train)), s->config).factors);
  } else if (const auto* b = std::get_if<BprMfCheckpoint>(m.checkpoint.get())) {
    m.factors = std::make_shared<const FactorTable>(b->model.factors());
  }
  if (m.factors) {
    m.scorer = [f = m.factors](Index user, std::span<double> scores) { factor_scorer(*f)(user, scores); };
  } else {
    const auto& knn = std::get<ItemKnnCheckpoint>(*m.checkpoint).model;
    m.scorer = [ckpt = m.checkpoint, &knn, &train](Index user, std::span<double> scores) {
      itemknn_scorer(knn, train)(user, scores);
    };
  }
  return m;
}

}  // namespace

std::filesystem::path resolve_output(const std::filesystem::path& output_dir, const std::filesystem::path& name) {
  return name.is_absolute() ? name : output_dir / name;
}

std::uint64_t fnv1a_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize k = 0; k < in.gcount(); ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

SpectralBasis cached_basis(const BipartiteGraph& graph, const std::filesystem::path& train_file,
                           BasisNormalization normalization, const std::filesystem::path& cache_dir,
                           std::ostream& log) {
  char name[64];
  std::snprintf(name, sizeof name, "%016llx-%s.spcf", static_cast<unsigned long long>(fnv1a_file(train_file)),
                basis_tag(normalization));
  const auto path = cache_dir / name;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    try {
      auto basis = read_basis(in);
      if (basis.size() == graph.n_vertices() && basis.normalization == normalization) {
        log << "basis cache hit: " << path.string() << '\n';
        return basis;
      }
    } catch (const FormatError&) {
      // unreadable entries are recomputed and overwritten below
    }
  }
  auto basis = eigendecompose(graph, normalization);
  std::filesystem::create_directories(cache_dir);
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    write_basis(out, basis);
  }
  std::filesystem::rename(tmp, path);
  log << "basis cache miss, stored " << path.string() << '\n';
  return basis;
}

void cmd_split(const SplitOptions& opts, std::ostream& log) {
  const auto raws = read_interactions(opts.input, parse_input_format(opts.format));
  const auto data = to_implicit(raws, opts.min_user_interactions);
  SplitPair split;
  if (opts.protocol == "standard") {
    if (!(opts.fraction > 0.0 && opts.fraction < 1.0)) throw Error("--fraction must lie in (0, 1)");
    split = split_standard(data, opts.fraction, opts.seed);
  } else if (opts.protocol == "cold-start") {
    if (opts.items_per_user < 1) throw Error("--p must be >= 1");
    split = split_cold_start(data, opts.items_per_user, opts.seed);
  } else {
    throw Error("unknown protocol '" + opts.protocol + "', expected standard or cold-start");
  }
  const auto dir = resolve_output(opts.output_dir, opts.split_dir);
  write_split(split, dir);
  log << "read " << raws.size() << " records: " << data.n_users() << " users, " << data.n_items() << " items, "
      << data.n_pairs() << " interactions (density " << data.density() << ")\n";
  log << split.protocol.tag() << " split -> " << dir.string() << ": " << split.train.n_users() << " users, "
      << split.train.n_items() << " items, " << split.train.n_pairs() << " train pairs, " << split.n_test_pairs()
      << " test pairs";
  if (split.excluded_users > 0) log << ", " << split.excluded_users << " users excluded";
  if (split.dropped_test_pairs > 0) log << ", " << split.dropped_test_pairs << " test pairs on untrained items dropped";
  log << '\n';
}

void cmd_train(const TrainOptions& opts, std::ostream& log) {
  const SplitPair split = read_split(opts.split);
  const auto train_file = SplitFiles::in(opts.split).train;

  const ModelConfig& mc = opts.model_config;
  TrainConfig tc = opts.train_config;
  tc.seed = opts.sampler_seed.value_or(mc.seed + 1);
  tc.reg_scope = parse_reg_scope(opts.reg_scope);
  mc.validate();
  tc.validate();

  const auto checkpoint_path = resolve_output(opts.output_dir, opts.checkpoint);
  const auto loss_path = resolve_output(opts.output_dir, opts.loss_log);
  const OptimizerSettings optimizer{tc.rms_decay, tc.rms_epsilon};

  if (opts.model == "itemknn") {
    save_checkpoint(checkpoint_path, ItemKnnCheckpoint{split.train.n_users(), split.train.n_items(),
                                                       fit_itemknn(split.train, opts.k_neighbors)});
    log << "fitted itemknn (k=" << opts.k_neighbors << ") -> " << checkpoint_path.string() << '\n';
    return;
  }
  if (opts.model != "spectralcf" && opts.model != "bpr-mf") {
    throw Error("unknown model '" + opts.model + "', expected spectralcf, bpr-mf or itemknn");
  }

  auto loss_out = open_output(loss_path);
  const EpochCallback on_epoch = [&loss_out](Index epoch, double loss) {
    loss_out << epoch << '\t' << format_double(loss) << '\n';
  };

  try {
    double final_loss = 0.0;
    std::size_t excluded = 0;
    if (opts.model == "spectralcf") {
      const auto graph = build_graph(split.train);
      const auto form = parse_kernel_form(opts.kernel);
      const auto normalization = parse_basis(opts.basis);
      const ConvKernel kernel = [&] {
        if (form == KernelForm::closed_sparse) {
          if (normalization != BasisNormalization::sym_orthonormal) {
            throw UnsupportedError("the closed sparse kernel needs the symmetric basis");
          }
          return closed_form_kernel(graph);
        }
        const auto cache_dir = resolve_output(opts.output_dir, opts.basis_cache_dir);
        return conv_kernel(graph, cached_basis(graph, train_file, normalization, cache_dir, log), form);
      }();
      const auto result = train(split.train, kernel, mc, tc, on_epoch);
      final_loss = result.loss_history.back();
      excluded = result.excluded_users.size();
      save_checkpoint(checkpoint_path, SpectralCfCheckpoint{mc, optimizer, result.params});
    } else {
      const BprMfConfig bc{opts.bpr_dim, mc.seed, mc.init_mean, mc.init_stddev};
      const auto result = fit_bpr_mf(split.train, bc, tc, on_epoch);
      final_loss = result.loss_history.back();
      save_checkpoint(checkpoint_path, BprMfCheckpoint{optimizer, result.model});
    }
    if (excluded > 0) log << "warning: " << excluded << " users like every item and were never sampled\n";
    log << "trained " << opts.model << " for " << tc.epochs << " epochs on " << split.train.n_users() << " users x "
        << split.train.n_items() << " items, final loss " << format_double(final_loss) << '\n';
    log << "checkpoint -> " << checkpoint_path.string() << ", loss log -> " << loss_path.string() << '\n';
  } catch (...) {
    // A previous checkpoint at the target path is left untouched.
    std::error_code ec;
    auto partial = checkpoint_path;
    partial += ".partial";
    std::filesystem::remove(partial, ec);
    throw;
  }
}

void cmd_evaluate(const EvaluateOptions& opts, std::ostream& log) {
  const SplitPair split = read_split(opts.split);
  const auto model = load_model(opts.checkpoint, split.train);
  EvalOptions eval_opts;
  eval_opts.denominator = parse_denominator(opts.map_denominator);
  const auto report = evaluate(model.scorer, split, opts.cutoffs, eval_opts);

  const auto path = resolve_output(opts.output_dir, opts.report);
  auto out = open_output(path);
  write_report(out, report,
               {{"model", model_name(model_type(*model.checkpoint))},
                {"protocol", split.protocol.tag()},
                {"map_denominator", opts.map_denominator}});
  if (!out) throw Error("failed writing '" + path.string() + "'");

  log << "M\trecall\tmap\n";
  for (Index m : report.cutoffs) {
    char line[96];
    std::snprintf(line, sizeof line, "%lld\t%.6f\t%.6f\n", static_cast<long long>(m), report.recall_at.at(m),
                  report.map_at.at(m));
    log << line;
  }
  log << report.n_evaluable_users << " users evaluated, " << report.n_skipped_users
      << " without test items; report -> " << path.string() << '\n';
}

void cmd_recommend(const RecommendOptions& opts, std::ostream& out) {
  if (opts.m < 1) throw Error("--M must be >= 1");
  const SplitPair split = read_split(opts.split);
  const auto user = split.train.find_user(opts.user);
  if (!user) throw Error("unknown user '" + opts.user + "'");
  const auto model = load_model(opts.checkpoint, split.train);
  std::vector<double> scores(static_cast<std::size_t>(split.train.n_items()));
  model.scorer(*user, scores);
  const std::span<const Index> exclude =
      opts.exclude_seen ? split.train.items_of(*user) : std::span<const Index>{};
  for (Index i : top_m(scores, exclude, opts.m)) {
    out << split.train.item_ids()[i] << '\t' << format_double(scores[i]) << '\n';
  }
}

void cmd_spectral_embed(const EmbedOptions& opts, std::ostream& log) {
  const auto train = read_train_set(opts.input, InputFormat::tsv);
  const auto graph = build_graph(train);
  const auto max_k = graph.n_vertices() - 1;
  if (opts.k < 1 || opts.k > max_k) {
    throw DimensionError("--k must lie in [1, " + std::to_string(max_k) + "]");
  }
  const auto cache_dir = resolve_output(opts.output_dir, opts.basis_cache_dir);
  const auto basis = cached_basis(graph, opts.input, parse_basis(opts.basis), cache_dir, log);
  const Matrix coords = spectral_coordinates(basis, opts.k);

  const auto path = resolve_output(opts.output_dir, opts.out);
  auto out = open_output(path);
  out << "# kind\tid";
  for (Index c = 1; c <= opts.k; ++c) out << "\tmu_" << c;
  out << '\n';
  for (Index v = 0; v < graph.n_vertices(); ++v) {
    const bool is_user = v < train.n_users();
    out << (is_user ? "user" : "item") << '\t'
        << (is_user ? train.user_ids()[v] : train.item_ids()[v - train.n_users()]);
    for (Index c = 0; c < opts.k; ++c) out << '\t' << format_double(coords(v, c));
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + path.string() + "'");
  log << "wrote " << graph.n_vertices() << " x " << opts.k << " coordinates -> " << path.string() << '\n';
}

}  // namespace spectralcf::cli

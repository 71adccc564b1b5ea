#include "spectralcf/checkpoint.hpp"

#include <fstream>

#include "binary_io.hpp"

namespace spectralcf {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

using namespace detail;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void write_body(std::ostream& out, const SpectralCfCheckpoint& c) {
  const ModelConfig& cfg = c.config;
  c.params.check_shapes(cfg);
  put_u64(out, static_cast<std::uint64_t>(cfg.layers));
  put_u64(out, static_cast<std::uint64_t>(cfg.input_dim));
  put_u64(out, static_cast<std::uint64_t>(cfg.filters));
  put_u64(out, static_cast<std::uint64_t>(c.params.n_users()));
  put_u64(out, static_cast<std::uint64_t>(c.params.n_items()));
  put_u64(out, cfg.seed);
  put_f64(out, cfg.init_mean);
  put_f64(out, cfg.init_stddev);
  put_f64(out, c.optimizer.rms_decay);
  put_f64(out, c.optimizer.rms_epsilon);
  put_matrix(out, c.params.user_embedding);
  put_matrix(out, c.params.item_embedding);
  for (const auto& f : c.params.filters) put_matrix(out, f);
}

void write_body(std::ostream& out, const BprMfCheckpoint& c) {
  put_u64(out, static_cast<std::uint64_t>(c.model.dim()));
  put_u64(out, static_cast<std::uint64_t>(c.model.user_factors.rows()));
  put_u64(out, static_cast<std::uint64_t>(c.model.item_factors.rows()));
  put_f64(out, c.optimizer.rms_decay);
  put_f64(out, c.optimizer.rms_epsilon);
  put_matrix(out, c.model.user_factors);
  put_matrix(out, c.model.item_factors);
}

void write_body(std::ostream& out, const ItemKnnCheckpoint& c) {
  if (static_cast<Index>(c.model.neighbors.size()) != c.n_items) throw DimensionError("neighbor table size mismatch");
  put_u64(out, static_cast<std::uint64_t>(c.model.k_neighbors));
  put_u64(out, static_cast<std::uint64_t>(c.n_users));
  put_u64(out, static_cast<std::uint64_t>(c.n_items));
  for (const auto& list : c.model.neighbors) {
    put_u64(out, list.size());
    for (const auto& nb : list) {
      put_u64(out, static_cast<std::uint64_t>(nb.item));
      put_f64(out, nb.similarity);
    }
  }
}

SpectralCfCheckpoint read_spectral(std::istream& in) {
  SpectralCfCheckpoint c;
  c.config.layers = checked_dim(get_u64(in), "K");
  c.config.input_dim = checked_dim(get_u64(in), "C");
  c.config.filters = checked_dim(get_u64(in), "F");
  const Index n_users = checked_dim(get_u64(in), "user count");
  const Index n_items = checked_dim(get_u64(in), "item count");
  c.config.seed = get_u64(in);
  c.config.init_mean = get_f64(in);
  c.config.init_stddev = get_f64(in);
  c.optimizer.rms_decay = get_f64(in);
  c.optimizer.rms_epsilon = get_f64(in);
  c.config.validate();
  c.params.user_embedding = get_matrix(in, n_users, c.config.input_dim);
  c.params.item_embedding = get_matrix(in, n_items, c.config.input_dim);
  for (Index k = 0; k < c.config.layers; ++k) {
    const Index rows = k == 0 ? c.config.input_dim : c.config.filters;
    c.params.filters.push_back(get_matrix(in, rows, c.config.filters));
  }
  return c;
}

BprMfCheckpoint read_bpr(std::istream& in) {
  BprMfCheckpoint c;
  const Index d = checked_dim(get_u64(in), "latent dimension");
  const Index n_users = checked_dim(get_u64(in), "user count");
  const Index n_items = checked_dim(get_u64(in), "item count");
  c.optimizer.rms_decay = get_f64(in);
  c.optimizer.rms_epsilon = get_f64(in);
  c.model.user_factors = get_matrix(in, n_users, d);
  c.model.item_factors = get_matrix(in, n_items, d);
  return c;
}

ItemKnnCheckpoint read_itemknn(std::istream& in) {
  ItemKnnCheckpoint c;
  const Index k = checked_dim(get_u64(in), "neighbor count");
  c.n_users = checked_dim(get_u64(in), "user count");
  c.n_items = checked_dim(get_u64(in), "item count");
  std::vector<std::vector<Neighbor>> lists(static_cast<std::size_t>(c.n_items));
  for (auto& list : lists) {
    const Index count = checked_dim(get_u64(in), "neighbor list length");
    for (Index e = 0; e < count; ++e) {
      Neighbor nb;
      nb.item = checked_dim(get_u64(in), "neighbor index");
      nb.similarity = get_f64(in);
      if (nb.item >= c.n_items) throw FormatError("neighbor index out of range");
      list.push_back(nb);
    }
  }
  c.model = itemknn_from_neighbors(k, std::move(lists));
  return c;
}

}  // namespace

ModelType model_type(const Checkpoint& checkpoint) {
  return std::visit(overloaded{[](const SpectralCfCheckpoint&) { return ModelType::spectralcf; },
                               [](const BprMfCheckpoint&) { return ModelType::bpr_mf; },
                               [](const ItemKnnCheckpoint&) { return ModelType::itemknn; }},
                    checkpoint);
}

std::pair<Index, Index> checkpoint_dimensions(const Checkpoint& checkpoint) {
  return std::visit(
      overloaded{[](const SpectralCfCheckpoint& c) { return std::pair{c.params.n_users(), c.params.n_items()}; },
                 [](const BprMfCheckpoint& c) {
                   return std::pair{c.model.user_factors.rows(), c.model.item_factors.rows()};
                 },
                 [](const ItemKnnCheckpoint& c) { return std::pair{c.n_users, c.n_items}; }},
      checkpoint);
}

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  put_magic(out, "SPCK");
  put_u32(out, kCheckpointVersion);
  put_u8(out, static_cast<std::uint8_t>(model_type(checkpoint)));
  std::visit([&out](const auto& c) { write_body(out, c); }, checkpoint);
  if (!out) throw Error("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  expect_magic(in, "SPCK");
  const auto version = get_u32(in);
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto tag = get_u8(in);
  switch (static_cast<ModelType>(tag)) {
    case ModelType::spectralcf:
      return read_spectral(in);
    case ModelType::bpr_mf:
      return read_bpr(in);
    case ModelType::itemknn:
      return read_itemknn(in);
  }
  throw FormatError("unknown model type tag " + std::to_string(tag));
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".partial";
  try {
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot write '" + tmp.string() + "'");
      write_checkpoint(out, checkpoint);
      out.flush();
      if (!out) throw Error("failed writing '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace spectralcf

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "spectralcf/errors.hpp"
#include "spectralcf/ingest.hpp"

namespace spectralcf {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key=value in '" + path.string() + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("split metadata lacks '" + key + "'");
  return it->second;
}

template <typename T>
T to_number(const std::string& s, const std::string& key) {
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("split metadata '" + key + "' is not a number: " + s);
  }
  return value;
}

void write_pairs(const std::filesystem::path& path, const InteractionSet& ids,
                 const std::vector<Interaction>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const auto& [u, i] : pairs) out << ids.user_ids()[u] << '\t' << ids.item_ids()[i] << '\n';
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace

SplitFiles SplitFiles::in(const std::filesystem::path& dir) {
  return {dir / "train.tsv", dir / "test.tsv", dir / "split.meta"};
}

void write_split(const SplitPair& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto files = SplitFiles::in(dir);
  write_pairs(files.train, split.train, split.train.pairs());
  write_pairs(files.test, split.train, split.test_pairs());

  std::ofstream meta(files.meta, std::ios::binary);
  if (!meta) throw Error("cannot write '" + files.meta.string() + "'");
  meta << "# spectralcf split metadata\n";
  meta << "format_version=1\n";
  meta << "protocol=" << split.protocol.tag() << '\n';
  if (split.protocol.kind == SplitProtocol::Kind::standard) {
    meta << "train_fraction=" << format_double(split.protocol.train_fraction) << '\n';
  } else {
    meta << "items_per_user=" << split.protocol.items_per_user << '\n';
  }
  meta << "seed=" << split.seed << '\n';
  meta << "n_users=" << split.train.n_users() << '\n';
  meta << "n_items=" << split.train.n_items() << '\n';
  meta << "n_train_pairs=" << split.train.n_pairs() << '\n';
  meta << "n_test_pairs=" << split.n_test_pairs() << '\n';
  meta << "excluded_users=" << split.excluded_users << '\n';
  meta << "dropped_test_pairs=" << split.dropped_test_pairs << '\n';
  if (!meta) throw Error("write failed for '" + files.meta.string() + "'");
}

InteractionSet read_train_set(const std::filesystem::path& path, InputFormat format) {
  const auto raws = read_interactions(path, format);
  return to_implicit(raws, 1);
}

SplitPair read_split(const std::filesystem::path& dir) {
  const auto files = SplitFiles::in(dir);
  const auto kv = read_key_values(files.meta);

  SplitPair split;
  split.train = read_train_set(files.train, InputFormat::tsv);

  const auto& protocol = require(kv, "protocol");
  if (protocol == "standard_80_20") {
    split.protocol = SplitProtocol::standard(to_number<double>(require(kv, "train_fraction"), "train_fraction"));
  } else if (protocol.starts_with("cold_start")) {
    split.protocol = SplitProtocol::cold_start(to_number<Index>(require(kv, "items_per_user"), "items_per_user"));
  } else {
    throw FormatError("unknown split protocol '" + protocol + "'");
  }
  split.seed = to_number<std::uint64_t>(require(kv, "seed"), "seed");
  split.excluded_users = to_number<Index>(require(kv, "excluded_users"), "excluded_users");
  split.dropped_test_pairs = to_number<Index>(require(kv, "dropped_test_pairs"), "dropped_test_pairs");

  if (to_number<Index>(require(kv, "n_users"), "n_users") != split.train.n_users() ||
      to_number<Index>(require(kv, "n_items"), "n_items") != split.train.n_items() ||
      to_number<Index>(require(kv, "n_train_pairs"), "n_train_pairs") != split.train.n_pairs()) {
    throw FormatError("train file does not match split metadata counts");
  }

  std::map<std::string_view, Index> user_index, item_index;
  for (Index u = 0; u < split.train.n_users(); ++u) user_index.emplace(split.train.user_ids()[u], u);
  for (Index i = 0; i < split.train.n_items(); ++i) item_index.emplace(split.train.item_ids()[i], i);

  split.test_items.assign(static_cast<std::size_t>(split.train.n_users()), {});
  std::ifstream test_in(files.test);
  if (!test_in) throw Error("cannot open '" + files.test.string() + "'");
  const auto raws = parse_interactions(test_in, InputFormat::tsv);
  for (std::size_t k = 0; k < raws.size(); ++k) {
    const auto u = user_index.find(raws[k].user_ext);
    const auto i = item_index.find(raws[k].item_ext);
    if (u == user_index.end() || i == item_index.end()) {
      throw FormatError("test pair " + std::to_string(k + 1) + " references an id outside the training index space");
    }
    if (split.train.contains(u->second, i->second)) {
      throw FormatError("test pair " + std::to_string(k + 1) + " overlaps the training set");
    }
    split.test_items[u->second].push_back(i->second);
  }
  for (auto& t : split.test_items) {
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
  }
  if (to_number<Index>(require(kv, "n_test_pairs"), "n_test_pairs") != split.n_test_pairs()) {
    throw FormatError("test file does not match split metadata counts");
  }
  return split;
}

}  // namespace spectralcf

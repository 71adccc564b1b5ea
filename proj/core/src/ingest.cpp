#include "spectralcf/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <random>

#include "spectralcf/errors.hpp"

namespace spectralcf {

namespace {

std::vector<std::string_view> split_on(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + sep.size();
  }
}

double parse_weight(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError(line_no, "invalid weight '" + std::string(field) + "'");
  }
  return value;
}

std::int64_t parse_timestamp(std::string_view field, std::size_t line_no) {
  std::int64_t value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(line_no, "invalid timestamp '" + std::string(field) + "'");
  }
  return value;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

// Dense ids in natural order for the given external ids.
std::map<std::string, Index, decltype(&natural_less)> index_ids(std::vector<std::string> ids) {
  std::map<std::string, Index, decltype(&natural_less)> out(&natural_less);
  for (auto& id : ids) out.emplace(std::move(id), 0);
  Index next = 0;
  for (auto& [_, idx] : out) idx = next++;
  return out;
}

// Keeps only users/items flagged in the masks, preserving relative order.
struct Compaction {
  std::vector<Index> user_map;  // old -> new, -1 when dropped
  std::vector<Index> item_map;
  Index n_users = 0;
  Index n_items = 0;
};

Compaction compact(const std::vector<bool>& keep_user, const std::vector<bool>& keep_item) {
  Compaction c;
  c.user_map.assign(keep_user.size(), -1);
  c.item_map.assign(keep_item.size(), -1);
  for (std::size_t u = 0; u < keep_user.size(); ++u) {
    if (keep_user[u]) c.user_map[u] = c.n_users++;
  }
  for (std::size_t i = 0; i < keep_item.size(); ++i) {
    if (keep_item[i]) c.item_map[i] = c.n_items++;
  }
  return c;
}

// Builds the SplitPair from per-user train/test choices over `data`'s index
// space. Users with `active[u] == false` are excluded entirely.
SplitPair assemble_split(const InteractionSet& data, const std::vector<bool>& active,
                         const std::vector<std::vector<Index>>& train_items,
                         const std::vector<std::vector<Index>>& test_items) {
  std::vector<bool> keep_item(static_cast<std::size_t>(data.n_items()), false);
  std::vector<bool> keep_user(active);
  for (Index u = 0; u < data.n_users(); ++u) {
    if (!active[u]) continue;
    for (Index i : train_items[u]) keep_item[i] = true;
    if (train_items[u].empty()) keep_user[u] = false;
  }
  const Compaction c = compact(keep_user, keep_item);

  std::vector<Interaction> pairs;
  std::vector<std::string> user_ids(static_cast<std::size_t>(c.n_users));
  std::vector<std::string> item_ids(static_cast<std::size_t>(c.n_items));
  for (Index i = 0; i < data.n_items(); ++i) {
    if (c.item_map[i] >= 0) item_ids[c.item_map[i]] = data.item_ids()[i];
  }

  SplitPair split;
  split.test_items.assign(static_cast<std::size_t>(c.n_users), {});
  for (Index u = 0; u < data.n_users(); ++u) {
    const Index nu = c.user_map[u];
    if (nu < 0) {
      if (!active[u]) ++split.excluded_users;
      continue;
    }
    user_ids[nu] = data.user_ids()[u];
    for (Index i : train_items[u]) pairs.emplace_back(nu, c.item_map[i]);
    auto& test = split.test_items[nu];
    for (Index i : test_items[u]) {
      if (c.item_map[i] < 0) {
        ++split.dropped_test_pairs;
      } else {
        test.push_back(c.item_map[i]);
      }
    }
    std::sort(test.begin(), test.end());
  }
  if (c.n_users == 0) throw EmptyDatasetError("split retained no users");
  split.train = InteractionSet::from_pairs(c.n_users, c.n_items, std::move(pairs),
                                           std::move(user_ids), std::move(item_ids));
  return split;
}

}  // namespace

InputFormat parse_input_format(std::string_view name) {
  if (name == "movielens_dat" || name == "movielens-dat" || name == "dat") return InputFormat::movielens_dat;
  if (name == "tsv") return InputFormat::tsv;
  throw FormatError("unknown input format '" + std::string(name) + "'");
}

std::string_view to_string(InputFormat format) {
  return format == InputFormat::movielens_dat ? "movielens_dat" : "tsv";
}

bool natural_less(std::string_view a, std::string_view b) {
  const bool da = all_digits(a);
  const bool db = all_digits(b);
  if (da && db) {
    const auto strip = [](std::string_view s) {
      const auto p = s.find_first_not_of('0');
      return p == std::string_view::npos ? std::string_view("0") : s.substr(p);
    };
    const auto sa = strip(a);
    const auto sb = strip(b);
    if (sa.size() != sb.size()) return sa.size() < sb.size();
    if (sa != sb) return sa < sb;
    return a < b;  // "007" vs "7": fall back to bytes so the order stays strict
  }
  if (da != db) return da;
  return a < b;
}

// --- InteractionSet --------------------------------------------------------

InteractionSet InteractionSet::from_pairs(Index n_users, Index n_items, std::vector<Interaction> pairs,
                                          std::vector<std::string> user_ids,
                                          std::vector<std::string> item_ids) {
  if (n_users < 0 || n_items < 0) throw InvariantError("negative dimension");
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  InteractionSet set;
  set.n_items_ = n_items;
  set.n_pairs_ = static_cast<Index>(pairs.size());
  set.user_items_.assign(static_cast<std::size_t>(n_users), {});
  std::vector<Index> item_count(static_cast<std::size_t>(n_items), 0);
  for (const auto& [u, i] : pairs) {
    if (u < 0 || u >= n_users || i < 0 || i >= n_items) {
      throw InvariantError("interaction (" + std::to_string(u) + ", " + std::to_string(i) +
                           ") outside index space");
    }
    set.user_items_[u].push_back(i);
    ++item_count[i];
  }
  for (Index u = 0; u < n_users; ++u) {
    if (set.user_items_[u].empty()) throw InvariantError("user " + std::to_string(u) + " has no interactions");
  }
  for (Index i = 0; i < n_items; ++i) {
    if (item_count[i] == 0) throw InvariantError("item " + std::to_string(i) + " has no interactions");
  }

  auto fill_ids = [](std::vector<std::string>& ids, Index n, const char* what) {
    if (ids.empty()) {
      ids.resize(static_cast<std::size_t>(n));
      for (Index k = 0; k < n; ++k) ids[k] = std::to_string(k);
    } else if (static_cast<Index>(ids.size()) != n) {
      throw InvariantError(std::string(what) + " id table size mismatch");
    }
  };
  fill_ids(user_ids, n_users, "user");
  fill_ids(item_ids, n_items, "item");
  set.user_ids_ = std::move(user_ids);
  set.item_ids_ = std::move(item_ids);
  return set;
}

bool InteractionSet::contains(Index user, Index item) const {
  const auto& items = user_items_.at(user);
  return std::binary_search(items.begin(), items.end(), item);
}

std::vector<Interaction> InteractionSet::pairs() const {
  std::vector<Interaction> out;
  out.reserve(static_cast<std::size_t>(n_pairs_));
  for (Index u = 0; u < n_users(); ++u) {
    for (Index i : user_items_[u]) out.emplace_back(u, i);
  }
  return out;
}

std::vector<Index> InteractionSet::item_counts() const {
  std::vector<Index> counts(static_cast<std::size_t>(n_items_), 0);
  for (const auto& items : user_items_) {
    for (Index i : items) ++counts[i];
  }
  return counts;
}

std::optional<Index> InteractionSet::find_user(std::string_view ext) const {
  const auto it = std::find(user_ids_.begin(), user_ids_.end(), ext);
  if (it == user_ids_.end()) return std::nullopt;
  return static_cast<Index>(it - user_ids_.begin());
}

std::optional<Index> InteractionSet::find_item(std::string_view ext) const {
  const auto it = std::find(item_ids_.begin(), item_ids_.end(), ext);
  if (it == item_ids_.end()) return std::nullopt;
  return static_cast<Index>(it - item_ids_.begin());
}

double InteractionSet::density() const {
  if (n_users() == 0 || n_items_ == 0) return 0.0;
  return static_cast<double>(n_pairs_) / (static_cast<double>(n_users()) * static_cast<double>(n_items_));
}

// --- parsing -----------------------------------------------------------------

std::vector<RawInteraction> parse_interactions(std::istream& source, InputFormat format) {
  std::vector<RawInteraction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (is_blank(view)) continue;

    RawInteraction raw;
    if (format == InputFormat::movielens_dat) {
      const auto fields = split_on(view, "::");
      if (fields.size() != 4) {
        throw ParseError(line_no, "expected user::item::rating::timestamp, got " +
                                      std::to_string(fields.size()) + " field(s)");
      }
      raw.user_ext = fields[0];
      raw.item_ext = fields[1];
      raw.weight = parse_weight(fields[2], line_no);
      raw.timestamp = parse_timestamp(fields[3], line_no);
    } else {
      const auto fields = split_on(view, "\t");
      if (fields.size() < 2 || fields.size() > 4) {
        throw ParseError(line_no, "expected 2 to 4 tab-separated fields, got " + std::to_string(fields.size()));
      }
      raw.user_ext = fields[0];
      raw.item_ext = fields[1];
      if (fields.size() >= 3) raw.weight = parse_weight(fields[2], line_no);
      if (fields.size() == 4) raw.timestamp = parse_timestamp(fields[3], line_no);
    }
    if (raw.user_ext.empty() || raw.item_ext.empty()) throw ParseError(line_no, "empty user or item id");
    out.push_back(std::move(raw));
  }
  return out;
}

std::vector<RawInteraction> read_interactions(const std::filesystem::path& path, InputFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return parse_interactions(in, format);
}

InteractionSet to_implicit(std::span<const RawInteraction> raws, Index min_user_interactions) {
  if (min_user_interactions < 1) throw Error("min_user_interactions must be >= 1");

  std::vector<std::string> user_names, item_names;
  user_names.reserve(raws.size());
  item_names.reserve(raws.size());
  for (const auto& r : raws) {
    user_names.push_back(r.user_ext);
    item_names.push_back(r.item_ext);
  }
  const auto users = index_ids(std::move(user_names));
  const auto items = index_ids(std::move(item_names));

  std::vector<Interaction> pairs;
  pairs.reserve(raws.size());
  for (const auto& r : raws) pairs.emplace_back(users.at(r.user_ext), items.at(r.item_ext));
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  std::vector<std::string> user_ids(users.size()), item_ids(items.size());
  for (const auto& [id, idx] : users) user_ids[idx] = id;
  for (const auto& [id, idx] : items) item_ids[idx] = id;

  // Drop light users, then items left without interactions, until stable.
  while (true) {
    const auto n_users = static_cast<Index>(user_ids.size());
    const auto n_items = static_cast<Index>(item_ids.size());
    std::vector<Index> user_deg(user_ids.size(), 0), item_deg(item_ids.size(), 0);
    for (const auto& [u, i] : pairs) {
      ++user_deg[u];
      ++item_deg[i];
    }
    std::vector<bool> keep_user(user_ids.size()), keep_item(item_ids.size());
    bool changed = false;
    for (Index u = 0; u < n_users; ++u) {
      keep_user[u] = user_deg[u] >= min_user_interactions;
      changed |= !keep_user[u];
    }
    for (Index i = 0; i < n_items; ++i) {
      keep_item[i] = item_deg[i] > 0;
      changed |= !keep_item[i];
    }
    if (!changed) break;

    const Compaction c = compact(keep_user, keep_item);
    std::vector<Interaction> kept;
    kept.reserve(pairs.size());
    for (const auto& [u, i] : pairs) {
      if (c.user_map[u] >= 0 && c.item_map[i] >= 0) kept.emplace_back(c.user_map[u], c.item_map[i]);
    }
    pairs = std::move(kept);
    std::vector<std::string> nu(static_cast<std::size_t>(c.n_users)), ni(static_cast<std::size_t>(c.n_items));
    for (Index u = 0; u < n_users; ++u) {
      if (c.user_map[u] >= 0) nu[c.user_map[u]] = std::move(user_ids[u]);
    }
    for (Index i = 0; i < n_items; ++i) {
      if (c.item_map[i] >= 0) ni[c.item_map[i]] = std::move(item_ids[i]);
    }
    user_ids = std::move(nu);
    item_ids = std::move(ni);
  }

  if (pairs.empty()) throw EmptyDatasetError("no interactions left after filtering");
  const auto n_users = static_cast<Index>(user_ids.size());
  const auto n_items = static_cast<Index>(item_ids.size());
  return InteractionSet::from_pairs(n_users, n_items, std::move(pairs), std::move(user_ids), std::move(item_ids));
}

// --- splits ------------------------------------------------------------------

std::string SplitProtocol::tag() const {
  if (kind == Kind::standard) return "standard_80_20";
  return "cold_start(" + std::to_string(items_per_user) + ")";
}

Index SplitPair::n_test_pairs() const {
  Index n = 0;
  for (const auto& t : test_items) n += static_cast<Index>(t.size());
  return n;
}

std::vector<Interaction> SplitPair::test_pairs() const {
  std::vector<Interaction> out;
  for (Index u = 0; u < static_cast<Index>(test_items.size()); ++u) {
    for (Index i : test_items[u]) out.emplace_back(u, i);
  }
  return out;
}

SplitPair split_standard(const InteractionSet& data, double train_fraction, std::uint64_t rng_seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("train_fraction must lie in (0, 1)");
  std::mt19937_64 rng(rng_seed);
  const auto n_users = static_cast<std::size_t>(data.n_users());
  std::vector<std::vector<Index>> train(n_users), test(n_users);
  for (Index u = 0; u < data.n_users(); ++u) {
    std::vector<Index> items(data.items_of(u).begin(), data.items_of(u).end());
    std::shuffle(items.begin(), items.end(), rng);
    const auto n = static_cast<double>(items.size());
    // The epsilon keeps e.g. 0.29 * 100 from flooring to 28.
    auto n_train = static_cast<std::size_t>(std::floor(train_fraction * n + 1e-9));
    n_train = std::clamp<std::size_t>(n_train, 1, items.size());
    train[u].assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n_train));
    test[u].assign(items.begin() + static_cast<std::ptrdiff_t>(n_train), items.end());
  }
  SplitPair split = assemble_split(data, std::vector<bool>(n_users, true), train, test);
  split.protocol = SplitProtocol::standard(train_fraction);
  split.seed = rng_seed;
  return split;
}

SplitPair split_cold_start(const InteractionSet& data, Index items_per_user, std::uint64_t rng_seed) {
  if (items_per_user < 1) throw Error("items_per_user must be >= 1");
  std::mt19937_64 rng(rng_seed);
  const auto n_users = static_cast<std::size_t>(data.n_users());
  std::vector<bool> active(n_users, false);
  std::vector<std::vector<Index>> train(n_users), test(n_users);
  for (Index u = 0; u < data.n_users(); ++u) {
    const auto src = data.items_of(u);
    if (static_cast<Index>(src.size()) <= items_per_user) continue;
    active[u] = true;
    std::vector<Index> items(src.begin(), src.end());
    std::shuffle(items.begin(), items.end(), rng);
    train[u].assign(items.begin(), items.begin() + items_per_user);
    test[u].assign(items.begin() + items_per_user, items.end());
  }
  if (std::none_of(active.begin(), active.end(), [](bool a) { return a; })) {
    throw EmptyDatasetError("no user has more than " + std::to_string(items_per_user) + " interactions");
  }
  SplitPair split = assemble_split(data, active, train, test);
  split.protocol = SplitProtocol::cold_start(items_per_user);
  split.seed = rng_seed;
  return split;
}

}  // namespace spectralcf

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spectralcf/types.hpp"

namespace spectralcf {

enum class InputFormat { movielens_dat, tsv };

InputFormat parse_input_format(std::string_view name);
std::string_view to_string(InputFormat format);

// One record as it appears in the source file, before implicit conversion.
struct RawInteraction {
  std::string user_ext;
  std::string item_ext;
  std::optional<double> weight;
  std::optional<std::int64_t> timestamp;
};

using Interaction = std::pair<Index, Index>;

// Deduplicated implicit feedback with dense ids.
//
// Every user and every item has at least one interaction. Index order follows
// natural ordering of the external ids (digit strings compare numerically), so
// re-ingesting a persisted training file reproduces the same index space.
class InteractionSet {
 public:
  InteractionSet() = default;

  // Validates the invariants and throws InvariantError on violation.
  // `pairs` may contain duplicates; they are collapsed.
  static InteractionSet from_pairs(Index n_users, Index n_items,
                                   std::vector<Interaction> pairs,
                                   std::vector<std::string> user_ids = {},
                                   std::vector<std::string> item_ids = {});

  Index n_users() const { return static_cast<Index>(user_items_.size()); }
  Index n_items() const { return n_items_; }
  Index n_pairs() const { return n_pairs_; }

  std::span<const Index> items_of(Index user) const { return user_items_.at(user); }
  const std::vector<std::vector<Index>>& user_items() const { return user_items_; }
  bool contains(Index user, Index item) const;

  // All pairs in (user, item) lexicographic order.
  std::vector<Interaction> pairs() const;
  std::vector<Index> item_counts() const;

  // External ids, indexed by dense id. Synthesized ("0", "1", ...) when the
  // set was built without them.
  const std::vector<std::string>& user_ids() const { return user_ids_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }
  std::optional<Index> find_user(std::string_view ext) const;
  std::optional<Index> find_item(std::string_view ext) const;

  double density() const;

  friend bool operator==(const InteractionSet&, const InteractionSet&) = default;

 private:
  Index n_items_ = 0;
  Index n_pairs_ = 0;
  std::vector<std::vector<Index>> user_items_;
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
};

// Total order used for id assignment: all-digit ids compare by numeric value,
// all-digit ids sort before the rest, everything else compares bytewise.
bool natural_less(std::string_view a, std::string_view b);

std::vector<RawInteraction> parse_interactions(std::istream& source, InputFormat format);
std::vector<RawInteraction> read_interactions(const std::filesystem::path& path, InputFormat format);

// Binarizes, deduplicates, drops users with fewer than `min_user_interactions`
// items and re-indexes. Throws EmptyDatasetError when nothing survives.
InteractionSet to_implicit(std::span<const RawInteraction> raws, Index min_user_interactions = 1);

struct SplitProtocol {
  enum class Kind { standard, cold_start };
  Kind kind = Kind::standard;
  double train_fraction = 0.8;
  Index items_per_user = 0;

  static SplitProtocol standard(double fraction) { return {Kind::standard, fraction, 0}; }
  static SplitProtocol cold_start(Index p) { return {Kind::cold_start, 0.0, p}; }

  // "standard_80_20" or "cold_start(P)".
  std::string tag() const;

  friend bool operator==(const SplitProtocol&, const SplitProtocol&) = default;
};

// Train and test over one frozen index space.
//
// `test_items[u]` is sorted and disjoint from train.items_of(u). Users or items
// that end up without any training interaction are removed from the index
// space; test pairs that referenced a removed item are counted in
// `dropped_test_pairs`.
struct SplitPair {
  InteractionSet train;
  std::vector<std::vector<Index>> test_items;
  SplitProtocol protocol;
  std::uint64_t seed = 0;
  Index excluded_users = 0;
  Index dropped_test_pairs = 0;

  Index n_test_pairs() const;
  std::vector<Interaction> test_pairs() const;

  friend bool operator==(const SplitPair&, const SplitPair&) = default;
};

SplitPair split_standard(const InteractionSet& data, double train_fraction, std::uint64_t rng_seed);
SplitPair split_cold_start(const InteractionSet& data, Index items_per_user, std::uint64_t rng_seed);

// train.tsv, test.tsv and split.meta inside `dir`.
struct SplitFiles {
  std::filesystem::path train;
  std::filesystem::path test;
  std::filesystem::path meta;
  static SplitFiles in(const std::filesystem::path& dir);
};

void write_split(const SplitPair& split, const std::filesystem::path& dir);
SplitPair read_split(const std::filesystem::path& dir);

// Reads a training file (tsv or movielens_dat) as an InteractionSet with min=1.
InteractionSet read_train_set(const std::filesystem::path& path, InputFormat format = InputFormat::tsv);

}  // namespace spectralcf

#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spectralcf/ingest.hpp"
#include "spectralcf/model.hpp"

namespace spectralcf {

enum class ApDenominator {
  min_relevant_cutoff,  // min(|relevant|, M)
  relevant,             // |relevant|
};

// |top-M ∩ relevant| / |relevant|. `relevant` is sorted ascending and non-empty.
double recall_at_m(std::span<const Index> ranked, std::span<const Index> relevant, Index m);

// Truncated average precision of one ranked list.
double map_at_m(std::span<const Index> ranked, std::span<const Index> relevant, Index m,
                ApDenominator denominator = ApDenominator::min_relevant_cutoff);

// Fills `scores` (length n_items) with the model's preference for each item.
using Scorer = std::function<void(Index user, std::span<double> scores)>;

Scorer factor_scorer(const FactorTable& factors);

struct UserMetrics {
  Index user = 0;
  std::vector<double> recall;  // parallel to EvalReport::cutoffs
  std::vector<double> average_precision;

  friend bool operator==(const UserMetrics&, const UserMetrics&) = default;
};

struct EvalReport {
  std::vector<Index> cutoffs;
  std::map<Index, double> recall_at;
  std::map<Index, double> map_at;
  Index n_evaluable_users = 0;
  Index n_skipped_users = 0;  // empty test set
  std::vector<UserMetrics> per_user;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct EvalOptions {
  ApDenominator denominator = ApDenominator::min_relevant_cutoff;
  bool keep_per_user = false;
};

// Ranks every item except the user's training items and averages both metrics
// over users with a non-empty test set.
EvalReport evaluate(const Scorer& scorer, const SplitPair& split, std::span<const Index> cutoffs,
                    const EvalOptions& options = {});

// Sum of non-negative terms with a fixed pairwise reduction tree.
double pairwise_sum(std::span<const double> values);

// Tab-separated "cutoff<TAB>metric<TAB>value" lines after '#' metadata lines.
void write_report(std::ostream& out, const EvalReport& report,
                  const std::vector<std::pair<std::string, std::string>>& metadata = {});
EvalReport read_report(std::istream& in);

}  // namespace spectralcf

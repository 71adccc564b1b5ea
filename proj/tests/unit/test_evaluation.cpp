#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "spectralcf/evaluation.hpp"
#include "spectralcf/synthetic.hpp"

using namespace spectralcf;

namespace {

// Ranking interleaves ids from the relevant set with distractors above it.
struct RankingInstance {
  std::vector<Index> ranked;
  std::vector<Index> relevant;
  Index m = 1;
};

RankingInstance random_ranking(std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> universe_size(2, 40);
  const Index n = universe_size(rng);
  std::vector<Index> items(static_cast<std::size_t>(n));
  std::iota(items.begin(), items.end(), Index{0});
  std::shuffle(items.begin(), items.end(), rng);
  RankingInstance inst;
  std::uniform_int_distribution<Index> len(0, n);
  inst.ranked.assign(items.begin(), items.begin() + len(rng));
  std::shuffle(items.begin(), items.end(), rng);
  std::uniform_int_distribution<Index> rel_size(1, std::max<Index>(1, n / 2));
  inst.relevant.assign(items.begin(), items.begin() + rel_size(rng));
  std::sort(inst.relevant.begin(), inst.relevant.end());
  std::uniform_int_distribution<Index> cutoff(1, n + 3);
  inst.m = cutoff(rng);
  return inst;
}

// Reference evaluator: full sort of every candidate, no partial selection.
EvalReport naive_evaluate(const Scorer& scorer, const SplitPair& split, const std::vector<Index>& cutoffs) {
  EvalReport report;
  report.cutoffs = cutoffs;
  const Index n_items = split.train.n_items();
  std::map<Index, std::vector<double>> recalls, aps;
  for (Index u = 0; u < split.train.n_users(); ++u) {
    if (split.test_items[u].empty()) {
      ++report.n_skipped_users;
      continue;
    }
    ++report.n_evaluable_users;
    std::vector<double> scores(static_cast<std::size_t>(n_items));
    scorer(u, scores);
    std::vector<Index> candidates;
    for (Index i = 0; i < n_items; ++i) {
      if (!split.train.contains(u, i)) candidates.push_back(i);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](Index a, Index b) { return scores[a] > scores[b]; });
    for (Index m : cutoffs) {
      recalls[m].push_back(oracle::naive_recall(candidates, split.test_items[u], m));
      aps[m].push_back(oracle::naive_average_precision(candidates, split.test_items[u], m));
    }
  }
  for (Index m : cutoffs) {
    double r = 0.0, a = 0.0;
    for (double v : recalls[m]) r += v;
    for (double v : aps[m]) a += v;
    report.recall_at[m] = r / static_cast<double>(report.n_evaluable_users);
    report.map_at[m] = a / static_cast<double>(report.n_evaluable_users);
  }
  return report;
}

Scorer random_scorer(Index n_users, Index n_items, std::uint64_t seed, int distinct_levels) {
  auto table = std::make_shared<Matrix>(n_users, n_items);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> level(0, distinct_levels - 1);
  for (Index k = 0; k < table->size(); ++k) table->data()[k] = level(rng) * 0.25;
  return [table](Index u, std::span<double> scores) {
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = (*table)(u, static_cast<Index>(i));
  };
}

}  // namespace

TEST(Recall, HandExamples) {
  const std::vector<Index> ranked{0, 1, 2};
  const std::vector<Index> relevant{0, 25};
  EXPECT_DOUBLE_EQ(recall_at_m(ranked, relevant, 2), 0.5);
  const std::vector<Index> inside{1, 2};
  EXPECT_DOUBLE_EQ(recall_at_m(ranked, inside, 3), 1.0);
}

TEST(AveragePrecision, HandExamples) {
  // ranked = [a, x, b], relevant = {a, b}
  const std::vector<Index> ranked{0, 9, 1};
  const std::vector<Index> relevant{0, 1};
  EXPECT_NEAR(map_at_m(ranked, relevant, 3), (1.0 + 2.0 / 3.0) / 2.0, 1e-15);
  const std::vector<Index> first{0, 1, 9};
  EXPECT_DOUBLE_EQ(map_at_m(first, relevant, 3), 1.0);
  const std::vector<Index> none{7, 8, 9, 0};
  EXPECT_DOUBLE_EQ(map_at_m(none, relevant, 3), 0.0);
}

TEST(AveragePrecision, DenominatorChoice) {
  const std::vector<Index> ranked{0, 5, 6};
  const std::vector<Index> relevant{0, 1, 2, 3};
  EXPECT_DOUBLE_EQ(map_at_m(ranked, relevant, 2), 1.0 / 2.0);
  EXPECT_DOUBLE_EQ(map_at_m(ranked, relevant, 2, ApDenominator::relevant), 1.0 / 4.0);
}

TEST(AveragePrecision, MinDenominatorNotMonotoneBelowRelevantCount) {
  // A miss at rank 2 grows the denominator without adding precision.
  const std::vector<Index> ranked{0, 9};
  const std::vector<Index> relevant{0, 1};
  EXPECT_DOUBLE_EQ(map_at_m(ranked, relevant, 1), 1.0);
  EXPECT_DOUBLE_EQ(map_at_m(ranked, relevant, 2), 0.5);
}

TEST(Metrics, AgreeWithBruteForce) {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = random_ranking(rng);
    EXPECT_EQ(recall_at_m(inst.ranked, inst.relevant, inst.m),
              oracle::naive_recall(inst.ranked, inst.relevant, inst.m));
    EXPECT_EQ(map_at_m(inst.ranked, inst.relevant, inst.m),
              oracle::naive_average_precision(inst.ranked, inst.relevant, inst.m));
    EXPECT_EQ(map_at_m(inst.ranked, inst.relevant, inst.m, ApDenominator::relevant),
              oracle::naive_average_precision(inst.ranked, inst.relevant, inst.m, false));
  }
}

TEST(Metrics, MonotoneInCutoff) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = random_ranking(rng);
    for (Index m = 1; m < 45; ++m) {
      EXPECT_LE(recall_at_m(inst.ranked, inst.relevant, m), recall_at_m(inst.ranked, inst.relevant, m + 1));
      EXPECT_LE(map_at_m(inst.ranked, inst.relevant, m, ApDenominator::relevant),
                map_at_m(inst.ranked, inst.relevant, m + 1, ApDenominator::relevant) + 1e-15);
      // min(|relevant|, M) only stops growing once M reaches |relevant|.
      if (m >= static_cast<Index>(inst.relevant.size())) {
        EXPECT_LE(map_at_m(inst.ranked, inst.relevant, m), map_at_m(inst.ranked, inst.relevant, m + 1) + 1e-15);
      }
    }
  }
}

TEST(Evaluate, PerfectRanker) {
  const auto ds = two_community_dataset(40, 30, 0.3, 0.05, 3);
  const auto split = split_standard(ds.data, 0.8, 3);
  const Scorer oracle = [&split](Index u, std::span<double> scores) {
    std::fill(scores.begin(), scores.end(), 0.0);
    for (Index i : split.test_items[u]) scores[i] = 1.0;
  };
  const std::vector<Index> cutoffs{1, 2, 5, 20};
  EvalOptions opts;
  opts.keep_per_user = true;
  const auto report = evaluate(oracle, split, cutoffs, opts);
  for (Index m : cutoffs) EXPECT_DOUBLE_EQ(report.map_at.at(m), 1.0);
  for (const auto& row : report.per_user) {
    const auto size = static_cast<double>(split.test_items[row.user].size());
    for (std::size_t c = 0; c < cutoffs.size(); ++c) {
      EXPECT_DOUBLE_EQ(row.recall[c], std::min(static_cast<double>(cutoffs[c]), size) / size);
    }
  }
}

TEST(Evaluate, MatchesNaiveEvaluator) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto ds = two_community_dataset(20, 16, 0.35, 0.08, seed);
    const auto split = split_standard(ds.data, 0.7, seed);
    const std::vector<Index> cutoffs{1, 3, 10, 50};
    const auto scorer = random_scorer(split.train.n_users(), split.train.n_items(), seed, seed % 2 ? 3 : 1000);
    const auto expected = naive_evaluate(scorer, split, cutoffs);
    const auto got = evaluate(scorer, split, cutoffs);
    EXPECT_EQ(got.n_evaluable_users, expected.n_evaluable_users);
    EXPECT_EQ(got.n_skipped_users, expected.n_skipped_users);
    for (Index m : cutoffs) {
      EXPECT_NEAR(got.recall_at.at(m), expected.recall_at.at(m), 1e-12);
      EXPECT_NEAR(got.map_at.at(m), expected.map_at.at(m), 1e-12);
    }
  }
}

TEST(Evaluate, StrictlyIncreasingTransformInvariant) {
  const auto ds = two_community_dataset(30, 25, 0.3, 0.05, 4);
  const auto split = split_cold_start(ds.data, 2, 4);
  const auto base = random_scorer(split.train.n_users(), split.train.n_items(), 9, 5);
  const Scorer warped = [&base](Index u, std::span<double> s) {
    base(u, s);
    for (double& v : s) v = std::exp(3.0 * v) - 7.0;
  };
  const std::vector<Index> cutoffs{5, 10, 20};
  EvalOptions opts;
  opts.keep_per_user = true;
  EXPECT_EQ(evaluate(base, split, cutoffs, opts), evaluate(warped, split, cutoffs, opts));
}

TEST(Evaluate, SkipsUsersWithoutTestItems) {
  const auto data = InteractionSet::from_pairs(2, 3, {{0, 0}, {1, 0}, {1, 1}, {1, 2}});
  const auto split = split_standard(data, 0.5, 1);
  const auto report = evaluate(random_scorer(2, 3, 1, 10), split, std::vector<Index>{1});
  EXPECT_EQ(report.n_skipped_users, 1);
  EXPECT_EQ(report.n_evaluable_users, 1);
}

TEST(Evaluate, TrainingItemsAreNeverRanked) {
  const auto ds = two_community_dataset(20, 20, 0.3, 0.05, 6);
  const auto split = split_standard(ds.data, 0.8, 6);
  // A scorer that prefers training items still only sees non-training items ranked.
  const Scorer seen_first = [&split](Index u, std::span<double> s) {
    std::fill(s.begin(), s.end(), 0.0);
    for (Index i : split.train.items_of(u)) s[i] = 100.0;
    for (Index i : split.test_items[u]) s[i] = 1.0;
  };
  const auto report = evaluate(seen_first, split, std::vector<Index>{20});
  EXPECT_DOUBLE_EQ(report.map_at.at(20), 1.0);
}

TEST(PairwiseSum, MatchesSequentialWithinRounding) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t n : {0u, 1u, 2u, 3u, 17u, 1000u}) {
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    EXPECT_NEAR(pairwise_sum(v), std::accumulate(v.begin(), v.end(), 0.0), 1e-12);
  }
}

TEST(Report, RoundTrip) {
  const auto ds = two_community_dataset(30, 25, 0.3, 0.05, 4);
  const auto split = split_standard(ds.data, 0.8, 4);
  const std::vector<Index> cutoffs{20, 40, 60, 80, 100};
  const auto report = evaluate(random_scorer(split.train.n_users(), split.train.n_items(), 2, 100), split, cutoffs);
  std::stringstream buf;
  write_report(buf, report, {{"model", "test"}});
  const std::string text = buf.str();
  EXPECT_NE(text.find("# model=test"), std::string::npos);
  EXPECT_NE(text.find("20\trecall\t"), std::string::npos);
  EXPECT_NE(text.find("100\tmap\t"), std::string::npos);
  const auto back = read_report(buf);
  EXPECT_EQ(back.cutoffs, report.cutoffs);
  EXPECT_EQ(back.recall_at, report.recall_at);
  EXPECT_EQ(back.map_at, report.map_at);
  EXPECT_EQ(back.n_evaluable_users, report.n_evaluable_users);
}

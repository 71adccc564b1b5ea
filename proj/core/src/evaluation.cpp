#include "spectralcf/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "spectralcf/errors.hpp"

namespace spectralcf {

namespace {

bool is_relevant(std::span<const Index> relevant, Index item) {
  return std::binary_search(relevant.begin(), relevant.end(), item);
}

void check_inputs(std::span<const Index> relevant, Index m) {
  if (relevant.empty()) throw Error("relevant set must not be empty");
  if (m < 1) throw Error("cutoff M must be >= 1");
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double recall_at_m(std::span<const Index> ranked, std::span<const Index> relevant, Index m) {
  check_inputs(relevant, m);
  const auto depth = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(m));
  std::size_t hits = 0;
  for (std::size_t k = 0; k < depth; ++k) hits += is_relevant(relevant, ranked[k]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double map_at_m(std::span<const Index> ranked, std::span<const Index> relevant, Index m, ApDenominator denominator) {
  check_inputs(relevant, m);
  const auto depth = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(m));
  std::size_t hits = 0;
  double precision_sum = 0.0;
  for (std::size_t k = 0; k < depth; ++k) {
    if (is_relevant(relevant, ranked[k])) {
      ++hits;
      precision_sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  const auto denom = denominator == ApDenominator::min_relevant_cutoff
                         ? std::min<std::size_t>(relevant.size(), static_cast<std::size_t>(m))
                         : relevant.size();
  return precision_sum / static_cast<double>(denom);
}

Scorer factor_scorer(const FactorTable& factors) {
  return [&factors](Index user, std::span<double> scores) {
    if (static_cast<Index>(scores.size()) != factors.items.rows()) throw DimensionError("score buffer size mismatch");
    Eigen::Map<Vector> out(scores.data(), static_cast<Index>(scores.size()));
    out.noalias() = factors.items * factors.users.row(user).transpose();
  };
}

double pairwise_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  if (values.size() == 1) return values[0];
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

EvalReport evaluate(const Scorer& scorer, const SplitPair& split, std::span<const Index> cutoffs,
                    const EvalOptions& options) {
  if (cutoffs.empty()) throw Error("at least one cutoff is required");
  for (Index m : cutoffs) {
    if (m < 1) throw Error("cutoffs must be >= 1");
  }
  const InteractionSet& train = split.train;
  if (static_cast<Index>(split.test_items.size()) != train.n_users()) {
    throw DimensionError("test table does not match the training index space");
  }

  EvalReport report;
  report.cutoffs.assign(cutoffs.begin(), cutoffs.end());
  const Index max_cutoff = *std::max_element(cutoffs.begin(), cutoffs.end());
  const std::size_t n_cut = cutoffs.size();

  std::vector<std::vector<double>> recall_terms(n_cut), ap_terms(n_cut);
  std::vector<double> scores(static_cast<std::size_t>(train.n_items()));

  for (Index u = 0; u < train.n_users(); ++u) {
    const auto& relevant = split.test_items[u];
    if (relevant.empty()) {
      ++report.n_skipped_users;
      continue;
    }
    ++report.n_evaluable_users;
    std::fill(scores.begin(), scores.end(), 0.0);
    scorer(u, scores);
    const auto exclude = train.items_of(u);
    const auto ranked = top_m(scores, exclude, max_cutoff);
    for (Index item : ranked) {
      if (std::binary_search(exclude.begin(), exclude.end(), item)) {
        throw InvariantError("training item " + std::to_string(item) + " ranked for user " + std::to_string(u));
      }
    }

    UserMetrics row;
    row.user = u;
    for (std::size_t c = 0; c < n_cut; ++c) {
      const double r = recall_at_m(ranked, relevant, cutoffs[c]);
      const double ap = map_at_m(ranked, relevant, cutoffs[c], options.denominator);
      recall_terms[c].push_back(r);
      ap_terms[c].push_back(ap);
      if (options.keep_per_user) {
        row.recall.push_back(r);
        row.average_precision.push_back(ap);
      }
    }
    if (options.keep_per_user) report.per_user.push_back(std::move(row));
  }

  const auto denom = static_cast<double>(std::max<Index>(report.n_evaluable_users, 1));
  for (std::size_t c = 0; c < n_cut; ++c) {
    report.recall_at[cutoffs[c]] = pairwise_sum(recall_terms[c]) / denom;
    report.map_at[cutoffs[c]] = pairwise_sum(ap_terms[c]) / denom;
  }
  return report;
}

void write_report(std::ostream& out, const EvalReport& report,
                  const std::vector<std::pair<std::string, std::string>>& metadata) {
  out << "# spectralcf evaluation report\n";
  for (const auto& [key, value] : metadata) out << "# " << key << '=' << value << '\n';
  out << "# n_evaluable_users=" << report.n_evaluable_users << '\n';
  out << "# n_skipped_users=" << report.n_skipped_users << '\n';
  for (Index m : report.cutoffs) {
    out << m << "\trecall\t" << format_value(report.recall_at.at(m)) << '\n';
    out << m << "\tmap\t" << format_value(report.map_at.at(m)) << '\n';
  }
}

EvalReport read_report(std::istream& in) {
  EvalReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "n_evaluable_users") report.n_evaluable_users = std::stoll(value);
      if (key == "n_skipped_users") report.n_skipped_users = std::stoll(value);
      continue;
    }
    std::istringstream fields(line);
    Index m = 0;
    std::string metric;
    std::string value_text;
    if (!(fields >> m >> metric >> value_text)) throw ParseError(line_no, "expected cutoff, metric and value");
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
    if (ec != std::errc()) throw ParseError(line_no, "invalid metric value");
    if (metric == "recall") {
      report.recall_at[m] = value;
      report.cutoffs.push_back(m);
    } else if (metric == "map") {
      report.map_at[m] = value;
    } else {
      throw ParseError(line_no, "unknown metric '" + metric + "'");
    }
  }
  return report;
}

}  // namespace spectralcf

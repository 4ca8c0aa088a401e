#include "collie/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

namespace collie {

RankOutcome reciprocal_rank(std::span<const ScoredCandidate> ranking, const std::string& correct_id,
                            const std::string& query_text) {
  std::size_t pos = 0;
  std::size_t found = 0;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (ranking[i].candidate_id == correct_id) {
      if (found++ == 0) pos = i + 1;
    }
  }
  if (found == 0) throw InvalidInput("reciprocal_rank: '" + correct_id + "' is not in the ranking");
  if (found > 1) throw InvalidInput("reciprocal_rank: '" + correct_id + "' appears more than once");
  return {query_text, correct_id, pos, 1.0 / static_cast<double>(pos)};
}

double mean_reciprocal_rank(std::span<const double> reciprocal_ranks) {
  if (reciprocal_ranks.empty()) throw InvalidInput("mean_reciprocal_rank of no outcomes");
  double s = 0.0;
  for (double r : reciprocal_ranks) s += r;
  return s / static_cast<double>(reciprocal_ranks.size());
}

double mean_reciprocal_rank(std::span<const RankOutcome> outcomes) {
  if (outcomes.empty()) throw InvalidInput("mean_reciprocal_rank of no outcomes");
  double s = 0.0;
  for (const auto& o : outcomes) s += o.reciprocal_rank;
  return s / static_cast<double>(outcomes.size());
}

Interval Interval::clipped(double lo, double hi) const {
  return {mean, std::clamp(low, lo, hi), std::clamp(high, lo, hi)};
}

Interval confidence_interval(std::span<const double> v, double z) {
  if (v.size() < 2) throw InvalidInput("confidence_interval needs at least two values");
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double half = z * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return {mean, mean - half, mean + half};
}

double random_baseline_mrr(std::size_t n) {
  if (n == 0) throw InvalidInput("random_baseline_mrr of an empty candidate set");
  double h = 0.0;
  for (std::size_t k = 1; k <= n; ++k) h += 1.0 / static_cast<double>(k);
  return h / static_cast<double>(n);
}

std::string to_string(Condition c) {
  switch (c) {
    case Condition::learning_new: return "learning_new";
    case Condition::retention_trained: return "retention_trained";
    case Condition::retention_other: return "retention_other";
    case Condition::compositional: return "compositional";
    case Condition::synonym: return "synonym";
    case Condition::original: return "original";
  }
  return "unknown";
}

void write_report_csv(std::ostream& out, std::span<const ReportRow> rows) {
  out << kReportHeader << '\n';
  char buf[64];
  for (const auto& r : rows) {
    out << r.experiment << ',' << r.system << ',' << r.round << ',' << r.condition;
    for (double v : {r.mrr, r.ci_low, r.ci_high}) {
      std::snprintf(buf, sizeof buf, ",%.6f", v);
      out << buf;
    }
    out << ',' << r.n_iterations << '\n';
  }
}

std::vector<ReportRow> aggregate_reports(const std::string& experiment,
                                         const std::vector<std::vector<RoundReport>>& per_iteration) {
  // key: (system, round, condition) in first-seen order
  using Key = std::tuple<std::string, std::size_t, Condition>;
  std::vector<Key> order;
  std::map<Key, std::vector<double>> values;
  for (const auto& iteration : per_iteration) {
    for (const auto& r : iteration) {
      Key k{r.system, r.round_index, r.condition};
      auto [it, inserted] = values.try_emplace(k);
      if (inserted) order.push_back(k);
      it->second.push_back(r.mrr);
    }
  }
  std::vector<ReportRow> rows;
  rows.reserve(order.size());
  for (const auto& k : order) {
    const auto& v = values.at(k);
    ReportRow row{experiment, std::get<0>(k), std::get<1>(k), to_string(std::get<2>(k)), 0, 0, 0, v.size()};
    if (v.size() >= 2) {
      const auto ci = confidence_interval(v).clipped();
      row.mrr = ci.mean;
      row.ci_low = ci.low;
      row.ci_high = ci.high;
    } else {
      row.mrr = row.ci_low = row.ci_high = v.front();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace collie

#pragma once

#include <cstddef>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "collie/embedding.hpp"

namespace collie {

struct RankOutcome {
  std::string query_text;
  std::string correct_id;
  std::size_t rank = 0;  // 1-based
  double reciprocal_rank = 0.0;
};

RankOutcome reciprocal_rank(std::span<const ScoredCandidate> ranking, const std::string& correct_id,
                            const std::string& query_text = {});

double mean_reciprocal_rank(std::span<const RankOutcome> outcomes);
double mean_reciprocal_rank(std::span<const double> reciprocal_ranks);

struct Interval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;

  Interval clipped(double lo = 0.0, double hi = 1.0) const;
};

/// Normal-approximation interval mean +- z * sd / sqrt(n), sample sd.
Interval confidence_interval(std::span<const double> per_iteration_means, double z = 1.96);

/// Expected MRR when the correct candidate sits at a uniformly random
/// position among n: H(n) / n.
double random_baseline_mrr(std::size_t n);

enum class Condition { learning_new, retention_trained, retention_other, compositional, synonym, original };
std::string to_string(Condition c);

struct RoundReport {
  std::string system;
  std::size_t round_index = 0;
  Condition condition = Condition::learning_new;
  double mrr = 0.0;
  std::size_t n_queries = 0;
  std::map<std::string, double> per_label_mrr;
};

/// Aggregated row of the CSV report.
struct ReportRow {
  std::string experiment;
  std::string system;
  std::size_t round = 0;
  std::string condition;
  double mrr = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_iterations = 0;
};

inline constexpr const char* kReportHeader =
    "experiment,system,round,condition,mrr,ci_low,ci_high,n_iterations";

/// Writes header plus rows; numbers in fixed 6-decimal notation.
void write_report_csv(std::ostream& out, std::span<const ReportRow> rows);

/// Collapses per-iteration reports into one row per (system, round,
/// condition) with a clipped 95% interval. Input order of iterations does
/// not affect the output.
std::vector<ReportRow> aggregate_reports(const std::string& experiment,
                                         const std::vector<std::vector<RoundReport>>& per_iteration);

}  // namespace collie

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "collie/embedding.hpp"
#include "collie/logistic.hpp"

namespace collie {

struct Candidate {
  std::string id;
  Embedding embedding;
};

/// Candidate referents normalized on ingestion, stored row-major for the
/// batch scoring kernel.
class CandidateSet {
 public:
  CandidateSet() = default;
  explicit CandidateSet(std::span<const Candidate> candidates);

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }
  kernels::RowsView rows() const { return {rows_, dim_}; }

  /// Cosine of the query against every candidate, in insertion order.
  std::vector<double> cosines(std::span<const double> query) const;

 private:
  std::vector<std::string> ids_;
  std::vector<double> rows_;
  std::size_t dim_ = 0;
};

/// Sorts by descending score; equal scores keep ascending insertion index.
std::vector<ScoredCandidate> rank_by_scores(const std::vector<std::string>& ids,
                                            std::span<const double> scores,
                                            double temperature_inverse = kDefaultTemperatureInverse);

/// 1-based rank that rank_by_scores would give to candidate `index`.
std::size_t rank_of(std::span<const double> scores, std::size_t index);

std::vector<ScoredCandidate> zero_shot_rank(const Embedding& t, const CandidateSet& candidates,
                                            double temperature_inverse = kDefaultTemperatureInverse);
std::vector<ScoredCandidate> zero_shot_rank(const Embedding& t, std::span<const Candidate> candidates,
                                            double temperature_inverse = kDefaultTemperatureInverse);

/// Lowercased, whitespace-trimmed class key.
std::string normalize_expression(const std::string& expression);

struct LabeledImage {
  std::string label;
  Embedding image_embedding;
};

/// Few-shot learner: each distinct expression is an atomic class of a
/// softmax regression over image embeddings.
class FewShotClassifier {
 public:
  FewShotClassifier() = default;

  const std::vector<std::string>& classes() const { return classes_; }
  double l2_strength() const { return l2_; }
  const logistic::MultinomialModel& model() const { return model_; }
  std::optional<std::size_t> class_index(const std::string& expression) const;

  /// P(class | image) for every candidate.
  std::vector<double> class_probabilities(std::size_t cls, const CandidateSet& candidates) const;

  friend FewShotClassifier fit_fewshot(std::span<const LabeledImage>, double);

 private:
  std::vector<std::string> classes_;
  logistic::MultinomialModel model_;
  double l2_ = 1.0;
};

FewShotClassifier fit_fewshot(std::span<const LabeledImage> examples, double l2 = 1.0);

/// Ranks by the class probability when the expression is a known class,
/// otherwise falls back to zero_shot_rank.
std::vector<ScoredCandidate> fewshot_rank(const FewShotClassifier& clf, const std::string& expression,
                                          const Embedding& t, const CandidateSet& candidates,
                                          double temperature_inverse = kDefaultTemperatureInverse);

}  // namespace collie

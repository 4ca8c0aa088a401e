#include "collie/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <unordered_map>

namespace collie {

CandidateSet::CandidateSet(std::span<const Candidate> candidates) {
  ids_.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (dim_ == 0) dim_ = c.embedding.dim();
    require_same_dim(dim_, c.embedding.dim(), "candidate '" + c.id + "'");
    ids_.push_back(c.id);
    const auto v = normalize(c.embedding.to_doubles());
    rows_.insert(rows_.end(), v.begin(), v.end());
  }
}

std::vector<double> CandidateSet::cosines(std::span<const double> query) const {
  require_same_dim(dim_, query.size(), "candidate scoring");
  const auto q = normalize(query);
  std::vector<double> out(size());
  kernels::dots_with(q, rows(), out);
  return out;
}

std::vector<ScoredCandidate> rank_by_scores(const std::vector<std::string>& ids,
                                            std::span<const double> scores,
                                            double temperature_inverse) {
  if (ids.empty()) throw InvalidInput("cannot rank an empty candidate set");
  const auto probs = softmax_scores(scores, temperature_inverse);
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<ScoredCandidate> out;
  out.reserve(ids.size());
  for (std::size_t i : order) out.push_back({ids[i], scores[i], probs[i]});
  return out;
}

std::size_t rank_of(std::span<const double> scores, std::size_t index) {
  const double s = scores[index];
  std::size_t rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j)
    if (scores[j] > s || (scores[j] == s && j < index)) ++rank;
  return rank;
}

std::vector<ScoredCandidate> zero_shot_rank(const Embedding& t, const CandidateSet& candidates,
                                            double temperature_inverse) {
  if (candidates.size() == 0) throw InvalidInput("zero_shot_rank: empty candidate set");
  return rank_by_scores(candidates.ids(), candidates.cosines(t.to_doubles()), temperature_inverse);
}

std::vector<ScoredCandidate> zero_shot_rank(const Embedding& t, std::span<const Candidate> candidates,
                                            double temperature_inverse) {
  if (candidates.empty()) throw InvalidInput("zero_shot_rank: empty candidate set");
  return zero_shot_rank(t, CandidateSet(candidates), temperature_inverse);
}

std::string normalize_expression(const std::string& expression) {
  auto b = expression.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = expression.find_last_not_of(" \t\r\n");
  std::string out = expression.substr(b, e - b + 1);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<std::size_t> FewShotClassifier::class_index(const std::string& expression) const {
  const auto key = normalize_expression(expression);
  const auto it = std::find(classes_.begin(), classes_.end(), key);
  if (it == classes_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - classes_.begin());
}

std::vector<double> FewShotClassifier::class_probabilities(std::size_t cls,
                                                           const CandidateSet& candidates) const {
  require_same_dim(model_.dim, candidates.dim(), "few-shot candidates");
  std::vector<double> out(candidates.size());
  const auto rows = candidates.rows();
  for (std::size_t i = 0; i < candidates.size(); ++i) out[i] = model_.probabilities(rows.row(i))[cls];
  return out;
}

FewShotClassifier fit_fewshot(std::span<const LabeledImage> examples, double l2) {
  if (examples.empty()) throw InvalidInput("fit_fewshot: no examples");
  FewShotClassifier clf;
  clf.l2_ = l2;
  // Classes are sorted so the fit does not depend on example order.
  for (const auto& e : examples) clf.classes_.push_back(normalize_expression(e.label));
  std::sort(clf.classes_.begin(), clf.classes_.end());
  clf.classes_.erase(std::unique(clf.classes_.begin(), clf.classes_.end()), clf.classes_.end());

  const std::size_t dim = examples.front().image_embedding.dim();
  std::vector<double> x;
  std::vector<int> labels;
  x.reserve(examples.size() * dim);
  for (const auto& e : examples) {
    require_same_dim(dim, e.image_embedding.dim(), "few-shot example '" + e.label + "'");
    const auto v = normalize(e.image_embedding.to_doubles());
    x.insert(x.end(), v.begin(), v.end());
    labels.push_back(static_cast<int>(*clf.class_index(e.label)));
  }
  clf.model_ = logistic::fit_multinomial({x, dim}, labels, clf.classes_.size(), l2);
  return clf;
}

std::vector<ScoredCandidate> fewshot_rank(const FewShotClassifier& clf, const std::string& expression,
                                          const Embedding& t, const CandidateSet& candidates,
                                          double temperature_inverse) {
  if (candidates.size() == 0) throw InvalidInput("fewshot_rank: empty candidate set");
  const auto cls = clf.class_index(expression);
  if (!cls) return zero_shot_rank(t, candidates, temperature_inverse);
  return rank_by_scores(candidates.ids(), clf.class_probabilities(*cls, candidates), temperature_inverse);
}

}  // namespace collie

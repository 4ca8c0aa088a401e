#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "collie/embedding.hpp"
#include "collie/kernels.hpp"
#include "collie/svr.hpp"

namespace collie {

enum class ScalingKind { svr, knn, linear_regression, logistic_regression, none, exact_match };
enum class KnnWeighting { distance, uniform };

struct ScalingConfig {
  ScalingKind kind = ScalingKind::svr;
  svr::Kernel svr_kernel = svr::Kernel::linear;
  double svr_C = 1.0;
  double svr_epsilon = 0.1;
  std::optional<double> rbf_gamma;  // nullopt: 1 / (D * Var(X))
  double sigmoid_coef0 = 0.0;
  std::size_t knn_k = 10;
  KnnWeighting knn_weighting = KnnWeighting::distance;
  double logistic_l2 = 1.0;
  std::size_t negatives_count = 0;  // 0: use the whole corpus

  void validate() const;

  /// CLI spelling: svr-linear, svr-rbf, svr-sigmoid, knn, linear, logistic, none, exact.
  static ScalingConfig parse(const std::string& name);
  std::string name() const;
};

/// The fixed set of "should not be transformed" expressions. Embeddings
/// are normalized on construction; their Gram matrix is computed once and
/// shared by every scaling fit that uses the corpus.
class NegativeCorpus {
 public:
  NegativeCorpus() = default;
  NegativeCorpus(std::vector<std::string> texts, std::vector<Embedding> embeddings);

  std::size_t size() const { return texts_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& texts() const { return texts_; }
  const std::vector<Embedding>& embeddings() const { return embeddings_; }
  /// Row-major doubles, one row per noun.
  std::span<const double> rows() const { return rows_; }
  /// size() x size() dot products.
  std::span<const double> gram() const;

 private:
  std::vector<std::string> texts_;
  std::vector<Embedding> embeddings_;
  std::vector<double> rows_;
  std::size_t dim_ = 0;
  struct GramCache {
    std::once_flag once;
    std::vector<double> values;
  };
  std::shared_ptr<GramCache> gram_ = std::make_shared<GramCache>();
};

/// Trained gate s(T) in [0, 1].
class ScalingModel {
 public:
  const ScalingConfig& config() const { return config_; }
  std::size_t dim() const { return dim_; }
  std::size_t positives_count() const { return positives_count_; }
  std::size_t negatives_count() const { return negatives_count_; }

  /// Regressor output before clipping (logistic: the probability).
  double raw(std::span<const double> t) const;
  double predict(std::span<const double> t) const;
  double predict(const Embedding& t) const;

  // Learned parameters, exposed for snapshots.
  struct Parameters {
    std::vector<double> points;   // row-major, dim columns: SVs, neighbors or stored positives
    std::vector<double> coef;     // SVR dual coefficients or KNN targets
    std::vector<double> weights;  // linear / logistic
    double bias = 0.0;
    double gamma = 0.0;           // resolved kernel gamma
  };
  const Parameters& parameters() const { return params_; }
  static ScalingModel from_parameters(ScalingConfig config, std::size_t dim, Parameters params,
                                      std::size_t positives_count, std::size_t negatives_count);

 private:
  friend ScalingModel fit_scaling(std::span<const Embedding>, const NegativeCorpus&,
                                  const ScalingConfig&);
  double knn_raw(std::span<const double> t) const;

  ScalingConfig config_;
  std::size_t dim_ = 0;
  Parameters params_;
  std::size_t positives_count_ = 0;
  std::size_t negatives_count_ = 0;
};

ScalingModel fit_scaling(std::span<const Embedding> positives, const NegativeCorpus& negatives,
                         const ScalingConfig& config);

inline double predict_scale(const ScalingModel& model, const Embedding& t) {
  return model.predict(t);
}

/// Cosine distance below which exact_match treats a query as a stored positive.
inline constexpr double kExactMatchCosineDistance = 1e-7;

}  // namespace collie

#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "collie/embedding.hpp"
#include "collie/grounding_pair.hpp"

namespace collie {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class RegressionTargetMode {
  difference_vector,
  // Negatives join the design matrix with a zero target.
  difference_with_zero_negatives,
};

inline constexpr double kDefaultRidgeLambda = 0.001;
inline constexpr double kRidgeSweep[] = {0.0001, 0.001, 0.01, 0.1};

/// Multi-output ridge regression a(T) = beta * T + intercept, trained on
/// the difference vectors I - T. The intercept is not penalized.
class AdjustmentModel {
 public:
  AdjustmentModel() = default;
  /// The no-data model: predicts the zero vector.
  static AdjustmentModel zero(std::size_t dim, double lambda = kDefaultRidgeLambda);
  static AdjustmentModel from_parameters(RowMatrix beta, Eigen::VectorXd intercept,
                                         double lambda, std::size_t num_training_pairs);

  std::size_t dim() const { return static_cast<std::size_t>(intercept_.size()); }
  const RowMatrix& beta() const { return beta_; }
  const Eigen::VectorXd& intercept() const { return intercept_; }
  double lambda() const { return lambda_; }
  std::size_t num_training_pairs() const { return num_training_pairs_; }

  std::vector<double> predict(std::span<const double> t) const;
  std::vector<double> predict(const Embedding& t) const;

 private:
  RowMatrix beta_;
  Eigen::VectorXd intercept_;
  double lambda_ = kDefaultRidgeLambda;
  std::size_t num_training_pairs_ = 0;
};

AdjustmentModel fit_adjustment(std::span<const GroundingPair> pairs, std::size_t dim,
                               double lambda = kDefaultRidgeLambda,
                               RegressionTargetMode mode = RegressionTargetMode::difference_vector,
                               std::span<const Embedding> negatives = {});

inline std::vector<double> predict_adjustment(const AdjustmentModel& model, const Embedding& t) {
  return model.predict(t);
}

/// Solves min ||Y - X W||^2 + lambda ||W||_F^2 for W (cols(X) x cols(Y)).
/// X and Y are expected to be centered by the caller. Picks the primal or
/// the dual (push-through) system, whichever is smaller; singular systems
/// at lambda = 0 resolve to the minimum-norm solution.
RowMatrix solve_ridge(const RowMatrix& x, const RowMatrix& y, double lambda);

}  // namespace collie

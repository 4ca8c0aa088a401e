#include "collie/adjustment.hpp"

#include <cmath>
#include <limits>

#include "collie/kernels.hpp"

namespace collie {

namespace {

// Solves A Z = B for symmetric positive semi-definite A. With a positive
// ridge the system is SPD and goes through Cholesky; otherwise (or if the
// factorization fails) through an eigen-decomposition pseudo-inverse.
RowMatrix solve_psd(const Eigen::MatrixXd& a, const RowMatrix& b, double lambda) {
  if (lambda > 0.0) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) return llt.solve(b);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  const Eigen::VectorXd& w = eig.eigenvalues();
  const double wmax = w.cwiseAbs().maxCoeff();
  const double tol = static_cast<double>(a.rows()) * std::numeric_limits<double>::epsilon() * wmax;
  Eigen::VectorXd inv(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) inv[i] = w[i] > tol ? 1.0 / w[i] : 0.0;
  const Eigen::MatrixXd& v = eig.eigenvectors();
  return v * inv.asDiagonal() * (v.transpose() * b);
}

}  // namespace

RowMatrix solve_ridge(const RowMatrix& x, const RowMatrix& y, double lambda) {
  if (lambda < 0.0 || !std::isfinite(lambda)) throw InvalidInput("ridge lambda must be >= 0");
  const Eigen::Index n = x.rows(), d = x.cols(), m = y.cols();
  if (y.rows() != n) throw DimensionMismatch(n, y.rows(), "ridge targets");
  if (n == 0) return RowMatrix::Zero(d, m);

  if (n <= d) {
    // W = X^T (X X^T + lambda I)^-1 Y
    Eigen::MatrixXd k(n, n);
    kernels::gram({std::span<const double>(x.data(), n * d), static_cast<std::size_t>(d)},
                  {k.data(), static_cast<std::size_t>(n * n)});
    k.diagonal().array() += lambda;
    const RowMatrix c = solve_psd(k, y, lambda);
    return x.transpose() * c;
  }
  // W = (X^T X + lambda I)^-1 X^T Y
  const RowMatrix xt = x.transpose();
  Eigen::MatrixXd g(d, d);
  kernels::gram({std::span<const double>(xt.data(), n * d), static_cast<std::size_t>(n)},
                {g.data(), static_cast<std::size_t>(d * d)});
  g.diagonal().array() += lambda;
  const RowMatrix rhs = xt * y;
  return solve_psd(g, rhs, lambda);
}

AdjustmentModel AdjustmentModel::zero(std::size_t dim, double lambda) {
  return from_parameters(RowMatrix::Zero(dim, dim), Eigen::VectorXd::Zero(dim), lambda, 0);
}

AdjustmentModel AdjustmentModel::from_parameters(RowMatrix beta, Eigen::VectorXd intercept,
                                                 double lambda, std::size_t num_training_pairs) {
  if (beta.rows() != intercept.size() || beta.cols() != intercept.size())
    throw DimensionMismatch(intercept.size(), beta.rows(), "adjustment parameters");
  if (!beta.allFinite() || !intercept.allFinite())
    throw InvalidInput("adjustment parameters must be finite");
  AdjustmentModel m;
  m.beta_ = std::move(beta);
  m.intercept_ = std::move(intercept);
  m.lambda_ = lambda;
  m.num_training_pairs_ = num_training_pairs;
  return m;
}

std::vector<double> AdjustmentModel::predict(std::span<const double> t) const {
  require_same_dim(dim(), t.size(), "predict_adjustment");
  const Eigen::Map<const Eigen::VectorXd> tv(t.data(), static_cast<Eigen::Index>(t.size()));
  const Eigen::VectorXd out = beta_ * tv + intercept_;
  return {out.data(), out.data() + out.size()};
}

std::vector<double> AdjustmentModel::predict(const Embedding& t) const {
  return predict(t.to_doubles());
}

AdjustmentModel fit_adjustment(std::span<const GroundingPair> pairs, std::size_t dim,
                               double lambda, RegressionTargetMode mode,
                               std::span<const Embedding> negatives) {
  if (lambda < 0.0 || !std::isfinite(lambda)) throw InvalidInput("ridge lambda must be >= 0");
  if (pairs.empty()) return AdjustmentModel::zero(dim, lambda);

  const bool with_negatives = mode == RegressionTargetMode::difference_with_zero_negatives;
  const std::size_t n = pairs.size() + (with_negatives ? negatives.size() : 0);
  const auto d = static_cast<Eigen::Index>(dim);
  RowMatrix x(static_cast<Eigen::Index>(n), d);
  RowMatrix y(static_cast<Eigen::Index>(n), d);

  Eigen::Index r = 0;
  for (const auto& p : pairs) {
    require_same_dim(dim, p.text_embedding.dim(), "text embedding of '" + p.text + "'");
    require_same_dim(dim, p.image_embedding.dim(), "image embedding of '" + p.image_id + "'");
    for (Eigen::Index k = 0; k < d; ++k) {
      const double t = p.text_embedding[k];
      x(r, k) = t;
      y(r, k) = static_cast<double>(p.image_embedding[k]) - t;
    }
    ++r;
  }
  if (with_negatives) {
    for (const auto& e : negatives) {
      require_same_dim(dim, e.dim(), "negative embedding");
      for (Eigen::Index k = 0; k < d; ++k) x(r, k) = e[k];
      y.row(r).setZero();
      ++r;
    }
  }

  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const Eigen::RowVectorXd y_mean = y.colwise().mean();
  x.rowwise() -= x_mean;
  y.rowwise() -= y_mean;

  const RowMatrix w = solve_ridge(x, y, lambda);
  RowMatrix beta = w.transpose();
  Eigen::VectorXd intercept = y_mean.transpose() - beta * x_mean.transpose();
  return AdjustmentModel::from_parameters(std::move(beta), std::move(intercept), lambda,
                                          pairs.size());
}

}  // namespace collie

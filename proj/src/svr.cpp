#include "collie/svr.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace collie::svr {

double kernel_from_dot(const KernelParams& k, double dot, double sq_norm_a, double sq_norm_b) {
  switch (k.kind) {
    case Kernel::linear:
      return dot;
    case Kernel::rbf:
      return std::exp(-k.gamma * std::max(0.0, sq_norm_a + sq_norm_b - 2.0 * dot));
    case Kernel::sigmoid:
      return std::tanh(k.gamma * dot + k.coef0);
  }
  return 0.0;
}

namespace {

constexpr double kTau = 1e-12;

// Lazily built kernel rows over the l base points.
class KernelRows {
 public:
  KernelRows(const GramSource& gram, const KernelParams& kernel)
      : gram_(gram), kernel_(kernel), rows_(gram.size), sq_norms_(gram.size) {
    std::vector<double> buf(gram.size);
    // Diagonal of the Gram matrix, needed by rbf.
    for (std::size_t i = 0; i < gram.size; ++i) {
      gram.row(i, buf);
      sq_norms_[i] = buf[i];
      diag_raw_.push_back(buf[i]);
    }
  }

  const std::vector<double>& row(std::size_t i) {
    auto& r = rows_[i];
    if (!r) {
      r = std::make_unique<std::vector<double>>(gram_.size);
      gram_.row(i, *r);
      for (std::size_t j = 0; j < gram_.size; ++j)
        (*r)[j] = kernel_from_dot(kernel_, (*r)[j], sq_norms_[i], sq_norms_[j]);
    }
    return *r;
  }

  double diag(std::size_t i) const {
    return kernel_from_dot(kernel_, diag_raw_[i], sq_norms_[i], sq_norms_[i]);
  }

 private:
  const GramSource& gram_;
  KernelParams kernel_;
  std::vector<std::unique_ptr<std::vector<double>>> rows_;
  std::vector<double> sq_norms_;
  std::vector<double> diag_raw_;
};

}  // namespace

Solution solve(const GramSource& gram, std::span<const double> targets,
               const KernelParams& kernel, const Options& opts) {
  const std::size_t l = gram.size;
  if (targets.size() != l) throw std::invalid_argument("svr: target count does not match data");
  if (!(opts.C > 0.0)) throw std::invalid_argument("svr: C must be > 0");
  if (opts.epsilon < 0.0) throw std::invalid_argument("svr: epsilon must be >= 0");

  Solution sol;
  sol.coef.assign(l, 0.0);
  if (l == 0) return sol;

  // Variables t < l carry alpha (sign +1), t >= l carry alpha* (sign -1).
  const std::size_t n = 2 * l;
  const double c = opts.C;
  std::vector<double> alpha(n, 0.0), grad(n), qd(n);
  std::vector<signed char> y(n);
  KernelRows rows(gram, kernel);
  for (std::size_t t = 0; t < l; ++t) {
    y[t] = 1;
    y[t + l] = -1;
    grad[t] = opts.epsilon - targets[t];
    grad[t + l] = opts.epsilon + targets[t];
    qd[t] = qd[t + l] = rows.diag(t);
  }

  auto up = [&](std::size_t t) { return y[t] > 0 ? alpha[t] < c : alpha[t] > 0.0; };
  auto low = [&](std::size_t t) { return y[t] > 0 ? alpha[t] > 0.0 : alpha[t] < c; };

  const std::size_t max_iter =
      opts.max_passes > std::numeric_limits<std::size_t>::max() / n ? std::numeric_limits<std::size_t>::max()
                                                                     : opts.max_passes * n;
  std::size_t iter = 0;
  for (; iter < max_iter; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i == n || j == n || gmax - gmin < opts.tolerance) {
      sol.converged = true;
      break;
    }

    const auto& ki = rows.row(i % l);
    const auto& kj = rows.row(j % l);
    const double qij = y[i] * y[j] * ki[j % l];
    const double old_ai = alpha[i], old_aj = alpha[j];

    if (y[i] != y[j]) {
      double quad = qd[i] + qd[j] + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = qd[i] + qd[j] - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    // Q_tk = y_t y_k K(t mod l, k mod l)
    const double si = y[i] * dai, sj = y[j] * daj;
    for (std::size_t k = 0; k < l; ++k) {
      const double v = ki[k] * si + kj[k] * sj;
      grad[k] += v;
      grad[k + l] -= v;
    }
  }
  sol.iterations = iter;

  // Bias from free variables, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  sol.bias = -rho;
  for (std::size_t t = 0; t < l; ++t) sol.coef[t] = alpha[t] - alpha[t + l];
  return sol;
}

}  // namespace collie::svr

#include "collie/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace collie::logistic {

namespace {

double sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// log(1 + exp(-m)) without overflow
double log1p_exp_neg(double m) {
  return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

MinimizeResult minimize(const Objective& f, std::vector<double> x0, const GradientOptions& opts) {
  const std::size_t n = x0.size();
  std::vector<double> x = std::move(x0), y = x, x_new(n), gy(n), scratch(n);
  double fx = f(x, scratch);
  double step = opts.initial_step;
  double t = 1.0;

  MinimizeResult res;
  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    const double fy = f(y, gy);
    const double gnorm2 = sq_norm(gy);
    res.iterations = it;
    if (std::sqrt(gnorm2) <= opts.gradient_tolerance) {
      res.x = y;
      res.value = fy;
      res.gradient_norm = std::sqrt(gnorm2);
      return res;
    }

    // Backtracking (Armijo on the gradient step from y).
    step = std::min(step * 2.0, opts.initial_step);
    double f_new = 0.0;
    for (int k = 0; k < 60; ++k) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = y[i] - step * gy[i];
      f_new = f(x_new, scratch);
      if (f_new <= fy - 0.5 * step * gnorm2) break;
      step *= opts.shrink;
    }

    if (f_new > fx) {
      // Momentum overshot: restart from the last accepted point.
      t = 1.0;
      y = x;
      continue;
    }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_new;
    for (std::size_t i = 0; i < n; ++i) y[i] = x_new[i] + beta * (x_new[i] - x[i]);
    x.swap(x_new);
    fx = f_new;
    t = t_new;
  }
  res.x = x;
  res.value = f(x, scratch);
  res.gradient_norm = std::sqrt(sq_norm(scratch));
  res.iterations = opts.max_iterations;
  return res;
}

double BinaryModel::decision(std::span<const double> x) const {
  double z = bias;
  for (std::size_t k = 0; k < weights.size(); ++k) z += weights[k] * x[k];
  return z;
}

double BinaryModel::probability(std::span<const double> x) const { return sigmoid(decision(x)); }

BinaryModel fit_binary(kernels::RowsView x, std::span<const int> labels, double l2_strength,
                       const GradientOptions& opts) {
  const std::size_t n = x.rows(), d = x.cols;
  if (labels.size() != n) throw std::invalid_argument("logistic: label count does not match data");
  if (!(l2_strength > 0.0)) throw std::invalid_argument("logistic: l2 strength must be > 0");

  std::vector<double> z(n);
  auto objective = [&](std::span<const double> p, std::span<double> g) {
    const std::span<const double> w = p.first(d);
    const double b = p[d];
    kernels::dots_with(w, x, z);
    double val = 0.5 * l2_strength * sq_norm(w);
    for (std::size_t k = 0; k < d; ++k) g[k] = l2_strength * w[k];
    g[d] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = labels[i] > 0 ? 1.0 : -1.0;
      const double m = s * (z[i] + b);
      val += log1p_exp_neg(m);
      const double coef = -s * sigmoid(-m);
      const auto row = x.row(i);
      for (std::size_t k = 0; k < d; ++k) g[k] += coef * row[k];
      g[d] += coef;
    }
    return val;
  };

  const MinimizeResult r = minimize(objective, std::vector<double>(d + 1, 0.0), opts);
  BinaryModel model;
  model.weights.assign(r.x.begin(), r.x.begin() + static_cast<std::ptrdiff_t>(d));
  model.bias = r.x[d];
  return model;
}

std::vector<double> MultinomialModel::probabilities(std::span<const double> x) const {
  std::vector<double> z(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    double s = biases[c];
    for (std::size_t k = 0; k < dim; ++k) s += weights[c * dim + k] * x[k];
    z[c] = s;
  }
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return z;
}

MultinomialModel fit_multinomial(kernels::RowsView x, std::span<const int> labels,
                                 std::size_t num_classes, double l2_strength,
                                 const GradientOptions& opts) {
  const std::size_t n = x.rows(), d = x.cols, nc = num_classes;
  if (labels.size() != n) throw std::invalid_argument("logistic: label count does not match data");
  if (nc == 0) throw std::invalid_argument("logistic: need at least one class");
  if (!(l2_strength > 0.0)) throw std::invalid_argument("logistic: l2 strength must be > 0");
  for (int l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= nc)
      throw std::invalid_argument("logistic: label out of range");

  std::vector<double> z(n * nc);
  auto objective = [&](std::span<const double> p, std::span<double> g) {
    const std::span<const double> w = p.first(nc * d);
    const std::span<const double> b = p.subspan(nc * d, nc);
    kernels::cross_dots(x, {w, d}, z);
    double val = 0.5 * l2_strength * sq_norm(w);
    for (std::size_t k = 0; k < nc * d; ++k) g[k] = l2_strength * w[k];
    std::fill(g.begin() + static_cast<std::ptrdiff_t>(nc * d), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double* zi = z.data() + i * nc;
      double mx = -INFINITY;
      for (std::size_t c = 0; c < nc; ++c) {
        zi[c] += b[c];
        mx = std::max(mx, zi[c]);
      }
      double sum = 0.0;
      for (std::size_t c = 0; c < nc; ++c) sum += std::exp(zi[c] - mx);
      const double lse = mx + std::log(sum);
      val += lse - zi[labels[i]];
      const auto row = x.row(i);
      for (std::size_t c = 0; c < nc; ++c) {
        const double coef = std::exp(zi[c] - lse) - (static_cast<int>(c) == labels[i] ? 1.0 : 0.0);
        double* gc = g.data() + c * d;
        for (std::size_t k = 0; k < d; ++k) gc[k] += coef * row[k];
        g[nc * d + c] += coef;
      }
    }
    return val;
  };

  const MinimizeResult r = minimize(objective, std::vector<double>(nc * d + nc, 0.0), opts);
  MultinomialModel model;
  model.num_classes = nc;
  model.dim = d;
  model.weights.assign(r.x.begin(), r.x.begin() + static_cast<std::ptrdiff_t>(nc * d));
  model.biases.assign(r.x.begin() + static_cast<std::ptrdiff_t>(nc * d), r.x.end());
  return model;
}

}  // namespace collie::logistic

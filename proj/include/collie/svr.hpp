#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace collie::svr {

enum class Kernel { linear, rbf, sigmoid };

struct KernelParams {
  Kernel kind = Kernel::linear;
  double gamma = 1.0;
  double coef0 = 0.0;
};

/// Applies the kernel function given a precomputed dot product and the
/// squared norms of both arguments.
double kernel_from_dot(const KernelParams& k, double dot, double sq_norm_a, double sq_norm_b);

/// Source of Gram entries <x_i, x_j> over the training set. The solver
/// asks for whole rows and caches the kernel rows it builds from them.
struct GramSource {
  std::size_t size = 0;
  std::function<void(std::size_t row, std::span<double> out)> row;
};

struct Options {
  double C = 1.0;
  double epsilon = 0.1;
  double tolerance = 1e-3;
  // Iteration cap expressed as passes over the training set.
  std::size_t max_passes = 10000;
};

struct Solution {
  std::vector<double> coef;  // alpha_i - alpha*_i, one per training point
  double bias = 0.0;         // f(x) = sum coef_i K(x_i, x) + bias
  std::size_t iterations = 0;
  bool converged = false;
};

/// Epsilon-insensitive support vector regression solved in the dual by
/// SMO: two-variable analytic updates on the maximal KKT-violating pair.
Solution solve(const GramSource& gram, std::span<const double> targets,
               const KernelParams& kernel, const Options& opts);

}  // namespace collie::svr

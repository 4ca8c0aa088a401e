#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "collie/kernels.hpp"

namespace collie::logistic {

struct GradientOptions {
  double gradient_tolerance = 1e-6;
  std::size_t max_iterations = 5000;
  double initial_step = 1.0;
  double shrink = 0.5;
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
};

/// Objective callback: returns f(x) and writes the gradient into grad.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

/// Full-batch accelerated gradient descent (Nesterov momentum with
/// backtracking on the step size and function-value restarts).
MinimizeResult minimize(const Objective& f, std::vector<double> x0, const GradientOptions& opts);

struct BinaryModel {
  std::vector<double> weights;
  double bias = 0.0;

  double decision(std::span<const double> x) const;
  double probability(std::span<const double> x) const;
};

/// L2-regularized binary logistic regression, labels in {0, 1}; the
/// intercept is not penalized.
BinaryModel fit_binary(kernels::RowsView x, std::span<const int> labels, double l2_strength,
                       const GradientOptions& opts = {});

struct MultinomialModel {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<double> weights;  // num_classes x dim, row-major
  std::vector<double> biases;

  std::vector<double> probabilities(std::span<const double> x) const;
};

/// L2-regularized softmax regression, labels in [0, num_classes).
MultinomialModel fit_multinomial(kernels::RowsView x, std::span<const int> labels,
                                 std::size_t num_classes, double l2_strength,
                                 const GradientOptions& opts = {});

}  // namespace collie::logistic

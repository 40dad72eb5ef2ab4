#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace cpirt {

/// Objective callback: returns f(x) and writes the gradient into `grad`.
using Objective = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;

struct BfgsOptions {
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-6;  // on the max-norm of the gradient
  double armijo = 1e-4;
  double curvature = 0.9;
  std::size_t max_line_search_evaluations = 40;
};

struct BfgsResult {
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> gradient;
  double gradient_norm = 0.0;  // max-norm
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  bool line_search_failed = false;
  std::vector<double> trace;  // objective value after each accepted step
};

/// Dense BFGS with a strong-Wolfe line search. The objective is minimised;
/// accepted steps never increase it.
BfgsResult minimize_bfgs(const Objective& objective, std::vector<double> x0,
                         const BfgsOptions& options);

}  // namespace cpirt

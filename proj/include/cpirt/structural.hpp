#pragma once

#include <cstddef>
#include <vector>

#include "cpirt/core.hpp"

namespace cpirt {

/// Marginal distribution of the change-point tau over {c..J}.
///
/// P(tau = J) = logistic(beta); the remaining mass is geometric over
/// {c..J-1} with ratio q = e^alpha between consecutive positions.
struct TauDistribution {
  ChangePointSupport support;
  std::vector<double> pmf;  // pmf[t] is P(tau = c + t)
  double q = 1.0;
  double p_J = 1.0;
  double p_c = 0.0;  // unnormalised P(tau = c) under S = 1
  double S = 1.0;

  double at(std::size_t tau) const { return pmf[tau - support.c]; }
};

/// Gradient of log P(tau = j) with respect to (alpha, beta).
struct TauLogPmfGradient {
  std::vector<double> d_alpha;
  std::vector<double> d_beta;
};

TauDistribution tau_pmf(const StructuralParameters& params, const ChangePointSupport& support);

/// log P(tau = j) for each support point, evaluated in log space so extreme
/// alpha or beta never underflow to log(0).
std::vector<double> tau_log_pmf(const StructuralParameters& params,
                                const ChangePointSupport& support);

TauLogPmfGradient tau_log_pmf_gradient(const StructuralParameters& params,
                                       const ChangePointSupport& support);

/// Standard-normal prior on theta; mean and variance are fixed for identification.
struct ThetaPrior {
  static constexpr double mean = 0.0;
  static constexpr double variance = 1.0;
};

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to one

  std::size_t size() const { return nodes.size(); }
};

inline constexpr std::size_t kDefaultQuadratureNodes = 49;

/// Gauss-Hermite rule for the standard normal weight: nodes sqrt(2) z_k and
/// weights w_k / sqrt(pi). Throws std::invalid_argument for n_nodes == 0.
QuadratureRule gauss_hermite_standard_normal(std::size_t n_nodes);

/// log-sum-exp over a range; returns -inf for an empty or all -inf input.
double log_sum_exp(const double* first, std::size_t count);

}  // namespace cpirt

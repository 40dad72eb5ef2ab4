#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cpirt/core.hpp"
#include "cpirt/structural.hpp"

namespace cpirt {

/// Everything needed to evaluate the marginal likelihood.
struct ModelSpec {
  ItemParameters items;
  StructuralParameters structural;
  ChangePointSupport support;
  QuadratureRule quadrature;

  void validate() const;
};

struct LikelihoodValue {
  double loglik = 0.0;
  std::vector<double> per_person;
};

/// Position of each free parameter in the optimisation vector
/// psi = (d_1..d_J, a_1..a_J, g_{c+1}..g_J, alpha, beta).
///
/// g_j is log(-gamma_j) when gamma is constrained negative, gamma_j
/// otherwise. alpha and beta are always present; they are inert when c == J.
struct ParameterLayout {
  std::size_t J = 0;
  std::size_t c = 0;
  bool constrain_gamma = true;

  std::size_t size() const { return 2 * J + (J - c) + 2; }
  std::size_t d(std::size_t item) const { return item - 1; }
  std::size_t a(std::size_t item) const { return J + item - 1; }
  /// Only valid for item > c.
  std::size_t g(std::size_t item) const { return 2 * J + (item - c - 1); }
  std::size_t alpha() const { return 2 * J + (J - c); }
  std::size_t beta() const { return alpha() + 1; }
  bool is_item_coordinate(std::size_t k) const { return k < alpha(); }
};

/// log p(y | theta, tau) summed over items (local independence).
/// Throws std::invalid_argument when tau is outside {c..J} or the length is wrong.
double conditional_loglik_person(std::span<const std::uint8_t> responses, double theta,
                                 std::size_t tau, const ModelSpec& spec);

/// Marginal log-likelihood with tau summed and theta integrated by quadrature.
LikelihoodValue marginal_loglik(const ResponseMatrix& data, const ModelSpec& spec);

struct LikelihoodAndGradient {
  double loglik = 0.0;
  std::vector<double> gradient;  // in ParameterLayout order
};

/// Value and analytic gradient (posterior-expected complete-data scores).
LikelihoodAndGradient marginal_loglik_and_gradient(const ResponseMatrix& data,
                                                   const ModelSpec& spec,
                                                   bool constrain_gamma = true);

std::vector<double> marginal_loglik_gradient(const ResponseMatrix& data, const ModelSpec& spec,
                                             bool constrain_gamma = true);

/// Log joint density log P(tau) + log w_k + log p(y | x_k, tau) for one
/// person, laid out tau-major: entry (t, k) is at t * K + k where tau = c + t.
std::vector<double> log_joint_grid(std::span<const std::uint8_t> responses,
                                   const ModelSpec& spec);

}  // namespace cpirt

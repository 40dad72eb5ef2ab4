#include "cpirt/structural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace cpirt {

double log_sum_exp(const double* first, std::size_t count) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < count; ++k) top = std::max(top, first[k]);
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (std::size_t k = 0; k < count; ++k) sum += std::exp(first[k] - top);
  return top + std::log(sum);
}

namespace {

// Normalised geometric weights q^m / sum_m q^m over m = 0..len-1, computed
// with a max shift so large |alpha| * len neither overflows nor underflows
// the whole vector.
std::vector<double> geometric_weights(double alpha, std::size_t len) {
  std::vector<double> w(len);
  const double top = alpha >= 0.0 ? alpha * static_cast<double>(len - 1) : 0.0;
  double total = 0.0;
  for (std::size_t m = 0; m < len; ++m) {
    w[m] = std::exp(alpha * static_cast<double>(m) - top);
    total += w[m];
  }
  for (auto& v : w) v /= total;
  return w;
}

double log_geometric_normaliser(double alpha, std::size_t len) {
  std::vector<double> terms(len);
  for (std::size_t m = 0; m < len; ++m) terms[m] = alpha * static_cast<double>(m);
  return log_sum_exp(terms.data(), len);
}

}  // namespace

TauDistribution tau_pmf(const StructuralParameters& params, const ChangePointSupport& support) {
  if (!std::isfinite(params.alpha) || !std::isfinite(params.beta))
    throw std::invalid_argument("tau_pmf: alpha and beta must be finite");
  TauDistribution dist;
  dist.support = support;
  dist.q = std::exp(params.alpha);
  dist.pmf.assign(support.size(), 0.0);
  if (support.degenerate()) {
    dist.pmf.back() = 1.0;
    dist.p_J = 1.0;
    dist.p_c = 1.0;
    dist.S = 1.0;
    return dist;
  }
  dist.p_J = logistic(params.beta);
  const double pre_mass = logistic(-params.beta);
  const std::size_t len = support.J - support.c;
  const auto w = geometric_weights(params.alpha, len);
  for (std::size_t m = 0; m < len; ++m) dist.pmf[m] = pre_mass * w[m];
  dist.pmf.back() = dist.p_J;
  dist.p_c = dist.pmf.front();
  dist.S = 1.0;
  return dist;
}

std::vector<double> tau_log_pmf(const StructuralParameters& params,
                                const ChangePointSupport& support) {
  std::vector<double> out(support.size(), 0.0);
  if (support.degenerate()) return out;
  const std::size_t len = support.J - support.c;
  const double log_pre = log_logistic(-params.beta);
  const double log_norm = log_geometric_normaliser(params.alpha, len);
  for (std::size_t m = 0; m < len; ++m)
    out[m] = log_pre + params.alpha * static_cast<double>(m) - log_norm;
  out.back() = log_logistic(params.beta);
  return out;
}

TauLogPmfGradient tau_log_pmf_gradient(const StructuralParameters& params,
                                       const ChangePointSupport& support) {
  TauLogPmfGradient g;
  g.d_alpha.assign(support.size(), 0.0);
  g.d_beta.assign(support.size(), 0.0);
  if (support.degenerate()) return g;
  const std::size_t len = support.J - support.c;
  const auto w = geometric_weights(params.alpha, len);
  double mean_offset = 0.0;
  for (std::size_t m = 0; m < len; ++m) mean_offset += static_cast<double>(m) * w[m];
  const double p_no_change = logistic(params.beta);
  for (std::size_t m = 0; m < len; ++m) {
    g.d_alpha[m] = static_cast<double>(m) - mean_offset;
    g.d_beta[m] = -p_no_change;
  }
  g.d_beta.back() = logistic(-params.beta);
  return g;
}

QuadratureRule gauss_hermite_standard_normal(std::size_t n_nodes) {
  if (n_nodes == 0) throw std::invalid_argument("quadrature needs at least one node");
  QuadratureRule rule;
  if (n_nodes == 1) {
    rule.nodes = {0.0};
    rule.weights = {1.0};
    return rule;
  }
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
  // polynomials, whose weight is the standard normal density itself.
  const auto n = static_cast<Eigen::Index>(n_nodes);
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 1; k < n; ++k) {
    const double off = std::sqrt(static_cast<double>(k));
    jacobi(k, k - 1) = off;
    jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("quadrature eigen-decomposition failed");
  const Eigen::VectorXd& x = solver.eigenvalues();
  const Eigen::MatrixXd& v = solver.eigenvectors();

  rule.nodes.resize(n_nodes);
  rule.weights.resize(n_nodes);
  for (std::size_t k = 0; k < n_nodes; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    rule.nodes[k] = x(kk);
    rule.weights[k] = v(0, kk) * v(0, kk);
  }
  // Enforce exact symmetry about zero.
  for (std::size_t k = 0; k < n_nodes / 2; ++k) {
    const std::size_t m = n_nodes - 1 - k;
    const double node = 0.5 * (rule.nodes[m] - rule.nodes[k]);
    const double weight = 0.5 * (rule.weights[m] + rule.weights[k]);
    rule.nodes[k] = -node;
    rule.nodes[m] = node;
    rule.weights[k] = weight;
    rule.weights[m] = weight;
  }
  if (n_nodes % 2 == 1) rule.nodes[n_nodes / 2] = 0.0;
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (auto& w : rule.weights) w /= total;
  return rule;
}

}  // namespace cpirt

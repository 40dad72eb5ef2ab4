#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpirt/core.hpp"
#include "cpirt/likelihood.hpp"
#include "cpirt/structural.hpp"

namespace cpirt {

struct FitConfig {
  std::size_t quadrature_nodes = kDefaultQuadratureNodes;
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-6;
  bool constrain_gamma = true;
  double ridge_penalty = 0.0;
  /// When set, the starting values of d and a are jittered by U(-0.1, 0.1).
  std::optional<std::uint64_t> seed;

  void validate() const;
};

struct FitResult {
  ItemParameters items;
  StructuralParameters structural;
  ChangePointSupport support;
  std::size_t n_persons = 0;
  double loglik = 0.0;
  double bic = 0.0;
  std::size_t n_free_parameters = 0;
  bool converged = false;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;  // max-norm of the gradient of the per-person objective
  std::vector<std::string> warnings;
  std::vector<double> objective_trace;  // (-loglik + ridge) / N after each accepted step
};

/// 2J + (J - c) + 2 for c < J; 2J for the baseline model (c == J).
std::size_t count_free_parameters(const ChangePointSupport& support);

double bic_value(double loglik, std::size_t n_free_parameters, std::size_t n_persons);
double aic_value(double loglik, std::size_t n_free_parameters);

/// psi = (d, a, g_{c+1..J}, alpha, beta). With constrain_gamma, g_j = log(-gamma_j);
/// a zero gamma_j is floored at log(1e-8) and a warning appended.
std::vector<double> pack_parameters(const ItemParameters& items,
                                    const StructuralParameters& structural,
                                    const ChangePointSupport& support, const FitConfig& config,
                                    std::vector<std::string>* warnings = nullptr);

struct UnpackedParameters {
  ItemParameters items;
  StructuralParameters structural;
};

UnpackedParameters unpack_parameters(const std::vector<double>& psi,
                                     const ChangePointSupport& support, const FitConfig& config);

/// Starting point of a fit.
struct StartingValues {
  ItemParameters items;
  StructuralParameters structural;
};

/// d_j = logit(column mean) clamped to [-3, 3]; a_j = 1; gamma_j = -1 for
/// j > c; alpha = 0; beta = 1.
StartingValues default_starting_values(const ResponseMatrix& data,
                                       const ChangePointSupport& support);

class InitializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Marginal maximum likelihood by BFGS in the transformed parameter space.
/// The objective is (-loglik + ridge) / N; convergence means its gradient
/// max-norm fell below gradient_tolerance. c is treated as known.
FitResult fit(const ResponseMatrix& data, std::size_t c, const FitConfig& config);
FitResult fit(const ResponseMatrix& data, std::size_t c, const FitConfig& config,
              const StartingValues& start);

/// Model spec at a fit's estimates, using the configured quadrature.
ModelSpec model_spec(const FitResult& fit, const FitConfig& config);

class DegenerateInformationError : public std::runtime_error {
 public:
  DegenerateInformationError(const std::string& what, std::vector<std::size_t> coordinates)
      : std::runtime_error(what), coordinates_(std::move(coordinates)) {}
  /// Offending coordinates in ParameterLayout order.
  const std::vector<std::size_t>& coordinates() const { return coordinates_; }

 private:
  std::vector<std::size_t> coordinates_;
};

struct StandardErrors {
  /// Per psi coordinate; NaN for inert coordinates (alpha, beta when c == J)
  /// and for coordinates with non-positive inverse-information diagonal.
  std::vector<double> se;
  bool positive_definite = true;
  std::vector<std::size_t> flagged;
};

/// Standard errors from the inverse of the central-difference Hessian of the
/// marginal log-likelihood at the estimates. Throws DegenerateInformationError
/// when the information matrix is singular.
StandardErrors numerical_hessian_se(const ResponseMatrix& data, const FitResult& fit,
                                    const FitConfig& config);

}  // namespace cpirt

#include "cpirt/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "cpirt/optimizer.hpp"
#include "cpirt/rng.hpp"

namespace cpirt {

namespace {

constexpr double kGammaFloor = 1e-8;

ParameterLayout layout_for(const ChangePointSupport& support, const FitConfig& config) {
  return {support.J, support.c, config.constrain_gamma};
}

double ridge_term(const std::vector<double>& psi, const ParameterLayout& layout, double lambda) {
  if (lambda == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < layout.alpha(); ++k) s += psi[k] * psi[k];
  return 0.5 * lambda * s;
}

std::string item_label(std::size_t j) { return "item " + std::to_string(j); }

}  // namespace

void FitConfig::validate() const {
  if (quadrature_nodes < 1) throw std::invalid_argument("quadrature_nodes must be >= 1");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(gradient_tolerance > 0.0)) throw std::invalid_argument("gradient_tolerance must be > 0");
  if (!(ridge_penalty >= 0.0) || !std::isfinite(ridge_penalty))
    throw std::invalid_argument("ridge_penalty must be a finite non-negative number");
}

std::size_t count_free_parameters(const ChangePointSupport& support) {
  if (support.degenerate()) return 2 * support.J;
  return 2 * support.J + (support.J - support.c) + 2;
}

double bic_value(double loglik, std::size_t n_free_parameters, std::size_t n_persons) {
  return -2.0 * loglik +
         static_cast<double>(n_free_parameters) * std::log(static_cast<double>(n_persons));
}

double aic_value(double loglik, std::size_t n_free_parameters) {
  return -2.0 * loglik + 2.0 * static_cast<double>(n_free_parameters);
}

std::vector<double> pack_parameters(const ItemParameters& items,
                                    const StructuralParameters& structural,
                                    const ChangePointSupport& support, const FitConfig& config,
                                    std::vector<std::string>* warnings) {
  items.validate(support, config.constrain_gamma);
  const auto layout = layout_for(support, config);
  std::vector<double> psi(layout.size(), 0.0);
  for (std::size_t j = 1; j <= support.J; ++j) {
    psi[layout.d(j)] = items.d[j - 1];
    psi[layout.a(j)] = items.a[j - 1];
  }
  for (std::size_t j = support.c + 1; j <= support.J; ++j) {
    const double gamma = items.gamma[j - 1];
    if (!config.constrain_gamma) {
      psi[layout.g(j)] = gamma;
    } else if (gamma == 0.0) {
      psi[layout.g(j)] = std::log(kGammaFloor);
      if (warnings)
        warnings->push_back(item_label(j) + ": gamma = 0 floored at -1e-8 for the log transform");
    } else {
      psi[layout.g(j)] = std::log(-gamma);
    }
  }
  psi[layout.alpha()] = structural.alpha;
  psi[layout.beta()] = structural.beta;
  return psi;
}

UnpackedParameters unpack_parameters(const std::vector<double>& psi,
                                     const ChangePointSupport& support, const FitConfig& config) {
  const auto layout = layout_for(support, config);
  if (psi.size() != layout.size())
    throw std::invalid_argument("parameter vector has length " + std::to_string(psi.size()) +
                                ", expected " + std::to_string(layout.size()));
  UnpackedParameters out;
  out.items = ItemParameters::baseline(support.J);
  for (std::size_t j = 1; j <= support.J; ++j) {
    out.items.d[j - 1] = psi[layout.d(j)];
    out.items.a[j - 1] = psi[layout.a(j)];
  }
  for (std::size_t j = support.c + 1; j <= support.J; ++j) {
    const double g = psi[layout.g(j)];
    out.items.gamma[j - 1] = config.constrain_gamma ? -std::exp(g) : g;
  }
  out.structural = {psi[layout.alpha()], psi[layout.beta()]};
  return out;
}

StartingValues default_starting_values(const ResponseMatrix& data,
                                       const ChangePointSupport& support) {
  StartingValues start;
  start.items = ItemParameters::baseline(support.J);
  const auto means = data.column_means();
  for (std::size_t j = 0; j < support.J; ++j) {
    const double m = std::clamp(means[j], 1e-6, 1.0 - 1e-6);
    start.items.d[j] = std::clamp(std::log(m / (1.0 - m)), -3.0, 3.0);
  }
  for (std::size_t j = support.c; j < support.J; ++j) start.items.gamma[j] = -1.0;
  start.structural = {0.0, 1.0};
  return start;
}

FitResult fit(const ResponseMatrix& data, std::size_t c, const FitConfig& config) {
  const ChangePointSupport support(c, data.n_items());
  return fit(data, c, config, default_starting_values(data, support));
}

FitResult fit(const ResponseMatrix& data, std::size_t c, const FitConfig& config,
              const StartingValues& start) {
  config.validate();
  const ChangePointSupport support(c, data.n_items());
  const auto layout = layout_for(support, config);

  FitResult result;
  result.support = support;
  result.n_persons = data.n_persons();
  result.n_free_parameters = count_free_parameters(support);

  const auto means = data.column_means();
  for (std::size_t j = 0; j < means.size(); ++j) {
    if (means[j] == 0.0 || means[j] == 1.0)
      result.warnings.push_back(item_label(j + 1) +
                                ": constant response column; d may diverge (consider a ridge penalty)");
  }

  auto psi0 = pack_parameters(start.items, start.structural, support, config, &result.warnings);
  if (config.seed) {
    Rng rng(*config.seed);
    for (std::size_t j = 1; j <= support.J; ++j) {
      psi0[layout.d(j)] += rng.uniform(-0.1, 0.1);
      psi0[layout.a(j)] += rng.uniform(-0.1, 0.1);
    }
  }

  const auto quadrature = gauss_hermite_standard_normal(config.quadrature_nodes);
  const double lambda = config.ridge_penalty;
  // Minimised per respondent so that the gradient tolerance does not depend on N.
  const double scale = 1.0 / static_cast<double>(data.n_persons());
  Objective objective = [&](const std::vector<double>& psi, std::vector<double>& grad) {
    const auto p = unpack_parameters(psi, support, config);
    const ModelSpec spec{p.items, p.structural, support, quadrature};
    LikelihoodAndGradient lg;
    try {
      lg = marginal_loglik_and_gradient(data, spec, config.constrain_gamma);
    } catch (const std::invalid_argument&) {
      grad.assign(psi.size(), std::numeric_limits<double>::quiet_NaN());
      return std::numeric_limits<double>::infinity();
    }
    grad.resize(psi.size());
    for (std::size_t k = 0; k < psi.size(); ++k) {
      grad[k] = -lg.gradient[k];
      if (lambda != 0.0 && layout.is_item_coordinate(k)) grad[k] += lambda * psi[k];
      grad[k] *= scale;
    }
    return scale * (-lg.loglik + ridge_term(psi, layout, lambda));
  };

  {
    std::vector<double> g0;
    const double f0 = objective(psi0, g0);
    if (!std::isfinite(f0))
      throw InitializationError("marginal log-likelihood is not finite at the starting values");
  }

  BfgsOptions options;
  options.max_iterations = config.max_iterations;
  options.gradient_tolerance = config.gradient_tolerance;
  const auto opt = minimize_bfgs(objective, psi0, options);

  const auto p = unpack_parameters(opt.x, support, config);
  result.items = p.items;
  result.structural = p.structural;
  const ModelSpec spec{p.items, p.structural, support, quadrature};
  result.loglik = marginal_loglik(data, spec).loglik;
  result.bic = bic_value(result.loglik, result.n_free_parameters, result.n_persons);
  result.converged = opt.converged;
  result.iterations = opt.iterations;
  result.gradient_norm = opt.gradient_norm;
  result.objective_trace = opt.trace;

  for (std::size_t j = 0; j < support.J; ++j) {
    if (result.items.a[j] < 0.0)
      result.warnings.push_back(item_label(j + 1) + ": negative discrimination estimate");
  }
  if (!opt.converged) {
    result.warnings.push_back(
        opt.line_search_failed
            ? "line search could not reduce the objective; gradient max-norm " +
                  std::to_string(opt.gradient_norm)
            : "iteration limit reached; gradient max-norm " + std::to_string(opt.gradient_norm));
  }
  return result;
}

ModelSpec model_spec(const FitResult& fit, const FitConfig& config) {
  return {fit.items, fit.structural, fit.support,
          gauss_hermite_standard_normal(config.quadrature_nodes)};
}

StandardErrors numerical_hessian_se(const ResponseMatrix& data, const FitResult& fit,
                                    const FitConfig& config) {
  if (!fit.converged) throw std::invalid_argument("standard errors require a converged fit");
  const auto& support = fit.support;
  const auto layout = layout_for(support, config);
  const auto quadrature = gauss_hermite_standard_normal(config.quadrature_nodes);
  std::vector<std::string> ignored;
  const auto psi = pack_parameters(fit.items, fit.structural, support, config, &ignored);

  // alpha and beta carry no information in the baseline model.
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < psi.size(); ++k) {
    if (support.degenerate() && !layout.is_item_coordinate(k)) continue;
    active.push_back(k);
  }
  const auto n = static_cast<Eigen::Index>(active.size());

  auto gradient_at = [&](const std::vector<double>& x) {
    const auto p = unpack_parameters(x, support, config);
    const ModelSpec spec{p.items, p.structural, support, quadrature};
    return marginal_loglik_gradient(data, spec, config.constrain_gamma);
  };

  Eigen::MatrixXd hessian(n, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    const std::size_t k = active[static_cast<std::size_t>(col)];
    const double h = 1e-4 * (1.0 + std::abs(psi[k]));
    auto plus = psi, minus = psi;
    plus[k] += h;
    minus[k] -= h;
    const auto gp = gradient_at(plus);
    const auto gm = gradient_at(minus);
    for (Eigen::Index row = 0; row < n; ++row) {
      const std::size_t r = active[static_cast<std::size_t>(row)];
      hessian(row, col) = (gp[r] - gm[r]) / (2.0 * h);
    }
  }
  const Eigen::MatrixXd information = -0.5 * (hessian + hessian.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(information);
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double scale = values.cwiseAbs().maxCoeff();
  std::vector<std::size_t> degenerate;
  for (Eigen::Index m = 0; m < n; ++m) {
    // Central differences with h ~ 1e-4 resolve the Hessian to roughly 1e-8
    // of its largest entries; anything below 1e-7 of the scale is noise.
    if (std::abs(values(m)) > 1e-7 * scale) continue;
    const Eigen::VectorXd v = eig.eigenvectors().col(m);
    for (Eigen::Index row = 0; row < n; ++row) {
      const std::size_t k = active[static_cast<std::size_t>(row)];
      if (std::abs(v(row)) > 0.1 &&
          std::find(degenerate.begin(), degenerate.end(), k) == degenerate.end())
        degenerate.push_back(k);
    }
  }
  if (!degenerate.empty()) {
    std::sort(degenerate.begin(), degenerate.end());
    std::string names;
    for (auto k : degenerate) names += (names.empty() ? "" : ", ") + std::to_string(k);
    throw DegenerateInformationError("singular information matrix along coordinates " + names,
                                     degenerate);
  }

  StandardErrors out;
  out.se.assign(psi.size(), std::numeric_limits<double>::quiet_NaN());
  out.positive_definite = values.minCoeff() > 0.0;
  const Eigen::MatrixXd cov =
      eig.eigenvectors() * values.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  for (Eigen::Index row = 0; row < n; ++row) {
    const std::size_t k = active[static_cast<std::size_t>(row)];
    const double var = cov(row, row);
    if (var > 0.0) {
      out.se[k] = std::sqrt(var);
    } else {
      out.flagged.push_back(k);
    }
  }
  return out;
}

}  // namespace cpirt

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cpirt/core.hpp"
#include "cpirt/estimation.hpp"
#include "cpirt/likelihood.hpp"

namespace cpirt {

struct PersonPosterior {
  std::vector<double> tau_pmf;  // over {c..J}
  std::size_t tau_mode = 0;     // 1-based item index; ties go to the earliest item
  double prob_change = 0.0;     // P(tau < J | y)
  double theta_eap = 0.0;       // marginalises tau
  double theta_cleansed = 0.0;  // baseline model on items 1..tau_mode
};

// Every operation has two forms: one taking a fitted model, one taking a
// model spec directly (used when parameters are known, e.g. simulation truth).

std::vector<double> posterior_tau(std::span<const std::uint8_t> responses, const ModelSpec& spec);
std::vector<double> posterior_tau(std::span<const std::uint8_t> responses, const FitResult& fit,
                                  const FitConfig& config);

double prob_change(std::span<const std::uint8_t> responses, const ModelSpec& spec);
double prob_change(std::span<const std::uint8_t> responses, const FitResult& fit,
                   const FitConfig& config);

/// Without a subset: posterior mean of theta under the joint (theta, tau)
/// posterior. With subset m: posterior mean under the baseline (gamma-free)
/// model using only items 1..m. Throws std::invalid_argument unless 1 <= m <= J.
double eap_theta(std::span<const std::uint8_t> responses, const ModelSpec& spec,
                 std::optional<std::size_t> item_subset = std::nullopt);
double eap_theta(std::span<const std::uint8_t> responses, const FitResult& fit,
                 const FitConfig& config, std::optional<std::size_t> item_subset = std::nullopt);

/// Index of the largest entry, smallest index on ties, mapped to an item number.
std::size_t posterior_mode(const std::vector<double>& tau_pmf, const ChangePointSupport& support);

std::vector<PersonPosterior> score_persons(const ResponseMatrix& data, const ModelSpec& spec);
std::vector<PersonPosterior> score_persons(const ResponseMatrix& data, const FitResult& fit,
                                           const FitConfig& config);

}  // namespace cpirt

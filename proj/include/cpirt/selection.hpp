#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpirt/core.hpp"
#include "cpirt/estimation.hpp"

namespace cpirt {

enum class Criterion { BIC, AIC };

struct SelectionCandidate {
  std::size_t c = 0;  // c == J is the no-change baseline
  bool baseline = false;
  double loglik = 0.0;
  std::size_t n_free_parameters = 0;
  double bic = 0.0;
  double aic = 0.0;
  bool converged = false;
  std::string error;  // non-empty when the fit threw
  std::optional<FitResult> fit;
};

struct SelectionReport {
  Criterion criterion = Criterion::BIC;
  std::size_t n_persons = 0;
  std::size_t n_items = 0;
  std::vector<SelectionCandidate> candidates;  // baseline first, then c descending
  std::size_t chosen_index = 0;

  const SelectionCandidate& chosen() const { return candidates[chosen_index]; }
};

class SelectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {ceil(J/2), ..., J-1}; the baseline is always added by select_c.
std::vector<std::size_t> default_c_grid(std::size_t J);

/// Fits the baseline and every c in the grid, then picks the converged
/// candidate with the smallest criterion (ties go to the larger c). Each
/// change model is fitted twice, from the default starting values and warm
/// started from the previously fitted larger c, keeping the better optimum.
SelectionReport select_c(const ResponseMatrix& data,
                         const std::optional<std::vector<std::size_t>>& c_grid,
                         const FitConfig& config, Criterion criterion = Criterion::BIC);

}  // namespace cpirt

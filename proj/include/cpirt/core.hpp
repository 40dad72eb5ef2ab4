#pragma once

// Domain types and the change-point item response function.
//
// Items are numbered 1..J in every public interface (a change-point tau = j
// means items 1..j were answered under baseline behaviour and items j+1..J
// carry the change effect). Containers are 0-based internally, so item j
// lives at index j-1.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpirt {

/// N x J binary response matrix, stored row-major (one row per respondent).
class ResponseMatrix {
 public:
  ResponseMatrix(std::size_t n_persons, std::size_t n_items,
                 std::vector<std::uint8_t> entries);

  std::size_t n_persons() const { return n_persons_; }
  std::size_t n_items() const { return n_items_; }

  /// Response of person i (0-based) to item j (1-based).
  std::uint8_t at(std::size_t i, std::size_t item) const {
    return entries_[i * n_items_ + item - 1];
  }
  std::span<const std::uint8_t> row(std::size_t i) const {
    return {entries_.data() + i * n_items_, n_items_};
  }
  const std::vector<std::uint8_t>& entries() const { return entries_; }

  /// Proportion correct per item (index j-1 holds item j).
  std::vector<double> column_means() const;

 private:
  std::size_t n_persons_;
  std::size_t n_items_;
  std::vector<std::uint8_t> entries_;
};

/// Earliest change-point c and test length J; the support of tau is {c..J}.
/// c == J is the degenerate no-change (baseline 2-PL) model.
struct ChangePointSupport {
  std::size_t c = 1;
  std::size_t J = 1;

  ChangePointSupport() = default;
  ChangePointSupport(std::size_t c_, std::size_t J_);

  std::size_t size() const { return J - c + 1; }
  bool degenerate() const { return c == J; }
  bool contains(std::size_t tau) const { return tau >= c && tau <= J; }
};

/// Easiness d, discrimination a and change effect gamma per item.
struct ItemParameters {
  std::vector<double> d;
  std::vector<double> a;
  std::vector<double> gamma;

  std::size_t n_items() const { return d.size(); }

  /// Throws std::invalid_argument if lengths differ, a value is not finite,
  /// gamma is non-zero on a pre-change item (j <= c), or (when required)
  /// gamma is positive.
  void validate(const ChangePointSupport& support, bool require_nonpositive_gamma = true) const;

  static ItemParameters baseline(std::size_t n_items);
};

/// alpha: log-odds between consecutive change-point positions.
/// beta: logit of the no-change probability P(tau = J).
struct StructuralParameters {
  double alpha = 0.0;
  double beta = 0.0;
};

double logistic(double x);

/// log(logistic(x)), evaluated without overflow or cancellation.
double log_logistic(double x);

/// P(Y = 1) for one item; post_change adds gamma to the linear predictor.
double irf(double d, double a, double gamma, double theta, bool post_change);

/// Bernoulli log-mass of y under success probability prob in (0, 1).
double response_logmass(double prob, int y);

/// Bernoulli log-mass parameterised by the linear predictor (log-odds);
/// stays finite where exp/log round-trips through probabilities would not.
double response_logmass_logit(double eta, int y);

}  // namespace cpirt

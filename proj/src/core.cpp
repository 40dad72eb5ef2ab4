#include "cpirt/core.hpp"

#include <cmath>

namespace cpirt {

ResponseMatrix::ResponseMatrix(std::size_t n_persons, std::size_t n_items,
                               std::vector<std::uint8_t> entries)
    : n_persons_(n_persons), n_items_(n_items), entries_(std::move(entries)) {
  if (n_persons_ < 1) throw std::invalid_argument("response matrix needs at least one person");
  if (n_items_ < 2) throw std::invalid_argument("response matrix needs at least two items");
  if (entries_.size() != n_persons_ * n_items_)
    throw std::invalid_argument("response matrix entry count does not match N x J");
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    if (entries_[k] > 1)
      throw std::invalid_argument("response matrix entry at person " +
                                  std::to_string(k / n_items_ + 1) + ", item " +
                                  std::to_string(k % n_items_ + 1) + " is not 0/1");
  }
}

std::vector<double> ResponseMatrix::column_means() const {
  std::vector<double> means(n_items_, 0.0);
  for (std::size_t i = 0; i < n_persons_; ++i)
    for (std::size_t j = 0; j < n_items_; ++j) means[j] += entries_[i * n_items_ + j];
  for (auto& m : means) m /= static_cast<double>(n_persons_);
  return means;
}

ChangePointSupport::ChangePointSupport(std::size_t c_, std::size_t J_) : c(c_), J(J_) {
  if (c < 1 || c > J)
    throw std::invalid_argument("earliest change-point c=" + std::to_string(c) +
                                " must lie in 1..J (J=" + std::to_string(J) + ")");
}

void ItemParameters::validate(const ChangePointSupport& support,
                              bool require_nonpositive_gamma) const {
  if (d.size() != support.J || a.size() != support.J || gamma.size() != support.J)
    throw std::invalid_argument("item parameter vectors must all have length J");
  for (std::size_t j = 0; j < support.J; ++j) {
    if (!std::isfinite(d[j]) || !std::isfinite(a[j]) || !std::isfinite(gamma[j]))
      throw std::invalid_argument("item parameters must be finite");
    if (require_nonpositive_gamma && gamma[j] > 0.0)
      throw std::invalid_argument("change effect gamma must be non-positive (item " +
                                  std::to_string(j + 1) + ")");
    if (j + 1 <= support.c && gamma[j] != 0.0)
      throw std::invalid_argument("gamma must be zero for items j <= c (item " +
                                  std::to_string(j + 1) + ")");
  }
}

ItemParameters ItemParameters::baseline(std::size_t n_items) {
  return {std::vector<double>(n_items, 0.0), std::vector<double>(n_items, 1.0),
          std::vector<double>(n_items, 0.0)};
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_logistic(double x) {
  // log sigma(x) = -log(1 + e^{-x}); branch on sign so exp never overflows.
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double irf(double d, double a, double gamma, double theta, bool post_change) {
  if (!std::isfinite(d) || !std::isfinite(a) || !std::isfinite(gamma) || !std::isfinite(theta))
    throw std::invalid_argument("irf: non-finite argument");
  if (gamma > 0.0) throw std::invalid_argument("irf: gamma must be non-positive");
  const double eta = d + a * theta + (post_change ? gamma : 0.0);
  return logistic(eta);
}

double response_logmass(double prob, int y) {
  if (!(prob > 0.0 && prob < 1.0))
    throw std::invalid_argument("response_logmass: probability outside (0, 1)");
  if (y != 0 && y != 1) throw std::invalid_argument("response_logmass: y must be 0 or 1");
  return y == 1 ? std::log(prob) : std::log1p(-prob);
}

double response_logmass_logit(double eta, int y) {
  return y == 1 ? log_logistic(eta) : log_logistic(-eta);
}

}  // namespace cpirt

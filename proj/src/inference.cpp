#include "cpirt/inference.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cpirt/parallel.hpp"

namespace cpirt {

namespace {

void check_length(std::span<const std::uint8_t> responses, const ModelSpec& spec) {
  if (responses.size() != spec.support.J)
    throw std::invalid_argument("response vector length " + std::to_string(responses.size()) +
                                " differs from J=" + std::to_string(spec.support.J));
}

struct JointPosterior {
  std::vector<double> tau_pmf;
  double theta_mean = 0.0;
};

JointPosterior joint_posterior(std::span<const std::uint8_t> responses, const ModelSpec& spec) {
  check_length(responses, spec);
  const auto joint = log_joint_grid(responses, spec);
  const double lse = log_sum_exp(joint.data(), joint.size());
  const std::size_t T = spec.support.size(), K = spec.quadrature.size();
  JointPosterior out;
  out.tau_pmf.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < K; ++k) {
      const double r = std::exp(joint[t * K + k] - lse);
      out.tau_pmf[t] += r;
      out.theta_mean += r * spec.quadrature.nodes[k];
    }
  }
  double total = 0.0;
  for (double p : out.tau_pmf) total += p;
  for (auto& p : out.tau_pmf) p /= total;
  return out;
}

double prefix_eap(std::span<const std::uint8_t> responses, const ModelSpec& spec,
                  std::size_t prefix) {
  check_length(responses, spec);
  if (prefix < 1 || prefix > spec.support.J)
    throw std::invalid_argument("item subset length must lie in 1..J, got " +
                                std::to_string(prefix));
  const auto& q = spec.quadrature;
  std::vector<double> logpost(q.size());
  for (std::size_t k = 0; k < q.size(); ++k) {
    double s = std::log(q.weights[k]);
    for (std::size_t j = 0; j < prefix; ++j)
      s += response_logmass_logit(spec.items.d[j] + spec.items.a[j] * q.nodes[k], responses[j]);
    logpost[k] = s;
  }
  const double lse = log_sum_exp(logpost.data(), logpost.size());
  double mean = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) mean += std::exp(logpost[k] - lse) * q.nodes[k];
  return mean;
}

}  // namespace

std::vector<double> posterior_tau(std::span<const std::uint8_t> responses, const ModelSpec& spec) {
  return joint_posterior(responses, spec).tau_pmf;
}

std::vector<double> posterior_tau(std::span<const std::uint8_t> responses, const FitResult& fit,
                                  const FitConfig& config) {
  return posterior_tau(responses, model_spec(fit, config));
}

double prob_change(std::span<const std::uint8_t> responses, const ModelSpec& spec) {
  const auto pmf = posterior_tau(responses, spec);
  double s = 0.0;
  for (std::size_t t = 0; t + 1 < pmf.size(); ++t) s += pmf[t];
  return s;
}

double prob_change(std::span<const std::uint8_t> responses, const FitResult& fit,
                   const FitConfig& config) {
  return prob_change(responses, model_spec(fit, config));
}

double eap_theta(std::span<const std::uint8_t> responses, const ModelSpec& spec,
                 std::optional<std::size_t> item_subset) {
  if (item_subset) return prefix_eap(responses, spec, *item_subset);
  return joint_posterior(responses, spec).theta_mean;
}

double eap_theta(std::span<const std::uint8_t> responses, const FitResult& fit,
                 const FitConfig& config, std::optional<std::size_t> item_subset) {
  return eap_theta(responses, model_spec(fit, config), item_subset);
}

std::size_t posterior_mode(const std::vector<double>& tau_pmf, const ChangePointSupport& support) {
  std::size_t best = 0;
  for (std::size_t t = 1; t < tau_pmf.size(); ++t) {
    if (tau_pmf[t] > tau_pmf[best]) best = t;
  }
  return support.c + best;
}

std::vector<PersonPosterior> score_persons(const ResponseMatrix& data, const ModelSpec& spec) {
  if (data.n_items() != spec.support.J)
    throw std::invalid_argument("data has " + std::to_string(data.n_items()) +
                                " items but the model has J=" + std::to_string(spec.support.J));
  spec.validate();
  std::vector<PersonPosterior> out(data.n_persons());
  constexpr std::size_t kChunk = 256;
  const std::size_t n_chunks = (data.n_persons() + kChunk - 1) / kChunk;
  parallel_for(n_chunks, [&](std::size_t ch) {
    const std::size_t end = std::min(data.n_persons(), (ch + 1) * kChunk);
    for (std::size_t i = ch * kChunk; i < end; ++i) {
      const auto y = data.row(i);
      auto jp = joint_posterior(y, spec);
      auto& p = out[i];
      p.tau_mode = posterior_mode(jp.tau_pmf, spec.support);
      p.prob_change = 0.0;
      for (std::size_t t = 0; t + 1 < jp.tau_pmf.size(); ++t) p.prob_change += jp.tau_pmf[t];
      p.theta_eap = jp.theta_mean;
      p.theta_cleansed = prefix_eap(y, spec, p.tau_mode);
      p.tau_pmf = std::move(jp.tau_pmf);
    }
  });
  return out;
}

std::vector<PersonPosterior> score_persons(const ResponseMatrix& data, const FitResult& fit,
                                           const FitConfig& config) {
  return score_persons(data, model_spec(fit, config));
}

}  // namespace cpirt

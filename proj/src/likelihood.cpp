#include "cpirt/likelihood.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "cpirt/parallel.hpp"

namespace cpirt {

void ModelSpec::validate() const {
  // Sign of gamma is an estimation constraint, not a likelihood requirement.
  items.validate(support, false);
  if (quadrature.size() == 0) throw std::invalid_argument("model spec has an empty quadrature rule");
  if (quadrature.weights.size() != quadrature.nodes.size())
    throw std::invalid_argument("quadrature nodes and weights differ in length");
  if (!std::isfinite(structural.alpha) || !std::isfinite(structural.beta))
    throw std::invalid_argument("structural parameters must be finite");
}

double conditional_loglik_person(std::span<const std::uint8_t> responses, double theta,
                                 std::size_t tau, const ModelSpec& spec) {
  const auto& items = spec.items;
  if (responses.size() != spec.support.J)
    throw std::invalid_argument("response vector length " + std::to_string(responses.size()) +
                                " differs from J=" + std::to_string(spec.support.J));
  if (!spec.support.contains(tau))
    throw std::invalid_argument("tau=" + std::to_string(tau) + " outside support {" +
                                std::to_string(spec.support.c) + ".." +
                                std::to_string(spec.support.J) + "}");
  double total = 0.0;
  for (std::size_t j = 0; j < responses.size(); ++j) {
    const bool post = j + 1 > tau;
    const double eta = items.d[j] + items.a[j] * theta + (post ? items.gamma[j] : 0.0);
    total += response_logmass_logit(eta, responses[j]);
  }
  return total;
}

namespace {

constexpr std::size_t kChunkSize = 128;

double softplus(double x) { return -log_logistic(-x); }

// Person-independent pieces of the (tau, node) grid.
//
// For a response vector y the conditional log-likelihood splits as
//   sum_j y_j d_j + x_k sum_j y_j a_j + sum_{j>tau} y_j gamma_j - P_k(tau)
// where P_k(tau) sums the log-normalisers softplus(linear predictor). Only
// the first three terms depend on the person, and they cost O(J) per person.
struct GridTerms {
  std::size_t J = 0, c = 0, T = 0, K = 0;
  std::vector<double> base;  // log P(tau) + log w_k - P_k(tau), tau-major
};

GridTerms grid_terms(const ModelSpec& spec) {
  GridTerms g;
  g.J = spec.support.J;
  g.c = spec.support.c;
  g.T = spec.support.size();
  g.K = spec.quadrature.size();
  const auto& it = spec.items;
  const auto log_pmf = tau_log_pmf(spec.structural, spec.support);

  g.base.assign(g.T * g.K, 0.0);
  std::vector<double> prefix0(g.J + 1), suffix1(g.J + 2);
  for (std::size_t k = 0; k < g.K; ++k) {
    const double x = spec.quadrature.nodes[k];
    prefix0[0] = 0.0;
    for (std::size_t j = 1; j <= g.J; ++j)
      prefix0[j] = prefix0[j - 1] + softplus(it.d[j - 1] + it.a[j - 1] * x);
    // suffix1[m] = sum over items j > m of the post-change normaliser.
    suffix1[g.J] = 0.0;
    for (std::size_t m = g.J; m-- > g.c;)
      suffix1[m] = suffix1[m + 1] + softplus(it.d[m] + it.a[m] * x + it.gamma[m]);
    const double log_w = std::log(spec.quadrature.weights[k]);
    for (std::size_t t = 0; t < g.T; ++t) {
      const std::size_t tau = g.c + t;
      g.base[t * g.K + k] = log_pmf[t] + log_w - prefix0[tau] - suffix1[tau];
    }
  }
  return g;
}

// Fills `joint` (size T*K) with the person's log joint over the grid.
void person_joint(std::span<const std::uint8_t> y, const ModelSpec& spec, const GridTerms& g,
                  std::vector<double>& joint, std::vector<double>& gamma_suffix) {
  const auto& it = spec.items;
  double sum_d = 0.0, sum_a = 0.0;
  for (std::size_t j = 0; j < g.J; ++j) {
    if (y[j]) {
      sum_d += it.d[j];
      sum_a += it.a[j];
    }
  }
  // gamma_suffix[t] = sum_{j > c + t} y_j gamma_j
  gamma_suffix.assign(g.T, 0.0);
  double acc = 0.0;
  for (std::size_t t = g.T; t-- > 0;) {
    gamma_suffix[t] = acc;
    const std::size_t item = g.c + t;  // next item toward the front is item c+t
    if (t > 0 && y[item - 1]) acc += it.gamma[item - 1];
  }
  joint.resize(g.T * g.K);
  const auto& x = spec.quadrature.nodes;
  for (std::size_t t = 0; t < g.T; ++t) {
    const double shift = sum_d + gamma_suffix[t];
    double* row = joint.data() + t * g.K;
    const double* base = g.base.data() + t * g.K;
    for (std::size_t k = 0; k < g.K; ++k) row[k] = base[k] + shift + x[k] * sum_a;
  }
}

void check_dimensions(const ResponseMatrix& data, const ModelSpec& spec) {
  if (data.n_items() != spec.support.J)
    throw std::invalid_argument("data has " + std::to_string(data.n_items()) +
                                " items but the model has J=" + std::to_string(spec.support.J));
  spec.validate();
}

struct ChunkAccumulator {
  double loglik = 0.0;
  std::vector<double> W;         // posterior mass per (tau, node)
  std::vector<double> y_total;   // sum_i y_ij
  std::vector<double> y_theta;   // sum_i y_ij E[theta | y_i]
  std::vector<double> y_post;    // sum_i y_ij P(tau_i < j | y_i)
};

}  // namespace

std::vector<double> log_joint_grid(std::span<const std::uint8_t> responses,
                                   const ModelSpec& spec) {
  if (responses.size() != spec.support.J)
    throw std::invalid_argument("response vector length differs from J");
  spec.validate();
  const auto g = grid_terms(spec);
  std::vector<double> joint, suffix;
  person_joint(responses, spec, g, joint, suffix);
  return joint;
}

LikelihoodValue marginal_loglik(const ResponseMatrix& data, const ModelSpec& spec) {
  check_dimensions(data, spec);
  const auto g = grid_terms(spec);
  const std::size_t N = data.n_persons();
  LikelihoodValue out;
  out.per_person.assign(N, 0.0);
  const std::size_t n_chunks = (N + kChunkSize - 1) / kChunkSize;
  std::vector<double> chunk_sum(n_chunks, 0.0);
  parallel_for(n_chunks, [&](std::size_t ch) {
    std::vector<double> joint, suffix;
    double s = 0.0;
    const std::size_t end = std::min(N, (ch + 1) * kChunkSize);
    for (std::size_t i = ch * kChunkSize; i < end; ++i) {
      person_joint(data.row(i), spec, g, joint, suffix);
      out.per_person[i] = log_sum_exp(joint.data(), joint.size());
      s += out.per_person[i];
    }
    chunk_sum[ch] = s;
  });
  for (double s : chunk_sum) out.loglik += s;
  return out;
}

LikelihoodAndGradient marginal_loglik_and_gradient(const ResponseMatrix& data,
                                                   const ModelSpec& spec, bool constrain_gamma) {
  check_dimensions(data, spec);
  const auto g = grid_terms(spec);
  const std::size_t N = data.n_persons(), J = g.J, T = g.T, K = g.K, c = g.c;
  const auto& x = spec.quadrature.nodes;
  const std::size_t n_chunks = (N + kChunkSize - 1) / kChunkSize;

  std::vector<ChunkAccumulator> acc(n_chunks);
  parallel_for(n_chunks, [&](std::size_t ch) {
    auto& a = acc[ch];
    a.W.assign(T * K, 0.0);
    a.y_total.assign(J, 0.0);
    a.y_theta.assign(J, 0.0);
    a.y_post.assign(J, 0.0);
    std::vector<double> joint, suffix, tau_mass(T);
    const std::size_t end = std::min(N, (ch + 1) * kChunkSize);
    for (std::size_t i = ch * kChunkSize; i < end; ++i) {
      const auto y = data.row(i);
      person_joint(y, spec, g, joint, suffix);
      const double lse = log_sum_exp(joint.data(), joint.size());
      a.loglik += lse;
      double theta_mean = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        double mass = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          const double r = std::exp(joint[t * K + k] - lse);
          a.W[t * K + k] += r;
          mass += r;
          theta_mean += r * x[k];
        }
        tau_mass[t] = mass;
      }
      double post = 0.0;  // P(tau < j) for the current item j
      for (std::size_t j = 1; j <= J; ++j) {
        if (j > c) post += tau_mass[j - 1 - c];
        if (!y[j - 1]) continue;
        a.y_total[j - 1] += 1.0;
        a.y_theta[j - 1] += theta_mean;
        if (j > c) a.y_post[j - 1] += post;
      }
    }
  });

  LikelihoodAndGradient out;
  std::vector<double> W(T * K, 0.0), y_total(J, 0.0), y_theta(J, 0.0), y_post(J, 0.0);
  for (const auto& a : acc) {
    out.loglik += a.loglik;
    for (std::size_t m = 0; m < T * K; ++m) W[m] += a.W[m];
    for (std::size_t j = 0; j < J; ++j) {
      y_total[j] += a.y_total[j];
      y_theta[j] += a.y_theta[j];
      y_post[j] += a.y_post[j];
    }
  }

  const ParameterLayout layout{J, c, constrain_gamma};
  out.gradient.assign(layout.size(), 0.0);
  const auto& it = spec.items;
  std::vector<double> grad_gamma(J, 0.0);
  for (std::size_t j = 1; j <= J; ++j) {
    out.gradient[layout.d(j)] = y_total[j - 1];
    out.gradient[layout.a(j)] = y_theta[j - 1];
    grad_gamma[j - 1] = y_post[j - 1];
  }
  for (std::size_t k = 0; k < K; ++k) {
    // Posterior mass split by whether item j falls after the change-point.
    double total = 0.0;
    for (std::size_t t = 0; t < T; ++t) total += W[t * K + k];
    double post_mass = 0.0;
    for (std::size_t j = 1; j <= J; ++j) {
      if (j > c) post_mass += W[(j - 1 - c) * K + k];
      double pre_mass = 0.0;
      if (j <= c) {
        pre_mass = total;
      } else {
        for (std::size_t t = j - c; t < T; ++t) pre_mass += W[t * K + k];
      }
      const double lin = it.d[j - 1] + it.a[j - 1] * x[k];
      const double p0 = logistic(lin);
      double expected = pre_mass * p0;
      if (j > c) {
        const double p1 = logistic(lin + it.gamma[j - 1]);
        expected += post_mass * p1;
        grad_gamma[j - 1] -= post_mass * p1;
      }
      out.gradient[layout.d(j)] -= expected;
      out.gradient[layout.a(j)] -= expected * x[k];
    }
  }
  for (std::size_t j = c + 1; j <= J; ++j) {
    out.gradient[layout.g(j)] =
        constrain_gamma ? it.gamma[j - 1] * grad_gamma[j - 1] : grad_gamma[j - 1];
  }
  if (!spec.support.degenerate()) {
    const auto dl = tau_log_pmf_gradient(spec.structural, spec.support);
    double ga = 0.0, gb = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      double mass = 0.0;
      for (std::size_t k = 0; k < K; ++k) mass += W[t * K + k];
      ga += mass * dl.d_alpha[t];
      gb += mass * dl.d_beta[t];
    }
    out.gradient[layout.alpha()] = ga;
    out.gradient[layout.beta()] = gb;
  }
  return out;
}

std::vector<double> marginal_loglik_gradient(const ResponseMatrix& data, const ModelSpec& spec,
                                             bool constrain_gamma) {
  return marginal_loglik_and_gradient(data, spec, constrain_gamma).gradient;
}

}  // namespace cpirt

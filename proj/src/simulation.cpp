#include "cpirt/simulation.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "cpirt/inference.hpp"
#include "cpirt/parallel.hpp"
#include "cpirt/structural.hpp"

namespace cpirt {

void ScenarioConfig::validate() const {
  if (n_persons < 1) throw std::invalid_argument("n_persons must be >= 1");
  if (n_items < 2) throw std::invalid_argument("n_items must be >= 2");
  if (c < 1 || c > n_items) throw std::invalid_argument("c must lie in 1..n_items");
  if (replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (!std::isfinite(alpha) || !std::isfinite(beta))
    throw std::invalid_argument("alpha and beta must be finite");
  fit.validate();
}

ItemParameters generate_item_parameters(std::size_t J, std::size_t c, Rng& rng) {
  if (c < 1 || c > J) throw std::invalid_argument("c must lie in 1..J");
  ItemParameters items = ItemParameters::baseline(J);
  for (std::size_t j = 0; j < J; ++j) {
    items.d[j] = rng.uniform(-1.0, 1.0);
    items.a[j] = rng.uniform(0.5, 1.5);
    // U(-2, -1) drawn as -2 + U[0, 1); never reaches -1 exactly, never 0.
    items.gamma[j] = j + 1 > c ? rng.uniform(-2.0, -1.0) : 0.0;
  }
  return items;
}

SimulatedPersons generate_persons(std::size_t N, const StructuralParameters& structural,
                                  const ChangePointSupport& support, Rng& rng) {
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  const auto dist = tau_pmf(structural, support);
  std::vector<double> cdf(dist.pmf.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < cdf.size(); ++t) cdf[t] = (acc += dist.pmf[t]);
  SimulatedPersons persons;
  persons.theta.resize(N);
  persons.tau.resize(N);
  for (std::size_t i = 0; i < N; ++i) persons.theta[i] = rng.normal();
  for (std::size_t i = 0; i < N; ++i) {
    const double u = rng.uniform() * acc;
    std::size_t t = 0;
    while (t + 1 < cdf.size() && u >= cdf[t]) ++t;
    persons.tau[i] = support.c + t;
  }
  return persons;
}

ResponseMatrix generate_responses(const ItemParameters& items, const std::vector<double>& theta,
                                  const std::vector<std::size_t>& tau,
                                  const ChangePointSupport& support, Rng& rng) {
  const std::size_t N = theta.size(), J = support.J;
  if (tau.size() != N || items.n_items() != J)
    throw std::invalid_argument("generate_responses: inconsistent dimensions");
  std::vector<std::uint8_t> y(N * J);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 1; j <= J; ++j) {
      const double p = irf(items.d[j - 1], items.a[j - 1], items.gamma[j - 1], theta[i], j > tau[i]);
      y[i * J + j - 1] = rng.bernoulli(p) ? 1 : 0;
    }
  }
  return ResponseMatrix(N, J, std::move(y));
}

ItemParameters simulate_items(std::size_t J, std::size_t c, std::uint64_t seed) {
  Rng rng(child_seed(seed, 0));
  return generate_item_parameters(J, c, rng);
}

SimulatedDataset simulate_replication(const ItemParameters& items, std::size_t N,
                                      const StructuralParameters& structural,
                                      const ChangePointSupport& support, std::uint64_t seed,
                                      std::size_t replication) {
  const std::uint64_t stream = child_seed(seed, replication + 1);
  Rng rng(stream);
  auto persons = generate_persons(N, structural, support, rng);
  auto responses = generate_responses(items, persons.theta, persons.tau, support, rng);
  return {std::move(responses), std::move(persons.theta), std::move(persons.tau), items,
          structural, support, stream};
}

SimulatedDataset simulate_dataset(std::size_t N, std::size_t J, std::size_t c,
                                  const StructuralParameters& structural, std::uint64_t seed) {
  const ChangePointSupport support(c, J);
  return simulate_replication(simulate_items(J, c, seed), N, structural, support, seed, 0);
}

std::optional<double> MetricsTable::get(const std::string& name) const {
  for (const auto& [key, value] : scalars)
    if (key == name) return value;
  throw std::out_of_range("no metric named " + name);
}

void MetricsTable::set(const std::string& name, std::optional<double> value) {
  for (auto& [key, v] : scalars) {
    if (key == name) {
      v = value;
      return;
    }
  }
  scalars.emplace_back(name, value);
}

namespace {

struct Moments {
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  void add(double e) {
    sum += e;
    sum_sq += e * e;
    ++n;
  }
  std::optional<double> bias() const {
    return n == 0 ? std::nullopt : std::optional(sum / static_cast<double>(n));
  }
  std::optional<double> rmse() const {
    return n == 0 ? std::nullopt : std::optional(std::sqrt(sum_sq / static_cast<double>(n)));
  }
};

}  // namespace

MetricsTable compute_metrics(const std::vector<SimulatedDataset>& truth,
                             const std::vector<ReplicationEstimates>& estimates) {
  if (truth.size() != estimates.size())
    throw std::invalid_argument("compute_metrics: replication counts differ");
  MetricsTable table;
  std::size_t n_failed = 0, n_nonconverged = 0;

  Moments before, after, before_cp, after_cp, alpha, beta;
  double before_rmse_sum = 0.0, mae_sum = 0.0;
  std::size_t before_reps = 0, mae_reps = 0;
  std::vector<Moments> dm, am, gm;

  for (std::size_t r = 0; r < truth.size(); ++r) {
    const auto& t = truth[r];
    const auto& e = estimates[r];
    if (e.failed) {
      ++n_failed;
      continue;
    }
    if (!e.converged) ++n_nonconverged;
    const std::size_t N = t.theta_true.size(), J = t.support.J;
    const auto check = [&](std::size_t size) {
      if (size != 0 && size != N)
        throw std::invalid_argument("compute_metrics: person-level estimates have wrong length");
    };
    check(e.theta_before.size());
    check(e.theta_after.size());
    check(e.tau_hat.size());

    if (!e.tau_hat.empty()) {
      double s = 0.0;
      for (std::size_t i = 0; i < N; ++i)
        s += std::abs(static_cast<double>(e.tau_hat[i]) - static_cast<double>(t.tau_true[i]));
      mae_sum += s / static_cast<double>(N);
      ++mae_reps;
    }
    if (!e.theta_before.empty()) {
      double sq = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        const double err = e.theta_before[i] - t.theta_true[i];
        before.add(err);
        sq += err * err;
        if (t.tau_true[i] < J) before_cp.add(err);
      }
      before_rmse_sum += std::sqrt(sq / static_cast<double>(N));
      ++before_reps;
    }
    if (!e.theta_after.empty()) {
      for (std::size_t i = 0; i < N; ++i) {
        const double err = e.theta_after[i] - t.theta_true[i];
        after.add(err);
        if (t.tau_true[i] < J) after_cp.add(err);
      }
    }
    if (e.structural) {
      alpha.add(e.structural->alpha - t.structural_true.alpha);
      beta.add(e.structural->beta - t.structural_true.beta);
    }
    if (e.items) {
      dm.resize(J);
      am.resize(J);
      gm.resize(J);
      for (std::size_t j = 0; j < J; ++j) {
        dm[j].add(e.items->d[j] - t.items_true.d[j]);
        am[j].add(e.items->a[j] - t.items_true.a[j]);
        if (j + 1 > t.support.c) gm[j].add(e.items->gamma[j] - t.items_true.gamma[j]);
      }
    }
  }

  const auto ratio = [](double s, std::size_t n) {
    return n == 0 ? std::nullopt : std::optional(s / static_cast<double>(n));
  };
  table.set("replications", static_cast<double>(truth.size()));
  table.set("failed_replications", static_cast<double>(n_failed));
  table.set("nonconverged_replications", static_cast<double>(n_nonconverged));
  table.set("speeded_person_replications", static_cast<double>(before_cp.n));
  table.set("mae_tau", ratio(mae_sum, mae_reps));
  table.set("theta_before_bias", before.bias());
  table.set("theta_before_rmse", ratio(before_rmse_sum, before_reps));
  table.set("theta_after_bias", after.bias());
  table.set("theta_after_rmse", after.rmse());
  table.set("theta_before_bias_cp", before_cp.bias());
  table.set("theta_before_rmse_cp", before_cp.rmse());
  table.set("theta_after_bias_cp", after_cp.bias());
  table.set("theta_after_rmse_cp", after_cp.rmse());
  table.set("alpha_bias", alpha.bias());
  table.set("alpha_rmse", alpha.rmse());
  table.set("beta_bias", beta.bias());
  table.set("beta_rmse", beta.rmse());

  for (std::size_t j = 0; j < dm.size(); ++j) {
    ItemMetrics m;
    m.item = j + 1;
    m.bias_d = *dm[j].bias();
    m.rmse_d = *dm[j].rmse();
    m.bias_a = *am[j].bias();
    m.rmse_a = *am[j].rmse();
    m.bias_gamma = gm[j].bias();
    m.rmse_gamma = gm[j].rmse();
    table.items.push_back(m);
  }
  return table;
}

ReplicationEstimates estimate_replication(const SimulatedDataset& data,
                                          const ScenarioConfig& config) {
  ReplicationEstimates est;
  const auto quadrature = gauss_hermite_standard_normal(config.fit.quadrature_nodes);
  ModelSpec spec;
  if (config.scenario == Scenario::KnownBaseline) {
    spec = {data.items_true, data.structural_true, data.support, quadrature};
  } else {
    try {
      const auto f = fit(data.responses, data.support.c, config.fit);
      est.converged = f.converged;
      est.items = f.items;
      est.structural = f.structural;
      spec = {f.items, f.structural, f.support, quadrature};
    } catch (const std::exception&) {
      est.failed = true;
      return est;
    }
  }
  const auto scores = score_persons(data.responses, spec);
  const std::size_t N = data.responses.n_persons();
  est.theta_before.resize(N);
  est.theta_after.resize(N);
  est.tau_hat.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    est.theta_before[i] = eap_theta(data.responses.row(i), spec, data.support.J);
    est.theta_after[i] = scores[i].theta_cleansed;
    est.tau_hat[i] = scores[i].tau_mode;
  }
  return est;
}

MetricsTable run_scenario(const ScenarioConfig& config) {
  config.validate();
  const ChangePointSupport support(config.c, config.n_items);
  const StructuralParameters structural{config.alpha, config.beta};
  const auto items = simulate_items(config.n_items, config.c, config.seed);

  std::vector<SimulatedDataset> truth;
  truth.reserve(config.replications);
  for (std::size_t r = 0; r < config.replications; ++r)
    truth.push_back(
        simulate_replication(items, config.n_persons, structural, support, config.seed, r));

  std::vector<ReplicationEstimates> estimates(config.replications);
  parallel_for(config.replications,
               [&](std::size_t r) { estimates[r] = estimate_replication(truth[r], config); });
  return compute_metrics(truth, estimates);
}

}  // namespace cpirt

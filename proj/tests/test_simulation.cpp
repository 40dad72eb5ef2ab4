#include <catch_amalgamated.hpp>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <random>

#include "cpirt/io.hpp"
#include "cpirt/likelihood.hpp"
#include "cpirt/simulation.hpp"

using namespace cpirt;
using Catch::Approx;

TEST_CASE("item parameter ranges") {
  Rng rng(3);
  const auto items = generate_item_parameters(40, 25, rng);
  for (std::size_t j = 0; j < 40; ++j) {
    CHECK(items.d[j] >= -1.0);
    CHECK(items.d[j] <= 1.0);
    CHECK(items.a[j] >= 0.5);
    CHECK(items.a[j] <= 1.5);
    if (j + 1 <= 25) {
      CHECK(items.gamma[j] == 0.0);
    } else {
      CHECK(items.gamma[j] >= -2.0);
      CHECK(items.gamma[j] <= -1.0);
    }
  }
  Rng r2(3);
  const auto none = generate_item_parameters(10, 10, r2);
  for (double g : none.gamma) CHECK(g == 0.0);
  CHECK(simulate_items(30, 20, 9).d == simulate_items(30, 20, 9).d);
  CHECK(simulate_items(30, 20, 9).d != simulate_items(30, 20, 10).d);
}

TEST_CASE("person draws follow their distributions") {
  const ChangePointSupport s(20, 30);
  Rng rng(2718);
  const auto p = generate_persons(10000, {0.2, -0.1}, s, rng);
  const double fracJ =
      double(std::count(p.tau.begin(), p.tau.end(), std::size_t{30})) / 10000.0;
  CHECK(fracJ == Approx(0.475).margin(0.02));
  double mean = 0.0;
  for (double t : p.theta) mean += t / 10000.0;
  CHECK(std::abs(mean) < 0.05);

  // Kolmogorov-Smirnov against N(0, 1); 1.6276 / sqrt(n) is the asymptotic 1% critical value.
  auto sorted = p.theta;
  std::sort(sorted.begin(), sorted.end());
  double dmax = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double F = 0.5 * std::erfc(-sorted[i] / std::sqrt(2.0));
    dmax = std::max({dmax, std::abs(F - double(i) / 1e4), std::abs(double(i + 1) / 1e4 - F)});
  }
  CHECK(dmax < 1.6276 / std::sqrt(1e4));

  const auto pmf = tau_pmf({0.2, -0.1}, s).pmf;
  double chi2 = 0.0;
  for (std::size_t t = 0; t < pmf.size(); ++t) {
    const double observed = double(std::count(p.tau.begin(), p.tau.end(), 20 + t));
    const double expected = 1e4 * pmf[t];
    chi2 += (observed - expected) * (observed - expected) / expected;
  }
  const boost::math::chi_squared dist(double(pmf.size() - 1));
  CHECK(chi2 < boost::math::quantile(dist, 0.99));

  Rng rng2(5);
  const auto q = generate_persons(10000, {0.2, -1.73}, s, rng2);
  CHECK(double(std::count(q.tau.begin(), q.tau.end(), std::size_t{30})) / 1e4 ==
        Approx(0.151).margin(0.02));
}

TEST_CASE("responses follow the model") {
  auto items = ItemParameters::baseline(4);
  items.d.assign(4, 10.0);
  items.a.assign(4, 1.0);
  Rng rng(1);
  const auto all = generate_responses(items, {0.0, 1.0, -1.0}, {4, 4, 4}, ChangePointSupport(4, 4), rng);
  for (auto v : all.entries()) CHECK(v == 1);

  const auto ds = simulate_dataset(10000, 12, 6, {0.2, -0.1}, 12);
  const ModelSpec spec{ds.items_true, ds.structural_true, ds.support,
                       gauss_hermite_standard_normal(49)};
  const auto pmf = tau_pmf(spec.structural, spec.support).pmf;
  const auto means = ds.responses.column_means();
  for (std::size_t j = 1; j <= 12; ++j) {
    double implied = 0.0;
    for (std::size_t t = 0; t < pmf.size(); ++t)
      for (std::size_t k = 0; k < spec.quadrature.size(); ++k)
        implied += pmf[t] * spec.quadrature.weights[k] *
                   irf(spec.items.d[j - 1], spec.items.a[j - 1], spec.items.gamma[j - 1],
                       spec.quadrature.nodes[k], j > 6 + t);
    CHECK(means[j - 1] == Approx(implied).margin(0.03));
  }
  const auto again = simulate_dataset(10000, 12, 6, {0.2, -0.1}, 12);
  CHECK(again.responses.entries() == ds.responses.entries());
  CHECK(again.tau_true == ds.tau_true);
}

namespace {

std::vector<SimulatedDataset> toy_truth(std::size_t R, std::size_t N) {
  std::vector<SimulatedDataset> truth;
  const auto items = simulate_items(6, 3, 1);
  for (std::size_t r = 0; r < R; ++r)
    truth.push_back(simulate_replication(items, N, {0.2, -0.1}, ChangePointSupport(3, 6), 1, r));
  return truth;
}

ReplicationEstimates exact(const SimulatedDataset& t) {
  ReplicationEstimates e;
  e.theta_before = t.theta_true;
  e.theta_after = t.theta_true;
  e.tau_hat = t.tau_true;
  e.items = t.items_true;
  e.structural = t.structural_true;
  return e;
}

}  // namespace

TEST_CASE("metrics of perfect and shifted estimates") {
  const auto truth = toy_truth(3, 50);
  std::vector<ReplicationEstimates> est;
  for (const auto& t : truth) est.push_back(exact(t));
  const auto zero = compute_metrics(truth, est);
  for (const auto& [name, value] : zero.scalars) {
    if (name.find("bias") != std::string::npos || name.find("rmse") != std::string::npos ||
        name == "mae_tau")
      CHECK(*value == 0.0);
  }
  for (auto& e : est) {
    for (auto& v : e.theta_before) v += 0.1;
    for (auto& v : e.theta_after) v += 0.1;
  }
  const auto shifted = compute_metrics(truth, est);
  CHECK(*shifted.get("theta_before_bias") == Approx(0.1).margin(1e-12));
  CHECK(*shifted.get("theta_before_rmse") == Approx(0.1).margin(1e-12));
  CHECK(*shifted.get("theta_after_rmse_cp") == Approx(0.1).margin(1e-12));
}

TEST_CASE("two-person MAE") {
  auto truth = toy_truth(1, 2);
  truth[0].tau_true = {5, 5};
  auto e = exact(truth[0]);
  e.tau_hat = {3, 5};
  CHECK(*compute_metrics(truth, {e}).get("mae_tau") == 1.0);
}

TEST_CASE("speeded metrics are undefined without speeded persons") {
  auto truth = toy_truth(2, 10);
  for (auto& t : truth) t.tau_true.assign(10, 6);
  std::vector<ReplicationEstimates> est = {exact(truth[0]), exact(truth[1])};
  const auto table = compute_metrics(truth, est);
  CHECK_FALSE(table.get("theta_before_bias_cp").has_value());
  CHECK_FALSE(table.get("theta_after_rmse_cp").has_value());
  CHECK(table.get("theta_before_bias").has_value());
  CHECK(metrics_to_csv(table).find("theta_before_bias_cp,,NA") != std::string::npos);
}

TEST_CASE("metrics agree with a plain-loop implementation") {
  std::mt19937 gen(4);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::uniform_int_distribution<int> shift(-2, 2);
  const auto truth = toy_truth(4, 60);
  std::vector<ReplicationEstimates> est;
  for (const auto& t : truth) {
    auto e = exact(t);
    for (auto& v : e.theta_before) v += noise(gen);
    for (auto& v : e.theta_after) v += noise(gen);
    for (auto& v : e.tau_hat) v = std::clamp<int>(int(v) + shift(gen), 3, 6);
    for (auto& v : e.items->d) v += noise(gen);
    for (std::size_t j = 3; j < 6; ++j) e.items->gamma[j] += noise(gen);
    e.structural->alpha += noise(gen);
    est.push_back(e);
  }
  const auto table = compute_metrics(truth, est);

  const double R = 4.0, N = 60.0;
  double mae = 0, bb = 0, brm = 0, ab = 0, asq = 0, cpb = 0, cpsq = 0, n_cp = 0, ae = 0, aesq = 0;
  for (std::size_t r = 0; r < 4; ++r) {
    double m = 0, sq = 0;
    for (std::size_t i = 0; i < 60; ++i) {
      m += std::abs(double(est[r].tau_hat[i]) - double(truth[r].tau_true[i]));
      const double eb = est[r].theta_before[i] - truth[r].theta_true[i];
      const double ea = est[r].theta_after[i] - truth[r].theta_true[i];
      bb += eb;
      sq += eb * eb;
      ab += ea;
      asq += ea * ea;
      if (truth[r].tau_true[i] < 6) {
        cpb += eb;
        cpsq += ea * ea;
        n_cp += 1;
      }
    }
    mae += m / N;
    brm += std::sqrt(sq / N);
    const double da = est[r].structural->alpha - 0.2;
    ae += da;
    aesq += da * da;
  }
  CHECK(*table.get("mae_tau") == Approx(mae / R).margin(1e-12));
  CHECK(*table.get("theta_before_bias") == Approx(bb / (N * R)).margin(1e-12));
  CHECK(*table.get("theta_before_rmse") == Approx(brm / R).margin(1e-12));
  CHECK(*table.get("theta_after_bias") == Approx(ab / (N * R)).margin(1e-12));
  CHECK(*table.get("theta_after_rmse") == Approx(std::sqrt(asq / (N * R))).margin(1e-12));
  CHECK(*table.get("theta_before_bias_cp") == Approx(cpb / n_cp).margin(1e-12));
  CHECK(*table.get("theta_after_rmse_cp") == Approx(std::sqrt(cpsq / n_cp)).margin(1e-12));
  CHECK(*table.get("alpha_bias") == Approx(ae / R).margin(1e-12));
  CHECK(*table.get("alpha_rmse") == Approx(std::sqrt(aesq / R)).margin(1e-12));

  for (std::size_t j = 0; j < 6; ++j) {
    double b = 0, s = 0;
    for (std::size_t r = 0; r < 4; ++r) {
      const double e = est[r].items->d[j] - truth[r].items_true.d[j];
      b += e;
      s += e * e;
    }
    CHECK(table.items[j].bias_d == Approx(b / R).margin(1e-12));
    CHECK(table.items[j].rmse_d == Approx(std::sqrt(s / R)).margin(1e-12));
    CHECK(table.items[j].bias_gamma.has_value() == (j >= 3));
    CHECK(table.items[j].rmse_d >= std::abs(table.items[j].bias_d));
  }
}

TEST_CASE("failed replications are counted and skipped") {
  const auto truth = toy_truth(3, 20);
  std::vector<ReplicationEstimates> est = {exact(truth[0]), ReplicationEstimates{}, exact(truth[2])};
  est[1].failed = true;
  const auto table = compute_metrics(truth, est);
  CHECK(*table.get("failed_replications") == 1.0);
  CHECK(*table.get("mae_tau") == 0.0);
  CHECK_THROWS_AS(compute_metrics(truth, {exact(truth[0])}), std::invalid_argument);
}

TEST_CASE("scenario runs are complete and reproducible") {
  ScenarioConfig config;
  config.replications = 1;
  const auto table = run_scenario(config);
  CHECK(*table.get("replications") == 1.0);
  CHECK(table.items.size() == 30);
  for (const auto& [name, value] : table.scalars) CHECK(value.has_value());

  ScenarioConfig small;
  small.n_persons = 200;
  small.n_items = 10;
  small.c = 6;
  small.replications = 2;
  CHECK(metrics_to_json(run_scenario(small), small) == metrics_to_json(run_scenario(small), small));
  small.scenario = Scenario::KnownBaseline;
  const auto known = run_scenario(small);
  CHECK_FALSE(known.get("alpha_bias").has_value());
  CHECK(known.items.empty());
  CHECK(known.get("theta_after_bias").has_value());

  small.c = 11;
  CHECK_THROWS_AS(run_scenario(small), std::invalid_argument);
}

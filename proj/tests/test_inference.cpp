#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "cpirt/inference.hpp"
#include "cpirt/simulation.hpp"
#include "oracles.hpp"

using namespace cpirt;
using Catch::Approx;

namespace {

// J = 5, c = 2, strongly negative change effects.
ModelSpec five_item_spec(double gamma = -4.0) {
  ModelSpec spec;
  spec.support = ChangePointSupport(2, 5);
  spec.items = ItemParameters::baseline(5);
  spec.items.d = {0.3, -0.2, 0.5, 0.0, -0.4};
  spec.items.a = {1.0, 1.2, 0.8, 1.4, 0.9};
  for (std::size_t j = 2; j < 5; ++j) spec.items.gamma[j] = gamma;
  spec.structural = {0.2, -0.1};
  spec.quadrature = gauss_hermite_standard_normal(49);
  return spec;
}

std::vector<std::uint8_t> bytes(const std::vector<int>& y) { return {y.begin(), y.end()}; }

}  // namespace

TEST_CASE("posterior over tau against the exhaustive oracle") {
  const auto spec = five_item_spec();
  const oracle::Grid grid;
  const std::vector<std::vector<int>> patterns = {
      {1, 1, 1, 1, 1}, {1, 1, 0, 0, 0}, {0, 1, 1, 0, 1}, {1, 0, 0, 1, 0}};
  for (const auto& y : patterns) {
    const auto post = posterior_tau(bytes(y), spec);
    const auto want = oracle::posterior_tau(y, spec.items, 0.2, -0.1, 2, grid);
    for (std::size_t t = 0; t < post.size(); ++t) CHECK(post[t] == Approx(want[t]).margin(1e-8));
    CHECK(std::accumulate(post.begin(), post.end(), 0.0) == Approx(1.0).margin(1e-10));
    CHECK(prob_change(bytes(y), spec) == Approx(1.0 - want.back()).margin(1e-8));
    CHECK(prob_change(bytes(y), spec) == Approx(post[0] + post[1] + post[2]).margin(1e-12));
  }
  CHECK(posterior_mode(posterior_tau(bytes({1, 1, 1, 1, 1}), spec), spec.support) == 5);
  CHECK(posterior_mode(posterior_tau(bytes({1, 1, 0, 0, 0}), spec), spec.support) == 2);
}

TEST_CASE("gamma = 0 gives the prior back") {
  const auto spec = five_item_spec(0.0);
  const auto prior = tau_pmf(spec.structural, spec.support).pmf;
  for (const auto& y : {std::vector<int>{1, 0, 1, 0, 1}, std::vector<int>{0, 0, 0, 0, 0}}) {
    const auto post = posterior_tau(bytes(y), spec);
    for (std::size_t t = 0; t < post.size(); ++t) CHECK(post[t] == Approx(prior[t]).margin(1e-14));
    CHECK(prob_change(bytes(y), spec) == Approx(1.0 - logistic(-0.1)).margin(1e-14));
  }
}

TEST_CASE("c = J means no change") {
  auto spec = five_item_spec(0.0);
  spec.support = ChangePointSupport(5, 5);
  const auto y = bytes({1, 0, 0, 1, 1});
  CHECK(prob_change(y, spec) == 0.0);
  CHECK(posterior_tau(y, spec) == std::vector<double>{1.0});
}

TEST_CASE("EAP estimates") {
  const auto spec = five_item_spec();
  const oracle::Grid grid;
  const std::vector<int> y = {1, 0, 1, 1, 0};
  CHECK(eap_theta(bytes(y), spec) ==
        Approx(oracle::joint_eap(y, spec.items, 0.2, -0.1, 2, grid)).margin(1e-6));
  for (std::size_t m = 1; m <= 5; ++m)
    CHECK(eap_theta(bytes(y), spec, m) == Approx(oracle::prefix_eap(y, spec.items, m, grid)).margin(1e-6));

  auto three = five_item_spec();
  three.support = ChangePointSupport(3, 3);
  three.items.d.resize(3);
  three.items.a.resize(3);
  three.items.gamma.assign(3, 0.0);
  const std::vector<int> y3 = {0, 1, 1};
  CHECK(eap_theta(bytes(y3), three) ==
        Approx(oracle::prefix_eap(y3, three.items, 3, grid)).margin(1e-6));

  auto flat = five_item_spec();
  flat.items.a.assign(5, 0.0);
  CHECK(eap_theta(bytes(y), flat, 3) == Approx(0.0).margin(1e-12));

  auto nochange = five_item_spec(0.0);
  CHECK(eap_theta(bytes(y), nochange, 5) == Approx(eap_theta(bytes(y), nochange)).margin(1e-10));

  CHECK_THROWS_AS(eap_theta(bytes(y), spec, 0), std::invalid_argument);
  CHECK_THROWS_AS(eap_theta(bytes(y), spec, 6), std::invalid_argument);
  CHECK_THROWS_AS(posterior_tau(bytes({1, 0}), spec), std::invalid_argument);
}

TEST_CASE("mode ties go to the earliest item") {
  const ChangePointSupport s(4, 7);
  CHECK(posterior_mode({0.1, 0.4, 0.4, 0.1}, s) == 5);
  CHECK(posterior_mode({0.25, 0.25, 0.25, 0.25}, s) == 4);
}

TEST_CASE("score_persons") {
  const auto ds = simulate_dataset(400, 12, 7, {0.2, -0.1}, 5);
  const ModelSpec spec{ds.items_true, ds.structural_true, ds.support,
                       gauss_hermite_standard_normal(49)};
  const auto scores = score_persons(ds.responses, spec);
  REQUIRE(scores.size() == 400);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& p = scores[i];
    CHECK(std::accumulate(p.tau_pmf.begin(), p.tau_pmf.end(), 0.0) == Approx(1.0).margin(1e-10));
    CHECK(p.tau_mode == posterior_mode(p.tau_pmf, ds.support));
    CHECK(p.theta_cleansed == eap_theta(ds.responses.row(i), spec, p.tau_mode));
    if (p.tau_mode == 12) CHECK(p.theta_cleansed == eap_theta(ds.responses.row(i), spec, 12));
  }
  const auto again = score_persons(ds.responses, spec);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    CHECK(again[i].theta_eap == scores[i].theta_eap);
    CHECK(again[i].tau_pmf == scores[i].tau_pmf);
  }
}

TEST_CASE("posteriors average back to the prior") {
  const auto ds = simulate_dataset(5000, 15, 9, {0.2, -0.1}, 55);
  const ModelSpec spec{ds.items_true, ds.structural_true, ds.support,
                       gauss_hermite_standard_normal(49)};
  const auto prior = tau_pmf(spec.structural, spec.support).pmf;
  std::vector<double> mean(prior.size(), 0.0);
  for (const auto& p : score_persons(ds.responses, spec))
    for (std::size_t t = 0; t < mean.size(); ++t) mean[t] += p.tau_pmf[t] / 5000.0;
  double tv = 0.0;
  for (std::size_t t = 0; t < mean.size(); ++t) tv += 0.5 * std::abs(mean[t] - prior[t]);
  CHECK(tv < 0.05);
}

TEST_CASE("cleansing moves speeded respondents' scores toward the truth") {
  const auto ds = simulate_dataset(3000, 30, 20, {0.2, -0.1}, 101);
  const ModelSpec spec{ds.items_true, ds.structural_true, ds.support,
                       gauss_hermite_standard_normal(49)};
  const auto scores = score_persons(ds.responses, spec);
  double before = 0.0, after = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < 3000; ++i) {
    if (ds.tau_true[i] == 30) continue;
    before += eap_theta(ds.responses.row(i), spec, 30) - ds.theta_true[i];
    after += scores[i].theta_cleansed - ds.theta_true[i];
    ++n;
  }
  CHECK(std::abs(after / double(n)) < std::abs(before / double(n)));
}

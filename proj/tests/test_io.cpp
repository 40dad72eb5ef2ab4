#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cpirt/io.hpp"

using namespace cpirt;
namespace fs = std::filesystem;

namespace {

ResponseMatrix parse(const std::string& text) {
  std::istringstream in(text);
  return parse_responses(in);
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "cpirt_test_io";
  fs::create_directories(dir);
  return dir / name;
}

FitResult sample_fit(std::size_t c) {
  FitResult f;
  f.support = ChangePointSupport(c, 5);
  f.items = ItemParameters::baseline(5);
  f.items.d = {0.1, -1.0 / 3.0, 2.5e-17, 4.0, -0.0};
  f.items.a = {1.0, 0.7, 1.0 / 7.0, 1.4, 0.9};
  for (std::size_t j = c; j < 5; ++j) f.items.gamma[j] = -1.0 - 0.1 * double(j);
  f.structural = {0.2, -0.1};
  f.n_persons = 123;
  f.loglik = -456.78901234567891;
  f.bic = 999.123;
  f.n_free_parameters = 13;
  f.converged = true;
  f.iterations = 42;
  f.gradient_norm = 3.3e-7;
  f.warnings = {"item 3: constant \"response\" column"};
  return f;
}

}  // namespace

TEST_CASE("response parsing") {
  const auto m = parse("1,0,1\n0,0,1\n");
  CHECK(m.n_persons() == 2);
  CHECK(m.n_items() == 3);
  CHECK(m.at(0, 3) == 1);

  const auto h = parse("item1,item2\n1,0\n");
  CHECK(h.n_persons() == 1);
  CHECK(h.n_items() == 2);

  const auto crlf = parse("1,0\r\n\r\n0,1\r\n");
  CHECK(crlf.n_persons() == 2);
}

TEST_CASE("response parse errors carry coordinates") {
  try {
    parse("1,2,0\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 1);
    CHECK(e.column() == 2);
  }
  try {
    parse("a,b\n1,0\n0,x\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
    CHECK(e.column() == 2);
  }
  CHECK_THROWS_AS(parse("1,0,1\n0,1\n"), ParseError);
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("a,b,c\n"), ParseError);
  CHECK_THROWS_AS(parse("1\n0\n"), ParseError);
  CHECK_THROWS_AS(read_responses(scratch("does_not_exist.csv")), IoError);
}

TEST_CASE("responses round-trip through a file") {
  const ResponseMatrix m(3, 2, {1, 0, 0, 1, 1, 1});
  const auto path = scratch("responses.csv");
  write_responses(m, path);
  CHECK(read_responses(path).entries() == m.entries());
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0, -2.5, 123456789.0}) {
    const auto s = format_number(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(0.1) == "0.10000000000000001");
}

TEST_CASE("fit documents round-trip losslessly") {
  for (std::size_t c : {2u, 5u}) {
    const auto f = sample_fit(c);
    const auto path = scratch("fit.json");
    write_fit(f, path);
    const auto g = read_fit(path);
    CHECK(g.items.d == f.items.d);
    CHECK(g.items.a == f.items.a);
    CHECK(g.items.gamma == f.items.gamma);
    CHECK(g.items.gamma.size() == 5);
    CHECK(g.structural.alpha == f.structural.alpha);
    CHECK(g.structural.beta == f.structural.beta);
    CHECK(g.support.c == c);
    CHECK(g.support.J == 5);
    CHECK(g.loglik == f.loglik);
    CHECK(g.bic == f.bic);
    CHECK(g.n_free_parameters == 13);
    CHECK(g.converged);
    CHECK(g.iterations == 42);
    CHECK(g.gradient_norm == f.gradient_norm);
    CHECK(g.warnings == f.warnings);
    CHECK(fit_to_json(g) == fit_to_json(f));
  }
  const auto baseline = nlohmann::json::parse(fit_to_json(sample_fit(5)));
  for (double g : baseline["gamma"]) CHECK(g == 0.0);
  CHECK(baseline["schema_version"] == kSchemaVersion);
}

TEST_CASE("fit documents are parsed strictly") {
  auto doc = nlohmann::json::parse(fit_to_json(sample_fit(3)));
  auto extra = doc;
  extra["surprise"] = 1;
  CHECK_THROWS_AS(fit_from_json(extra.dump()), ParseError);
  auto missing = doc;
  missing.erase("beta");
  CHECK_THROWS_AS(fit_from_json(missing.dump()), ParseError);
  auto version = doc;
  version["schema_version"] = 99;
  CHECK_THROWS_AS(fit_from_json(version.dump()), ParseError);
  auto wrong_length = doc;
  wrong_length["a"] = {1.0, 2.0};
  CHECK_THROWS_AS(fit_from_json(wrong_length.dump()), ParseError);
  CHECK_THROWS_AS(fit_from_json("{not json"), ParseError);
  CHECK_THROWS_AS(write_fit(sample_fit(3), "/nonexistent-dir/fit.json"), IoError);
}

TEST_CASE("scores CSV layout") {
  const ChangePointSupport s(3, 5);
  std::vector<PersonPosterior> posts(2);
  posts[0] = {{0.2, 0.3, 0.5}, 5, 0.5, 0.25, 0.125};
  posts[1] = {{0.6, 0.1, 0.3}, 3, 0.7, -1.0, -0.5};
  const auto path = scratch("scores.csv");
  write_scores(posts, s, path);
  std::ifstream in(path);
  std::string header, row1, row2, extra;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  CHECK(header == "person_index,theta_eap,theta_cleansed,tau_mode,prob_change,pmf_3,pmf_4,pmf_5");
  CHECK(row1 == "1,0.25,0.125,5,0.5,0.20000000000000001,0.29999999999999999,0.5");
  CHECK(row2.rfind("2,-1,-0.5,3,0.69999999999999996,", 0) == 0);
  CHECK_FALSE(std::getline(in, extra));
}

TEST_CASE("structured outputs carry a schema version") {
  MetricsTable table;
  table.set("mae_tau", 1.5);
  table.set("theta_before_bias_cp", std::nullopt);
  table.items.push_back({1, 0.1, 0.2, 0.0, 0.1, std::nullopt, std::nullopt});
  const auto json = nlohmann::json::parse(metrics_to_json(table, ScenarioConfig{}));
  CHECK(json["schema_version"] == kSchemaVersion);
  CHECK(json["metrics"]["mae_tau"] == 1.5);
  CHECK(json["metrics"]["theta_before_bias_cp"].is_null());
  CHECK(json["items"][0]["bias_gamma"].is_null());
  CHECK(metrics_to_csv(table) ==
        "metric,item,value\nmae_tau,,1.5\ntheta_before_bias_cp,,NA\nbias_d,1,0.10000000000000001\n"
        "rmse_d,1,0.20000000000000001\nbias_a,1,0\nrmse_a,1,0.10000000000000001\n");
}

#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpirt/estimation.hpp"
#include "cpirt/inference.hpp"
#include "cpirt/io.hpp"
#include "cpirt/selection.hpp"
#include "cpirt/simulation.hpp"

namespace cpirt {

namespace fs = std::filesystem;

namespace {

/// Raised for a non-converged fit after its document has been written.
class ConvergenceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimulateArgs {
  std::size_t n = 1000, j = 30, c = 20;
  double alpha = 0.2, beta = -0.1;
  std::uint64_t seed = 1;
  std::string out_dir;
};

struct FitArgs {
  std::string responses, out;
  std::size_t c = 0;
  std::size_t nodes = kDefaultQuadratureNodes;
  double tol = 1e-6;
  std::size_t max_iter = 500;
  double ridge = 0.0;
  std::optional<std::uint64_t> seed;
};

struct SelectArgs {
  std::string responses, out, fit_out, c_grid, criterion = "BIC";
  std::size_t nodes = kDefaultQuadratureNodes;
  double tol = 1e-6;
  std::size_t max_iter = 500;
};

struct ScoreArgs {
  std::string responses, fit, out;
  std::size_t nodes = kDefaultQuadratureNodes;
};

struct StudyArgs {
  int scenario = 2;
  std::size_t n = 1000, j = 30, c = 20, replications = 25;
  double alpha = 0.2, beta = -0.1;
  std::uint64_t seed = 1;
  std::string out;
};

/// "15,16,20" or ranges such as "15:29", mixed freely.
std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> grid;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string token = text.substr(start, comma - start);
    const auto colon = token.find(':');
    try {
      std::size_t used = 0;
      if (colon == std::string::npos) {
        grid.push_back(std::stoul(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } else {
        const std::string lo_s = token.substr(0, colon), hi_s = token.substr(colon + 1);
        std::size_t used_hi = 0;
        const std::size_t lo = std::stoul(lo_s, &used), hi = std::stoul(hi_s, &used_hi);
        if (used != lo_s.size() || used_hi != hi_s.size() || lo > hi)
          throw std::invalid_argument(token);
        for (std::size_t v = lo; v <= hi; ++v) grid.push_back(v);
      }
    } catch (const std::logic_error&) {
      throw CLI::ValidationError("--c-grid", "cannot parse '" + token + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return grid;
}

FitConfig fit_config(std::size_t nodes, double tol, std::size_t max_iter, double ridge = 0.0,
                     std::optional<std::uint64_t> seed = std::nullopt) {
  FitConfig config;
  config.quadrature_nodes = nodes;
  config.gradient_tolerance = tol;
  config.max_iterations = max_iter;
  config.ridge_penalty = ridge;
  config.seed = seed;
  return config;
}

int run_simulate(const SimulateArgs& a, std::ostream& out) {
  const auto data = simulate_dataset(a.n, a.j, a.c, {a.alpha, a.beta}, a.seed);
  write_simulated_dataset(data, a.out_dir);
  out << "wrote " << a.n << "x" << a.j << " responses to " << a.out_dir << "\n";
  return 0;
}

int run_fit(const FitArgs& a, std::ostream& out) {
  const auto data = read_responses(a.responses);
  const auto config = fit_config(a.nodes, a.tol, a.max_iter, a.ridge, a.seed);
  const auto result = fit(data, a.c, config);
  write_fit(result, a.out);
  out << "loglik " << format_number(result.loglik) << "\nbic " << format_number(result.bic)
      << "\n";
  if (!result.converged)
    throw ConvergenceFailure("fit did not converge (gradient norm " +
                             format_number(result.gradient_norm) + ")");
  return 0;
}

int run_select(const SelectArgs& a, std::ostream& out) {
  const auto data = read_responses(a.responses);
  std::optional<std::vector<std::size_t>> grid;
  if (!a.c_grid.empty()) grid = parse_grid(a.c_grid);
  const Criterion criterion = a.criterion == "AIC" ? Criterion::AIC : Criterion::BIC;
  const auto report = select_c(data, grid, fit_config(a.nodes, a.tol, a.max_iter), criterion);
  write_selection(report, a.out);
  fs::path fit_path = a.fit_out;
  if (fit_path.empty()) {
    fit_path = a.out;
    fit_path.replace_extension(".fit.json");
  }
  write_fit(*report.chosen().fit, fit_path);
  out << "chosen c " << report.chosen().c << (report.chosen().baseline ? " (baseline)" : "")
      << "\n";
  return 0;
}

int run_score(const ScoreArgs& a, std::ostream& out) {
  const auto data = read_responses(a.responses);
  const auto fitted = read_fit(a.fit);
  if (fitted.items.n_items() != data.n_items())
    throw std::invalid_argument("fit has " + std::to_string(fitted.items.n_items()) +
                                " items but the responses have " +
                                std::to_string(data.n_items()));
  FitConfig config;
  config.quadrature_nodes = a.nodes;
  const auto scores = score_persons(data, fitted, config);
  write_scores(scores, fitted.support, a.out);
  out << "scored " << scores.size() << " respondents\n";
  return 0;
}

int run_study(const StudyArgs& a, std::ostream& out) {
  ScenarioConfig config;
  config.scenario = a.scenario == 1 ? Scenario::KnownBaseline : Scenario::AllUnknown;
  config.n_persons = a.n;
  config.n_items = a.j;
  config.c = a.c;
  config.alpha = a.alpha;
  config.beta = a.beta;
  config.replications = a.replications;
  config.seed = a.seed;
  const auto table = run_scenario(config);
  fs::create_directories(a.out);
  write_text(fs::path(a.out) / "metrics.csv", metrics_to_csv(table));
  write_text(fs::path(a.out) / "metrics.json", metrics_to_json(table, config));
  if (const auto mae = table.get("mae_tau")) out << "mae_tau " << format_number(*mae) << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Change-point IRT: simulate, fit, select, score and study"};
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.allow_config_extras(CLI::config_extras_mode::error);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate responses and truth files");
  simulate->add_option("--n", sim.n, "Respondents")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--j", sim.j, "Items")->capture_default_str();
  simulate->add_option("--c", sim.c, "Earliest change point")->capture_default_str();
  simulate->add_option("--alpha", sim.alpha)->capture_default_str();
  simulate->add_option("--beta", sim.beta)->capture_default_str();
  simulate->add_option("--seed", sim.seed)->capture_default_str();
  simulate->add_option("--out-dir", sim.out_dir, "Output directory")->required();

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the model at a known c");
  fit_cmd->add_option("--responses", fa.responses)->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--c", fa.c, "Earliest change point (J fits the baseline)")->required();
  fit_cmd->add_option("--nodes", fa.nodes)->capture_default_str()->check(CLI::PositiveNumber);
  fit_cmd->add_option("--tol", fa.tol)->capture_default_str()->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-iter", fa.max_iter)->capture_default_str();
  fit_cmd->add_option("--ridge", fa.ridge)->capture_default_str()->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--seed", fa.seed, "Jitter starting values with this seed");
  fit_cmd->add_option("--out", fa.out, "Fit document path")->required();

  SelectArgs sa;
  auto* select = app.add_subcommand("select", "Choose c by information criterion");
  select->add_option("--responses", sa.responses)->required()->check(CLI::ExistingFile);
  select->add_option("--c-grid", sa.c_grid, "e.g. 15:29 or 18,19,20 (default ceil(J/2):J-1)");
  select->add_option("--criterion", sa.criterion)
      ->capture_default_str()
      ->check(CLI::IsMember({"BIC", "AIC"}));
  select->add_option("--nodes", sa.nodes)->capture_default_str()->check(CLI::PositiveNumber);
  select->add_option("--tol", sa.tol)->capture_default_str()->check(CLI::PositiveNumber);
  select->add_option("--max-iter", sa.max_iter)->capture_default_str();
  select->add_option("--out", sa.out, "Selection report path")->required();
  select->add_option("--fit-out", sa.fit_out, "Chosen fit path (default: <out>.fit.json)");

  ScoreArgs sc;
  auto* score = app.add_subcommand("score", "Per-person posteriors and cleansed scores");
  score->add_option("--responses", sc.responses)->required()->check(CLI::ExistingFile);
  score->add_option("--fit", sc.fit)->required()->check(CLI::ExistingFile);
  score->add_option("--nodes", sc.nodes)->capture_default_str()->check(CLI::PositiveNumber);
  score->add_option("--out", sc.out, "Scores CSV path")->required();

  StudyArgs st;
  auto* study = app.add_subcommand("study", "Run a simulation scenario");
  study->add_option("--scenario", st.scenario)->capture_default_str()->check(CLI::IsMember({1, 2}));
  study->add_option("--n", st.n)->capture_default_str()->check(CLI::PositiveNumber);
  study->add_option("--j", st.j)->capture_default_str();
  study->add_option("--c", st.c)->capture_default_str();
  study->add_option("--alpha", st.alpha)->capture_default_str();
  study->add_option("--beta", st.beta)->capture_default_str();
  study->add_option("--replications", st.replications)->capture_default_str();
  study->add_option("--seed", st.seed)->capture_default_str();
  study->add_option("--out", st.out, "Output directory for metrics.csv and metrics.json")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (*simulate) return run_simulate(sim, out);
    if (*fit_cmd) return run_fit(fa, out);
    if (*select) return run_select(sa, out);
    if (*score) return run_score(sc, out);
    if (*study) return run_study(st, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace cpirt

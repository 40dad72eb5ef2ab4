#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cpirt/core.hpp"
#include "cpirt/estimation.hpp"
#include "cpirt/rng.hpp"

namespace cpirt {

enum class Scenario {
  KnownBaseline = 1,  // every parameter fixed at its true value
  AllUnknown = 2,     // everything estimated, c treated as known
};

struct ScenarioConfig {
  std::size_t n_persons = 1000;
  std::size_t n_items = 30;
  std::size_t c = 20;
  double alpha = 0.2;
  double beta = -0.1;
  std::size_t replications = 25;
  std::uint64_t seed = 1;
  Scenario scenario = Scenario::AllUnknown;
  FitConfig fit;

  void validate() const;
};

struct SimulatedDataset {
  ResponseMatrix responses;
  std::vector<double> theta_true;
  std::vector<std::size_t> tau_true;
  ItemParameters items_true;
  StructuralParameters structural_true;
  ChangePointSupport support;
  std::uint64_t seed = 0;
};

/// d ~ U(-1, 1), a ~ U(0.5, 1.5), gamma = 0 for j <= c and U(-2, -1) after.
ItemParameters generate_item_parameters(std::size_t J, std::size_t c, Rng& rng);

struct SimulatedPersons {
  std::vector<double> theta;
  std::vector<std::size_t> tau;
};

/// theta ~ N(0, 1) and tau ~ tau_pmf, independently per person.
SimulatedPersons generate_persons(std::size_t N, const StructuralParameters& structural,
                                  const ChangePointSupport& support, Rng& rng);

ResponseMatrix generate_responses(const ItemParameters& items, const std::vector<double>& theta,
                                  const std::vector<std::size_t>& tau,
                                  const ChangePointSupport& support, Rng& rng);

/// Item parameters come from child stream 0 of `seed`; persons and responses
/// for replication r (0-based) from child stream r + 1.
ItemParameters simulate_items(std::size_t J, std::size_t c, std::uint64_t seed);
SimulatedDataset simulate_replication(const ItemParameters& items, std::size_t N,
                                      const StructuralParameters& structural,
                                      const ChangePointSupport& support, std::uint64_t seed,
                                      std::size_t replication);
SimulatedDataset simulate_dataset(std::size_t N, std::size_t J, std::size_t c,
                                  const StructuralParameters& structural, std::uint64_t seed);

/// What a replication produced; empty fields mean "not estimated".
struct ReplicationEstimates {
  bool failed = false;
  bool converged = true;
  std::vector<double> theta_before;  // baseline EAP on all items
  std::vector<double> theta_after;   // baseline EAP on items 1..tau_hat
  std::vector<std::size_t> tau_hat;
  std::optional<ItemParameters> items;
  std::optional<StructuralParameters> structural;
};

struct ItemMetrics {
  std::size_t item = 0;
  double bias_d = 0.0, rmse_d = 0.0;
  double bias_a = 0.0, rmse_a = 0.0;
  std::optional<double> bias_gamma, rmse_gamma;  // only for items after c
};

/// Named scalar metrics (std::nullopt marks an undefined value) plus
/// per-item recovery metrics.
struct MetricsTable {
  std::vector<std::pair<std::string, std::optional<double>>> scalars;
  std::vector<ItemMetrics> items;

  std::optional<double> get(const std::string& name) const;
  void set(const std::string& name, std::optional<double> value);
};

/// Aggregates matched replications. The theta formulas follow the study
/// design exactly: RMSE of the all-item estimate averages per-replication
/// RMSEs, while every cleansed and speeded-only RMSE pools over N x R.
/// Failed replications are skipped and counted.
MetricsTable compute_metrics(const std::vector<SimulatedDataset>& truth,
                             const std::vector<ReplicationEstimates>& estimates);

/// Estimates for one replication under the configured scenario.
ReplicationEstimates estimate_replication(const SimulatedDataset& data,
                                          const ScenarioConfig& config);

MetricsTable run_scenario(const ScenarioConfig& config);

}  // namespace cpirt

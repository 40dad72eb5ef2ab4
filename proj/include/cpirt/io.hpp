#pragma once

// File formats. CSV is used for rectangular tables (responses, scores,
// metrics, truth), a JSON key-value document for everything else. Numbers
// are written with 17 significant digits in C-locale form so they
// round-trip exactly; every JSON document carries "schema_version".

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpirt/core.hpp"
#include "cpirt/estimation.hpp"
#include "cpirt/inference.hpp"
#include "cpirt/selection.hpp"
#include "cpirt/simulation.hpp"

namespace cpirt {

inline constexpr int kSchemaVersion = 1;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row = 0, std::size_t column = 0)
      : std::runtime_error(what), row_(row), column_(column) {}
  /// 1-based line and field of the offending token; 0 when not applicable.
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_, column_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest text that uses 17 significant digits ("%.17g" in the C locale).
std::string format_number(double value);

ResponseMatrix parse_responses(std::istream& in);
ResponseMatrix read_responses(const std::filesystem::path& path);
void write_responses(const ResponseMatrix& data, const std::filesystem::path& path);

std::string fit_to_json(const FitResult& fit);
FitResult fit_from_json(const std::string& text);
void write_fit(const FitResult& fit, const std::filesystem::path& path);
FitResult read_fit(const std::filesystem::path& path);

void write_scores(const std::vector<PersonPosterior>& posteriors,
                  const ChangePointSupport& support, const std::filesystem::path& path);

std::string selection_to_json(const SelectionReport& report);
void write_selection(const SelectionReport& report, const std::filesystem::path& path);

std::string metrics_to_csv(const MetricsTable& table);
std::string metrics_to_json(const MetricsTable& table, const ScenarioConfig& config);

/// responses.csv, persons_true.csv, items_true.csv and truth.json in `dir`.
void write_simulated_dataset(const SimulatedDataset& data, const std::filesystem::path& dir);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace cpirt

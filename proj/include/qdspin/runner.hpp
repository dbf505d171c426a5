#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qdspin/config.hpp"

namespace qdspin {

std::string version();
inline constexpr const char* kRngAlgorithm = "philox4x64-10";

/// Column-major numeric table. Column names carry their unit suffix,
/// e.g. "power_nW".
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;

  void add_column(std::string column, std::vector<double> values);
  std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
  /// Header row plus one line per row, every value printed with "%.17g".
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

struct RunManifest {
  std::string config_name;
  std::string config_hash;  // FNV-1a 64 of the source text, hex
  std::uint64_t seed = 0;
  std::string rng = kRngAlgorithm;
  std::string version;
  double duration_seconds = 0.0;

  /// Without the wall-clock duration, so that it can live inside
  /// byte-reproducible outputs.
  nlohmann::json reproducible_json() const;
  nlohmann::json to_json() const;
};

struct RunOutput {
  std::string name;
  ExperimentKind kind = ExperimentKind::pumping;
  std::vector<Table> tables;
  nlohmann::json summary;
  RunManifest manifest;
};

struct RunnerOptions {
  int threads = 1;
  std::optional<std::uint64_t> seed;
};

/// Dispatch a validated scenario to its pipeline.
RunOutput run_scenario(const ScenarioConfig& cfg, const RunnerOptions& options = {});

/// Write `<dir>/<table>.csv` (or one `<dir>/tables.json` for format "json"),
/// `<dir>/summary.json` and `<dir>/manifest.json`.
void write_outputs(const RunOutput& output, const std::filesystem::path& dir,
                   const std::string& format);

/// Bundled scenario by name (e.g. "xm_saturation").
ScenarioConfig bundled_config(const std::string& name);

struct ComparisonRow {
  std::string quantity;
  std::string unit;
  double published = 0.0;
  double simulated = 0.0;
  double simulated_sigma = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct Reproduction {
  std::string figure;
  std::vector<ComparisonRow> rows;
  std::vector<RunOutput> runs;

  bool pass() const;
  std::string table() const;
  nlohmann::json to_json() const;
};

const std::vector<std::string>& known_figures();

/// Run the bundled scenarios behind a figure and compare with the quoted
/// values. Throws std::invalid_argument listing the known ids.
Reproduction reproduce(const std::string& figure, const RunnerOptions& options = {});

/// Comparison rows from finished runs, so that callers holding the outputs
/// need not rerun them.
std::vector<ComparisonRow> compare_fig2(const RunOutput& xm_saturation, const RunOutput& xp_saturation,
                                        const RunOutput& xm_pumping, const RunOutput& xp_pumping);
std::vector<ComparisonRow> compare_fig3a(const RunOutput& spectrum);
std::vector<ComparisonRow> compare_fig3b(const RunOutput& transmission);
std::vector<ComparisonRow> compare_fig4b(const RunOutput& rabi);
std::vector<ComparisonRow> compare_fig4c(const RunOutput& ramsey);

/// Numeric CSV with a header row; returns the header and the columns.
std::pair<std::vector<std::string>, std::vector<std::vector<double>>> read_csv(
    const std::filesystem::path& path);

}  // namespace qdspin

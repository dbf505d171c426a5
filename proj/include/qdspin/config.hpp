#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdspin/experiment.hpp"

namespace qdspin {

/// Every problem found while loading, each prefixed with its key path and
/// source line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class ExperimentKind { pumping, saturation, rabi, ramsey, transmission, spectrum };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& text);

/// Sweep [start, stop] with `count` points, linear or logarithmic.
struct Sweep {
  double start = 0.0;
  double stop = 0.0;
  int count = 1;
  bool log = false;

  std::vector<double> values() const;
};

struct PumpingConfig {
  double pump_power = 0.0;   // nW
  double probe_power = 0.0;  // nW
  std::vector<double> probe_powers;  // nW, saturation sweeps
  PumpingTimings timings;
  double photocreation_efficiency = 1.0;
  double bin_width = 0.5;
  double fit_start = 2.0;
  double background = 0.0;       // photons/ns
  double counts_per_unit = 0.0;  // 0: noiseless flux histograms
  bool refit_without_sigma = true;
};

struct RamanConfig {
  std::vector<double> detunings;  // Delta_R, rad/ns
  std::vector<double> powers;     // mW
  double power = 0.0;             // mW, Ramsey
  double modulation = 0.0;        // Delta_D, rad/ns; 0 means the ground splitting
  double duration = 20.0;         // Rabi pulse, ns
  double omega_max = 0.0;         // rad/ns
  double calibration_power = 1.0; // mW
  double calibration_detuning = 0.0;  // rad/ns
  std::vector<double> taus;       // ns
  RamanTimings timings;
};

struct SpectrumConfig {
  std::vector<double> grid;  // GHz
  double reference = 0.0;    // GHz
  Eigen::Vector2d populations{0.5, 0.5};
  bool thermal = true;
  double instrument_fwhm = 0.0;
  double fsr = 0.0;
  double scanner_linewidth = 0.0;
  double counts_per_unit = 0.0;
};

struct ScenarioConfig {
  std::string name;
  SystemModel system{LevelScheme(ChargeSpecies::XM, 0.0, 0.0, 0.0), {}, {}};
  double p_sat = 1.0;  // nW
  NoiseModel noise;
  std::uint64_t seed = 0;
  ExperimentKind kind = ExperimentKind::pumping;
  PumpingConfig pumping;
  RamanConfig raman;
  SpectrumConfig spectrum;
  std::string output_dir;
  std::string output_format = "csv";
  /// Source text, for hashing into the run manifest.
  std::string source;
};

/// Parse and validate a scenario. `name` labels error messages and outputs.
ScenarioConfig parse_config(const std::string& text, const std::string& name);
ScenarioConfig load_config(const std::string& path);

/// "2.5 GHz" -> 2.5 with unit "GHz".
std::pair<double, std::string> split_quantity(const std::string& text);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a64(const std::string& data);

}  // namespace qdspin

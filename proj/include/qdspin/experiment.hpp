#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "qdspin/core_model.hpp"
#include "qdspin/histogram.hpp"
#include "qdspin/lindblad.hpp"
#include "qdspin/noise.hpp"
#include "qdspin/pulse_sequencer.hpp"

namespace qdspin {

struct SystemModel {
  LevelScheme scheme;
  DecayRates rates;
  FieldEnvironment env;
};

enum class NoiseAveraging { quadrature, monte_carlo };

/// Quasi-static noise and how it is averaged. Spectral diffusion acts on the
/// optical segments, spin noise on the ground-manifold (Raman and free
/// evolution) segments.
struct NoiseModel {
  GaussianDiffusion diffusion;
  SpinNoise spin;
  NoiseAveraging optical_averaging = NoiseAveraging::quadrature;
  NoiseAveraging spin_averaging = NoiseAveraging::monte_carlo;
  int nodes = kDefaultQuadratureNodes;
  std::size_t optical_shots = 1000;
  std::size_t spin_shots = 2000;
};

struct RunOptions {
  double bin_width = 0.5;
  int threads = 1;
  EvolveOptions evolve;
  RamanCalibration raman;
};

struct ExperimentResult {
  /// Waveguide flux histogram of each resonant pulse, in sequence order.
  std::vector<Histogram> windows;
  /// Waveguide photons per shot collected in the readout window.
  double readout = 0.0;
  /// Ground populations (g1, g2) at the start of the readout pulse.
  Eigen::Vector2d ground_at_readout = Eigen::Vector2d::Zero();
  /// Fraction of shots with a resident charge; scales every observable.
  double efficiency = 1.0;
};

/// Noise-averaged observables of one pulse sequence. Deterministic given the
/// noise seeds; results do not depend on `threads`.
ExperimentResult run_experiment(const PulseSequence& seq, const SystemModel& system,
                                const NoiseModel& noise, const RunOptions& options = {});

/// Weighted realizations of a quasi-static Gaussian offset.
struct Realizations {
  std::vector<double> values;
  std::vector<double> weights;
};
Realizations optical_realizations(const NoiseModel& noise);
Realizations spin_realizations(const NoiseModel& noise);

/// Evaluate f(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f);

/// Static generator of a constant resonant drive in its anchored frame.
CMatrix<4> resonant_generator(const SystemModel& system, const ResonantPulse& pulse,
                              double optical_shift = 0.0);

/// Slowest nonzero relaxation rate of the driven system: the exact
/// counterpart of the optical pumping rate.
double lindblad_pumping_rate(const SystemModel& system, const ResonantPulse& probe,
                             double optical_shift = 0.0);

/// Steady-state population left in the ground state not addressed by
/// `probe`, averaged over spectral diffusion.
double steady_state_pumped_population(const SystemModel& system, const ResonantPulse& probe,
                                      double sigma, int nodes = kDefaultQuadratureNodes);

/// Ground-state populations (g1, g2) versus time during a Raman pulse
/// starting in g1, from the full four-level master equation with both tones.
Eigen::MatrixXd raman_populations_full(const SystemModel& system, const PulseElement& pulse,
                                       const RamanCalibration& cal,
                                       std::span<const double> times,
                                       const EvolveOptions& options = {});
/// Same from the adiabatically eliminated two-level model.
Eigen::MatrixXd raman_populations_reduced(const SystemModel& system, const PulseElement& pulse,
                                          const RamanCalibration& cal,
                                          std::span<const double> times,
                                          const EvolveOptions& options = {});

/// Photon counts: each bin is a Poisson draw with mean value * counts_per_unit
/// (background scaled alike).
Histogram add_counting_noise(const Histogram& hist, double counts_per_unit, std::uint64_t seed,
                             std::uint64_t stream);

}  // namespace qdspin

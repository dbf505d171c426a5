#pragma once

#include <complex>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qdspin/core_model.hpp"
#include "qdspin/histogram.hpp"

namespace qdspin {

using complex = std::complex<double>;

template <int N>
using CMatrix = Eigen::Matrix<complex, N, N>;
using DensityMatrix = CMatrix<4>;

/// Unit pulse shape in [0, 1]: tanh edges of width `rise` around `start` and
/// `stop` (rectangular when rise == 0), raised to `exponent`. The default is
/// always on.
struct Envelope {
  double start = -std::numeric_limits<double>::infinity();
  double stop = std::numeric_limits<double>::infinity();
  double rise = 0.0;
  int exponent = 1;

  static Envelope pulse(double start, double duration, double rise = 0.1, int exponent = 1) {
    return {start, start + duration, rise, exponent};
  }

  double operator()(double t) const;
  /// True when the shape is constant (to double precision) on [t0, t1].
  bool flat_on(double t0, double t1) const;
  /// Integral of the shape over all time.
  double area() const;
};

/// One Hamiltonian term. Off-diagonal (row != col): adds
/// shape(t) * amplitude * exp(i (phase - rotation t)) at (row, col) and the
/// conjugate at (col, row). Diagonal: adds shape(t) * real(amplitude).
struct Coupling {
  int row = 0;
  int col = 0;
  complex amplitude{0.0, 0.0};
  Envelope envelope;
  double rotation = 0.0;
  double phase = 0.0;
};

/// Time-dependent Hermitian generator in a rotating frame (rad/ns).
template <int N>
struct Hamiltonian {
  Eigen::Matrix<double, N, 1> diagonal = Eigen::Matrix<double, N, 1>::Zero();
  std::vector<Coupling> couplings;

  CMatrix<N> operator()(double t) const;
  bool static_on(double t0, double t1) const;
};

/// Laser drive. `rabi` is the full-field Rabi frequency; the coupling to
/// transition k is rabi * (d_k . polarization). The laser frequency is the
/// nominal target transition plus `detuning`.
struct DriveTerm {
  TransitionId target = TransitionId::y1;
  double rabi = 0.0;
  Envelope envelope;
  double detuning = 0.0;
  double phase = 0.0;
  complex pol_x{0.0, 0.0};
  complex pol_y{1.0, 0.0};

  /// Linearly polarized along the target dipole.
  static DriveTerm linear(TransitionId target, double rabi, Envelope envelope = {},
                          double detuning = 0.0, double phase = 0.0);
  /// Circularly polarized, (x + i y)/sqrt(2).
  static DriveTerm circular(TransitionId target, double rabi, Envelope envelope = {},
                            double detuning = 0.0, double phase = 0.0);
};

/// Dipole projection d_k . polarization of a drive on transition k.
complex dipole_overlap(TransitionId k, const DriveTerm& drive);

/// Diagonal frame energies F_i: the frame removes exp(-i F_i t) from level i.
struct RotatingFrame {
  Eigen::Vector4d energies = Eigen::Vector4d::Zero();

  /// F = bare level energies: every laser carries its detuning as a phase.
  static RotatingFrame interaction(const LevelScheme& scheme);
  /// Frame in which `laser` couples statically to its target and to the
  /// other transition of the same polarization.
  static RotatingFrame anchored(const LevelScheme& scheme, const DriveTerm& laser);
};

/// Per-realization static shifts: optical (spectral diffusion, moves both
/// excited levels) and ground (adds to the ground splitting).
struct QuasiStaticShifts {
  double optical = 0.0;
  double ground = 0.0;
};

Hamiltonian<4> build_hamiltonian(const LevelScheme& scheme, std::span<const DriveTerm> drives,
                                 const RotatingFrame& frame, QuasiStaticShifts shifts = {});

enum class ChannelKind { radiative_wg, radiative_free, spin_flip, dephasing };

/// Collapse operator sqrt(strength) |to><from|. For dephasing from == to and
/// `rate` is the added decay rate of the level's coherences.
struct CollapseChannel {
  ChannelKind kind = ChannelKind::radiative_wg;
  int from = 0;
  int to = 0;
  double rate = 0.0;
  int transition = -1;  // TransitionId for radiative kinds, -1 otherwise

  double strength() const { return kind == ChannelKind::dephasing ? 2.0 * rate : rate; }
};

std::vector<CollapseChannel> build_collapse_channels(const DecayRates& rates,
                                                     const LevelScheme& scheme,
                                                     const FieldEnvironment& env);

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double time)
      : std::runtime_error(what + " at t = " + std::to_string(time) + " ns"), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class SteadyStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvolveOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double initial_step = 1e-3;
  double min_step = 1e-14;
  long max_steps = 100'000'000;
  /// Propagate intervals with a constant generator by the exact exponential.
  bool exact_static = true;
};

template <int N>
struct Trajectory {
  std::vector<double> times;
  std::vector<CMatrix<N>> states;
  std::vector<CollapseChannel> channels;
  /// Cumulative quanta emitted per channel, [time x channel].
  Eigen::MatrixXd emitted;
  /// Instantaneous flux per channel, [time x channel].
  Eigen::MatrixXd flux_per_channel;
  /// Total waveguide photon flux.
  Eigen::VectorXd flux_wg;

  /// Cumulative waveguide photons at sample i.
  double emitted_wg(std::size_t i) const;
};

template <int N>
Trajectory<N> evolve(const CMatrix<N>& rho0, const Hamiltonian<N>& hamiltonian,
                     std::span<const CollapseChannel> channels, std::span<const double> times,
                     const EvolveOptions& options = {});

/// Liouvillian superoperator of a static generator acting on column-stacked
/// density matrices.
template <int N>
Eigen::MatrixXcd liouvillian(const CMatrix<N>& h, std::span<const CollapseChannel> channels);

/// Unique null vector of the Liouvillian, trace-normalized.
template <int N>
CMatrix<N> steady_state(const CMatrix<N>& h, std::span<const CollapseChannel> channels);

/// Time-binned waveguide flux over [start, stop) from the cumulative photon
/// record, plus a constant background.
template <int N>
Histogram fluorescence_flux(const Trajectory<N>& traj, double start, double stop,
                            double bin_width, double background = 0.0);

/// Uniform grid start, start + step, ..., covering stop.
std::vector<double> uniform_grid(double start, double stop, double step);

extern template struct Hamiltonian<2>;
extern template struct Hamiltonian<4>;

}  // namespace qdspin

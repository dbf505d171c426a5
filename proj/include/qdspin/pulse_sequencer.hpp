#pragma once

#include <string>
#include <variant>
#include <vector>

#include "qdspin/core_model.hpp"
#include "qdspin/lindblad.hpp"

namespace qdspin {

/// Resonant laser on one optical transition. `power` is P/P_sat, so the
/// Rabi frequency is gamma_0 * sqrt(power).
struct ResonantPulse {
  TransitionId target = TransitionId::y1;
  double power = 0.0;
  double detuning = 0.0;
  bool circular = false;
};

/// Instantaneous preparation of an incoherent 50/50 ground mixture; the
/// remaining 1 - efficiency of shots carry no resident charge and are dark.
struct PhotocreationPulse {
  double efficiency = 1.0;
};

/// Far-detuned bichromatic Raman drive. `detuning` is Delta_R (red of nu0),
/// `modulation` is Delta_D, the tone separation. Both rad/ns.
struct RamanPulse {
  double power = 0.0;
  double detuning = 0.0;
  double modulation = 0.0;
  double phase = 0.0;
};

/// Fluorescence collection window; must coincide with a resonant pulse.
struct ReadoutWindow {
  TransitionId monitored = TransitionId::y1;
};

using PulsePayload = std::variant<ResonantPulse, PhotocreationPulse, RamanPulse, ReadoutWindow>;

struct PulseElement {
  PulsePayload payload;
  double start = 0.0;
  double duration = 0.0;
  double rise = 0.1;

  double stop() const { return start + duration; }
  std::string kind() const;
  template <typename T>
  bool is() const { return std::holds_alternative<T>(payload); }
  template <typename T>
  const T& as() const { return std::get<T>(payload); }
};

struct PulseSequence {
  std::vector<PulseElement> elements;
  double repetition_period = 0.0;
  int shots = 1;

  void validate() const;
};

class SequenceError : public ModelError {
 public:
  using ModelError::ModelError;
};

/// Timings in ns for the pump/probe experiment.
struct PumpingTimings {
  double photocreation = 100.0;
  double pump = 150.0;
  double probe = 400.0;
  double gap = 10.0;
  double rise = 0.1;
};

/// Pump on y2 (empties g2 into g1) followed by a probe on y1, which is
/// pumped in turn. XP adds a photocreation pulse in front.
PulseSequence build_pumping_sequence(ChargeSpecies species, double pump_power, double probe_power,
                                     const PumpingTimings& timings = {},
                                     double photocreation_efficiency = 1.0);

/// Omega_MW = kappa * P_R / Delta_R.
struct RamanCalibration {
  double kappa = 1.0;

  /// kappa such that power `p_max` at detuning `delta_r` gives `omega_max`.
  static RamanCalibration from_max(double omega_max, double p_max, double delta_r);
};

double raman_effective_coupling(double power, double delta_r, const RamanCalibration& cal);

/// The two phase-locked tones of a Raman pulse at full amplitude `tone_rabi`,
/// circularly polarized. Tone A drives g1 and tone B (carrying the pulse
/// phase) drives g2 into the trion manifold.
std::vector<DriveTerm> raman_tones(const RamanPulse& pulse, const LevelScheme& scheme,
                                   double tone_rabi, const Envelope& envelope);

/// Frame in which both Raman tones are static: ground energies +-Delta_D/2,
/// trion energies at the carrier.
RotatingFrame raman_frame(const LevelScheme& scheme, const RamanPulse& pulse);

/// Ground-manifold model of a Raman pulse after adiabatic elimination of the
/// trion levels. Index 0 is g1, index 1 is g2; energies are in `frame`.
struct RamanReduction {
  Hamiltonian<2> hamiltonian;
  std::vector<CollapseChannel> channels;
  RotatingFrame frame;
  double omega_mw = 0.0;
  double tone_rabi = 0.0;
  /// Delta_R / max(tone Rabi, gamma_0).
  double validity_ratio = 0.0;
  bool valid = true;
  std::string warning;
};

/// Reduce the Raman elements of `pulses` (sharing detuning and modulation)
/// to a 2x2 generator. `ground_shift` is a static offset of the ground
/// splitting (spin noise).
RamanReduction reduce_raman_to_two_level(std::span<const PulseElement> pulses,
                                         const LevelScheme& scheme, const DecayRates& rates,
                                         const RamanCalibration& cal, double ground_shift = 0.0);
RamanReduction reduce_raman_to_two_level(const PulseElement& pulse, const LevelScheme& scheme,
                                         const DecayRates& rates, const RamanCalibration& cal,
                                         double ground_shift = 0.0);

/// Duration of a squared-tanh Raman pulse with area `angle`.
double raman_pulse_duration(double angle, double omega_mw, double rise);

/// Layout of Raman experiments: optical initialization, Raman pulse(s),
/// optical readout on the same y-transition.
struct RamanTimings {
  bool photocreation = false;
  double photocreation_efficiency = 1.0;
  double init = 150.0;
  double init_power = 5.0;
  double readout = 20.0;
  double readout_power = 1.0;
  TransitionId readout_transition = TransitionId::y2;
  double gap = 10.0;
  double rise = 0.1;
  double raman_rise = 0.5;
};

/// init -> one Raman pulse of `duration` -> readout.
PulseSequence build_rabi_sequence(const RamanPulse& raman, double duration,
                                  const RamanTimings& timings = {});

/// init -> pi/2 -> wait tau -> pi/2 (phase `second_phase`) -> readout. The
/// pi/2 duration follows from Omega_MW of `raman`.
PulseSequence build_ramsey_sequence(double tau, const RamanPulse& raman,
                                    const RamanCalibration& cal, double second_phase = 0.0,
                                    const RamanTimings& timings = {});

}  // namespace qdspin

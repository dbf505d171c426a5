#include "qdspin/pulse_sequencer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace qdspin {

std::string PulseElement::kind() const {
  switch (payload.index()) {
    case 0: return "ResonantPulse";
    case 1: return "PhotocreationPulse";
    case 2: return "RamanPulse";
    default: return "ReadoutWindow";
  }
}

void PulseSequence::validate() const {
  if (shots < 1) throw SequenceError("sequence: shots must be >= 1");
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const auto& e = elements[i];
    const std::string where = "element " + std::to_string(i) + " (" + e.kind() + ")";
    if (!(e.duration > 0.0)) throw SequenceError(where + ": duration must be > 0");
    if (!(e.rise >= 0.0)) throw SequenceError(where + ": rise must be >= 0");
    if (i > 0 && e.start < elements[i - 1].start)
      throw SequenceError(where + ": elements must be time-ordered");
    if (e.start < 0.0 || (repetition_period > 0.0 && e.stop() > repetition_period))
      throw SequenceError(where + ": outside the repetition period");
    if (e.is<ResonantPulse>()) {
      if (!(e.as<ResonantPulse>().power >= 0.0)) throw SequenceError(where + ": power must be >= 0");
    }
    if (e.is<RamanPulse>()) {
      const auto& r = e.as<RamanPulse>();
      if (!(r.power >= 0.0)) throw SequenceError(where + ": power must be >= 0");
      if (!(r.detuning > 0.0)) throw SequenceError(where + ": Raman detuning must be > 0");
    }
    if (e.is<PhotocreationPulse>()) {
      const double eta = e.as<PhotocreationPulse>().efficiency;
      if (!(eta >= 0.0 && eta <= 1.0)) throw SequenceError(where + ": efficiency must be in [0, 1]");
    }
    if (e.is<ReadoutWindow>()) {
      const auto monitored = e.as<ReadoutWindow>().monitored;
      const bool matched = std::any_of(elements.begin(), elements.end(), [&](const PulseElement& o) {
        return o.is<ResonantPulse>() && o.as<ResonantPulse>().target == monitored &&
               std::abs(o.start - e.start) < 1e-9 && std::abs(o.duration - e.duration) < 1e-9;
      });
      if (!matched) throw SequenceError(where + ": does not coincide with a resonant pulse");
    }
  }
}

PulseSequence build_pumping_sequence(ChargeSpecies species, double pump_power, double probe_power,
                                     const PumpingTimings& timings,
                                     double photocreation_efficiency) {
  if (!(pump_power >= 0.0) || !(probe_power >= 0.0))
    throw SequenceError("pumping sequence: powers must be >= 0");
  if (timings.gap < 20.0 * timings.rise)
    throw SequenceError("pumping sequence: pump and probe overlap (gap below 20 rise times)");

  PulseSequence seq;
  double t = 20.0 * timings.rise;
  if (species == ChargeSpecies::XP) {
    seq.elements.push_back({PhotocreationPulse{photocreation_efficiency}, t,
                            timings.photocreation, timings.rise});
    t += timings.photocreation + timings.gap;
  }
  seq.elements.push_back(
      {ResonantPulse{TransitionId::y2, pump_power, 0.0, false}, t, timings.pump, timings.rise});
  t += timings.pump + timings.gap;
  seq.elements.push_back(
      {ResonantPulse{TransitionId::y1, probe_power, 0.0, false}, t, timings.probe, timings.rise});
  seq.repetition_period = t + timings.probe + 20.0 * timings.rise;
  seq.validate();
  return seq;
}

RamanCalibration RamanCalibration::from_max(double omega_max, double p_max, double delta_r) {
  if (!(p_max > 0.0) || !(delta_r > 0.0) || !(omega_max > 0.0))
    throw ModelError("Raman calibration needs positive power, detuning and Rabi frequency");
  return {omega_max * delta_r / p_max};
}

double raman_effective_coupling(double power, double delta_r, const RamanCalibration& cal) {
  if (!(delta_r > 0.0)) throw ModelError("Raman detuning must be > 0 (resonant Raman is outside the model)");
  if (!(power >= 0.0)) throw ModelError("Raman power must be >= 0");
  if (!(cal.kappa > 0.0)) throw ModelError("Raman calibration kappa must be > 0");
  return cal.kappa * power / delta_r;
}

std::vector<DriveTerm> raman_tones(const RamanPulse& pulse, const LevelScheme& scheme,
                                   double tone_rabi, const Envelope& envelope) {
  const double carrier = -pulse.detuning;
  const double omega_a = carrier - 0.5 * pulse.modulation;
  const double omega_b = carrier + 0.5 * pulse.modulation;
  return {DriveTerm::circular(TransitionId::y1, tone_rabi, envelope,
                              omega_a - scheme.transition_offset(TransitionId::y1), 0.0),
          DriveTerm::circular(TransitionId::x1, tone_rabi, envelope,
                              omega_b - scheme.transition_offset(TransitionId::x1), pulse.phase)};
}

RotatingFrame raman_frame(const LevelScheme&, const RamanPulse& pulse) {
  RotatingFrame f;
  f.energies << 0.5 * pulse.modulation, -0.5 * pulse.modulation, -pulse.detuning, -pulse.detuning;
  return f;
}

double raman_pulse_duration(double angle, double omega_mw, double rise) {
  if (!(omega_mw > 0.0)) throw ModelError("Raman pulse duration: Omega_MW must be > 0");
  // Each squared-tanh edge removes rise/2 of area.
  return angle / omega_mw + rise;
}

namespace {

struct VirtualPath {
  int ground;
  int excited;
  complex rabi;    // full single-photon Rabi amplitude, with phase
  double detuning;  // E_e - E_g - omega_tone, > 0 for red detuning
  double key;       // omega_tone + F_g; equal keys give static Raman terms
};

std::vector<VirtualPath> virtual_paths(const std::vector<DriveTerm>& tones,
                                       const LevelScheme& scheme, const RotatingFrame& frame,
                                       double ground_shift) {
  std::vector<VirtualPath> paths;
  for (const auto& tone : tones) {
    const double omega = scheme.transition_offset(tone.target) + tone.detuning;
    for (const auto& t : scheme.transitions()) {
      const complex overlap = dipole_overlap(t.id, tone);
      if (std::abs(overlap) == 0.0) continue;
      const double shift = t.lower == g1 ? 0.5 * ground_shift : -0.5 * ground_shift;
      const double gap = scheme.level_energy(t.upper) - scheme.level_energy(t.lower) - shift;
      paths.push_back({t.lower, t.upper, tone.rabi * overlap * std::polar(1.0, tone.phase),
                       gap - omega, omega + frame.energies[t.lower]});
    }
  }
  return paths;
}

}  // namespace

RamanReduction reduce_raman_to_two_level(std::span<const PulseElement> pulses,
                                         const LevelScheme& scheme, const DecayRates& rates,
                                         const RamanCalibration& cal, double ground_shift) {
  if (pulses.empty()) throw SequenceError("Raman reduction: no pulses");
  const auto& first = pulses.front().as<RamanPulse>();
  RamanReduction out;
  out.frame = raman_frame(scheme, first);
  out.hamiltonian.diagonal[0] = scheme.level_energy(g1) + 0.5 * ground_shift - out.frame.energies[g1];
  out.hamiltonian.diagonal[1] = scheme.level_energy(g2) - 0.5 * ground_shift - out.frame.energies[g2];
  out.validity_ratio = std::numeric_limits<double>::infinity();

  // Spin-flip scattering, accumulated per (from, to) at full pulse amplitude.
  std::map<std::pair<int, int>, double> scatter;

  for (const auto& element : pulses) {
    if (!element.is<RamanPulse>()) throw SequenceError("Raman reduction: non-Raman element");
    const auto& pulse = element.as<RamanPulse>();
    if (pulse.detuning != first.detuning || pulse.modulation != first.modulation)
      throw SequenceError("Raman reduction: pulses must share detuning and modulation");
    const double omega_mw = raman_effective_coupling(pulse.power, pulse.detuning, cal);
    // Two Lambda paths of weight 1/2 each add to Omega_tone^2 / (2 Delta_R).
    const double tone = std::sqrt(2.0 * pulse.detuning * omega_mw);
    out.omega_mw = std::max(out.omega_mw, omega_mw);
    out.tone_rabi = std::max(out.tone_rabi, tone);
    out.validity_ratio =
        std::min(out.validity_ratio, pulse.detuning / std::max(tone, rates.gamma_0()));

    const Envelope shape{element.start, element.stop(), element.rise, 2};
    const auto tones = raman_tones(pulse, scheme, tone, Envelope{});
    const auto paths = virtual_paths(tones, scheme, out.frame, ground_shift);

    CMatrix<2> heff = CMatrix<2>::Zero();
    for (const auto& a : paths) {
      for (const auto& b : paths) {
        if (a.excited != b.excited || std::abs(a.key - b.key) > 1e-9 * std::abs(a.key)) continue;
        heff(a.ground, b.ground) -=
            std::conj(a.rabi) * b.rabi / 8.0 * (1.0 / a.detuning + 1.0 / b.detuning);
      }
      const double excited_pop = std::norm(a.rabi) / (4.0 * a.detuning * a.detuning);
      for (const auto& t : scheme.transitions()) {
        if (t.upper != a.excited || t.lower == a.ground) continue;
        scatter[{a.ground, t.lower}] += excited_pop * (rates.gamma_x() * (t.polarization == Polarization::x) +
                                                       rates.gamma_y() * (t.polarization == Polarization::y));
      }
    }
    out.hamiltonian.couplings.push_back({0, 0, heff(0, 0), shape, 0.0, 0.0});
    out.hamiltonian.couplings.push_back({1, 1, heff(1, 1), shape, 0.0, 0.0});
    // Stored as the (row=g1, col=g2) element.
    out.hamiltonian.couplings.push_back({0, 1, heff(0, 1), shape, 0.0, 0.0});
  }
  const double npulses = static_cast<double>(pulses.size());
  for (const auto& [key, rate] : scatter)
    out.channels.push_back({ChannelKind::spin_flip, key.first, key.second, rate / npulses, -1});

  out.valid = out.validity_ratio >= 10.0;
  if (!out.valid)
    out.warning = "adiabatic elimination marginal: Delta_R / max(Omega, gamma_0) = " +
                  std::to_string(out.validity_ratio) + " < 10";
  return out;
}

RamanReduction reduce_raman_to_two_level(const PulseElement& pulse, const LevelScheme& scheme,
                                         const DecayRates& rates, const RamanCalibration& cal,
                                         double ground_shift) {
  return reduce_raman_to_two_level(std::span<const PulseElement>(&pulse, 1), scheme, rates, cal,
                                   ground_shift);
}

namespace {

double append_init(PulseSequence& seq, const RamanTimings& t) {
  double now = 20.0 * t.rise;
  if (t.photocreation) {
    seq.elements.push_back({PhotocreationPulse{t.photocreation_efficiency}, now, 100.0, t.rise});
    now += 100.0 + t.gap;
  }
  // Pumping the readout transition leaves the spin dark for readout.
  seq.elements.push_back(
      {ResonantPulse{t.readout_transition, t.init_power, 0.0, false}, now, t.init, t.rise});
  return now + t.init + t.gap;
}

void append_readout(PulseSequence& seq, double now, const RamanTimings& t) {
  seq.elements.push_back(
      {ResonantPulse{t.readout_transition, t.readout_power, 0.0, false}, now, t.readout, t.rise});
  seq.elements.push_back({ReadoutWindow{t.readout_transition}, now, t.readout, t.rise});
  seq.repetition_period = now + t.readout + 20.0 * t.rise;
  seq.validate();
}

}  // namespace

PulseSequence build_rabi_sequence(const RamanPulse& raman, double duration,
                                  const RamanTimings& timings) {
  if (!(duration > 0.0)) throw SequenceError("Rabi sequence: duration must be > 0");
  PulseSequence seq;
  double now = append_init(seq, timings);
  seq.elements.push_back({raman, now, duration, timings.raman_rise});
  now += duration + timings.gap;
  append_readout(seq, now, timings);
  return seq;
}

PulseSequence build_ramsey_sequence(double tau, const RamanPulse& raman,
                                    const RamanCalibration& cal, double second_phase,
                                    const RamanTimings& timings) {
  if (!(tau >= 0.0)) throw SequenceError("Ramsey sequence: tau must be >= 0");
  const double omega = raman_effective_coupling(raman.power, raman.detuning, cal);
  const double half_pi = raman_pulse_duration(0.5 * std::numbers::pi, omega, timings.raman_rise);
  if (half_pi <= 2.0 * timings.raman_rise)
    throw SequenceError("Ramsey sequence: pi/2 pulse shorter than its edges");
  PulseSequence seq;
  double now = append_init(seq, timings);
  seq.elements.push_back({raman, now, half_pi, timings.raman_rise});
  now += half_pi + tau;
  RamanPulse second = raman;
  second.phase = raman.phase + second_phase;
  seq.elements.push_back({second, now, half_pi, timings.raman_rise});
  now += half_pi + timings.gap;
  append_readout(seq, now, timings);
  return seq;
}

}  // namespace qdspin

#include "qdspin/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qdspin/units.hpp"

namespace qdspin {

std::string to_string(ChargeSpecies s) { return s == ChargeSpecies::XM ? "XM" : "XP"; }

std::string to_string(Polarization p) { return p == Polarization::x ? "x" : "y"; }

ChargeSpecies parse_species(const std::string& text) {
  if (text == "XM") return ChargeSpecies::XM;
  if (text == "XP") return ChargeSpecies::XP;
  throw ModelError("unknown charge species '" + text + "' (expected XM or XP)");
}

std::string to_string(TransitionId id) {
  switch (id) {
    case TransitionId::y1: return "y1";
    case TransitionId::y2: return "y2";
    case TransitionId::x1: return "x1";
    case TransitionId::x2: return "x2";
  }
  return "?";
}

void FieldEnvironment::validate() const {
  if (!(temperature_kelvin > 0.0)) throw ModelError("temperature must be > 0 K");
  if (!(field_tesla >= 0.0)) throw ModelError("magnetic field magnitude must be >= 0 T");
}

double FieldEnvironment::ground_splitting() const {
  return std::abs(g_ground) * units::ghz_to_angular(units::bohr_ghz_per_tesla) * field_tesla;
}

LevelScheme::LevelScheme(ChargeSpecies species, double nu0_thz, double delta_g, double delta_e)
    : species_(species), nu0_thz_(nu0_thz), delta_g_(delta_g), delta_e_(delta_e) {
  if (!(delta_g >= 0.0) || !(delta_e >= 0.0))
    throw ModelError("Zeeman splittings must be >= 0");
  auto make = [&](TransitionId id, int lower, int upper, Polarization p) {
    Transition t{id, lower, upper, p, 0.0};
    t.frequency_thz = nu0_thz_ + units::ghz_to_thz(units::angular_to_ghz(
                                     level_energy(upper) - level_energy(lower)));
    return t;
  };
  transitions_ = {make(TransitionId::y1, g1, e1, Polarization::y),
                  make(TransitionId::y2, g2, e2, Polarization::y),
                  make(TransitionId::x1, g2, e1, Polarization::x),
                  make(TransitionId::x2, g1, e2, Polarization::x)};
}

LevelScheme LevelScheme::from_field(ChargeSpecies species, double nu0_thz,
                                    const FieldEnvironment& env, double g_excited) {
  env.validate();
  const double delta_e =
      std::abs(g_excited) * units::ghz_to_angular(units::bohr_ghz_per_tesla) * env.field_tesla;
  return LevelScheme(species, nu0_thz, env.ground_splitting(), delta_e);
}

double LevelScheme::level_energy(int level) const {
  switch (level) {
    case g1: return 0.5 * delta_g_;
    case g2: return -0.5 * delta_g_;
    case e1: return 0.5 * delta_e_;
    case e2: return -0.5 * delta_e_;
  }
  throw ModelError("level index out of range: " + std::to_string(level));
}

double LevelScheme::transition_offset(TransitionId id) const {
  const auto& t = transition(id);
  return level_energy(t.upper) - level_energy(t.lower);
}

void DecayRates::validate() const {
  const std::pair<const char*, double> fields[] = {
      {"gx_wg", gx_wg}, {"gx_rad", gx_rad},     {"gy_wg", gy_wg},
      {"gy_rad", gy_rad}, {"dephasing", dephasing}, {"cotunneling", cotunneling}};
  for (const auto& [name, v] : fields)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ModelError(std::string("rate ") + name + " must be finite and >= 0");
}

DecayRates DecayRates::from_measured(double gamma_0, double gamma_x, double asym) {
  const double gamma_y = gamma_0 - gamma_x;
  if (!(gamma_x > 0.0) || !(gamma_y >= gamma_x))
    throw ModelError("need gamma_0 >= 2 gamma_x > 0");
  if (!(asym > 1.0)) throw ModelError("asymmetry must exceed 1");
  // gy_wg - gx_wg = gamma_y - gamma_x with gy_wg = A gx_wg.
  DecayRates r;
  r.gx_wg = (gamma_y - gamma_x) / (asym - 1.0);
  r.gy_wg = asym * r.gx_wg;
  r.gx_rad = gamma_x - r.gx_wg;
  r.gy_rad = r.gx_rad;
  if (r.gx_rad < 0.0)
    throw ModelError("asymmetry too small for the given cyclicity (negative radiative rate)");
  return r;
}

double cyclicity(const DecayRates& rates) {
  rates.validate();
  if (rates.gamma_x() == 0.0) return std::numeric_limits<double>::infinity();
  return rates.gamma_y() / rates.gamma_x();
}

double cyclicity_from_total(double gamma_0, double gamma_x) {
  if (gamma_x == 0.0) return std::numeric_limits<double>::infinity();
  return (gamma_0 - gamma_x) / gamma_x;
}

double asymmetry(const DecayRates& rates) {
  rates.validate();
  if (rates.gx_wg == 0.0) return std::numeric_limits<double>::infinity();
  return rates.gy_wg / rates.gx_wg;
}

std::pair<double, double> beta_factors(const DecayRates& rates) {
  rates.validate();
  if (!(rates.gamma_x() > 0.0) || !(rates.gamma_y() > 0.0))
    throw ModelError("beta factors need gamma_x > 0 and gamma_y > 0");
  return {rates.gx_wg / rates.gamma_x(), rates.gy_wg / rates.gamma_y()};
}

double waveguide_branching(const DecayRates& rates, Polarization p) {
  const double g0 = rates.gamma_0();
  if (!(g0 > 0.0)) throw ModelError("waveguide branching needs gamma_0 > 0");
  return rates.waveguide_rate(p) / g0;
}

std::array<Transition, 4> transition_frequencies(const LevelScheme& scheme) {
  auto out = scheme.transitions();
  std::stable_sort(out.begin(), out.end(), [](const Transition& a, const Transition& b) {
    return a.frequency_thz < b.frequency_thz;
  });
  return out;
}

ThermalPopulations thermal_populations(const FieldEnvironment& env, double delta_g) {
  env.validate();
  const double x =
      units::angular_to_ueV(delta_g) / (units::k_boltzmann_ueV * env.temperature_kelvin);
  const double lower = 1.0 / (1.0 + std::exp(-x));
  return {lower, 1.0 - lower};
}

double pumping_time(const DecayRates& rates) {
  if (!(rates.gamma_x() > 0.0)) throw ModelError("pumping time needs gamma_x > 0");
  return 2.0 / rates.gamma_x();
}

}  // namespace qdspin

#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <utility>

namespace qdspin {

/// Raised for physically invalid model inputs (negative rates, bad indices...).
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ChargeSpecies { XM, XP };
enum class Polarization { x, y };

std::string to_string(ChargeSpecies s);
std::string to_string(Polarization p);
ChargeSpecies parse_species(const std::string& text);

/// Level indices. g1 is the higher-energy ground state, e1 the higher-energy
/// trion state.
enum Level : int { g1 = 0, g2 = 1, e1 = 2, e2 = 3 };
inline constexpr int kLevels = 4;

/// The four optical dipoles. y-transitions are vertical (spin preserving),
/// x-transitions diagonal. x1 and y1 share the upper level e1, x2 and y2
/// share e2.
enum class TransitionId : int { y1 = 0, y2 = 1, x1 = 2, x2 = 3 };
inline constexpr std::array<TransitionId, 4> kAllTransitions = {
    TransitionId::y1, TransitionId::y2, TransitionId::x1, TransitionId::x2};

std::string to_string(TransitionId id);

struct Transition {
  TransitionId id;
  int lower;
  int upper;
  Polarization polarization;
  double frequency_thz;
};

struct FieldEnvironment {
  double field_tesla = 0.0;
  double angle_rad = 0.0;
  double temperature_kelvin = 4.0;
  double g_ground = 0.0;

  void validate() const;
  /// Ground Zeeman splitting g * muB * B / hbar in rad/ns. The in-plane angle
  /// only rotates the Zeeman axes and leaves the splitting unchanged.
  double ground_splitting() const;
};

class LevelScheme {
 public:
  LevelScheme(ChargeSpecies species, double nu0_thz, double delta_g, double delta_e);

  /// Zeeman splittings from a field environment and an excited-state g-factor.
  static LevelScheme from_field(ChargeSpecies species, double nu0_thz,
                                const FieldEnvironment& env, double g_excited);

  ChargeSpecies species() const { return species_; }
  double nu0_thz() const { return nu0_thz_; }
  double delta_g() const { return delta_g_; }
  double delta_e() const { return delta_e_; }

  /// Level energy in rad/ns. Ground levels are measured from the ground-pair
  /// midpoint, excited levels from the optical reference nu0, so that
  /// E(upper) - E(lower) is a transition's offset from nu0.
  double level_energy(int level) const;
  /// Transition angular-frequency offset from nu0 in rad/ns.
  double transition_offset(TransitionId id) const;

  const Transition& transition(TransitionId id) const {
    return transitions_[static_cast<int>(id)];
  }
  const std::array<Transition, 4>& transitions() const { return transitions_; }

 private:
  ChargeSpecies species_;
  double nu0_thz_;
  double delta_g_;
  double delta_e_;
  std::array<Transition, 4> transitions_;
};

/// Radiative rates split into waveguide and radiative (free-space) parts,
/// plus optical pure dephasing and ground-state co-tunnelling spin flips.
/// All in 1/ns.
struct DecayRates {
  double gx_wg = 0.0;
  double gx_rad = 0.0;
  double gy_wg = 0.0;
  double gy_rad = 0.0;
  double dephasing = 0.0;
  double cotunneling = 0.0;

  double gamma_x() const { return gx_wg + gx_rad; }
  double gamma_y() const { return gy_wg + gy_rad; }
  double gamma_0() const { return gamma_x() + gamma_y(); }

  double waveguide_rate(Polarization p) const { return p == Polarization::x ? gx_wg : gy_wg; }
  double free_rate(Polarization p) const { return p == Polarization::x ? gx_rad : gy_rad; }

  void validate() const;

  /// Rates from the measured quantities: total decay gamma_0, diagonal rate
  /// gamma_x and waveguide asymmetry A = gy_wg/gx_wg, with equal radiative
  /// parts for both polarizations.
  static DecayRates from_measured(double gamma_0, double gamma_x, double asymmetry);
};

/// gamma_y / gamma_x. Returns +infinity when gamma_x == 0.
double cyclicity(const DecayRates& rates);
/// (gamma_0 - gamma_x)/gamma_x, the form used when gamma_0 is measured.
double cyclicity_from_total(double gamma_0, double gamma_x);
/// gy_wg / gx_wg. Returns +infinity when gx_wg == 0.
double asymmetry(const DecayRates& rates);
/// (gx_wg/gamma_x, gy_wg/gamma_y).
std::pair<double, double> beta_factors(const DecayRates& rates);
/// Fraction of the excited-state decay that leaves through the waveguide via
/// one transition, gamma_{k,wg}/gamma_0. This is the coupling that enters the
/// coherent waveguide response of that dipole.
double waveguide_branching(const DecayRates& rates, Polarization p);

/// The four transitions sorted by frequency.
std::array<Transition, 4> transition_frequencies(const LevelScheme& scheme);

/// Boltzmann populations of the two ground states.
struct ThermalPopulations {
  double lower;  // g2
  double upper;  // g1
};
ThermalPopulations thermal_populations(const FieldEnvironment& env, double delta_g);

/// 1/e spin pumping time at infinite probe power, 2/gamma_x.
double pumping_time(const DecayRates& rates);

}  // namespace qdspin

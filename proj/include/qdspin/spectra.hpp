#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qdspin/core_model.hpp"

namespace qdspin {

/// Weak-probe waveguide transmission. Detunings in GHz from the reference.
struct TransmissionSpectrum {
  Eigen::VectorXd detunings;
  /// Population-weighted field amplitude sum_s p_s t_s, without diffusion.
  Eigen::VectorXcd amplitude;
  /// Power transmission, diffusion-averaged.
  Eigen::VectorXd power;
  std::vector<std::string> warnings;
};

struct TransmissionOptions {
  double dephasing = 0.0;        // rad/ns
  double sigma = 0.0;            // spectral diffusion, rad/ns
  double reference_ghz = 0.0;    // grid origin, GHz from nu0
  int nodes = 64;
};

/// t_s(d) = 1 - sum_k beta_k (G/2) / (G/2 + gamma_dp + i(d - d_k)) over the
/// transitions out of ground state s, beta_k = gamma_{k,wg}/gamma_0, G = gamma_0.
/// `ground` holds (p_g1, p_g2).
TransmissionSpectrum weak_probe_transmission(const LevelScheme& scheme, const DecayRates& rates,
                                             const Eigen::Vector2d& ground,
                                             const Eigen::VectorXd& grid_ghz,
                                             const TransmissionOptions& options = {});

struct Dip {
  double center = 0.0;  // GHz
  double depth = 0.0;
  double fwhm = 0.0;    // GHz
};

/// Local minima of the power transmission with depth 1 - T and the full
/// width at half depth of 1 - T.
std::vector<Dip> dip_metrics(const TransmissionSpectrum& spectrum);

struct SpectralPeak {
  std::string label;
  double center = 0.0;  // GHz
  double fwhm = 0.0;    // GHz
  double area = 0.0;
};

struct EmissionSpectrum {
  Eigen::VectorXd frequencies;  // GHz from nu0 (or from the scanner reference once folded)
  Eigen::VectorXd intensity;
  std::vector<SpectralPeak> peaks;
  /// Free spectral range when folded, 0 otherwise.
  double period = 0.0;
};

struct EmissionOptions {
  double instrument_fwhm = 0.0;  // GHz, Lorentzian
  double sigma = 0.0;            // Gaussian broadening, rad/ns
  int nodes = 64;
};

/// Four Lorentzians at the transition frequencies with FWHM gamma_0/2pi and
/// areas p_e * gamma_{k,wg}. `excited` holds (p_e1, p_e2).
EmissionSpectrum emission_spectrum(const LevelScheme& scheme, const DecayRates& rates,
                                   const Eigen::Vector2d& excited, const Eigen::VectorXd& grid_ghz,
                                   const EmissionOptions& options = {});

struct FabryPerotScanner {
  double fsr = 0.0;        // GHz
  double linewidth = 0.0;  // GHz
  double reference = 0.0;  // GHz from nu0

  void validate() const;
};

/// Wrap the spectrum into one free spectral range: peak centers modulo FSR,
/// samples redistributed onto a periodic grid with linear weights. Total
/// intensity is preserved.
EmissionSpectrum fold_through_cavity(const EmissionSpectrum& spectrum,
                                     const FabryPerotScanner& scanner);

struct PeakFit {
  SpectralPeak peak;
  double center_sigma = 0.0;
  double fwhm_sigma = 0.0;
  double area_sigma = 0.0;
};

struct PeakFitResult {
  std::vector<PeakFit> peaks;
  /// Covariance of the areas, in peak order.
  Eigen::MatrixXd area_covariance;
  double chi2_reduced = 0.0;
  bool converged = false;
  std::vector<std::string> warnings;

  /// area_i / area_j with propagated 1 sigma.
  std::pair<double, double> area_ratio(std::size_t i, std::size_t j) const;
};

struct PeakFitOptions {
  /// Poisson weights sqrt(max(I, 1)); uniform otherwise.
  bool poisson = false;
};

/// Multi-Lorentzian least-squares fit seeded from the spectrum's peak records
/// (or from its local maxima when there are none). Folded spectra are fitted
/// with periodic Lorentzians.
PeakFitResult fit_spectrum_peaks(const EmissionSpectrum& spectrum, const PeakFitOptions& options = {});

/// Lorentzian line shape of unit area; periodic with `period` when > 0.
double lorentzian(double x, double center, double fwhm, double period = 0.0);

}  // namespace qdspin

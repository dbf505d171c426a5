#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace qdspin {

/// Gauss-Hermite rule for the standard normal density: sum_i w_i f(x_i)
/// approximates E[f(X)], X ~ N(0, 1). Weights sum to one.
struct NormalQuadrature {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Golub-Welsch construction, cached per node count. Thread-safe.
const NormalQuadrature& normal_quadrature(int nodes);

inline constexpr int kDefaultQuadratureNodes = 64;

/// E[f(D)] for D ~ N(0, sigma^2) by Gauss-Hermite quadrature. sigma == 0
/// returns f(0) exactly.
template <typename F>
double gauss_average(F&& f, double sigma, int nodes = kDefaultQuadratureNodes) {
  if (sigma < 0.0) throw std::invalid_argument("gauss_average: sigma must be >= 0");
  if (nodes < 1) throw std::invalid_argument("gauss_average: need at least one node");
  if (sigma == 0.0) return f(0.0);
  const auto& rule = normal_quadrature(nodes);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * f(sigma * rule.nodes[i]);
  return acc;
}

/// Quasi-static optical detuning noise (spectral diffusion), sigma in rad/ns.
struct GaussianDiffusion {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Quasi-static ground-splitting noise (Overhauser field), rad/ns.
struct SpinNoise {
  double sigma_spin = 0.0;
  std::uint64_t seed = 0;
};

/// i.i.d. N(0, sigma^2) detunings from stream `stream` of the model seed.
std::vector<double> sample_detunings(const GaussianDiffusion& model, std::size_t n,
                                     std::uint64_t stream = 0);

/// Spin-noise draw for shot `shot`.
double sample_spin_offset(const SpinNoise& noise, std::uint64_t shot);

/// exp(-(tau/T2*)^2) with T2* = sqrt(2)/sigma_spin; identically 1 for
/// sigma_spin == 0.
double ramsey_dephasing_envelope(double sigma_spin, double tau);

double t2_star_from_sigma(double sigma_spin);
double sigma_from_t2_star(double t2_star);

/// Monte Carlo estimate of E[cos(D tau)] over `samples` draws of the spin noise.
double monte_carlo_dephasing(const SpinNoise& noise, double tau, std::size_t samples);

}  // namespace qdspin

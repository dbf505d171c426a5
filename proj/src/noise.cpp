#include "qdspin/noise.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "qdspin/rng.hpp"

namespace qdspin {

namespace {

// Probabilists' Hermite polynomials: Jacobi matrix with zero diagonal and
// off-diagonal sqrt(k). Nodes are its eigenvalues, weights the squared first
// eigenvector components (the zeroth moment of N(0,1) is one).
NormalQuadrature golub_welsch(int n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  NormalQuadrature rule;
  rule.nodes = eig.eigenvalues();
  rule.weights = eig.eigenvectors().row(0).array().square().transpose();
  // Symmetrize: the exact rule is even, which makes odd moments vanish exactly.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  rule.weights /= rule.weights.sum();
  return rule;
}

}  // namespace

const NormalQuadrature& normal_quadrature(int nodes) {
  if (nodes < 1) throw std::invalid_argument("normal_quadrature: need at least one node");
  static std::mutex mutex;
  static std::map<int, NormalQuadrature> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(nodes);
  if (it == cache.end()) it = cache.emplace(nodes, golub_welsch(nodes)).first;
  return it->second;
}

std::vector<double> sample_detunings(const GaussianDiffusion& model, std::size_t n,
                                     std::uint64_t stream) {
  if (model.sigma < 0.0) throw std::invalid_argument("sample_detunings: sigma must be >= 0");
  std::vector<double> out(n, 0.0);
  if (model.sigma == 0.0) return out;
  const RandomStream rng(model.seed, stream);
  for (std::size_t i = 0; i < n; ++i) out[i] = model.sigma * rng.normal(i);
  return out;
}

double sample_spin_offset(const SpinNoise& noise, std::uint64_t shot) {
  if (noise.sigma_spin == 0.0) return 0.0;
  // Stream 1 keeps spin draws independent of detuning draws sharing a seed.
  return noise.sigma_spin * RandomStream(noise.seed, 1).normal(shot);
}

double ramsey_dephasing_envelope(double sigma_spin, double tau) {
  if (tau < 0.0) throw std::invalid_argument("ramsey envelope: tau must be >= 0");
  if (sigma_spin < 0.0) throw std::invalid_argument("ramsey envelope: sigma_spin must be >= 0");
  return std::exp(-0.5 * sigma_spin * sigma_spin * tau * tau);
}

double t2_star_from_sigma(double sigma_spin) {
  if (sigma_spin == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(2.0) / sigma_spin;
}

double sigma_from_t2_star(double t2_star) { return std::sqrt(2.0) / t2_star; }

double monte_carlo_dephasing(const SpinNoise& noise, double tau, std::size_t samples) {
  double acc = 0.0;
  for (std::size_t i = 0; i < samples; ++i) acc += std::cos(sample_spin_offset(noise, i) * tau);
  return acc / static_cast<double>(samples);
}

}  // namespace qdspin

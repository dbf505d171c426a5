#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qdspin/histogram.hpp"
#include "qdspin/noise.hpp"

namespace qdspin {

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd values;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  double chi2_reduced = 0.0;
  bool converged = false;
  int iterations = 0;
  bool identifiable = true;
  /// Derived quantities: name -> (value, 1 sigma).
  std::map<std::string, std::pair<double, double>> derived;
  std::vector<std::string> flags;
  std::string message;

  std::size_t index(const std::string& name) const;
  double value(const std::string& name) const { return values[static_cast<Eigen::Index>(index(name))]; }
  double error(const std::string& name) const { return sigma[static_cast<Eigen::Index>(index(name))]; }
  bool has_flag(const std::string& flag) const;
};

/// Parenthesis notation with one significant digit of uncertainty:
/// (0.2431, 0.0048) -> "0.243(5)".
std::string format_uncertainty(double value, double sigma);

class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, FitResult best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const FitResult& best() const { return best_; }

 private:
  FitResult best_;
};

/// Normal equations singular at the solution; `combination` names the
/// flat direction, e.g. "0.707*a - 0.707*b".
class DegenerateFitError : public FitError {
 public:
  DegenerateFitError(const std::string& combination, FitResult best)
      : FitError("singular normal equations: degenerate parameter combination " + combination,
                 std::move(best)),
        combination_(combination) {}
  const std::string& combination() const { return combination_; }

 private:
  std::string combination_;
};

struct Bounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct LeastSquaresOptions {
  int max_iterations = 1000;
  double ftol = 1e-15;
  double xtol = 1e-13;
  double gtol = 1e-13;
  /// Covariance (J^T J)^-1 scaled by the reduced chi^2.
  bool scale_covariance = true;
};

/// Weighted residuals r(p) = (y - f(p)) / sigma.
using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Levenberg-Marquardt with Marquardt scaling, central-difference Jacobian
/// and projection onto box bounds. Deterministic given `init`.
FitResult least_squares(const ResidualFunction& residuals, const Eigen::VectorXd& init,
                        const std::vector<std::string>& names, const Bounds& bounds = {},
                        const LeastSquaresOptions& options = {});

enum class Weighting { uniform, poisson };

struct ExponentialFitOptions {
  /// Fit bins with center >= window start + fit_start.
  double fit_start = 0.0;
  Weighting weighting = Weighting::poisson;
};

/// I(t) = I0 + I1 exp(-gamma_osp t), t measured from the histogram window
/// start. Parameters: I0, I1, gamma_osp.
FitResult fit_exponential(const Histogram& hist, const ExponentialFitOptions& options = {});

/// gamma_x * E[W^2 / (2 W^2 + gamma_0^2 + 4 D^2)], W = gamma_0 sqrt(P/P_sat),
/// D ~ N(0, sigma^2).
double eval_pumping_rate(double power_ratio, double gamma_x, double gamma_0, double sigma,
                         int nodes = kDefaultQuadratureNodes);

struct SaturationFitOptions {
  /// Per-point 1 sigma; empty means uniform weights.
  Eigen::VectorXd point_sigma;
  int nodes = kDefaultQuadratureNodes;
  int starts = 8;
};

/// Fit (P, gamma_osp) points with gamma_0 and sigma held fixed. Parameters:
/// gamma_x, P_sat (units of P). Derived: cyclicity (gamma_0 - gamma_x)/gamma_x.
FitResult fit_saturation(const Eigen::VectorXd& powers, const Eigen::VectorXd& rates,
                         double gamma_0, double sigma, const SaturationFitOptions& options = {});

/// I(tau) = I0 exp(-(tau/T2*)^2). Parameters: I0, T2_star. A decay
/// indistinguishable from zero gives T2_star = inf and flag "infinite_T2_star".
FitResult fit_ramsey(const Eigen::VectorXd& taus, const Eigen::VectorXd& signal,
                     const Eigen::VectorXd& point_sigma = {});

/// 1 - I0ss / (I0ss + I1) with I0ss = I0 - background from an exponential fit.
double fidelity_lower_bound(const Histogram& hist, const FitResult& fit);

}  // namespace qdspin

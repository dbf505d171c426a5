#include "qdspin/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace qdspin {

std::size_t FitResult::index(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("fit result has no parameter '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

bool FitResult::has_flag(const std::string& flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

std::string format_uncertainty(double value, double sigma) {
  if (!std::isfinite(value)) return fmt::format("{}", value);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) return fmt::format("{:.6g}", value);
  int exponent = static_cast<int>(std::floor(std::log10(sigma)));
  long digit = std::lround(sigma / std::pow(10.0, exponent));
  if (digit == 10) {
    digit = 1;
    ++exponent;
  }
  if (exponent >= 0) {
    const double scale = std::pow(10.0, exponent);
    return fmt::format("{:.0f}({})", std::round(value / scale) * scale,
                       static_cast<long>(digit * static_cast<long>(scale)));
  }
  return fmt::format("{:.{}f}({})", value, -exponent, digit);
}

// ------------------------------------------------------------- optimizer

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd project(Eigen::VectorXd p, const Bounds& b) {
  if (b.lower.size() == p.size()) p = p.cwiseMax(b.lower);
  if (b.upper.size() == p.size()) p = p.cwiseMin(b.upper);
  return p;
}

double lower_of(const Bounds& b, Eigen::Index j) { return b.lower.size() ? b.lower[j] : -kInf; }
double upper_of(const Bounds& b, Eigen::Index j) { return b.upper.size() ? b.upper[j] : kInf; }

Eigen::MatrixXd jacobian(const ResidualFunction& f, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& r0, const Eigen::VectorXd& typical,
                         const Bounds& bounds) {
  static const double step = std::cbrt(std::numeric_limits<double>::epsilon());
  Eigen::MatrixXd j(r0.size(), p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double h = step * std::max(std::abs(p[k]), typical[k]);
    Eigen::VectorXd hi = p, lo = p;
    hi[k] += h;
    lo[k] -= h;
    if (lo[k] < lower_of(bounds, k)) {
      j.col(k) = (f(hi) - r0) / h;
    } else if (hi[k] > upper_of(bounds, k)) {
      j.col(k) = (r0 - f(lo)) / h;
    } else {
      j.col(k) = (f(hi) - f(lo)) / (2.0 * h);
    }
  }
  return j;
}

std::string describe_combination(const Eigen::VectorXd& v, const std::vector<std::string>& names) {
  std::string out;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (std::abs(v[k]) < 1e-3) continue;
    const std::string name = k < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(k)]
                                                                        : "p" + std::to_string(k);
    if (out.empty())
      out += fmt::format("{:.3g}*{}", v[k], name);
    else
      out += fmt::format(" {} {:.3g}*{}", v[k] < 0 ? "-" : "+", std::abs(v[k]), name);
  }
  return out;
}

}  // namespace

FitResult least_squares(const ResidualFunction& residuals, const Eigen::VectorXd& init,
                        const std::vector<std::string>& names, const Bounds& bounds,
                        const LeastSquaresOptions& options) {
  const Eigen::Index n = init.size();
  if (static_cast<Eigen::Index>(names.size()) != n)
    throw std::invalid_argument("least_squares: one name per parameter required");

  FitResult result;
  result.names = names;
  Eigen::VectorXd p = project(init, bounds);
  Eigen::VectorXd typical(n);
  for (Eigen::Index k = 0; k < n; ++k) typical[k] = init[k] != 0.0 ? std::abs(init[k]) : 1.0;

  Eigen::VectorXd r = residuals(p);
  const Eigen::Index m = r.size();
  if (m < n) throw std::invalid_argument("least_squares: fewer residuals than parameters");
  if (!r.allFinite()) throw FitError("least_squares: non-finite residuals at the initial point", result);
  double cost = r.squaredNorm();
  Eigen::MatrixXd j = jacobian(residuals, p, r, typical, bounds);
  double lambda = 1e-3;
  int iterations = 0;
  bool converged = false;

  auto record = [&] {
    result.values = p;
    result.chi2 = cost;
    result.chi2_reduced = m > n ? cost / static_cast<double>(m - n) : 0.0;
    result.iterations = iterations;
  };

  while (true) {
    const Eigen::MatrixXd a = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    // Cosine between the residual and each Jacobian column; free
    // coordinates held at an active bound do not count.
    double worst = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const bool pinned = (p[k] <= lower_of(bounds, k) && g[k] > 0.0) ||
                          (p[k] >= upper_of(bounds, k) && g[k] < 0.0);
      if (pinned || a(k, k) == 0.0) continue;
      worst = std::max(worst, std::abs(g[k]) / std::sqrt(a(k, k) * cost));
    }
    if (cost == 0.0 || worst <= options.gtol) {
      converged = true;
      break;
    }
    if (iterations >= options.max_iterations) break;

    Eigen::VectorXd d = a.diagonal().cwiseMax(1e-300);
    bool accepted = false;
    while (lambda < 1e20) {
      Eigen::MatrixXd damped = a;
      damped.diagonal() += lambda * d;
      const Eigen::VectorXd step = damped.ldlt().solve(-g);
      const Eigen::VectorXd trial = project(p + step, bounds);
      const Eigen::VectorXd rt = residuals(trial);
      const double ct = rt.allFinite() ? rt.squaredNorm() : kInf;
      if (ct < cost) {
        const Eigen::VectorXd moved = trial - p;
        const double reduction = cost - ct;
        p = trial;
        r = rt;
        cost = ct;
        ++iterations;
        lambda = std::max(lambda * 0.1, 1e-15);
        accepted = true;
        double rel = 0.0;
        for (Eigen::Index k = 0; k < n; ++k)
          rel = std::max(rel, std::abs(moved[k]) / (std::abs(p[k]) + options.xtol * typical[k]));
        if (reduction <= options.ftol * cost || rel <= options.xtol) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No descent direction left at machine precision.
      converged = true;
    }
    j = jacobian(residuals, p, r, typical, bounds);
    if (converged) break;
  }

  record();
  result.converged = converged;
  if (!converged)
    throw FitError(fmt::format("least_squares: no convergence after {} iterations (chi2 = {:.6g})",
                               iterations, cost),
                   result);

  const Eigen::MatrixXd a = j.transpose() * j;
  Eigen::VectorXd scale(n);
  for (Eigen::Index k = 0; k < n; ++k) scale[k] = a(k, k) > 0.0 ? 1.0 / std::sqrt(a(k, k)) : 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (scale[k] == 0.0) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
      v[k] = 1.0;
      throw DegenerateFitError(describe_combination(v, names), result);
    }
  }
  const Eigen::MatrixXd corr = scale.asDiagonal() * a * scale.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
  if (eig.eigenvalues()[0] <= 1e-13 * eig.eigenvalues()[n - 1]) {
    Eigen::VectorXd v = scale.asDiagonal() * eig.eigenvectors().col(0);
    v /= v.norm();
    throw DegenerateFitError(describe_combination(v, names), result);
  }
  const Eigen::MatrixXd inv_corr =
      eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  Eigen::MatrixXd cov = scale.asDiagonal() * inv_corr * scale.asDiagonal();
  if (options.scale_covariance) cov *= result.chi2_reduced;
  result.covariance = 0.5 * (cov + cov.transpose());
  result.sigma = result.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return result;
}

// ----------------------------------------------------------- exponential

FitResult fit_exponential(const Histogram& hist, const ExponentialFitOptions& options) {
  hist.validate();
  const double width = hist.bin_width();
  const double origin = hist.size() > 0 ? hist.bin_centers[0] - 0.5 * width : 0.0;
  std::vector<double> ts, ys;
  for (Eigen::Index i = 0; i < hist.size(); ++i) {
    const double t = hist.bin_centers[i] - origin;
    if (t >= options.fit_start) {
      ts.push_back(t);
      ys.push_back(hist.counts[i]);
    }
  }
  const auto m = static_cast<Eigen::Index>(ts.size());
  if (m < 5) throw FitError("fit_exponential: need at least 5 bins in the fit range", {});
  const Eigen::Map<const Eigen::VectorXd> t(ts.data(), m), y(ys.data(), m);
  Eigen::VectorXd w(m);
  for (Eigen::Index i = 0; i < m; ++i)
    w[i] = options.weighting == Weighting::poisson ? 1.0 / std::sqrt(std::max(y[i], 1.0)) : 1.0;

  // Initial guesses: tail level, then a log-linear fit of the early excess.
  const Eigen::Index tail = std::max<Eigen::Index>(3, m / 10);
  const double i0 = y.tail(tail).mean();
  double gamma = 0.0, i1 = y[0] - i0;
  {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (Eigen::Index i = 0; i < m / 2; ++i) {
      const double excess = y[i] - i0;
      if (!(excess > 0.0)) break;
      const double ly = std::log(excess);
      sx += t[i];
      sy += ly;
      sxx += t[i] * t[i];
      sxy += t[i] * ly;
      ++count;
    }
    if (count >= 3) {
      const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
      const double intercept = (sy - slope * sx) / count;
      if (slope < 0.0) {
        gamma = -slope;
        i1 = std::exp(intercept);
      }
    }
    if (!(gamma > 0.0)) gamma = 3.0 / (t[m - 1] - t[0]);
  }

  auto residuals = [&](const Eigen::VectorXd& p) {
    return ((y.array() - p[0] - p[1] * (-p[2] * t.array()).exp()) * w.array()).matrix().eval();
  };
  Bounds bounds{Eigen::Vector3d(-kInf, -kInf, 0.0), Eigen::Vector3d(kInf, kInf, kInf)};
  FitResult fit;
  try {
    fit = least_squares(residuals, Eigen::Vector3d(i0, i1, gamma), {"I0", "I1", "gamma_osp"}, bounds);
  } catch (const DegenerateFitError& e) {
    // No decay to resolve: report the level only.
    fit = e.best();
    const double level = (y.array() * w.array().square()).sum() / w.array().square().sum();
    fit.values = Eigen::Vector3d(level, 0.0, std::numeric_limits<double>::quiet_NaN());
    fit.sigma = Eigen::Vector3d::Constant(std::numeric_limits<double>::quiet_NaN());
    fit.covariance = Eigen::Matrix3d::Constant(std::numeric_limits<double>::quiet_NaN());
    fit.converged = true;
    fit.identifiable = false;
    fit.flags.push_back("non_identifiable");
    fit.message = e.what();
    return fit;
  }
  if (!(std::abs(fit.values[1]) > 3.0 * fit.sigma[1]) && fit.sigma[1] > 0.0) {
    fit.identifiable = false;
    fit.flags.push_back("non_identifiable");
  }
  if (fit.values[2] * (t[m - 1] - t[0]) < 1.0) {
    fit.flags.push_back("short_window");
    fit.message = "fit window spans less than one decay time";
  }
  return fit;
}

// ------------------------------------------------------------ saturation

double eval_pumping_rate(double power_ratio, double gamma_x, double gamma_0, double sigma, int nodes) {
  if (!(power_ratio >= 0.0) || !(gamma_x >= 0.0) || !(gamma_0 >= 0.0) || !(sigma >= 0.0))
    throw std::invalid_argument("eval_pumping_rate: inputs must be >= 0");
  if (power_ratio == 0.0) return 0.0;
  if (std::isinf(power_ratio)) return 0.5 * gamma_x;
  const double w2 = gamma_0 * gamma_0 * power_ratio;
  return gamma_x * gauss_average(
                       [&](double d) { return w2 / (2.0 * w2 + gamma_0 * gamma_0 + 4.0 * d * d); },
                       sigma, nodes);
}

FitResult fit_saturation(const Eigen::VectorXd& powers, const Eigen::VectorXd& rates, double gamma_0,
                         double sigma, const SaturationFitOptions& options) {
  const Eigen::Index m = powers.size();
  if (rates.size() != m) throw std::invalid_argument("fit_saturation: powers and rates differ in length");
  if (m < 3) throw std::invalid_argument("fit_saturation: need at least 3 points");
  if ((powers.array() <= 0.0).any()) throw std::invalid_argument("fit_saturation: powers must be > 0");
  Eigen::VectorXd w = Eigen::VectorXd::Ones(m);
  if (options.point_sigma.size() == m) w = options.point_sigma.cwiseInverse();

  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(m);
    for (Eigen::Index i = 0; i < m; ++i)
      r[i] = (rates[i] - eval_pumping_rate(powers[i] / p[1], p[0], gamma_0, sigma, options.nodes)) * w[i];
    return r;
  };
  const Bounds bounds{Eigen::Vector2d(0.0, 1e-300), Eigen::Vector2d(gamma_0, kInf)};
  const double pmin = powers.minCoeff(), pmax = powers.maxCoeff();
  const double gx0 = std::min(gamma_0, 2.0 * rates.maxCoeff());
  const int starts = std::clamp(options.starts, 1, 8);

  FitResult best;
  bool have = false;
  std::string last_error;
  for (int s = 0; s < starts; ++s) {
    const double frac = starts == 1 ? 0.5 : static_cast<double>(s) / (starts - 1);
    const double psat0 = pmin * std::pow(pmax / pmin, frac);
    try {
      FitResult fit = least_squares(residuals, Eigen::Vector2d(gx0, psat0), {"gamma_x", "P_sat"}, bounds);
      if (!have || fit.chi2 < best.chi2) {
        best = fit;
        have = true;
      }
    } catch (const DegenerateFitError& e) {
      if (!have || e.best().chi2 < best.chi2) {
        best = e.best();
        best.identifiable = false;
        best.message = e.what();
        best.sigma = Eigen::Vector2d::Constant(std::numeric_limits<double>::quiet_NaN());
        best.covariance = Eigen::Matrix2d::Constant(std::numeric_limits<double>::quiet_NaN());
        have = true;
      }
    } catch (const FitError& e) {
      last_error = e.what();
    }
  }
  if (!have) throw FitError("fit_saturation: no start converged: " + last_error, {});

  const double gx = best.values[0], psat = best.values[1];
  // Below the knee only gamma_x / P_sat is constrained.
  if (pmax / psat < 0.2 || !(best.sigma[1] < psat)) {
    best.identifiable = false;
    best.flags.push_back("non_identifiable_P_sat");
  }
  best.derived["cyclicity"] = {(gamma_0 - gx) / gx, gamma_0 / (gx * gx) * best.sigma[0]};
  return best;
}

// ---------------------------------------------------------------- Ramsey

FitResult fit_ramsey(const Eigen::VectorXd& taus, const Eigen::VectorXd& signal,
                     const Eigen::VectorXd& point_sigma) {
  const Eigen::Index m = taus.size();
  if (signal.size() != m) throw std::invalid_argument("fit_ramsey: taus and signal differ in length");
  if (m < 4) throw std::invalid_argument("fit_ramsey: need at least 4 delay points");
  Eigen::VectorXd w = Eigen::VectorXd::Ones(m);
  if (point_sigma.size() == m) w = point_sigma.cwiseInverse();

  Eigen::Index first = 0;
  taus.minCoeff(&first);
  const double i0 = signal[first];
  double k = 0.0;
  {
    double sxx = 0, sxy = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double ratio = signal[i] / i0;
      if (!(ratio > 0.0) || taus[i] == 0.0) continue;
      const double x = taus[i] * taus[i];
      sxx += x * x;
      sxy += x * std::log(ratio);
    }
    if (sxx > 0.0) k = std::max(0.0, -sxy / sxx);
  }
  if (!(k > 0.0)) {
    const double tmax = taus.cwiseAbs().maxCoeff();
    k = tmax > 0.0 ? 0.01 / (tmax * tmax) : 1e-6;
  }

  auto residuals = [&](const Eigen::VectorXd& p) {
    return ((signal.array() - p[0] * (-p[1] * taus.array().square()).exp()) * w.array()).matrix().eval();
  };
  const Bounds bounds{Eigen::Vector2d(-kInf, 0.0), Eigen::Vector2d(kInf, kInf)};
  FitResult inner = least_squares(residuals, Eigen::Vector2d(i0, k), {"I0", "k"}, bounds);

  FitResult fit = inner;
  fit.names = {"I0", "T2_star"};
  const double kk = inner.values[1], sk = inner.sigma[1];
  const double span = taus.cwiseAbs().maxCoeff();
  if (kk <= 3.0 * sk || kk * span * span < 1e-9) {
    fit.values[1] = std::numeric_limits<double>::infinity();
    fit.sigma[1] = std::numeric_limits<double>::infinity();
    fit.covariance(0, 1) = fit.covariance(1, 0) = 0.0;
    fit.covariance(1, 1) = std::numeric_limits<double>::infinity();
    fit.flags.push_back("infinite_T2_star");
    fit.message = "no resolvable decay: T2* unbounded";
  } else {
    const double dt_dk = -0.5 * std::pow(kk, -1.5);
    fit.values[1] = 1.0 / std::sqrt(kk);
    Eigen::Matrix2d jac = Eigen::Matrix2d::Identity();
    jac(1, 1) = dt_dk;
    fit.covariance = jac * inner.covariance * jac.transpose();
    fit.sigma = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  return fit;
}

double fidelity_lower_bound(const Histogram& hist, const FitResult& fit) {
  const double i1 = fit.value("I1");
  if (!(i1 > 0.0)) throw std::domain_error("fidelity_lower_bound: needs a pumped amplitude I1 > 0");
  const double i0ss = fit.value("I0") - hist.background;
  return 1.0 - i0ss / (i0ss + i1);
}

}  // namespace qdspin

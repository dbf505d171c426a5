#include "qdspin/spectra.hpp"

#include <algorithm>
#include <complex>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "qdspin/inference.hpp"
#include "qdspin/noise.hpp"
#include "qdspin/units.hpp"

namespace qdspin {

namespace {

struct Resonance {
  TransitionId id;
  int lower;
  double offset;  // rad/ns from the grid reference
  double beta;
};

std::complex<double> spin_amplitude(const std::vector<Resonance>& lines, int ground, double delta,
                       double half_width, double dephasing) {
  std::complex<double> t(1.0, 0.0);
  for (const auto& l : lines) {
    if (l.lower != ground) continue;
    t -= l.beta * half_width / std::complex<double>(half_width + dephasing, delta - l.offset);
  }
  return t;
}

}  // namespace

TransmissionSpectrum weak_probe_transmission(const LevelScheme& scheme, const DecayRates& rates,
                                             const Eigen::Vector2d& ground,
                                             const Eigen::VectorXd& grid_ghz,
                                             const TransmissionOptions& options) {
  rates.validate();
  if ((ground.array() < 0.0).any() || std::abs(ground.sum() - 1.0) > 1e-9)
    throw ModelError("transmission: ground populations must be >= 0 and sum to 1");
  if (!(options.dephasing >= 0.0)) throw ModelError("transmission: dephasing must be >= 0");
  const double g0 = rates.gamma_0();
  if (!(g0 > 0.0)) throw ModelError("transmission: gamma_0 must be > 0");

  const double reference = units::ghz_to_angular(options.reference_ghz);
  std::vector<Resonance> lines;
  for (const auto& t : scheme.transitions())
    lines.push_back({t.id, t.lower, scheme.transition_offset(t.id) - reference,
                     waveguide_branching(rates, t.polarization)});

  TransmissionSpectrum out;
  const double half = 0.5 * g0;
  for (std::size_t a = 0; a < lines.size(); ++a)
    for (std::size_t b = a + 1; b < lines.size(); ++b)
      if (std::abs(lines[a].offset - lines[b].offset) < g0 + 2.0 * options.dephasing)
        out.warnings.push_back(fmt::format("transitions {} and {} closer than the linewidth",
                                           to_string(lines[a].id), to_string(lines[b].id)));

  const Eigen::Index n = grid_ghz.size();
  out.detunings = grid_ghz;
  out.amplitude.resize(n);
  out.power.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double delta = units::ghz_to_angular(grid_ghz[i]);
    out.amplitude[i] = ground[0] * spin_amplitude(lines, g1, delta, half, options.dephasing) +
                       ground[1] * spin_amplitude(lines, g2, delta, half, options.dephasing);
    out.power[i] = gauss_average(
        [&](double shift) {
          double acc = 0.0;
          for (int s : {0, 1})
            if (ground[s] > 0.0)
              acc += ground[s] *
                     std::norm(spin_amplitude(lines, s, delta - shift, half, options.dephasing));
          return acc;
        },
        options.sigma, options.nodes);
  }
  return out;
}

std::vector<Dip> dip_metrics(const TransmissionSpectrum& spectrum) {
  const auto& x = spectrum.detunings;
  const auto& p = spectrum.power;
  std::vector<Dip> dips;
  const Eigen::Index n = p.size();
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    if (!(p[i] < p[i - 1] && p[i] <= p[i + 1])) continue;
    const double depth = 1.0 - p[i];
    if (!(depth > 1e-12)) continue;
    const double half = 1.0 - 0.5 * depth;
    auto crossing = [&](Eigen::Index step) {
      Eigen::Index j = i;
      while (j + step >= 0 && j + step < n && p[j + step] < half) j += step;
      if (j + step < 0 || j + step >= n) return x[j];
      const Eigen::Index k = j + step;
      const double f = (half - p[j]) / (p[k] - p[j]);
      return x[j] + f * (x[k] - x[j]);
    };
    // Parabolic refinement of the minimum position.
    double center = x[i];
    const double denom = p[i - 1] - 2.0 * p[i] + p[i + 1];
    if (denom > 0.0) center += 0.5 * (x[i + 1] - x[i]) * (p[i - 1] - p[i + 1]) / denom;
    dips.push_back({center, depth, crossing(1) - crossing(-1)});
  }
  return dips;
}

double lorentzian(double x, double center, double fwhm, double period) {
  const double hw = 0.5 * fwhm;
  if (period > 0.0) {
    // Sum over all images x + m * period.
    const double a = 2.0 * std::numbers::pi * hw / period;
    const double phi = 2.0 * std::numbers::pi * (x - center) / period;
    return std::sinh(a) / (period * (std::cosh(a) - std::cos(phi)));
  }
  const double d = x - center;
  return hw / (std::numbers::pi * (d * d + hw * hw));
}

EmissionSpectrum emission_spectrum(const LevelScheme& scheme, const DecayRates& rates,
                                   const Eigen::Vector2d& excited, const Eigen::VectorXd& grid_ghz,
                                   const EmissionOptions& options) {
  rates.validate();
  if ((excited.array() < 0.0).any() || std::abs(excited.sum() - 1.0) > 1e-9)
    throw ModelError("emission: excited populations must be >= 0 and sum to 1");
  const double fwhm = units::angular_to_ghz(rates.gamma_0()) + options.instrument_fwhm;

  EmissionSpectrum out;
  out.frequencies = grid_ghz;
  for (const auto& t : transition_frequencies(scheme)) {
    const double pop = excited[t.upper == e1 ? 0 : 1];
    const double area = pop * rates.waveguide_rate(t.polarization);
    if (area == 0.0) continue;
    out.peaks.push_back({to_string(t.id),
                         units::angular_to_ghz(scheme.transition_offset(t.id)), fwhm, area});
  }
  const double sigma_ghz = units::angular_to_ghz(options.sigma);
  out.intensity = Eigen::VectorXd::Zero(grid_ghz.size());
  for (Eigen::Index i = 0; i < grid_ghz.size(); ++i) {
    for (const auto& pk : out.peaks)
      out.intensity[i] += pk.area * gauss_average(
                                        [&](double s) { return lorentzian(grid_ghz[i], pk.center + s, pk.fwhm); },
                                        sigma_ghz, options.nodes);
  }
  return out;
}

void FabryPerotScanner::validate() const {
  if (!(fsr > linewidth && linewidth > 0.0))
    throw ModelError("Fabry-Perot scanner: need fsr > linewidth > 0");
}

EmissionSpectrum fold_through_cavity(const EmissionSpectrum& spectrum,
                                     const FabryPerotScanner& scanner) {
  scanner.validate();
  const auto& f = spectrum.frequencies;
  const Eigen::Index n = f.size();
  if (n < 2) throw ModelError("fold: spectrum needs at least two samples");
  const double dx = (f[n - 1] - f[0]) / static_cast<double>(n - 1);
  const auto bins = std::max<Eigen::Index>(2, std::lround(scanner.fsr / dx));
  const double step = scanner.fsr / static_cast<double>(bins);
  auto wrap = [&](double v) {
    double r = std::fmod(v - scanner.reference, scanner.fsr);
    return r < 0.0 ? r + scanner.fsr : r;
  };

  EmissionSpectrum out;
  out.period = scanner.fsr;
  out.frequencies = Eigen::VectorXd::LinSpaced(bins, 0.0, scanner.fsr - step);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(bins);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pos = wrap(f[i]) / step;
    const auto lo = static_cast<Eigen::Index>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    const double m = spectrum.intensity[i] * dx;
    mass[lo % bins] += (1.0 - frac) * m;
    mass[(lo + 1) % bins] += frac * m;
  }
  out.intensity = mass / step;
  for (auto pk : spectrum.peaks) {
    pk.center = wrap(pk.center);
    out.peaks.push_back(pk);
  }
  return out;
}

std::pair<double, double> PeakFitResult::area_ratio(std::size_t i, std::size_t j) const {
  const double a = peaks.at(i).peak.area, b = peaks.at(j).peak.area;
  const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
  const double r = a / b;
  const double rel2 = area_covariance(ii, ii) / (a * a) + area_covariance(jj, jj) / (b * b) -
                      2.0 * area_covariance(ii, jj) / (a * b);
  return {r, std::abs(r) * std::sqrt(std::max(0.0, rel2))};
}

PeakFitResult fit_spectrum_peaks(const EmissionSpectrum& spectrum, const PeakFitOptions& options) {
  const auto& x = spectrum.frequencies;
  const auto& y = spectrum.intensity;
  const Eigen::Index m = x.size();
  const double dx = m > 1 ? (x[m - 1] - x[0]) / static_cast<double>(m - 1) : 1.0;

  std::vector<SpectralPeak> seeds = spectrum.peaks;
  if (seeds.empty()) {
    // Maxima of a box-smoothed copy that dominate their neighbourhood.
    const Eigen::Index h = 5;
    Eigen::VectorXd s(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index a = std::max<Eigen::Index>(0, i - h), b = std::min(m - 1, i + h);
      s[i] = y.segment(a, b - a + 1).mean();
    }
    const double floor = 0.05 * s.maxCoeff();
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index a = std::max<Eigen::Index>(0, i - 3 * h), b = std::min(m - 1, i + 3 * h);
      Eigen::Index at = 0;
      s.segment(a, b - a + 1).maxCoeff(&at);
      if (a + at != i || s[i] <= floor) continue;
      // Half height above the higher of the two flanking minima.
      Eigen::Index lo = i, hi = i;
      while (lo > 0 && s[lo - 1] <= s[lo]) --lo;
      while (hi + 1 < m && s[hi + 1] <= s[hi]) ++hi;
      const double half = 0.5 * (s[i] + std::max(s[lo], s[hi]));
      lo = hi = i;
      while (lo > 0 && s[lo] > half) --lo;
      while (hi + 1 < m && s[hi] > half) ++hi;
      const double fwhm = std::max(2.0 * dx, x[hi] - x[lo]);
      seeds.push_back({"peak" + std::to_string(seeds.size()), x[i], fwhm, s[i] * std::numbers::pi * fwhm / 2.0});
    }
  }
  if (seeds.empty()) throw FitError("fit_spectrum_peaks: no resolvable peak", {});

  const auto k = static_cast<Eigen::Index>(seeds.size());
  Eigen::VectorXd w = Eigen::VectorXd::Ones(m);
  if (options.poisson)
    for (Eigen::Index i = 0; i < m; ++i) w[i] = 1.0 / std::sqrt(std::max(y[i], 1.0));

  Eigen::VectorXd init(3 * k), lower(3 * k), upper(3 * k);
  std::vector<std::string> names;
  for (Eigen::Index p = 0; p < k; ++p) {
    const auto& s = seeds[static_cast<std::size_t>(p)];
    init.segment<3>(3 * p) << s.center, s.fwhm, s.area;
    // Each line stays within one seeded width of its seed.
    const double reach = std::max(s.fwhm, 2.0 * dx);
    lower.segment<3>(3 * p) << s.center - reach, 1e-6 * dx, 0.0;
    upper.segment<3>(3 * p) << s.center + reach, std::numeric_limits<double>::infinity(),
        std::numeric_limits<double>::infinity();
    for (const char* field : {"center", "fwhm", "area"}) names.push_back(s.label + "." + field);
  }
  const double period = spectrum.period;
  // Seed areas by linear least squares on the seeded shapes; the records
  // may be in other intensity units than the samples.
  {
    Eigen::MatrixXd shapes(m, k);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index q = 0; q < k; ++q) shapes(i, q) = w[i] * lorentzian(x[i], init[3 * q], init[3 * q + 1], period);
    const Eigen::VectorXd areas = shapes.colPivHouseholderQr().solve((y.array() * w.array()).matrix());
    const double largest = std::max(areas.maxCoeff(), 0.0);
    if (largest > 0.0)
      for (Eigen::Index q = 0; q < k; ++q) init[3 * q + 2] = std::max(areas[q], 1e-3 * largest);
  }
  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      double model = 0.0;
      for (Eigen::Index q = 0; q < k; ++q)
        model += p[3 * q + 2] * lorentzian(x[i], p[3 * q], p[3 * q + 1], period);
      r[i] = (y[i] - model) * w[i];
    }
    return r;
  };

  PeakFitResult out;
  FitResult fit;
  try {
    fit = least_squares(residuals, init, names, Bounds{lower, upper});
  } catch (const DegenerateFitError& e) {
    fit = e.best();
    out.warnings.push_back(std::string("degenerate peak parameters: ") + e.combination());
    fit.covariance = Eigen::MatrixXd::Constant(3 * k, 3 * k, std::numeric_limits<double>::quiet_NaN());
    fit.sigma = Eigen::VectorXd::Constant(3 * k, std::numeric_limits<double>::quiet_NaN());
  } catch (const FitError& e) {
    const auto& best = e.best();
    throw FitError(fmt::format("fit_spectrum_peaks: no convergence (chi2 = {:.6g} over {} points): {}",
                               best.chi2, m, e.what()),
                   best);
  }
  out.converged = fit.converged;
  out.chi2_reduced = fit.chi2_reduced;
  out.area_covariance.resize(k, k);
  for (Eigen::Index p = 0; p < k; ++p) {
    PeakFit pf;
    pf.peak = {seeds[static_cast<std::size_t>(p)].label, fit.values[3 * p], fit.values[3 * p + 1],
               fit.values[3 * p + 2]};
    if (period > 0.0) pf.peak.center = std::fmod(std::fmod(pf.peak.center, period) + period, period);
    pf.center_sigma = fit.sigma[3 * p];
    pf.fwhm_sigma = fit.sigma[3 * p + 1];
    pf.area_sigma = fit.sigma[3 * p + 2];
    out.peaks.push_back(pf);
    for (Eigen::Index q = 0; q < k; ++q) out.area_covariance(p, q) = fit.covariance(3 * p + 2, 3 * q + 2);
  }
  for (std::size_t a = 0; a < out.peaks.size(); ++a)
    for (std::size_t b = a + 1; b < out.peaks.size(); ++b) {
      double d = std::abs(out.peaks[a].peak.center - out.peaks[b].peak.center);
      if (period > 0.0) d = std::min(d, period - d);
      const double width = std::max(out.peaks[a].peak.fwhm, out.peaks[b].peak.fwhm);
      if (d < 0.25 * width)
        out.warnings.push_back(fmt::format("peaks {} and {} merged (spacing {:.3g} GHz < width/4)",
                                           out.peaks[a].peak.label, out.peaks[b].peak.label, d));
    }
  return out;
}

}  // namespace qdspin

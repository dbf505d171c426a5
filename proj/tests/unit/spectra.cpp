#include <cmath>

#include <doctest.h>

#include "qdspin/spectra.hpp"
#include "qdspin/units.hpp"

using namespace qdspin;

namespace {

const DecayRates kRates = DecayRates::from_measured(3.07, 0.243, 21.1);
const LevelScheme kScheme(ChargeSpecies::XM, 315.97, units::ghz_to_angular(10.0), units::ghz_to_angular(4.0));

double offset_ghz(TransitionId id) { return units::angular_to_ghz(kScheme.transition_offset(id)); }

}  // namespace

TEST_CASE("transmission stays in [0, 1] and recovers far from resonance") {
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(4001, -20.0, 20.0);
  for (double sigma_mhz : {0.0, 140.0, 700.0}) {
    TransmissionOptions opt;
    opt.sigma = units::mhz_to_angular(sigma_mhz);
    opt.dephasing = 0.2;
    const auto t = weak_probe_transmission(kScheme, kRates, Eigen::Vector2d(0.47, 0.53), grid, opt);
    CHECK(t.power.minCoeff() >= 0.0);
    CHECK(t.power.maxCoeff() <= 1.0);
  }
  const Eigen::VectorXd far = Eigen::VectorXd::Constant(1, 1e6);
  CHECK(weak_probe_transmission(kScheme, kRates, Eigen::Vector2d(0.5, 0.5), far).power[0] ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("dips sit at the transitions with y deeper than x") {
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(8001, -20.0, 20.0);
  const auto t = weak_probe_transmission(kScheme, kRates, Eigen::Vector2d(0.5, 0.5), grid);
  const auto dips = dip_metrics(t);
  REQUIRE(dips.size() == 4);
  auto near = [&](TransitionId id) {
    for (const auto& d : dips)
      if (std::abs(d.center - offset_ghz(id)) < 0.01) return d;
    FAIL("no dip at " << to_string(id));
    return Dip{};
  };
  CHECK(near(TransitionId::y1).depth > near(TransitionId::x1).depth);
  CHECK(near(TransitionId::y2).depth > near(TransitionId::x2).depth);
  CHECK(near(TransitionId::y1).fwhm == doctest::Approx(units::angular_to_ghz(3.07)).epsilon(0.05));
}

TEST_CASE("populating one ground state removes the other's dips") {
  const Eigen::VectorXd at = Eigen::VectorXd::Constant(1, offset_ghz(TransitionId::y2));
  const auto pure = weak_probe_transmission(kScheme, kRates, Eigen::Vector2d(1.0, 0.0), at);
  CHECK(pure.power[0] > 0.99);
}

TEST_CASE("lorentzians are normalized, periodic ones too") {
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(200001, -2000.0, 2000.0);
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += lorentzian(x[i], 0.3, 0.5);
  CHECK(s * 0.02 == doctest::Approx(1.0).epsilon(1e-3));
  double p = 0.0;
  const int n = 12000;
  for (int i = 0; i < n; ++i) p += lorentzian(12.0 * i / n, 0.3, 0.5, 12.0);
  CHECK(p * 12.0 / n == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(lorentzian(0.3, 0.3, 0.5, 12.0) == doctest::Approx(lorentzian(12.3, 0.3, 0.5, 12.0)));
}

TEST_CASE("emission areas follow the waveguide rates and folding preserves them") {
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(100001, -500.0, 500.0);
  const auto e = emission_spectrum(kScheme, kRates, Eigen::Vector2d(0.5, 0.5), grid);
  REQUIRE(e.peaks.size() == 4);
  for (const auto& pk : e.peaks) {
    if (pk.label == "y1") CHECK(pk.area == doctest::Approx(0.5 * kRates.gy_wg));
    if (pk.label == "x1") CHECK(pk.area == doctest::Approx(0.5 * kRates.gx_wg));
  }
  const auto f = fold_through_cavity(e, FabryPerotScanner{12.0, 0.1, 0.0});
  CHECK(f.period == 12.0);
  const double dx = 1000.0 / 100000.0;
  CHECK(f.intensity.sum() * 12.0 / static_cast<double>(f.intensity.size()) ==
        doctest::Approx(e.intensity.sum() * dx).epsilon(1e-12));
  for (const auto& pk : f.peaks) {
    CHECK(pk.center >= 0.0);
    CHECK(pk.center < 12.0);
  }
  CHECK_THROWS(fold_through_cavity(e, FabryPerotScanner{0.0, 0.1, 0.0}));
}

TEST_CASE("peak fit recovers the line parameters") {
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(20001, -100.0, 100.0);
  EmissionOptions eo;
  eo.instrument_fwhm = 0.1;
  const auto e = emission_spectrum(kScheme, kRates, Eigen::Vector2d(0.5, 0.5), grid, eo);
  const auto fit = fit_spectrum_peaks(e);
  REQUIRE(fit.peaks.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(fit.peaks[i].peak.center == doctest::Approx(e.peaks[i].center).epsilon(1e-3));
    CHECK(fit.peaks[i].peak.area == doctest::Approx(e.peaks[i].area).epsilon(0.02));
  }
  const auto folded = fold_through_cavity(e, FabryPerotScanner{12.0, 0.1, 0.0});
  EmissionSpectrum unseeded = folded;
  unseeded.peaks.clear();
  const auto ff = fit_spectrum_peaks(unseeded);
  CHECK(ff.peaks.size() == 4);
}

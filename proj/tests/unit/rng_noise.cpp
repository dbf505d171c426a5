#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include "qdspin/noise.hpp"
#include "qdspin/rng.hpp"

using namespace qdspin;

TEST_CASE("philox4x64-10 known-answer vectors") {
  using B = Philox4x64::Block;
  CHECK(Philox4x64::generate({0, 0, 0, 0}, {0, 0}) ==
        B{0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL, 0x7e68b68aec7ba23bULL});
  const auto ones = ~0ULL;
  CHECK(Philox4x64::generate({ones, ones, ones, ones}, {ones, ones}) ==
        B{0x87b092c3013fe90bULL, 0x438c3c67be8d0224ULL, 0x9cc7d7c69cd777b6ULL, 0xa09caebf594f0ba0ULL});
  CHECK(Philox4x64::generate({0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL,
                              0x082efa98ec4e6c89ULL},
                             {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL}) ==
        B{0xa528f45403e61d95ULL, 0x38c72dbd566e9788ULL, 0xa5a1610e72fd18b5ULL, 0x57bd43b5e52b7fe6ULL});
}

TEST_CASE("random streams are reproducible and well distributed") {
  const RandomStream a(42, 1), b(42, 1), c(42, 2);
  CHECK(a.normal(7) == b.normal(7));
  CHECK(a.normal(7) != c.normal(7));
  double mean = 0.0, var = 0.0, pmean = 0.0, umin = 1.0, umax = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = a.normal(static_cast<std::uint64_t>(i));
    mean += x / n;
    var += x * x / n;
    pmean += a.poisson(static_cast<std::uint64_t>(i), 3.5) / n;
    const double u = a.uniform(static_cast<std::uint64_t>(i));
    umin = std::min(umin, u);
    umax = std::max(umax, u);
  }
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
  CHECK(pmean == doctest::Approx(3.5).epsilon(0.02));
  CHECK(umin > 0.0);
  CHECK(umax < 1.0);
  CHECK(a.poisson(0, 0.0) == 0.0);
}

TEST_CASE("gauss-hermite rule against adaptive quadrature") {
  const auto& rule = normal_quadrature(64);
  CHECK(rule.weights.sum() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK((rule.nodes.array().square() * rule.weights.array()).sum() == doctest::Approx(1.0).epsilon(1e-12));
  const double g0 = 3.07, w2 = 2.0 * g0 * g0;
  const double sigma = 2.2;
  auto f = [&](double d) { return w2 / (2.0 * w2 + g0 * g0 + 4.0 * d * d); };
  auto weighted = [&](double x) {
    return f(x) * std::exp(-0.5 * x * x / (sigma * sigma)) / (sigma * std::sqrt(2.0 * M_PI));
  };
  const double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      weighted, -INFINITY, INFINITY, 15, 1e-13);
  CHECK(gauss_average(f, sigma) == doctest::Approx(oracle).epsilon(1e-8));
  CHECK(gauss_average(f, 0.0) == f(0.0));
  CHECK_THROWS_AS(gauss_average(f, -1.0), std::invalid_argument);
}

TEST_CASE("spin noise envelope") {
  CHECK(t2_star_from_sigma(sigma_from_t2_star(21.4)) == doctest::Approx(21.4));
  const double s = sigma_from_t2_star(21.4);
  CHECK(ramsey_dephasing_envelope(s, 21.4) == doctest::Approx(std::exp(-1.0)));
  CHECK(ramsey_dephasing_envelope(0.0, 100.0) == 1.0);
  const SpinNoise noise{s, 3};
  for (double tau : {0.0, 10.0, 21.4, 35.0})
    CHECK(std::abs(monte_carlo_dephasing(noise, tau, 100000) - ramsey_dephasing_envelope(s, tau)) < 0.01);
  const auto d = sample_detunings(GaussianDiffusion{0.5, 9}, 5);
  CHECK(d == sample_detunings(GaussianDiffusion{0.5, 9}, 5));
  CHECK(d != sample_detunings(GaussianDiffusion{0.5, 9}, 5, 1));
  CHECK(sample_spin_offset(noise, 4) == sample_spin_offset(noise, 4));
}

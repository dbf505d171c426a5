#include <cmath>
#include <vector>

#include <doctest.h>

#include "qdspin/experiment.hpp"
#include "qdspin/lindblad.hpp"

using namespace qdspin;

namespace {

Hamiltonian<2> two_level(double omega, double delta, Envelope env = {}) {
  Hamiltonian<2> h;
  h.diagonal << 0.0, -delta;
  h.couplings.push_back({0, 1, complex(0.5 * omega, 0.0), env, 0.0, 0.0});
  return h;
}

const std::vector<CollapseChannel> kDecay = {{ChannelKind::radiative_wg, 1, 0, 1.3, 0}};

double analytic_excited(double omega, double delta, double gamma) {
  return 0.25 * omega * omega / (delta * delta + 0.25 * gamma * gamma + 0.5 * omega * omega);
}

}  // namespace

TEST_CASE("envelope shape") {
  const auto e = Envelope::pulse(10.0, 20.0, 0.5);
  CHECK(e(20.0) == doctest::Approx(1.0));
  CHECK(e(10.0) == doctest::Approx(0.5));
  CHECK(e(-100.0) == doctest::Approx(0.0));
  CHECK(e.area() == 20.0);
  CHECK(e.flat_on(20.0, 20.0));
  CHECK_FALSE(e.flat_on(12.0, 15.0));
  CHECK(Envelope{}.flat_on(-1e9, 1e9));
  CHECK(Envelope::pulse(0.0, 5.0, 0.0)(5.0) == 0.0);
}

TEST_CASE("two-level steady state matches the analytic result") {
  for (double delta : {0.0, 0.7, -2.0}) {
    const double omega = 1.9;
    const auto h = two_level(omega, delta);
    const auto rho = steady_state<2>(h(0.0), kDecay);
    CHECK(rho(1, 1).real() == doctest::Approx(analytic_excited(omega, delta, 1.3)).epsilon(1e-10));
    CHECK(std::abs(rho.trace() - 1.0) < 1e-12);
    const auto l = liouvillian<2>(h(0.0), kDecay);
    const Eigen::Map<const Eigen::VectorXcd> v(rho.data(), 4);
    CHECK((l * v).norm() < 1e-12);
  }
}

TEST_CASE("evolution relaxes to the steady state and counts photons") {
  const double omega = 1.9;
  const auto h = two_level(omega, 0.0);
  CMatrix<2> rho0 = CMatrix<2>::Zero();
  rho0(0, 0) = 1.0;
  const auto times = uniform_grid(0.0, 60.0, 0.5);
  const auto traj = evolve<2>(rho0, h, kDecay, times);
  const double pe = analytic_excited(omega, 0.0, 1.3);
  CHECK(traj.states.back()(1, 1).real() == doctest::Approx(pe).epsilon(1e-8));
  CHECK(traj.flux_wg[traj.flux_wg.size() - 1] == doctest::Approx(1.3 * pe).epsilon(1e-8));
  // Photons over the last 20 ns at the steady flux.
  const std::size_t i = times.size() - 41;
  CHECK(traj.emitted_wg(times.size() - 1) - traj.emitted_wg(i) == doctest::Approx(20.0 * 1.3 * pe).epsilon(1e-6));
  const auto hist = fluorescence_flux(traj, 40.0, 60.0, 1.0, 0.25);
  CHECK(hist.size() == 20);
  CHECK(hist.counts[10] == doctest::Approx(1.3 * pe + 0.25).epsilon(1e-6));
}

TEST_CASE("exact propagation on static intervals agrees with the integrator") {
  const auto h = two_level(2.5, 0.4, Envelope::pulse(2.0, 30.0, 0.2));
  CMatrix<2> rho0 = CMatrix<2>::Zero();
  rho0(0, 0) = 1.0;
  const auto times = uniform_grid(0.0, 40.0, 1.0);
  EvolveOptions exact, stepped;
  stepped.exact_static = false;
  stepped.rtol = 1e-11;
  stepped.atol = 1e-13;
  const auto a = evolve<2>(rho0, h, kDecay, times, exact);
  const auto b = evolve<2>(rho0, h, kDecay, times, stepped);
  for (std::size_t i = 0; i < times.size(); ++i) CHECK((a.states[i] - b.states[i]).norm() < 1e-7);
}

TEST_CASE("trace, positivity and linearity on the four-level system") {
  const auto rates = DecayRates::from_measured(3.07, 0.243, 21.1);
  const LevelScheme scheme(ChargeSpecies::XM, 316.0, 62.8, 25.1);
  FieldEnvironment env{2.0, 0.0, 4.0, 0.3};
  const std::vector<DriveTerm> drives = {DriveTerm::linear(TransitionId::y1, 4.0, Envelope::pulse(1.0, 8.0, 0.3)),
                                         DriveTerm::circular(TransitionId::x2, 2.0, Envelope::pulse(4.0, 8.0, 0.3))};
  const auto h = build_hamiltonian(scheme, drives, RotatingFrame::anchored(scheme, drives[0]));
  const auto ch = build_collapse_channels(rates, scheme, env);
  const auto times = uniform_grid(0.0, 20.0, 1.0);
  DensityMatrix r1 = DensityMatrix::Zero(), r2 = DensityMatrix::Zero();
  r1(g1, g1) = 1.0;
  r2(g2, g2) = 0.5;
  r2(e1, e1) = 0.5;
  r2(g2, e1) = r2(e1, g2) = 0.5;
  const auto a = evolve<4>(r1, h, ch, times);
  const auto b = evolve<4>(r2, h, ch, times);
  const auto c = evolve<4>(DensityMatrix(0.25 * r1 + 0.75 * r2), h, ch, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(std::abs(a.states[i].trace() - 1.0) < 1e-10);
    CHECK((a.states[i] - a.states[i].adjoint()).norm() < 1e-10);
    const Eigen::SelfAdjointEigenSolver<DensityMatrix> es(b.states[i]);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
    CHECK((c.states[i] - 0.25 * a.states[i] - 0.75 * b.states[i]).norm() < 1e-9);
  }
}

TEST_CASE("collapse channels carry the decay rates") {
  const auto rates = DecayRates::from_measured(3.07, 0.243, 21.1);
  const LevelScheme scheme(ChargeSpecies::XM, 316.0, 62.8, 25.1);
  const auto ch = build_collapse_channels(rates, scheme, FieldEnvironment{});
  double out_e1 = 0.0;
  for (const auto& c : ch)
    if (c.from == e1 && (c.kind == ChannelKind::radiative_wg || c.kind == ChannelKind::radiative_free))
      out_e1 += c.rate;
  CHECK(out_e1 == doctest::Approx(3.07));
}

TEST_CASE("pumping rate of the driven system") {
  const auto rates = DecayRates::from_measured(3.07, 0.243, 21.1);
  const SystemModel sys{LevelScheme(ChargeSpecies::XM, 316.0, 62.8, 25.1), rates, FieldEnvironment{}};
  const ResonantPulse probe{TransitionId::y1, 1.0, 0.0, false};
  const double rate = lindblad_pumping_rate(sys, probe);
  CHECK(rate == doctest::Approx(0.243 / 3.0).epsilon(0.03));
  CHECK(steady_state_pumped_population(sys, probe, 0.0) > 0.99);
  CHECK_THROWS(uniform_grid(0.0, 1.0, 0.0));
}

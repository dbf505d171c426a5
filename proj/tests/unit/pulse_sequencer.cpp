#include <doctest.h>

#include "qdspin/pulse_sequencer.hpp"
#include "qdspin/units.hpp"

using namespace qdspin;

TEST_CASE("pumping layout") {
  const auto xm = build_pumping_sequence(ChargeSpecies::XM, 5.0, 1.0);
  REQUIRE(xm.elements.size() == 2);
  CHECK(xm.elements[0].as<ResonantPulse>().target == TransitionId::y2);
  CHECK(xm.elements[1].as<ResonantPulse>().target == TransitionId::y1);
  CHECK(xm.elements[1].start - xm.elements[0].stop() == doctest::Approx(10.0));
  CHECK(xm.repetition_period >= xm.elements[1].stop());
  const auto xp = build_pumping_sequence(ChargeSpecies::XP, 5.0, 1.0, {}, 0.8);
  REQUIRE(xp.elements.size() == 3);
  CHECK(xp.elements[0].is<PhotocreationPulse>());
  CHECK(xp.elements[0].as<PhotocreationPulse>().efficiency == 0.8);
  CHECK_THROWS_AS(build_pumping_sequence(ChargeSpecies::XM, -1.0, 1.0), SequenceError);
  PumpingTimings tight;
  tight.gap = 1.0;
  CHECK_THROWS_AS(build_pumping_sequence(ChargeSpecies::XM, 1.0, 1.0, tight), SequenceError);
}

TEST_CASE("sequence validation") {
  PulseSequence seq;
  seq.repetition_period = 100.0;
  seq.elements.push_back({ResonantPulse{TransitionId::y1, 1.0}, 50.0, 10.0, 0.1});
  seq.elements.push_back({ResonantPulse{TransitionId::y1, 1.0}, 10.0, 10.0, 0.1});
  CHECK_THROWS_WITH_AS(seq.validate(), doctest::Contains("time-ordered"), SequenceError);
  seq.elements = {{ReadoutWindow{TransitionId::y1}, 10.0, 10.0, 0.1}};
  CHECK_THROWS_WITH_AS(seq.validate(), doctest::Contains("coincide"), SequenceError);
  seq.elements = {{RamanPulse{1.0, 0.0, 1.0, 0.0}, 10.0, 10.0, 0.1}};
  CHECK_THROWS_AS(seq.validate(), SequenceError);
  seq.elements = {{ResonantPulse{TransitionId::y1, 1.0}, 95.0, 10.0, 0.1}};
  CHECK_THROWS_AS(seq.validate(), SequenceError);
}

TEST_CASE("raman calibration scales as power over detuning") {
  const double dr = units::ghz_to_angular(290.0);
  const auto cal = RamanCalibration::from_max(units::mhz_to_angular(150.0), 20.0, dr);
  CHECK(units::angular_to_mhz(raman_effective_coupling(20.0, dr, cal)) == doctest::Approx(150.0));
  CHECK(units::angular_to_mhz(raman_effective_coupling(10.0, dr, cal)) == doctest::Approx(75.0));
  CHECK(units::angular_to_mhz(raman_effective_coupling(20.0, units::ghz_to_angular(790.0), cal)) ==
        doctest::Approx(150.0 * 290.0 / 790.0));
  CHECK_THROWS_AS(raman_effective_coupling(1.0, 0.0, cal), ModelError);
  CHECK_THROWS_AS(RamanCalibration::from_max(1.0, 0.0, dr), ModelError);
}

TEST_CASE("raman pulse area and sequences") {
  const double omega = units::mhz_to_angular(150.0);
  const double t = raman_pulse_duration(0.5 * M_PI, omega, 0.5);
  CHECK(omega * (t - 0.5) == doctest::Approx(0.5 * M_PI));
  const double dr = units::ghz_to_angular(290.0);
  const auto cal = RamanCalibration::from_max(omega, 20.0, dr);
  const RamanPulse raman{20.0, dr, 1.0, 0.0};
  RamanTimings timings;
  timings.gap = 10.0;
  const auto rabi = build_rabi_sequence(raman, 12.0, timings);
  REQUIRE(rabi.elements.size() == 4);
  CHECK(rabi.elements[1].is<RamanPulse>());
  CHECK(rabi.elements[1].duration == 12.0);
  CHECK(rabi.elements.back().is<ReadoutWindow>());
  const auto ramsey = build_ramsey_sequence(8.0, raman, cal, M_PI, timings);
  std::vector<const PulseElement*> pulses;
  for (const auto& e : ramsey.elements)
    if (e.is<RamanPulse>()) pulses.push_back(&e);
  REQUIRE(pulses.size() == 2);
  CHECK(pulses[1]->start - pulses[0]->stop() == doctest::Approx(8.0));
  CHECK(pulses[1]->as<RamanPulse>().phase == doctest::Approx(M_PI));
  CHECK_THROWS_AS(build_ramsey_sequence(-1.0, raman, cal, 0.0, timings), SequenceError);
  CHECK_THROWS_AS(build_rabi_sequence(raman, 0.0, timings), SequenceError);
}

TEST_CASE("reduced raman model and its validity") {
  const auto rates = DecayRates::from_measured(2.48, 0.158, 21.1);
  const LevelScheme scheme(ChargeSpecies::XP, 317.0, units::ghz_to_angular(6.0), units::ghz_to_angular(14.0));
  const double omega = units::mhz_to_angular(150.0);
  const auto cal = RamanCalibration::from_max(omega, 20.0, units::ghz_to_angular(290.0));
  const PulseElement far{RamanPulse{20.0, units::ghz_to_angular(290.0), scheme.delta_g(), 0.0}, 0.0, 20.0, 0.5};
  const auto red = reduce_raman_to_two_level(far, scheme, rates, cal);
  CHECK(red.omega_mw == doctest::Approx(omega));
  CHECK(red.valid);
  CHECK(red.validity_ratio > 10.0);
  const PulseElement near{RamanPulse{20.0, units::ghz_to_angular(0.5), scheme.delta_g(), 0.0}, 0.0, 20.0, 0.5};
  const auto bad = reduce_raman_to_two_level(near, scheme, rates, cal);
  CHECK_FALSE(bad.valid);
  CHECK(bad.warning.find("adiabatic elimination") != std::string::npos);
}

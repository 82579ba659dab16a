// Copyright 2026 The ionrb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ionrb/pulse_sim.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

namespace ionrb {
namespace {

PulseSpec default_pulse() { return PulseSpec{}; }

// Independent oracle: RK4 on the Schrodinger equation with a constant
// Hamiltonian written out by hand, no closed-form exponential.
Vec2 rk4_evolve(const Vec2& psi0, double rabi, double axis, double offset, double duration,
                int steps) {
  const Complex i{0.0, 1.0};
  Mat2 h;
  h << 0.5 * offset, 0.5 * rabi * std::polar(1.0, -axis), 0.5 * rabi * std::polar(1.0, axis),
      -0.5 * offset;
  auto deriv = [&](const Vec2& v) -> Vec2 { return -i * (h * v); };
  Vec2 psi = psi0;
  const double dt = duration / steps;
  for (int k = 0; k < steps; ++k) {
    const Vec2 k1 = deriv(psi);
    const Vec2 k2 = deriv(psi + 0.5 * dt * k1);
    const Vec2 k3 = deriv(psi + 0.5 * dt * k2);
    const Vec2 k4 = deriv(psi + dt * k3);
    psi += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return psi;
}

TEST(EvolvePulse, IdealX90FromGround) {
  const PulseSpec p = default_pulse();
  const auto out = evolve_pulse(QubitState::basis(0), p, DriveParams::for_pulse(p));
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(out.amp(0) - Complex(r, 0.0)), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(out.amp(1) - Complex(0.0, -r)), 0.0, 1e-10);
}

TEST(EvolvePulse, FourPulsesGiveMinusIdentity) {
  PulseSpec p = default_pulse();
  p.gap_time = 0.0;
  const auto d = DriveParams::for_pulse(p);
  QubitState s = QubitState::basis(0);
  for (int k = 0; k < 4; ++k) s = evolve_pulse(s, p, d);
  EXPECT_NEAR(std::abs(s.amp(0) - Complex(-1.0, 0.0)), 0.0, 1e-10);
  EXPECT_NEAR(s.p0(), 1.0, 1e-12);
}

TEST(EvolvePulse, AmplitudeOffsetClosedForm) {
  PulseSpec p = default_pulse();
  const auto d = DriveParams::for_pulse(p);
  PulseNoise noise;
  noise.amp_multiplier = 1.0 + 1e-3;
  QubitState s = QubitState::basis(0);
  for (int k = 0; k < 400; ++k) s = evolve_pulse(s, p, d, noise);
  const double expected = std::pow(std::cos(0.1 * kPi), 2);
  EXPECT_NEAR(s.p0(), expected, 1e-9);
  EXPECT_NEAR(s.p0(), 0.9045, 1e-4);
}

// 4N pulses with constant offset o rotate by 2 pi N (1 + o) about X, so
// P0 = cos^2(pi N o).
TEST(EvolvePulse, ConstantOffsetSweep) {
  const PulseSpec p = default_pulse();
  const auto d = DriveParams::for_pulse(p);
  for (int n : {1, 10, 100}) {
    for (double o : {-1e-2, -3e-3, 1e-4, 2e-3, 1e-2}) {
      PulseNoise noise;
      noise.amp_multiplier = 1.0 + o;
      QubitState s = QubitState::basis(0);
      for (int k = 0; k < 4 * n; ++k) s = evolve_pulse(s, p, d, noise);
      EXPECT_NEAR(s.p0(), std::pow(std::cos(kPi * n * o), 2), 1e-6) << n << " " << o;
    }
  }
}

TEST(EvolvePulse, RejectsBadInput) {
  const PulseSpec p = default_pulse();
  const auto d = DriveParams::for_pulse(p);
  QubitState bad;
  bad.amp = Vec2{1.0, 1.0};
  EXPECT_THROW(evolve_pulse(bad, p, d), SimulationError);
  PulseSpec neg = p;
  neg.gap_time = -1e-9;
  EXPECT_THROW(evolve_pulse(QubitState::basis(0), neg, d), SimulationError);
  neg = p;
  neg.ramp_time = -1e-9;
  EXPECT_THROW(evolve_pulse(QubitState::basis(0), neg, d), SimulationError);
  EXPECT_THROW(gap_propagator(-1.0, d), SimulationError);
}

TEST(EvolvePulse, SquarePulseMatchesRk4Oracle) {
  PulseSpec p = default_pulse();
  p.ramp_time = 0.0;
  p.gap_time = 0.0;
  auto d = DriveParams::for_pulse(p);
  d.detuning = kTwoPi * 3e3;
  d.phase = 0.4;
  const auto out = evolve_pulse(QubitState::basis(0), p, d);
  const Vec2 ref = rk4_evolve(Vec2{1.0, 0.0}, d.omega_q, d.phase, -d.detuning, p.t_half_pi, 20000);
  EXPECT_LT((out.amp - ref).norm(), 1e-10);
}

TEST(EvolvePulse, RampSubstepsConverged) {
  for (RampShape shape : {RampShape::kSinSquared, RampShape::kLinear}) {
    const PulseSpec p = default_pulse();
    auto d = DriveParams::for_pulse(p);
    d.ramp_shape = shape;
    d.zeeman.shift_at_full_amp = kTwoPi * 2e3;
    d.detuning = kTwoPi * 1.5e3;
    const std::vector<Pulse> train = {Pulse::kPlusX, Pulse::kPlusY, Pulse::kMinusX, Pulse::kPlusY};
    const double p64 = evolve_pulses(QubitState::basis(0), train, p, d).p0();
    d.ramp_substeps = 128;
    const double p128 = evolve_pulses(QubitState::basis(0), train, p, d).p0();
    EXPECT_LT(std::abs(p64 - p128), 1e-10);
  }
}

TEST(EvolvePulse, AreaIsExactForBothRampShapes) {
  for (RampShape shape : {RampShape::kSinSquared, RampShape::kLinear}) {
    PulseSpec p = default_pulse();
    p.ramp_time = 500e-9;
    auto d = DriveParams::for_pulse(p);
    d.ramp_shape = shape;
    d.ramp_substeps = 16;
    PulseSpec no_gap = p;
    no_gap.gap_time = 0.0;
    EXPECT_LT(phase_distance(pulse_propagator(no_gap, d), pulse_unitary(Pulse::kPlusX)), 1e-12);
  }
}

TEST(EvolveSequence, NoiselessRandomSequenceSurvives) {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> pick(0, kCliffordCount - 1);
  GateSequence seq;
  seq.cliffords.resize(100);
  for (int& g : seq.cliffords) g = pick(rng);
  seq.recovery = recovery_gate(seq.cliffords);
  const PulseSpec p = default_pulse();
  const auto out = evolve_sequence(QubitState::basis(0), seq, p, DriveParams::for_pulse(p));
  EXPECT_NEAR(out.p0(), 1.0, 1e-8);
  EXPECT_NEAR(out.norm(), 1.0, 1e-10);
}

TEST(EvolveSequence, EmptySequenceIsIdentity) {
  GateSequence seq;
  const PulseSpec p = default_pulse();
  QubitState in;
  in.amp = Vec2{Complex(0.6, 0.0), Complex(0.0, 0.8)};
  const auto out = evolve_sequence(in, seq, p, DriveParams::for_pulse(p));
  EXPECT_LT((out.amp - in.amp).norm(), 1e-15);
}

// A +X90 / -X90 pair with a 9 Hz detuning, against an RK4 integration of the
// same square pulses and gaps.
TEST(EvolveSequence, DetunedPhaseFlipPairMatchesOracle) {
  PulseSpec p = default_pulse();
  p.ramp_time = 0.0;
  auto d = DriveParams::for_pulse(p);
  d.detuning = kTwoPi * 9.0;
  const std::vector<Pulse> pair = {Pulse::kPlusX, Pulse::kMinusX};
  const auto out = evolve_pulses(QubitState::basis(0), pair, p, d);

  Vec2 ref{1.0, 0.0};
  ref = rk4_evolve(ref, d.omega_q, 0.0, -d.detuning, p.t_half_pi, 20000);
  ref = rk4_evolve(ref, 0.0, 0.0, -d.detuning, p.gap_time, 100);
  ref = rk4_evolve(ref, d.omega_q, kPi, -d.detuning, p.t_half_pi, 20000);
  ref = rk4_evolve(ref, 0.0, 0.0, -d.detuning, p.gap_time, 100);
  EXPECT_LT(out.p0(), 1.0);
  EXPECT_NEAR(out.p0(), std::norm(ref(0)), 1e-12);
}

TEST(EvolveSequence, CompositionOfSegments) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> pick(0, 3);
  std::vector<Pulse> train(60);
  for (auto& g : train) g = static_cast<Pulse>(pick(rng));
  const PulseSpec p = default_pulse();
  auto d = DriveParams::for_pulse(p);
  d.detuning = kTwoPi * 50.0;
  d.zeeman.shift_at_full_amp = kTwoPi * 9.0;
  const auto whole = evolve_pulses(QubitState::basis(0), train, p, d);
  const std::span<const Pulse> all(train);
  const auto first = evolve_pulses(QubitState::basis(0), all.subspan(0, 25), p, d);
  const auto second = evolve_pulses(first, all.subspan(25), p, d);
  EXPECT_LT((whole.amp - second.amp).norm(), 1e-10);
}

TEST(EvolveSequence, NormAndPhaseCovarianceProperty) {
  std::mt19937 rng(9);
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Pulse> train(1 + trial * 7);
    for (auto& g : train) g = static_cast<Pulse>(pick(rng));
    const PulseSpec p = default_pulse();
    auto d = DriveParams::for_pulse(p);
    d.detuning = kTwoPi * 200.0 * (unif(rng) - 0.5);
    d.zeeman.shift_at_full_amp = kTwoPi * 20.0 * unif(rng);
    NoiseHook hook = [&](std::size_t i, double) {
      PulseNoise n;
      n.amp_multiplier = 1.0 + 1e-3 * std::sin(0.3 * static_cast<double>(i));
      return n;
    };
    const auto a = evolve_pulses(QubitState::basis(0), train, p, d, hook);
    d.phase = kTwoPi * unif(rng);
    const auto b = evolve_pulses(QubitState::basis(0), train, p, d, hook);
    EXPECT_NEAR(a.norm(), 1.0, 1e-10);
    EXPECT_NEAR(b.norm(), 1.0, 1e-10);
    EXPECT_NEAR(a.p0(), b.p0(), 1e-10);
  }
}

TEST(AvgPulseError, ZeroWithoutPerturbation) {
  const PulseSpec p = default_pulse();
  const auto d = DriveParams::for_pulse(p);
  for (Pulse g : kAllPulses) EXPECT_NEAR(avg_pulse_error(g, p, d, {}), 0.0, 1e-12);
}

TEST(AvgPulseError, DetuningIsQuadratic) {
  const PulseSpec p = default_pulse();
  const auto d = DriveParams::for_pulse(p);
  PulseNoise big, small;
  big.detuning_offset = kTwoPi * 100.0;
  small.detuning_offset = kTwoPi * 50.0;
  const double ratio = avg_pulse_error(Pulse::kPlusX, p, d, big) /
                       avg_pulse_error(Pulse::kPlusX, p, d, small);
  EXPECT_NEAR(ratio, 4.0, 0.2);
}

// Axis-preserving over-rotation by pi/2 * o gives infidelity (2/3) sin^2(pi o / 4)
// averaged over the six cardinal states.
TEST(AvgPulseError, AmplitudeOffsetMatchesRotationAlgebra) {
  const PulseSpec p = default_pulse();
  const auto d = DriveParams::for_pulse(p);
  PulseNoise n;
  n.amp_multiplier = 1.0 + 1e-3;
  const double expected = (2.0 / 3.0) * std::pow(std::sin(0.25 * kPi * 1e-3), 2);
  EXPECT_NEAR(avg_pulse_error(Pulse::kPlusY, p, d, n) / expected, 1.0, 1e-6);
}

Vec6 qubit_state6(int level) {
  Vec6 s = Vec6::Zero();
  s(level) = 1.0;
  return s;
}

TEST(Spectator, NoCouplingNoLeakage) {
  const PulseSpec p = default_pulse();
  const auto d = DriveParams::for_pulse(p);
  SpectatorConfig cfg;
  cfg.rabi_ratio = 0.0;
  const auto r = simulate_spectator(qubit_state6(0), p, d, cfg);
  EXPECT_NEAR(r.leakage, 0.0, 1e-15);
  EXPECT_NEAR(r.state.norm(), 1.0, 1e-10);
}

TEST(Spectator, NormPreserved) {
  PulseSpec p = default_pulse();
  p.t_half_pi = 2e-6;
  const auto d = DriveParams::for_pulse(p);
  const auto r = simulate_spectator(qubit_state6(1), p, d, SpectatorConfig{});
  EXPECT_NEAR(r.state.norm(), 1.0, 1e-10);
  EXPECT_GT(r.leakage, 0.0);
}

TEST(Spectator, LeakageFallsWithRampTime) {
  PulseSpec p = default_pulse();
  p.t_half_pi = 2e-6;
  double prev = 1.0;
  for (int ns = 0; ns <= 80; ns += 10) {
    p.ramp_time = ns * 1e-9;
    const auto d = DriveParams::for_pulse(p);
    const double leak = simulate_spectator(qubit_state6(0), p, d, SpectatorConfig{}).leakage;
    EXPECT_LT(leak, prev) << ns << " ns";
    prev = leak;
  }
}

TEST(Spectator, RbErrorAtTwoMicroseconds) {
  PulseSpec p = default_pulse();
  p.t_half_pi = 2e-6;
  const auto d = DriveParams::for_pulse(p);
  const auto r = spectator_rb_error(p, d, SpectatorConfig{}, 200, 4, 1);
  EXPECT_GT(r.error_per_clifford, 1.5e-10);
  EXPECT_LT(r.error_per_clifford, 1.5e-8);
}

TEST(CounterRotating, DisabledIsZero) {
  const PulseSpec p = default_pulse();
  const auto d = DriveParams::for_pulse(p);
  EXPECT_EQ(counter_rotating_pulse_error(50.0 * d.omega_q, p, d, false), 0.0);
}

TEST(CounterRotating, RejectsLowFrequency) {
  const PulseSpec p = default_pulse();
  const auto d = DriveParams::for_pulse(p);
  EXPECT_THROW(counter_rotating_pulse_error(5.0 * d.omega_q, p, d), SimulationError);
}

TEST(CounterRotating, QuadraticScalingAndExtrapolation) {
  const PulseSpec p = default_pulse();
  const auto d = DriveParams::for_pulse(p);
  const auto est = counter_rotating_error(50.0 * d.omega_q, kTwoPi * 3.123e9, p, d);
  EXPECT_NEAR(est.scaling_ratio, 4.0, 0.4);
  EXPECT_LT(est.extrapolated, 1e-10);
  EXPECT_GT(est.extrapolated, 0.0);
}

}  // namespace
}  // namespace ionrb

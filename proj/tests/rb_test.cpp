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

#include "ionrb/rb.hpp"

#include <array>
#include <cmath>

#include <gtest/gtest.h>

namespace ionrb {
namespace {

RBPlanConfig small_plan(std::vector<int> lengths, int seqs = 4, int shots = 50) {
  RBPlanConfig c;
  c.lengths = std::move(lengths);
  c.seqs_per_length = seqs;
  c.shots_per_seq = shots;
  c.seed = 2024;
  return c;
}

int total_errors(const RBDataset& d) {
  int e = 0;
  for (const auto& r : d.records) e += r.errors;
  return e;
}

TEST(Plan, DefaultLengths) {
  const auto l = default_lengths();
  ASSERT_EQ(l.size(), 5u);
  EXPECT_EQ(l.front(), 100);
  EXPECT_EQ(l.back(), 30000);
  for (std::size_t i = 1; i < l.size(); ++i) {
    EXPECT_NEAR(static_cast<double>(l[i]) / l[i - 1], std::pow(300.0, 0.25), 0.01);
  }
}

TEST(Plan, LengthOneIsCliffordPlusInverse) {
  const auto plan = generate_plan(small_plan({1}, 50));
  for (const auto& s : plan.sequences) {
    ASSERT_EQ(s.gates.cliffords.size(), 1u);
    EXPECT_EQ(s.gates.recovery, CliffordGroup::instance().inverse(s.gates.cliffords[0]));
  }
}

TEST(Plan, DeterministicForSeed) {
  auto cfg = small_plan({3, 10, 30});
  EXPECT_EQ(generate_plan(cfg).to_json().dump(), generate_plan(cfg).to_json().dump());
  auto other = cfg;
  other.seed = 2025;
  EXPECT_NE(generate_plan(cfg).to_json().dump(), generate_plan(other).to_json().dump());
}

TEST(Plan, CliffordsAreUniform) {
  const auto plan = generate_plan(small_plan({1000}, 24));
  std::array<int, kCliffordCount> hist{};
  int prepared1 = 0, shelve = 0;
  for (const auto& s : plan.sequences) {
    for (int g : s.gates.cliffords) ++hist[g];
    prepared1 += s.gates.prepared_state;
    shelve += s.gates.shelve_expected ? 1 : 0;
  }
  for (int h : hist) {
    EXPECT_GE(h, 900);
    EXPECT_LE(h, 1100);
  }
  const auto big = generate_plan(small_plan({1}, 4000));
  prepared1 = shelve = 0;
  for (const auto& s : big.sequences) {
    prepared1 += s.gates.prepared_state;
    shelve += s.gates.shelve_expected ? 1 : 0;
  }
  EXPECT_NEAR(prepared1, 2000, 5 * std::sqrt(1000.0));
  EXPECT_NEAR(shelve, 2000, 5 * std::sqrt(1000.0));
}

TEST(Plan, RejectsBadConfig) {
  auto c = small_plan({10, 5});
  EXPECT_THROW(generate_plan(c), std::invalid_argument);
  c = small_plan({10});
  c.shots_per_seq = 0;
  EXPECT_THROW(generate_plan(c), std::invalid_argument);
}

TEST(RunRb, NoiselessGivesNoErrors) {
  const auto plan = generate_plan(small_plan({1, 20, 200}));
  for (SimTier tier : {SimTier::kFast, SimTier::kFull}) {
    const auto d = run_rb(plan, RbNoiseConfig{}, {tier, 1});
    EXPECT_EQ(total_errors(d), 0);
    for (const auto& s : plan.sequences) {
      EXPECT_NEAR(sequence_survival(plan, s, RbNoiseConfig{}, tier, 0), 1.0, 1e-9);
    }
  }
}

TEST(RunRb, FastAndFullTiersAgreeForAmplitudeOffset) {
  auto cfg = small_plan({100}, 6);
  const auto plan = generate_plan(cfg);
  RbNoiseConfig noise;
  const double omega_q = pulse_for_gate_time(cfg.gate_time, noise.pulse).nominal_rabi();
  noise.amplitude.mu = {1e-3 * omega_q};
  for (const auto& s : plan.sequences) {
    const double fast = sequence_survival(plan, s, noise, SimTier::kFast, 0);
    const double full = sequence_survival(plan, s, noise, SimTier::kFull, 0);
    EXPECT_LT(fast, 1.0 - 1e-6);
    EXPECT_NEAR(fast, full, 1e-4);
  }
}

// Cross-tier agreement of the shot-averaged survival with random per-shot
// amplitude and motional modulation.
TEST(RunRb, TiersAgreeOnMeanWithShotNoise) {
  auto cfg = small_plan({40}, 2);
  const auto plan = generate_plan(cfg);
  RbNoiseConfig noise;
  const double omega_q = pulse_for_gate_time(cfg.gate_time, noise.pulse).nominal_rabi();
  noise.amplitude.sigma = {3e-3 * omega_q};
  MotionalModel m;
  m.n_bar0 = 2000.0;
  noise.motion = m;
  for (const auto& s : plan.sequences) {
    double fast = 0.0, full = 0.0;
    constexpr int kShots = 40;
    for (int shot = 0; shot < kShots; ++shot) {
      fast += sequence_survival(plan, s, noise, SimTier::kFast, shot);
      full += sequence_survival(plan, s, noise, SimTier::kFull, shot);
    }
    fast /= kShots;
    full /= kShots;
    const double err = std::max(1.0 - fast, 1.0 - full);
    EXPECT_GT(err, 1e-4);
    EXPECT_NEAR(1.0 - fast, 1.0 - full, 0.35 * err);
  }
}

TEST(RunRb, WorkerCountDoesNotChangeOutput) {
  const auto plan = generate_plan(small_plan({5, 50, 500}, 6, 40));
  RbNoiseConfig noise;
  noise.t2 = 1e-3;
  noise.spam = 0.01;
  const auto a = run_rb(plan, noise, {SimTier::kFast, 1});
  const auto b = run_rb(plan, noise, {SimTier::kFast, 3});
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_GT(total_errors(a), 0);
}

TEST(RunRb, SpamOffsetAtShortLengths) {
  const auto plan = generate_plan(small_plan({1, 2}, 100, 1000));
  RbNoiseConfig noise;
  noise.spam = 0.05;
  const auto d = run_rb(plan, noise);
  const double rate = static_cast<double>(total_errors(d)) / (200 * 1000);
  EXPECT_NEAR(rate, 0.05, 5 * std::sqrt(0.05 * 0.95 / 200000));
}

// Identical survival probability for every sequence: counts should be
// binomial, so their spread matches n p (1 - p).
TEST(RunRb, CountsAreBinomial) {
  const auto plan = generate_plan(small_plan({200}, 400, 200));
  RbNoiseConfig noise;
  noise.depolarizing = 5e-4;
  const auto d = run_rb(plan, noise);
  double mean = 0.0, var = 0.0;
  for (const auto& r : d.records) mean += r.errors;
  mean /= d.records.size();
  for (const auto& r : d.records) var += (r.errors - mean) * (r.errors - mean);
  var /= d.records.size() - 1;
  const double p = mean / 200.0;
  const double expected = 200.0 * p * (1.0 - p);
  // Sampling sd of a variance estimate is about var * sqrt(2 / (n - 1)).
  EXPECT_NEAR(var, expected, 3.0 * expected * std::sqrt(2.0 / 399.0));
  const double f = std::pow(1.0 - 1e-3, 201);
  EXPECT_NEAR(p, 0.5 * (1.0 - f), 4.0 * std::sqrt(p / (400 * 200)));
}

TEST(RunRb, DatasetSerialisationRoundTrip) {
  const auto plan = generate_plan(small_plan({2, 20}, 3, 10));
  RbNoiseConfig noise;
  noise.depolarizing = 0.01;
  auto d = run_rb(plan, noise);
  const auto j = RBDataset::from_json(d.to_json());
  EXPECT_EQ(j.to_json().dump(), d.to_json().dump());
  const auto c = RBDataset::from_csv(d.to_csv());
  EXPECT_EQ(c.to_json().dump(), d.to_json().dump());
  EXPECT_THROW(RBDataset::from_csv("length,seq_id,errors,shots\n1,0,5,3\n"), std::invalid_argument);
}

TEST(IdleRb, ZeroRatesZeroErrors) {
  auto cfg = small_plan({100, 1000});
  cfg.mode = RbMode::kIdle;
  const auto d = run_idle_rb(generate_plan(cfg), IdleRates{});
  EXPECT_EQ(total_errors(d), 0);
}

TEST(IdleRb, ErrorProbabilityFollowsRates) {
  auto cfg = small_plan({3000}, 1, 1);
  cfg.mode = RbMode::kIdle;
  const auto plan = generate_plan(cfg);
  RbNoiseConfig noise;
  noise.idle = {1.6e-2, 1.3e-2, 1.2e-2, 1e-3};
  const auto& s = plan.sequences[0];
  const double t = s.gates.pulse_train().size() * cfg.gate_time /
                   CliffordGroup::instance().mean_pulses();
  const double p = sequence_survival(plan, s, noise, SimTier::kFast, 0);
  const int e = s.gates.prepared_state;
  const double leak = noise.idle.leak_rate(e) * t, flip = 1e-3 * t, eb = 1.6e-2 * t;
  const double expected = s.gates.shelve_expected ? leak + flip : eb + flip;
  EXPECT_NEAR(1.0 - p, expected, 1e-3 * expected);
}

TEST(Irmb, ZeroDelayMatchesGateRb) {
  auto cfg = small_plan({10, 100}, 4, 30);
  RbNoiseConfig noise;
  noise.t2 = 5e-3;
  const auto gate = run_rb(generate_plan(cfg), noise);
  cfg.mode = RbMode::kIrmb;
  cfg.irmb_delay = 0.0;
  const auto irmb = run_irmb(generate_plan(cfg), noise);
  ASSERT_EQ(gate.records.size(), irmb.records.size());
  for (std::size_t i = 0; i < gate.records.size(); ++i) {
    EXPECT_EQ(gate.records[i].errors, irmb.records[i].errors);
  }
}

TEST(Irmb, PhaseCompensationHelps) {
  auto cfg = small_plan({50}, 6, 10);
  cfg.mode = RbMode::kIrmb;
  cfg.irmb_delay = 100e-6;
  const auto plan = generate_plan(cfg);
  RbNoiseConfig noise;
  noise.drive.zeeman.shift_at_full_amp = kTwoPi * 9.0;
  noise.drive.detuning = kTwoPi * 9.0;
  RbNoiseConfig off = noise;
  off.phase_compensation = false;
  double err_on = 0.0, err_off = 0.0;
  for (const auto& s : plan.sequences) {
    err_on += 1.0 - sequence_survival(plan, s, noise, SimTier::kFast, 0);
    err_off += 1.0 - sequence_survival(plan, s, off, SimTier::kFast, 0);
  }
  EXPECT_GT(err_off, err_on);
  EXPECT_GT(err_off, 1e-3);
  EXPECT_LT(err_on, 1e-6);
}

TEST(Irmb, DephasingErrorGrowsWithDelay) {
  auto cfg = small_plan({200}, 4, 1);
  cfg.mode = RbMode::kIrmb;
  RbNoiseConfig noise;
  noise.t2 = 1.0;
  double prev = -1.0;
  for (double delay : {0.0, 1e-4, 4e-4}) {
    cfg.irmb_delay = delay;
    const auto plan = generate_plan(cfg);
    double err = 0.0;
    for (const auto& s : plan.sequences) {
      for (int shot = 0; shot < 200; ++shot) {
        err += 1.0 - sequence_survival(plan, s, noise, SimTier::kFast, shot);
      }
    }
    EXPECT_GT(err, prev);
    prev = err;
  }
}

}  // namespace
}  // namespace ionrb

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

#include "ionrb/ffunc.hpp"

#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "ionrb/linalg.hpp"
#include "ionrb/rng.hpp"

namespace ionrb {
namespace {

std::vector<double> log_omegas(double lo, double hi, int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return w;
}

ControlTimeline random_timeline(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ControlTimeline tl;
  for (int i = 0; i < n; ++i) {
    const double d = 1e-6 * (0.5 + u(rng));
    const double rabi = u(rng) < 0.3 ? 0.0 : 2e6 * u(rng);
    tl.segments.push_back({d, kTwoPi * u(rng), rabi});
  }
  return tl;
}

Mat2 pauli(int j) {
  const Complex i{0.0, 1.0};
  Mat2 m;
  if (j == 0) m << 0.0, 1.0, 1.0, 0.0;
  if (j == 1) m << 0.0, -i, i, 0.0;
  if (j == 2) m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

// U(t) as an explicit product of SU(2) segment propagators.
Mat2 propagator_at(const ControlTimeline& tl, double t) {
  Mat2 u = Mat2::Identity();
  for (const auto& s : tl.segments) {
    const double dt = std::min(s.duration, t);
    if (dt <= 0.0) break;
    u = su2_exp(s.rabi * std::cos(s.phase), s.rabi * std::sin(s.phase), 0.0, dt) * u;
    t -= dt;
  }
  return u;
}

TEST(PhaseSpectrum, SsbConversion) {
  EXPECT_NEAR(ssb_to_sphi(-100.0), 2e-10, 1e-22);
  EXPECT_NEAR(thermal_floor_dbc(290.0, 30.0), -204.0, 0.05);
  const auto psd = ssb_to_psd({{1.0, -80.0}, {10.0, -100.0}, {1e3, -100.0}, {1e4, -90.0}});
  double prev = psd(1.0);
  for (double f = 1.0; f <= 10.0; f *= 1.1) {
    EXPECT_LE(psd(f), prev * (1.0 + 1e-12));
    prev = psd(f);
  }
  prev = psd(1e3);
  for (double f = 1e3; f <= 1e4; f *= 1.1) {
    EXPECT_GE(psd(f), prev * (1.0 - 1e-12));
    prev = psd(f);
  }
}

TEST(PhaseSpectrum, LogLogInterpolationAndFlatEnds) {
  // A 1/f^2 law is exact under log-log interpolation.
  const auto psd = ssb_to_psd({{1.0, -40.0}, {1e4, -120.0}});
  for (double f : {2.0, 37.0, 512.0, 9000.0}) {
    EXPECT_NEAR(psd(f) / (ssb_to_sphi(-40.0) / (f * f)), 1.0, 1e-10);
  }
  EXPECT_DOUBLE_EQ(psd(1e-3), psd(1.0));
  EXPECT_DOUBLE_EQ(psd(1e7), psd(1e4));
  EXPECT_THROW(ssb_to_psd({{10.0, -90.0}, {10.0, -91.0}}), std::invalid_argument);
  EXPECT_THROW(ssb_to_psd({{-1.0, -90.0}}), std::invalid_argument);
}

TEST(PhaseSpectrum, WhiteFrequencyFloor) {
  const auto psd = white_frequency_psd(3700.0);
  for (double f : {1e-2, 1.0, 1e5}) EXPECT_NEAR(psd.frequency_psd(f), 4.0 / 3700.0, 1e-15);
}

TEST(PhaseSpectrum, SyntheticCurveIsValid) {
  const auto curve = synthetic_ssb_curve();
  EXPECT_NO_THROW(ssb_to_psd(curve));
  EXPECT_GT(curve.back().dbc_per_hz, thermal_floor_dbc(290.0, 30.0));
}

TEST(Timeline, ToggleFrameMatchesPropagator) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto tl = random_timeline(rng, 6);
    std::uniform_real_distribution<double> u(0.0, tl.duration());
    for (int k = 0; k < 10; ++k) {
      const double t = u(rng);
      const Mat2 uu = propagator_at(tl, t);
      const Mat2 z = uu.adjoint() * pauli(2) * uu;
      const auto c = toggling_sigma_z(tl, t);
      for (int j = 0; j < 3; ++j) EXPECT_NEAR(c[j], (0.5 * (z * pauli(j)).trace()).real(), 1e-10);
    }
  }
}

TEST(Timeline, RejectsBadSegments) {
  ControlTimeline tl;
  EXPECT_THROW(tl.validate(), std::invalid_argument);
  tl.segments.push_back({0.0, 0.0, 1.0});
  EXPECT_THROW(tl.validate(), std::invalid_argument);
  EXPECT_THROW(ControlTimeline::free_evolution(-1.0), std::invalid_argument);
}

TEST(FilterFunction, FreeEvolutionIsRamsey) {
  const double tau = 2e-3;
  const auto w = log_omegas(1e-1, 1e7, 200);
  const auto g = filter_function(ControlTimeline::free_evolution(tau), w);
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_NEAR(g[i], ramsey_filter(w[i], tau), 1e-12 * std::max(1.0, g[i]));
  }
  // Static limit: G grows as (omega tau / 2)^2.
  for (double wi : {1e-3, 1e-2}) {
    const double gi = filter_function(ControlTimeline::free_evolution(tau), {wi})[0];
    EXPECT_NEAR(gi / std::pow(0.5 * wi * tau, 2), 1.0, 1e-4);
  }
}

TEST(FilterFunction, SpinEchoMatchesClosedForm) {
  const double tau = 1e-2;
  const auto tl = ControlTimeline::spin_echo(tau, 1e-12 * tau);
  const auto w = log_omegas(1e-2 / tau, 1e2 / tau, 401);
  const auto g = filter_function(tl, w);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double ref = spin_echo_filter(w[i], tau);
    EXPECT_NEAR(g[i] / ref, 1.0, 1e-6) << "omega tau = " << w[i] * tau;
  }
  EXPECT_LT(filter_function(tl, {1e-6 / tau})[0], 1e-24);
}

TEST(FilterFunction, MatchesTimeDomainQuadrature) {
  std::mt19937_64 rng(8);
  const auto tl = random_timeline(rng, 5);
  const double total = tl.duration();
  const int n = 20000;
  const double h = total / n;
  for (double w : {3e4, 1e6, 7e6}) {
    std::array<std::complex<double>, 3> y{};
    for (int i = 0; i <= n; ++i) {
      const double t = i * h;
      const double wt = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      const auto c = toggling_sigma_z(tl, t);
      for (int j = 0; j < 3; ++j) y[j] += wt * c[j] * std::polar(1.0, w * t);
    }
    double full = 0.0, transverse = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double p = std::norm(y[j] * (h / 3.0));
      full += p;
      if (j < 2) transverse += p;
    }
    // Simpson is only first-order accurate across segment kinks in c(t).
    EXPECT_NEAR(filter_function(tl, {w})[0] / (0.25 * w * w * full), 1.0, 1e-3);
    EXPECT_NEAR(filter_function(tl, {w}, FilterProjection::kTransverse)[0] /
                    (0.25 * w * w * transverse),
                1.0, 1e-3);
  }
}

TEST(FilterFunction, StaticWeightOfFreeEvolution) {
  EXPECT_NEAR(static_weight(ControlTimeline::free_evolution(3.0)), 9.0, 1e-12);
  EXPECT_NEAR(static_weight(ControlTimeline::free_evolution(3.0), FilterProjection::kTransverse),
              0.0, 1e-12);
  EXPECT_NEAR(static_weight(ControlTimeline::spin_echo(3.0, 1e-9)), 0.0, 1e-16);
  const Pulse x90[] = {Pulse::kPlusX};
  EXPECT_EQ(static_weight(ControlTimeline::from_pulses(x90, 1e-5), FilterProjection::kFull, true),
            0.0);
}

TEST(ChiOverlap, ZeroPsdGivesUnitFidelity) {
  const auto r = chi_overlap(PhasePsd{}, ControlTimeline::free_evolution(1.0));
  EXPECT_EQ(r.chi, 0.0);
  EXPECT_EQ(r.fidelity, 1.0);
}

TEST(ChiOverlap, WhiteFrequencyRamseyIsLinearInTau) {
  const double t2 = 10.0;
  const auto psd = white_frequency_psd(t2);
  for (double tau : {0.1, 1.0, 5.0}) {
    const auto r = chi_overlap(psd, ControlTimeline::free_evolution(tau));
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.chi / (tau / t2), 1.0, 2e-3);
    EXPECT_NEAR(r.fidelity, 0.5 * (1.0 + std::exp(-tau / t2)), 1e-3);
  }
}

TEST(ChiOverlap, MatchesTrajectoryMonteCarlo) {
  const double t2 = 1.0;
  const auto psd = white_frequency_psd(t2);
  const FrequencyPsd beta = [&](double f) { return psd.frequency_psd(f); };
  constexpr int kTraj = 4000;
  double sxy = 0.0, sxx = 0.0, sxy_mc = 0.0;
  for (double tau : {0.25, 0.5, 0.75}) {
    TrajectoryOptions o;
    o.f_min = 1e-3 / tau;
    o.f_max = 1e4 / tau;
    double mean = 0.0;
    for (int k = 0; k < kTraj; ++k) {
      Rng rng = make_stream(77, {static_cast<std::uint64_t>(tau * 1000), static_cast<std::uint64_t>(k)});
      const auto traj = dephasing_trajectory(beta, tau, tau / 1e5, rng, o);
      mean += 0.5 * (1.0 + std::cos(traj.phase_integral(0.0, tau)));
    }
    mean /= kTraj;
    const double chi_mc = -std::log(2.0 * mean - 1.0);
    const double chi = chi_overlap(psd, ControlTimeline::free_evolution(tau)).chi;
    sxy += tau * chi;
    sxy_mc += tau * chi_mc;
    sxx += tau * tau;
  }
  EXPECT_NEAR((sxy_mc / sxx) / (sxy / sxx), 1.0, 0.05);
}

TEST(ChiOverlap, GridConvergence) {
  const auto psd = ssb_to_psd(synthetic_ssb_curve());
  for (const auto& tl : {ControlTimeline::free_evolution(1e-3), ControlTimeline::spin_echo(0.1, 1e-5)}) {
    ChiOptions o;
    o.adaptive = false;
    o.points_per_decade = 800;
    const double a = chi_overlap(psd, tl, FilterProjection::kFull, o).chi;
    o.points_per_decade = 1600;
    const double b = chi_overlap(psd, tl, FilterProjection::kFull, o).chi;
    EXPECT_NEAR(a / b, 1.0, 1e-3);
  }
}

TEST(ChiOverlap, MonotoneInPsd) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  const auto tl = ControlTimeline::spin_echo(1e-2, 1e-5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<SsbPoint> lo, hi;
    for (double f : {1.0, 1e1, 1e2, 1e3, 1e4, 1e5}) {
      const double l = -120.0 + u(rng);
      lo.push_back({f, l});
      hi.push_back({f, l + u(rng)});
    }
    const double a = chi_overlap(ssb_to_psd(lo), tl).chi;
    const double b = chi_overlap(ssb_to_psd(hi), tl).chi;
    EXPECT_GE(a, 0.0);
    EXPECT_GE(b, a);
  }
}

TEST(ChiOverlap, EchoSuppressesLowFrequencyNoise) {
  const double tau = 1.0;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-80.0, -40.0);
  for (int trial = 0; trial < 10; ++trial) {
    // Support ends a decade below 1 / tau, then falls off a cliff.
    const std::vector<SsbPoint> curve = {
        {1e-4, u(rng)}, {1e-3, u(rng)}, {1e-2, u(rng)}, {1e-1, u(rng)}, {2e-1, -400.0}};
    ChiOptions o;
    o.f_min = 1e-6;
    const double ramsey = chi_overlap(ssb_to_psd(curve), ControlTimeline::free_evolution(tau),
                                      FilterProjection::kFull, o)
                              .chi;
    const double echo = chi_overlap(ssb_to_psd(curve), ControlTimeline::spin_echo(tau, 1e-6),
                                    FilterProjection::kFull, o)
                            .chi;
    EXPECT_LT(echo, ramsey);
  }
}

TEST(ChiOverlap, WarnsAboutEdgeMass) {
  // White phase noise keeps piling up towards the top of the band.
  const auto psd = ssb_to_psd({{1.0, -120.0}, {1e6, -120.0}});
  const auto r = chi_overlap(psd, ControlTimeline::free_evolution(1e-3));
  EXPECT_GT(r.high_edge_fraction, 0.01);
  EXPECT_FALSE(r.warnings.empty());
  const auto quiet = chi_overlap(white_frequency_psd(1.0), ControlTimeline::free_evolution(1e-3));
  EXPECT_TRUE(quiet.warnings.empty());
}

IrmbPredictOptions quick_options() {
  IrmbPredictOptions o;
  o.lengths = {1, 10, 40, 160};
  o.n_random_seqs = 10;
  o.points_per_decade = 60;
  return o;
}

TEST(PredictIrmb, ZeroPsdGivesZeroError) {
  const auto p = predict_irmb(PhasePsd{}, 10e-6, {0.0, 1e-4}, quick_options());
  for (const auto& pt : p.points) EXPECT_EQ(pt.error, 0.0);
}

TEST(PredictIrmb, WhiteNoiseRecoversT2) {
  constexpr double kT2 = 69.0;
  const double t = 10e-6;
  const std::vector<double> delays = {0.0, 50e-6, 100e-6, 200e-6};
  const auto p = predict_irmb(white_frequency_psd(kT2), t, delays, quick_options());
  EXPECT_NEAR(p.t2_star_star / kT2, 1.0, 0.1);
  // Linear: every point sits on the fitted line.
  for (const auto& pt : p.points) {
    EXPECT_NEAR(pt.error / (p.intercept + p.slope * pt.delay), 1.0, 0.05);
  }
  // Per pi/2 pulse: t / (3 T2).
  const double ppc = CliffordGroup::instance().mean_pulses();
  EXPECT_NEAR((p.points.front().error / ppc) / (t / (3.0 * kT2)), 1.0, 0.1);
}

TEST(PredictIrmb, StaticDetuningHurtsOnlyLongDelays) {
  const double t = 10e-6;
  const std::vector<double> delays = {0.0, 1e-3};
  const auto psd = white_frequency_psd(69.0);
  const auto base = predict_irmb(psd, t, delays, quick_options());
  auto o = quick_options();
  o.static_detuning_hz = 2.5;
  const auto shifted = predict_irmb(psd, t, delays, o);
  EXPECT_DOUBLE_EQ(shifted.points[0].error, base.points[0].error);
  EXPECT_GT(shifted.points[1].error, 1.5 * base.points[1].error);
}

TEST(PredictIrmb, ValidatesAndIsDeterministic) {
  auto o = quick_options();
  o.n_random_seqs = 9;
  EXPECT_THROW(predict_irmb(white_frequency_psd(1.0), 1e-5, {0.0}, o), std::invalid_argument);
  o = quick_options();
  const auto a = predict_irmb(white_frequency_psd(69.0), 1e-5, {0.0, 1e-4}, o);
  o.workers = 3;
  const auto b = predict_irmb(white_frequency_psd(69.0), 1e-5, {0.0, 1e-4}, o);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(PredictIrmb, TunedSyntheticCurveAgreesWithSpinEcho) {
  const double t = 10e-6;
  const std::vector<double> delays = {0.0, 100e-6, 200e-6};
  const auto o = quick_options();
  PhasePsd psd = ssb_to_psd(synthetic_ssb_curve());
  psd.scale = tune_psd_scale(psd, t, delays, 69.0, o);
  const auto p = predict_irmb(psd, t, delays, o);
  EXPECT_NEAR(p.t2_star_star / 69.0, 1.0, 0.02);
  // Long-timescale spin echo follows the same decoherence rate.
  for (double tau : {0.1, 1.0, 10.0}) {
    const double err = 1.0 - chi_overlap(psd, ControlTimeline::spin_echo(tau, 20e-6)).fidelity;
    const double trend = 0.5 * (1.0 - std::exp(-tau / p.t2_star_star));
    EXPECT_GT(err / trend, 0.5) << tau;
    EXPECT_LT(err / trend, 2.0) << tau;
  }
}

}  // namespace
}  // namespace ionrb

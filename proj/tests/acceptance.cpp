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

// End-to-end acceptance checks. Prints one PASS or FAIL line per criterion
// with the measured numbers behind it and exits non-zero if any fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ionrb/budget.hpp"
#include "ionrb/calibration.hpp"
#include "ionrb/clifford.hpp"
#include "ionrb/commands.hpp"
#include "ionrb/estimator.hpp"
#include "ionrb/ffunc.hpp"
#include "ionrb/linalg.hpp"
#include "ionrb/noise.hpp"
#include "ionrb/rb.hpp"
#include "ionrb/rng.hpp"

namespace ionrb {
namespace {

using json = nlohmann::json;

double ppc() { return CliffordGroup::instance().mean_pulses(); }

// Collects named sub-checks; the criterion passes when all of them do.
class Verdict {
 public:
  void check(bool ok, const std::string& what) {
    pass_ = pass_ && ok;
    if (!notes_.empty()) notes_ += "; ";
    notes_ += what + (ok ? "" : " [miss]");
  }
  bool pass() const { return pass_; }
  const std::string& notes() const { return notes_; }

 private:
  bool pass_ = true;
  std::string notes_;
};

std::string num(double v, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

// --- 1: RB round trip ---------------------------------------------------------

Verdict rb_round_trip() {
  Verdict v;
  constexpr int kReps = 20;
  const json base = {{"schema_version", 1},
                     {"plan", {{"lengths", default_lengths()}, {"seqs_per_length", 30},
                               {"shots_per_seq", 100}}},
                     {"noise", {{"depolarizing", 1.5e-7}}},
                     {"tier", "fast"}};
  int covered = 0;
  double slowest = 0.0;
  for (int r = 0; r < kReps; ++r) {
    json c = base;
    c["seed"] = 1000 + r;
    const auto t0 = std::chrono::steady_clock::now();
    const CommandOutput out = run_command("rb", c);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    slowest = std::max(slowest, secs);
    const json fit = out.report.at("fit");
    const double eps = fit.at("epsilon"), sd = fit.at("epsilon_stderr");
    covered += std::abs(eps - 1.5e-7) <= 2.0 * sd;
  }
  v.check(covered >= 18, std::to_string(covered) + "/20 within 2 sigma");
  v.check(slowest <= 300.0, "slowest run " + num(slowest) + " s");
  return v;
}

// --- 2: error table -----------------------------------------------------------

Verdict error_table() {
  Verdict v;
  const ErrorBudget b = budget_table(BudgetInput{});
  struct Row {
    Mechanism m;
    double value, tol;
  };
  const Row rows[] = {{Mechanism::kDecoherence, 0.64e-7, 0.07e-7},
                      {Mechanism::kIdle, 0.62e-7, 0.07e-7},
                      {Mechanism::kAmpNoise, 0.23e-7, 0.02e-7},
                      {Mechanism::kHarmonic, 0.13e-7, 0.02e-7},
                      {Mechanism::kAmpDrift, 0.09e-7, 0.07e-7},
                      // quoted without uncertainty; half a unit in the last digit
                      {Mechanism::kAwg, 0.015e-7, 0.0005e-7}};
  for (const Row& r : rows) {
    const double e = b.error(r.m);
    v.check(std::abs(e - r.value) <= r.tol,
            mechanism_label(r.m) + " " + num(e / 1e-7) + "e-7 vs " + num(r.value / 1e-7) + "(" +
                num(r.tol / 1e-7) + ")");
  }
  v.check(std::abs(b.total - 1.7e-7) <= 0.1e-7, "total " + num(b.total / 1e-7) + "e-7");
  return v;
}

// --- 3: curve shape -----------------------------------------------------------

Verdict curve_shape() {
  Verdict v;
  const auto times = default_curve_gate_times();
  const auto curve = budget_curve(BudgetInput{}, times);
  bool decreasing = true;
  double first = 0.0, last = 0.0;
  const ErrorBudget* prev = nullptr;
  for (const auto& b : curve) {
    if (b.gate_time < 13e-6 * (1.0 - 1e-9)) continue;
    if (!prev) first = b.total;
    if (prev && b.total > prev->total) decreasing = false;
    last = b.total;
    prev = &b;
  }
  v.check(decreasing, "total above 13 us monotone decreasing (" + num(first) + " -> " +
                          num(last) + ")");
  const ErrorBudget& slow = curve.back();
  const double ab = slow.error(Mechanism::kDecoherence) + slow.error(Mechanism::kIdle);
  bool largest = true;
  for (const auto& r : slow.rows) {
    if (r.mechanism != Mechanism::kDecoherence && r.mechanism != Mechanism::kIdle) {
      largest = largest && r.error < std::min(slow.error(Mechanism::kDecoherence),
                                              slow.error(Mechanism::kIdle));
    }
  }
  v.check(ab > 0.5 * slow.total && largest,
          "A+B share at 35 us " + num(ab / slow.total) + ", A and B the two largest rows");
  return v;
}

// --- 4: calibration -----------------------------------------------------------

Verdict calibration_efficacy() {
  Verdict v;
  const DriftScenarioResult d = simulate_drift_scenario(DriftScenario{});
  v.check(d.true_uncalibrated > 1.4e-7 / 1.5 && d.true_uncalibrated < 1.4e-7 * 1.5,
          "drift uncalibrated " + num(d.true_uncalibrated));
  v.check(d.true_calibrated <= 1.5e-8, "drift calibrated " + num(d.true_calibrated));

  PulseSpec p;
  p.t_half_pi = 5.9e-6;
  CalTarget t = CalTarget::for_pulse(p);
  t.drive.zeeman.shift_at_full_amp = kTwoPi * 9.0;
  const double before = detuning_gate_error(effective_frame_offset_hz(t), p.t_half_pi, ppc());
  v.check(before > 6e-8 / 3.0 && before < 6e-8 * 3.0, "9 Hz uncorrected " + num(before));
  double worst = 0.0;
  bool converged = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    t.seed = seed;
    const CalLoopResult r = frequency_cal_loop(CalLoopConfig{}, t);
    converged = converged && r.converged;
    worst = std::max(worst, r.residual_error);
  }
  v.check(converged && worst <= 1e-8, "frequency residual, worst of 5 seeds " + num(worst));
  return v;
}

// --- 5: Walsh algebra ---------------------------------------------------------

Verdict walsh_algebra() {
  Verdict v;
  const double omega = 0.5 * kPi / 5.9e-6;
  double worst_cancel = 0.0;
  for (int order : {1, 3, 7, 15}) {
    const int m = std::countr_zero(static_cast<unsigned>(order) + 1u);
    for (double n : {16.0, 240.0, 3744.0}) {
      const auto a = walsh_coefficients(order, n, omega, m);
      const auto plain = walsh_coefficients(0, n, omega, m);
      for (int k = 0; k < m; ++k) worst_cancel = std::max(worst_cancel, std::abs(a[k] / plain[k]));
    }
  }
  v.check(worst_cancel <= 1e-14, "max |A_k| / A_k(order 0) below order " + num(worst_cancel));

  AmplitudePolynomial drift{{3e-4 * omega, 1e-3 * omega, 5e-3 * omega, 2e-2 * omega}};
  double worst_train = 0.0;
  for (int order : {0, 1, 3, 7, 15}) {
    for (long long n : {16LL, 1024LL, 3744LL}) {
      const auto psi = simulate_walsh_state(order, n, omega, drift);
      const auto a = walsh_coefficients(order, static_cast<double>(n), omega, 3);
      double theta = 0.0;
      for (int k = 0; k <= 3; ++k) theta += drift.coeffs[k] * a[k];
      worst_train = std::max(worst_train, std::abs(psi.p0() - std::pow(std::cos(0.5 * theta), 2)));
    }
  }
  v.check(worst_train <= 1e-8, "cubic drift pulse train vs closed form " + num(worst_train));
  return v;
}

// --- 6: shot-to-shot decay ----------------------------------------------------

Verdict shot_decay() {
  Verdict v;
  const double omega = 0.5 * kPi / 5.9e-6;
  std::vector<long long> ns;
  for (long long n = 250; n <= 3750; n += 250) ns.push_back(n);
  constexpr int kShots = 1000;
  int outside = 0, points = 0;
  double p_end = 1.0;
  for (double s : {5e-5, 1.4e-4, 5e-4}) {
    AmplitudeNoiseModel model;
    model.mu = {0.0};
    model.sigma = {s * omega};
    const WalshRun run = simulate_walsh_run(0, ns, omega, model, kShots, 17);
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const double x = kTwoPi * static_cast<double>(ns[i]) * s;
      const double law = 0.5 + 0.5 * std::exp(-0.5 * x * x);
      // Half a count of slack keeps the band open where the law is exactly 1.
      const double band = 3.0 * std::sqrt(law * (1.0 - law) / kShots) + 0.5 / kShots;
      outside += std::abs(run.p0[i] - law) > band;
      ++points;
      if (s == 1.4e-4 && ns[i] == 3750) p_end = run.p0[i];
    }
  }
  v.check(outside == 0, std::to_string(points - outside) + "/" + std::to_string(points) +
                            " points inside 3 sigma");
  v.check(p_end <= 0.52, "P(0) at 15000 pulses, sigma 1.4e-4: " + num(p_end));
  return v;
}

// --- 7: filter functions ------------------------------------------------------

Verdict filter_functions() {
  Verdict v;
  const PhasePsd white = white_frequency_psd(1.0);
  const FrequencyPsd beta = [&](double f) { return white.frequency_psd(f); };
  constexpr int kTraj = 8000;
  double worst = 0.0;
  for (double tau : {0.25, 0.5, 1.0}) {
    TrajectoryOptions o;
    o.f_min = 1e-3 / tau;
    o.f_max = 1e4 / tau;
    double mean = 0.0;
    for (int k = 0; k < kTraj; ++k) {
      Rng rng = make_stream(91, {static_cast<std::uint64_t>(tau * 1000),
                                 static_cast<std::uint64_t>(k)});
      const auto traj = dephasing_trajectory(beta, tau, tau / 1e5, rng, o);
      mean += 0.5 * (1.0 + std::cos(traj.phase_integral(0.0, tau)));
    }
    mean /= kTraj;
    const double chi_mc = -std::log(2.0 * mean - 1.0);
    const double chi = chi_overlap(white, ControlTimeline::free_evolution(tau)).chi;
    worst = std::max(worst, std::abs(chi_mc / chi - 1.0));
  }
  v.check(worst <= 0.05, "Ramsey chi vs trajectories, worst " + num(worst));

  const double tau = 1e-2;
  const auto echo = ControlTimeline::spin_echo(tau, 1e-12 * tau);
  std::vector<double> w;
  for (int i = 0; i <= 400; ++i) w.push_back(1e-2 / tau * std::pow(1e4, i / 400.0));
  const auto g = filter_function(echo, w);
  double echo_err = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    echo_err = std::max(echo_err, std::abs(g[i] / spin_echo_filter(w[i], tau) - 1.0));
  }
  v.check(echo_err <= 1e-6, "spin echo vs analytic " + num(echo_err));

  // Tune on one set of random sequences, check the slope on another.
  const double t_half_pi = 5.9e-6;
  const std::vector<double> delays = {0.0, 1e-3, 2e-3, 4e-3};
  IrmbPredictOptions o;
  o.lengths = {1, 10, 40, 160};
  o.points_per_decade = 60;
  PhasePsd psd = ssb_to_psd(synthetic_ssb_curve());
  psd.scale = tune_psd_scale(psd, t_half_pi, delays, 69.0, o);
  o.seed = 2;
  const IrmbPrediction p = predict_irmb(psd, t_half_pi, delays, o);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& pt : p.points) {
    sx += pt.delay, sy += pt.error, sxx += pt.delay * pt.delay, sxy += pt.delay * pt.error;
  }
  const double n = static_cast<double>(p.points.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double t2 = ppc() / (3.0 * slope);
  v.check(std::abs(t2 / 69.0 - 1.0) <= 0.1, "IRMB T2** on fresh sequences " + num(t2) + " s");
  return v;
}

// --- 8: idle rates ------------------------------------------------------------

Verdict idle_rates() {
  Verdict v;
  const std::vector<double> delays = {0.0, 3.0, 6.0, 9.0, 12.0, 15.0};
  const IdleRateEstimate e =
      estimate_idle_rates(simulate_idle_schemes(long_delay_rates(), delays, 1000, 5));
  v.check(std::abs(e.eps_b.value - 1.6e-2) <= 2.0 * e.eps_b.std_error,
          "eps_b " + num(e.eps_b.value) + " +- " + num(e.eps_b.std_error));
  v.check(e.p_flip_upper <= 3.6e-3, "P_flip upper " + num(e.p_flip_upper));
  const double row = leakage_rb_error(e.rates(), 13e-6);
  v.check(std::abs(row - 0.62e-7) <= 0.07e-7,
          "idle combination at 13 us from these rates " + num(row / 1e-7) + "e-7");
  return v;
}

// --- 9: oracle equivalences ---------------------------------------------------

Verdict oracles() {
  Verdict v;
  const CliffordGroup& group = CliffordGroup::instance();
  int matched = 0;
  for (int g = 0; g < kCliffordCount; ++g) {
    const auto oracle = min_pulse_decomposition(g);
    matched += oracle.size() == group.pulses(g).size() &&
               phase_distance(word_unitary(oracle), group.rep(g)) < 1e-10;
  }
  v.check(matched == kCliffordCount, "table vs minimal search " + std::to_string(matched) + "/24");

  RBPlanConfig cfg;
  cfg.lengths = {100};
  cfg.seqs_per_length = 6;
  cfg.seed = 2024;
  const RBPlan plan = generate_plan(cfg);
  RbNoiseConfig amp;
  amp.amplitude.mu = {1e-3 * pulse_for_gate_time(cfg.gate_time, amp.pulse).nominal_rabi()};
  double tier_gap = 0.0;
  for (const auto& s : plan.sequences) {
    tier_gap = std::max(tier_gap, std::abs(sequence_survival(plan, s, amp, SimTier::kFast, 0) -
                                           sequence_survival(plan, s, amp, SimTier::kFull, 0)));
  }
  v.check(tier_gap <= 1e-4, "fast vs full survival " + num(tier_gap));

  // Analytic rows against Monte-Carlo RB at a 13 us gate.
  const double gate = 13e-6;
  const PulseSpec pulse = pulse_for_gate_time(gate);
  const double omega_q = pulse.nominal_rabi();
  auto within = [&](const std::string& name, double mc, double formula, double factor) {
    const double r = mc / formula;
    v.check(r >= 1.0 / factor && r <= factor, name + " MC/formula " + num(r));
  };
  {
    RbNoiseConfig noise;
    noise.t2 = 0.05;
    McRbOptions o;
    o.n_sequences = 100;
    o.shots = 10;
    o.seed = 3;
    within("decoherence", mc_rb_error(noise, gate, o).error,
           err_decoherence(pulse.t_half_pi, noise.t2, ppc()), 2.0);
  }
  {
    RBPlanConfig c;
    c.lengths = {1000, 10000, 30000, 100000};
    c.seqs_per_length = 50;
    c.shots_per_seq = 2000;
    c.gate_time = gate;
    c.mode = RbMode::kIdle;
    c.seed = 4;
    const IdleRates rates = idle_benchmark_rates();
    within("idle", mle_fit(run_idle_rb(generate_plan(c), rates)).epsilon,
           leakage_rb_error(rates, gate), 2.0);
  }
  {
    RbNoiseConfig noise;
    noise.amplitude.sigma = {1.4e-4 * omega_q};
    McRbOptions o;
    o.lengths = {1, 300, 1000};
    o.n_sequences = 300;
    o.shots = 6;
    o.seed = 11;
    within("fast amplitude", mc_rb_error(noise, gate, o).error, err_amp_noise(1.4e-4, ppc()), 2.0);
  }
  {
    // Worst point of a pulse-length scan over one motional period.
    const double period = kTwoPi / MotionalModel{}.omega_m;
    for (double n_bar : {1.0, 10.0, 100.0}) {
      MotionalModel m;
      m.n_bar0 = n_bar;
      m.heating_rate = 0.0;
      RbNoiseConfig noise;
      noise.motion = m;
      double best = 0.0;
      for (int k = 0; k < 8; ++k) {
        const double t_half_pi = 5.9e-6 + k * period / 8.0;
        McRbOptions o;
        o.lengths = {1, 100, 300};
        o.n_sequences = 60;
        o.shots = 4;
        const double g = ppc() * (t_half_pi + PulseSpec{}.gap_time);
        best = std::max(best, mc_rb_error(noise, g, o).error /
                                  err_harmonic(m, t_half_pi, 0.0, ppc()));
      }
      within("harmonic n_bar " + num(n_bar), best, 1.0, 1.5);
    }
  }
  {
    const DriftScenarioResult d = simulate_drift_scenario(DriftScenario{});
    within("slow drift", d.true_calibrated, d.interpolated.calibrated, 2.0);
  }
  {
    RbNoiseConfig noise;
    noise.static_detuning = kTwoPi * 5.0;
    McRbOptions o;
    o.lengths = {1, 300, 1000};
    o.n_sequences = 400;
    o.shots = 1;
    o.seed = 12;
    within("Zeeman", mc_rb_error(noise, gate, o).error, err_zeeman(5.0, pulse.t_half_pi, ppc()),
           2.0);
  }
  return v;
}

}  // namespace
}  // namespace ionrb

int main() {
  using ionrb::Verdict;
  const struct {
    int id;
    const char* name;
    std::function<Verdict()> run;
  } criteria[] = {
      {1, "RB round trip", ionrb::rb_round_trip},
      {2, "error table", ionrb::error_table},
      {3, "budget curve shape", ionrb::curve_shape},
      {4, "calibration efficacy", ionrb::calibration_efficacy},
      {5, "Walsh algebra", ionrb::walsh_algebra},
      {6, "shot-to-shot decay", ionrb::shot_decay},
      {7, "filter functions", ionrb::filter_functions},
      {8, "idle rates", ionrb::idle_rates},
      {9, "oracle equivalences", ionrb::oracles},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass();
    std::printf("criterion %d %s  %s: %s (%.1f s)\n", c.id, v.pass() ? "PASS" : "FAIL", c.name,
                v.notes().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of 9 criteria passed\n", 9 - failed);
  return failed == 0 ? 0 : 1;
}

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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ionrb/calibration.hpp"
#include "ionrb/noise.hpp"
#include "ionrb/rb.hpp"

namespace ionrb {

// All errors below are per average Clifford gate unless stated otherwise;
// `ppc` is the mean number of pi/2 pulses per Clifford.

// --- per-mechanism formulas -------------------------------------------------

/// ppc * (1/3) t_half_pi / T2**. An infinite T2** gives 0.
double err_decoherence(double t_half_pi, double t2_star_star, double ppc);

/// Mean thermal occupation over a sequence of `duration`, heating linearly.
double mean_occupation(const MotionalModel& model, double duration);

/// ppc times the motional envelope error, averaged over the linear growth of
/// n_bar across a sequence lasting `sequence_duration`. The envelope is
/// linear in n_bar, so the average is the envelope at the mean occupation.
double err_harmonic(const MotionalModel& model, double t_half_pi, double sequence_duration,
                    double ppc);

/// ppc * (1/2) sigma_rel^2 for a shot-to-shot relative Rabi spread.
double err_amp_noise(double sigma_rel, double ppc);

/// ppc * 2 pi (t_eff delta_hz)^2.
double err_zeeman(double residual_hz, double t_eff, double ppc);

/// ppc * (1/6) (1 / (2^(bits+1) a))^2, the worst-case rounding offset.
double err_awg(const QuantizerConfig& config, double ppc);

/// Per-second idle rates turned into a per-gate error over `gate_time` of
/// wall clock (pulses, ramps and gaps of one average Clifford).
double leakage_rb_error(const IdleRates& rates, double gate_time);

// --- slow amplitude drift ---------------------------------------------------

/// Calibrated amplitude setting at a calibration time.
struct DriftSetpoint {
  double time = 0.0;     // s
  double setting = 1.0;  // amp_scale after the calibration
};

struct DriftError {
  double calibrated = 0.0;    // setting held between calibrations
  double uncalibrated = 0.0;  // setting held at the first calibration
};

/// The optimal setting is taken to move linearly between setpoints. Between
/// two calibrations the applied setting lags the optimum by a relative
/// offset growing from 0 to (s1 - s0) / s0; the error is the time average of
/// ppc * (1/2) offset^2. Without recalibration the offset is measured from
/// the first setpoint instead.
DriftError err_amp_drift(const std::vector<DriftSetpoint>& setpoints, double ppc);

/// One setpoint per calibration run in a trace: consecutive steps sharing a
/// time stamp form a run and its last setting is the setpoint.
std::vector<DriftSetpoint> setpoints_from_trace(const std::vector<CalStep>& steps);

/// Sinusoidal relative Rabi drift with amplitude-loop calibrations at fixed
/// intervals against the simulated qubit.
struct DriftScenario {
  double amplitude = 5.08e-4;  // peak relative offset
  double period = 900.0;       // s
  double duration = 3600.0;    // s
  double interval = 60.0;      // s between calibrations
  double sigma_rel = 1.4e-4;   // shot-to-shot spread seen by the loop
  std::optional<QuantizerConfig> quantizer = QuantizerConfig{15, 0.24};
  double gate_time = 13e-6;
  CalLoopConfig loop;
  std::uint64_t seed = 1;

  void validate() const;
  double offset_at(double t) const;
};

struct DriftScenarioResult {
  std::vector<CalStep> trace;
  std::vector<DriftSetpoint> setpoints;
  DriftError interpolated;        // err_amp_drift on the setpoints
  double true_calibrated = 0.0;   // time average against the known drift
  double true_uncalibrated = 0.0;
  int failed_calibrations = 0;

  nlohmann::json to_json() const;
};

DriftScenarioResult simulate_drift_scenario(const DriftScenario& scenario);

// --- idle-rate algebra ------------------------------------------------------

/// Which qubit states are shelved (read dark) after the delay.
enum class ShelveScheme { kNone, kPrepared, kOther, kBoth };

std::string to_string(ShelveScheme scheme);
ShelveScheme shelve_scheme_from_string(const std::string& s);

struct SchemePoint {
  double delay = 0.0;  // s
  long long bright = 0;
  long long shots = 0;
};

struct SchemeData {
  ShelveScheme scheme = ShelveScheme::kNone;
  int prepared_state = 0;
  std::vector<SchemePoint> points;
};

struct RateEstimate {
  double value = 0.0;      // per second
  double std_error = 0.0;
};

struct IdleRateEstimate {
  RateEstimate eps_b;
  RateEstimate flip_ac;    // none-shelved vs other-shelved
  RateEstimate flip_bd;    // prepared-shelved vs both-shelved
  RateEstimate p_flip;     // inverse-variance mean of the two
  double p_flip_upper = 0.0;  // max(p_flip, 0) + 2 sigma
  RateEstimate leak[2];       // prepared-shelved minus bit flips
  RateEstimate leak_direct[2];  // both-shelved alone
  bool flip_consistent = true;
  bool leak_consistent = true;
  std::vector<std::string> warnings;

  /// Point estimates as rates, negatives clipped to 0.
  IdleRates rates() const;
  nlohmann::json to_json() const;
};

/// Weighted-least-squares slopes of the error signal against delay for all
/// eight (scheme, prepared state) sets, combined into rates. Flags the two
/// bit-flip estimators disagreeing by more than 3 sigma.
IdleRateEstimate estimate_idle_rates(const std::vector<SchemeData>& data);

/// Binomial four-scheme data from the idle channel, both preparations.
std::vector<SchemeData> simulate_idle_schemes(const IdleRates& rates,
                                              const std::vector<double>& delays, long long shots,
                                              std::uint64_t seed);

// --- budget -----------------------------------------------------------------

enum class Mechanism {
  kDecoherence,
  kIdle,
  kAmpNoise,
  kHarmonic,
  kAmpDrift,
  kZeeman,
  kAwg,
  kSpectator,
  kRamping,
  kNonRwa,
};

std::string to_string(Mechanism m);
Mechanism mechanism_from_string(const std::string& s);
std::vector<Mechanism> all_mechanisms();
/// Letter used in the stacked decomposition, empty for unlettered rows.
std::string mechanism_label(Mechanism m);

/// Which duration enters the residual-Zeeman formula: the whole pi/2 pulse
/// with its ramps, the square pulse of equal area (t_half_pi - ramp_time),
/// or the whole Clifford.
enum class ZeemanTime { kHalfPi, kAreaEquivalent, kClifford };

std::string to_string(ZeemanTime t);
ZeemanTime zeeman_time_from_string(const std::string& s);

/// Idle rates in the proportions of the long-delay shelving measurements,
/// scaled so that they give the idle-benchmarking slope of 0.62e-7 per 13 us
/// Clifford.
IdleRates idle_benchmark_rates();

/// Long-delay shelving-measurement rates (per second).
IdleRates long_delay_rates();

/// Setpoints of the sinusoidal drift scenario calibrated without noise.
std::vector<DriftSetpoint> ideal_drift_log(const DriftScenario& scenario);

struct BudgetInput {
  double gate_time = 13e-6;        // wall clock per average Clifford, s
  double t_half_pi = 5.9e-6;       // pi/2 pulse length including ramps, s
  double ramp_time = 40e-9;        // per edge, s
  double pulses_per_clifford = 0.0;  // 0 takes the Clifford table mean
  double t2_star_star = 69.0;
  double t2_uncertainty = 7.0;
  IdleRates idle = idle_benchmark_rates();
  double idle_rel_uncertainty = 0.07 / 0.62;
  MotionalModel motion;
  double heating_rate_uncertainty = 50.0;
  int longest_sequence = 30000;    // Cliffords in the longest RB sequence
  double sigma_rel = 1.4e-4;
  double sigma_rel_uncertainty = 0.07e-4;
  std::vector<DriftSetpoint> drift_log = ideal_drift_log(DriftScenario{});
  double drift_uncertainty = 0.07e-7;
  double zeeman_residual_hz = 2.5;
  double zeeman_uncertainty_hz = 0.8;
  ZeemanTime zeeman_time = ZeemanTime::kHalfPi;
  QuantizerConfig quantizer{15, 0.24};
  double spectator_bound = 1e-9;
  double ramping_bound = 1e-9;
  double non_rwa_bound = 1e-10;
  std::vector<Mechanism> mechanisms = all_mechanisms();

  void validate() const;
  double ppc() const;
  double zeeman_time_s() const;
  /// Same input at another gate time, with t_half_pi scaled in proportion.
  BudgetInput at_gate_time(double gate_time) const;

  nlohmann::json to_json() const;
  /// Strict: unknown keys are rejected, missing keys keep their defaults.
  static BudgetInput from_json(const nlohmann::json& j);
};

struct BudgetRow {
  Mechanism mechanism = Mechanism::kDecoherence;
  double error = 0.0;
  double uncertainty = 0.0;
  bool bound = false;  // an upper bound carried from simulation
};

struct ErrorBudget {
  double gate_time = 0.0;
  std::vector<BudgetRow> rows;
  double total = 0.0;
  double total_uncertainty = 0.0;  // quadrature sum

  /// 0 when the mechanism is absent.
  double error(Mechanism m) const;
  nlohmann::json to_json() const;
  /// mechanism,label,error,uncertainty,bound plus a total row.
  std::string to_csv() const;
};

ErrorBudget budget_table(const BudgetInput& input);

/// `count` geometric gate times from 4.4 us to 35 us.
std::vector<double> default_curve_gate_times(int count = 32);

std::vector<ErrorBudget> budget_curve(const BudgetInput& input,
                                      const std::vector<double>& gate_times);

/// gate_time,mechanism,error rows for stacked-area plotting.
std::string curve_to_csv(const std::vector<ErrorBudget>& curve);

// --- simulated bounds and Monte-Carlo oracles --------------------------------

struct SimulatedBounds {
  double spectator = 0.0;
  double ramping = 0.0;
  double non_rwa = 0.0;

  nlohmann::json to_json() const;
};

struct BoundOptions {
  int spectator_cliffords = 500;
  int spectator_sequences = 8;
  double zeeman_shift_hz = 9.0;   // ac Zeeman shift at full amplitude
  double omega_q_physical = kTwoPi * 3.123e9;
  double omega_q_scaled_ratio = 50.0;  // scaled qubit frequency / Rabi
  std::uint64_t seed = 1;
  int workers = 1;
};

/// Pulse-level estimates for the three unlettered simulation rows at a gate
/// time: six-level spectator RB, full-tier RB with an amplitude-dependent
/// Zeeman shift whose effective value has been calibrated out, and the
/// extrapolated counter-rotating error.
SimulatedBounds simulate_bounds(double gate_time, const BoundOptions& options = {});

struct McRbOptions {
  std::vector<int> lengths = {1, 300, 1000, 3000};
  int n_sequences = 20;
  int shots = 50;
  SimTier tier = SimTier::kFast;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct McRbResult {
  double error = 0.0;
  double std_error = 0.0;  // jackknife over sequences
};

/// Per-Clifford error of a noise configuration from exact shot-averaged
/// survivals (no readout sampling), fitted with the decay model.
McRbResult mc_rb_error(const RbNoiseConfig& noise, double gate_time,
                       const McRbOptions& options = {});

}  // namespace ionrb

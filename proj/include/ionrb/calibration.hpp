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

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ionrb/noise.hpp"
#include "ionrb/pulse_sim.hpp"
#include "ionrb/rb.hpp"

namespace ionrb {

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The simulated qubit a calibration runs against. The loop only touches the
/// settings (`pulse.amp_scale`, `drive.detuning`); the offsets are the hidden
/// truth it tries to cancel.
struct CalTarget {
  PulseSpec pulse;
  DriveParams drive;
  double amp_offset = 0.0;  // relative Rabi offset Omega0 / Omega_q at amp_scale 1
  double amp_sigma = 0.0;   // relative shot-to-shot spread sigma0 / Omega_q
  std::optional<QuantizerConfig> quantizer;  // amp_scale is routed through the AWG when set
  std::uint64_t seed = 1;
  int workers = 1;

  static CalTarget for_pulse(const PulseSpec& pulse);
  void validate() const;
  /// Relative Rabi multiplier the hardware actually produces for a shot with
  /// standard-normal draw `z`.
  double rabi_multiplier(double z = 0.0) const;
  /// Amplitude offset left after the current setting, (multiplier - 1).
  double residual_amp_offset() const { return rabi_multiplier() - 1.0; }
};

struct CalLoopConfig {
  int n_start = 1;
  double growth = 2.0;
  double p_threshold = 0.75;     // |P - 1/2| >= p_threshold - 1/2 forces a correction
  int shots_per_point = 100;
  long long max_pulses = 20000;  // pi/2 pulses in the longest sequence
  double significance = 3.0;     // binomial standard errors for a significant signal
  bool final_correction = true;  // apply the pooled estimate at the end even if small
  double min_contrast = 0.5;     // stop growing N once fast noise has decayed the signal this far
  double start_time = 0.0;       // wall-clock stamp for the trace, s

  void validate() const;
};

/// Outcome of one calibration point.
struct CalStep {
  double time = 0.0;
  long long n = 0;            // pulse groups (4 pulses) or +/-X pairs
  long long pulses = 0;       // physical pi/2 pulses including the readout pulse
  double p0 = 0.5;            // measured P(|0>) with the readout pulse
  double contrast = 1.0;      // 2 P(|0>) - 1 without the readout pulse
  double estimate = 0.0;      // relative offset, or Hz for frequency steps
  double correction = 0.0;    // applied change of the setting (0 when none)
  double setting = 0.0;       // amp_scale or drive detuning (Hz) after the step
  bool significant = false;
  bool nonlinear = false;     // |P - 1/2| beyond the linear regime
};

nlohmann::json to_json(const CalStep& step);
CalStep cal_step_from_json(const nlohmann::json& j);

/// One JSON object per line. Reading skips blank lines and lines starting with #.
void write_trace(std::ostream& os, const std::vector<CalStep>& steps);
std::vector<CalStep> read_trace(std::istream& is);

/// Linear-regime bound on |P(|0>) - 1/2|.
inline constexpr double kLinearRegime = 0.35;

/// 4N pulses about +X then one more; P(|0>) = (1 - sin phi) / 2 with
/// phi = (4N + 1)(pi/2) offset. `shots` = 0 gives the exact probability at the
/// systematic offset. The estimate is the signed relative offset.
CalStep amplitude_cal_step(long long n, const CalTarget& target, int shots,
                           std::uint64_t stream = 0);

/// P(|0>) of the amplitude sequence at a given relative multiplier, no shot noise.
double amplitude_sequence_p0(long long n, const CalTarget& target, double multiplier,
                             bool readout_pulse = true);

struct CalLoopResult {
  CalTarget target;            // with calibrated settings
  std::vector<CalStep> steps;
  bool converged = false;
  std::string message;
  double residual = 0.0;        // true residual: relative offset or Hz
  double residual_error = 0.0;  // per-Clifford error of the residual
};

CalLoopResult amplitude_cal_loop(const CalLoopConfig& config, const CalTarget& target);

/// N pairs of +X, -X pulses, then a Y pulse. Returns the signed qubit-minus-
/// drive offset in Hz, inverted by Newton iteration on the exact propagator.
CalStep frequency_cal_step(long long n_pairs, const CalTarget& target, int shots,
                           std::uint64_t stream = 0);

/// P(|0>) of the frequency sequence when the frame offset is a constant
/// `offset_hz` during pulses and gaps (the inversion model).
double frequency_sequence_p0(long long n_pairs, const CalTarget& target, double offset_hz,
                             bool readout_pulse = true);

/// Exact P(|0>) of the frequency sequence on the target, no shot noise.
double frequency_sequence_p0_true(long long n_pairs, const CalTarget& target,
                                  bool readout_pulse = true);

/// Effective constant frame offset (Hz) seen by the pairs, found by inverting
/// the noiseless sequence at `n_pairs`.
double effective_frame_offset_hz(const CalTarget& target, long long n_pairs = 64);

CalLoopResult frequency_cal_loop(const CalLoopConfig& config, const CalTarget& target);

/// Per-Clifford errors of residual miscalibrations: (1/2) offset^2 and
/// 2 pi (t_half_pi delta)^2 per pulse, times the mean pulse count.
double amplitude_offset_gate_error(double relative_offset, double pulses_per_clifford);
double detuning_gate_error(double delta_hz, double t_half_pi, double pulses_per_clifford);

// --- Walsh spectroscopy ------------------------------------------------------

/// Walsh order 2^M - 1 for M <= 4 has an explicit sign table.
bool is_walsh_order(int order);
int walsh_m(int order);
/// Sign of segment m (0 <= m < 2^M) of the given order.
int walsh_function(int order, int m);
/// Flip points n_m = m N / 2^M, m = 0..2^M.
std::vector<double> walsh_flip_points(int order, double n_groups);

/// A_0..A_{k_max} for N pulse groups at Rabi frequency omega_q (rad/s).
std::vector<double> walsh_coefficients(int order, double n_groups, double omega_q, int k_max);

/// P(|0>) averaged over Gaussian coefficients Omega_k ~ N(mu_k, sigma_k).
double walsh_probability(int order, double n_groups, double omega_q,
                         const std::vector<double>& mu, const std::vector<double>& sigma = {});

/// Pulse-level final state for a fixed drift polynomial, square pulses with no
/// gaps. `n_groups` must be a multiple of 2^M.
QubitState simulate_walsh_state(int order, long long n_groups, double omega_q,
                                const AmplitudePolynomial& drift);

struct WalshRun {
  int order = 0;
  std::vector<long long> n_groups;
  std::vector<double> p0;
  std::vector<int> shots;

  void validate() const;
  std::vector<double> flip_points(std::size_t i) const {
    return walsh_flip_points(order, static_cast<double>(n_groups[i]));
  }
};

/// Draws shot outcomes. Each shot samples the polynomial from `model`; kFast
/// uses the closed-form rotation, kFull steps through every pulse.
WalshRun simulate_walsh_run(int order, const std::vector<long long>& n_groups, double omega_q,
                            const AmplitudeNoiseModel& model, int shots, std::uint64_t seed,
                            SimTier tier = SimTier::kFast);

struct WalshTerm {
  int k = 0;
  double mu = 0.0;        // |mu_k|, rad/s per s^k (the sign is not observable)
  double mu_upper = 0.0;  // edge of the 2-unit likelihood interval around the best mu
  double sigma = 0.0;
  double sigma_upper = 0.0;
  double nll = 0.0;
  bool identifiable = true;  // false when the data only bound the term from above
};

struct WalshFit {
  double omega_q = 0.0;
  std::vector<WalshTerm> terms;  // one per run, ordered by k

  double sigma0_relative() const;
  nlohmann::json to_json() const;
};

/// Which parameter carries the signal of the order >= 1 runs: the constant
/// part mu_k (sigma_k = 0) or the shot-to-shot spread sigma_k (mu_k = 0).
enum class WalshPolicy { kFitMu, kFitSigma };

struct WalshFitOptions {
  WalshPolicy policy = WalshPolicy::kFitMu;
  // Over the reachable N, mu_0 and sigma_0 nearly trade off against each
  // other; by default mu_0 is held at 0, as the amplitude loop nulls it.
  bool free_mu0 = false;
};

/// Fits each run separately: order 0 gives sigma_0 (and mu_0 when freed);
/// order 2^M - 1 gives the k = M term with every other term ignored.
WalshFit walsh_fit(const std::vector<WalshRun>& runs, double omega_q,
                   const WalshFitOptions& options = {});

/// Per-Clifford error of a drift term mu_k t^k held over a sequence of length
/// `duration`, through (1/2)(dOmega / Omega)^2 averaged over the sequence.
double drift_gate_error(int k, double mu, double omega_q, double duration,
                        double pulses_per_clifford);

}  // namespace ionrb

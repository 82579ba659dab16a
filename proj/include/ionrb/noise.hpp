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

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "ionrb/pulse_sim.hpp"
#include "ionrb/rng.hpp"

namespace ionrb {

// --- amplitude noise and drift ----------------------------------------------

/// Rabi-frequency offset Omega(t) = sum_k Omega_k t^k (rad/s, t in s since the
/// start of the shot). Coefficient k is drawn per shot from N(mu_k, sigma_k).
struct AmplitudeNoiseModel {
  std::vector<double> mu;
  std::vector<double> sigma;

  void validate() const;
  std::size_t order() const { return std::max(mu.size(), sigma.size()); }
  bool is_zero() const;
};

struct AmplitudePolynomial {
  std::vector<double> coeffs;  // rad/s per s^k

  double offset_at(double t) const;
};

AmplitudePolynomial sample_shot_amplitude(const AmplitudeNoiseModel& model, Rng& rng);

// --- motional modulation ----------------------------------------------------

struct MotionalModel {
  double eta = 9.3e-4;
  double omega_m = kTwoPi * 5.6e6;
  double n_bar0 = 2.6;
  double heating_rate = 370.0;  // quanta/s

  void validate() const;
  double n_bar(double t) const { return n_bar0 + heating_rate * t; }
  /// Relative Rabi modulation depth 2 eta sqrt(n_bar).
  double depth(double t) const;
};

/// Amplitude multiplier trace for one pulse starting `t_elapsed` into the
/// shot: 1 + depth * cos(omega_m (t_elapsed + t) + theta), with theta drawn
/// uniformly from `rng`. The trace's time argument is measured from the
/// pulse start.
AmplitudeTrace motional_modulation(const MotionalModel& model, double t_elapsed, Rng& rng);

/// Envelope estimate of the per-pulse error from Rabi modulation at thermal
/// occupation `n_bar`: (dOmega / omega_m)^2 with
/// dOmega = (3 pi / 4) eta sqrt(n_bar + 1/2) / t_half_pi.
double motional_envelope_error(const MotionalModel& model, double n_bar, double t_half_pi);

// --- AWG amplitude quantisation ---------------------------------------------

struct QuantizerConfig {
  int bits = 15;
  double amp_scale = 1.0;

  void validate() const;
  double step() const;
};

double quantize_amplitude(const QuantizerConfig& config, double requested);

/// Worst-case relative Rabi offset from rounding: 1 / (2^(bits+1) a).
double quantization_max_relative_offset(const QuantizerConfig& config);

/// Per pi/2 pulse error at the worst-case offset: (1/6) offset^2.
double quantization_error_per_pulse(const QuantizerConfig& config);

// --- idle leakage, bit flips and measurement errors -------------------------

/// Per-second rates, linearised over the delay. `eps_d_plus_leak{0,1}` lumps
/// dark measurement errors with leakage out of |0> / |1>: the two cannot be
/// told apart and both make the ion read bright.
struct IdleRates {
  double eps_b = 0.0;
  double eps_d_plus_leak0 = 0.0;
  double eps_d_plus_leak1 = 0.0;
  double p_flip = 0.0;

  void validate() const;
  double leak_rate(int state) const { return state == 0 ? eps_d_plus_leak0 : eps_d_plus_leak1; }
  IdleRates scaled(double factor) const;
  /// Per-second RB error: eps_b/2 + (eps_d + (P0L + P1L)/2)/2 + P_flip.
  double rb_error_rate() const;
};

/// Populations after the idle channel. `leak` also carries dark measurement
/// errors (reads bright regardless of shelving).
struct IdlePopulations {
  double p0 = 1.0;
  double p1 = 0.0;
  double leak = 0.0;

  double total() const { return p0 + p1 + leak; }
};

IdlePopulations apply_idle_channel(const IdleRates& rates, int prepared_state, double delay);

/// Same channel applied to a qubit with populations (q0, q1).
IdlePopulations apply_idle_channel(const IdleRates& rates, double q0, double q1, double delay);

/// Probability that state-dependent fluorescence reports bright, given which
/// qubit states were shelved (rendered dark) and the delay-dependent bright
/// measurement error probability.
double bright_probability(const IdlePopulations& pops, bool shelve0, bool shelve1,
                          double eps_b_prob);

/// Outcome of one benchmarking shot as "survival": with the expected state
/// shelved, survival is reading dark; otherwise reading bright.
double survival_probability(const IdleRates& rates, double q_expected, int expected_state,
                            bool shelve_expected, double delay);

// --- dephasing trajectories -------------------------------------------------

/// One-sided PSD of the qubit frequency offset, (rad/s)^2 / Hz, as a function
/// of frequency in Hz.
using FrequencyPsd = std::function<double(double)>;

/// Frequency-offset trace beta(t) = sum_k a_k cos(w_k t + theta_k).
struct DephasingTrajectory {
  std::vector<double> omega;
  std::vector<double> amplitude;
  std::vector<double> phase;

  double beta(double t) const;
  /// Integral of beta over [t0, t1], in closed form.
  double phase_integral(double t0, double t1) const;
  bool empty() const { return omega.empty(); }
};

struct TrajectoryOptions {
  double f_min = 0.0;  // Hz; defaults to 1 / duration
  double f_max = 0.0;  // Hz; defaults to Nyquist of `resolution`
  int tones_per_decade = 64;
};

/// Harmonic-superposition synthesis over log-spaced bins: one tone per bin at
/// a log-uniform random frequency inside the bin, amplitude
/// sqrt(2 S(f) df), uniform phase. Zero-PSD bins are dropped.
DephasingTrajectory dephasing_trajectory(const FrequencyPsd& psd, double duration,
                                         double resolution, Rng& rng,
                                         const TrajectoryOptions& options = {});

// --- phase-noise data -------------------------------------------------------

struct SsbPoint {
  double freq_hz = 0.0;
  double dbc_per_hz = 0.0;
};

/// Reads a two-column CSV (offset frequency in Hz, SSB phase noise in
/// dBc/Hz). Blank lines, '#' comments and a non-numeric header row are
/// skipped. Frequencies must be positive and strictly increasing.
std::vector<SsbPoint> read_ssb_csv(const std::string& path);
std::vector<SsbPoint> parse_ssb_csv(const std::string& text);

}  // namespace ionrb

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
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ionrb/clifford.hpp"
#include "ionrb/noise.hpp"

namespace ionrb {

// --- phase-noise spectra ----------------------------------------------------

/// SSB phase noise to unilateral phase PSD: 2 * 10^(L / 10) rad^2/Hz.
double ssb_to_sphi(double dbc_per_hz);

/// Thermal floor of the SSB phase noise, 30 + 10 log10(kB T) - P_carrier.
double thermal_floor_dbc(double temperature_k, double carrier_dbm);

/// Unilateral phase PSD S_phi(f) in rad^2/Hz, f in Hz. The tabulated part is
/// interpolated linearly in log-log and held flat past either end. An
/// optional white frequency-noise floor adds 4 / (T2 (2 pi f)^2), which gives
/// a free-evolution decay exp(-tau / T2).
struct PhasePsd {
  std::vector<SsbPoint> ssb;
  double scale = 1.0;      // multiplies the tabulated part
  double t2_floor = 0.0;   // s; 0 disables the floor

  void validate() const;
  double operator()(double f_hz) const;
  /// Frequency-offset PSD omega^2 S_phi, (rad/s)^2/Hz, for trajectory synthesis.
  double frequency_psd(double f_hz) const;
  bool is_zero() const;
  /// Lowest and highest tabulated frequency, or {0, 0} when empty.
  std::pair<double, double> band() const;
  nlohmann::json to_json() const;
};

/// Tabulated PSD from an SSB curve.
PhasePsd ssb_to_psd(const std::vector<SsbPoint>& curve);

/// Pure white frequency noise with free-evolution decay time t2.
PhasePsd white_frequency_psd(double t2);

/// Synthetic stand-in for a measured drive chain: a 1/f^2 local-oscillator
/// slope (white frequency noise, T2 near 69 s on its own) up to 10 kHz, a
/// steep roll-off and an amplifier floor at -150 dBc/Hz out to 10 MHz. Not
/// measured data.
std::vector<SsbPoint> synthetic_ssb_curve();

// --- control timelines ------------------------------------------------------

/// Piecewise-constant control. A segment with rabi = 0 is free evolution.
struct TimelineSegment {
  double duration = 0.0;  // s
  double phase = 0.0;     // drive axis azimuth, rad
  double rabi = 0.0;      // rad/s
};

struct ControlTimeline {
  std::vector<TimelineSegment> segments;

  void validate() const;
  double duration() const;

  static ControlTimeline free_evolution(double tau);
  /// Free tau/2, a pi pulse about X lasting t_pi, free tau/2.
  static ControlTimeline spin_echo(double tau, double t_pi);
  /// Square pi/2 pulses of length t_half_pi, each followed by `delay` of free
  /// evolution when delay > 0.
  static ControlTimeline from_pulses(std::span<const Pulse> pulses, double t_half_pi,
                                     double delay = 0.0);
};

/// Which toggling-frame components of the dephasing error enter G.
/// kFull sums all three, so bare free evolution gives sin^2(omega tau / 2).
/// kTransverse keeps the two that move |0>, the survival of a sequence that
/// starts and ends on the z axis.
enum class FilterProjection { kFull, kTransverse };

/// Toggling-frame image of sigma_z at time t, U(t)^dag sigma_z U(t) expanded
/// on the Paulis. For tests and diagnostics.
std::array<double, 3> toggling_sigma_z(const ControlTimeline& timeline, double t);

/// Filter function G(omega) = (omega^2 / 4) sum_j |Y_j(omega)|^2 with
/// Y_j(omega) = integral of the toggling-frame component j times e^{i omega t}.
/// Free evolution of length tau gives sin^2(omega tau / 2), and the decay
/// exponent is chi = (1 / pi) integral S_phi(omega) G(omega) d omega.
std::vector<double> filter_function(const ControlTimeline& timeline,
                                    const std::vector<double>& omegas,
                                    FilterProjection projection = FilterProjection::kFull);

/// |Y(0)|^2 restricted to the projection: the weight of a static detuning.
/// With `free_only` the detuning acts only while the drive is off, as for a
/// bare-frequency error when the driven frequency is calibrated.
double static_weight(const ControlTimeline& timeline,
                     FilterProjection projection = FilterProjection::kFull,
                     bool free_only = false);

double ramsey_filter(double omega, double tau);
double spin_echo_filter(double omega, double tau);

// --- overlap integral -------------------------------------------------------

struct ChiOptions {
  double f_min = 0.0;            // Hz; 0 picks 1e-5 / duration
  double f_max = 0.0;            // Hz; 0 picks 1e4 / duration
  int points_per_decade = 100;   // starting density
  int max_points_per_decade = 12800;
  double rel_tol = 1e-4;         // density doubles until chi moves less than this
  bool adaptive = true;
  double edge_mass_limit = 0.01;  // warn above this fraction in an outer decade
};

struct ChiResult {
  double chi = 0.0;
  double fidelity = 1.0;  // (1 + e^-chi) / 2
  int points_per_decade = 0;
  bool converged = true;
  double low_edge_fraction = 0.0;
  double high_edge_fraction = 0.0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

/// Log-spaced trapezoidal quadrature of (1 / pi) int S_phi G d omega.
/// `filter` maps a batch of angular frequencies to G.
using FilterEvaluator = std::function<std::vector<double>(const std::vector<double>&)>;
ChiResult chi_overlap(const PhasePsd& psd, const FilterEvaluator& filter, double duration,
                      const ChiOptions& options = {});
ChiResult chi_overlap(const PhasePsd& psd, const ControlTimeline& timeline,
                      FilterProjection projection = FilterProjection::kFull,
                      const ChiOptions& options = {});

inline double fidelity_from_chi(double chi) { return 0.5 * (1.0 + std::exp(-chi)); }

// --- IRMB prediction --------------------------------------------------------

struct IrmbPredictOptions {
  std::vector<int> lengths = {1, 10, 100, 1000, 10000};
  int n_random_seqs = 10;
  double static_detuning_hz = 0.0;  // bare-frequency error, felt during delays only
  int points_per_decade = 100;
  double f_max = 0.0;  // Hz; 0 picks 1e3 / t_half_pi
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const;
};

struct IrmbPoint {
  double delay = 0.0;
  double error = 0.0;   // fitted error per Clifford
  double std_error = 0.0;  // jackknife over random sequences
  double amplitude = 0.0;
  bool fit_ok = true;
};

struct IrmbPrediction {
  double t_half_pi = 0.0;
  std::vector<IrmbPoint> points;
  double slope = 0.0;      // error per Clifford per second of delay
  double intercept = 0.0;
  double t2_star_star = 0.0;  // from slope = (pulses per Clifford / 3) / T2**
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// Random Clifford sequences with `delay` after every pi/2 pulse. Each
/// sequence's survival is (1 + e^-chi) / 2 with the transverse filter; the
/// mean survival per length is fitted with the RB decay model.
IrmbPrediction predict_irmb(const PhasePsd& psd, double t_half_pi,
                            const std::vector<double>& delays,
                            const IrmbPredictOptions& options = {});

/// Scale of the tabulated PSD part that makes predict_irmb return `target`
/// T2**. The white floor is left alone.
double tune_psd_scale(const PhasePsd& psd, double t_half_pi, const std::vector<double>& delays,
                      double target_t2, const IrmbPredictOptions& options = {});

}  // namespace ionrb

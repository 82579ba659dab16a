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
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

#include "ionrb/clifford.hpp"
#include "ionrb/linalg.hpp"

namespace ionrb {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QubitState {
  Vec2 amp{Complex{1.0, 0.0}, Complex{0.0, 0.0}};

  static QubitState basis(int level) {
    QubitState s;
    s.amp = level == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    return s;
  }
  double norm() const { return amp.norm(); }
  double p0() const { return std::norm(amp(0)); }
  double p1() const { return std::norm(amp(1)); }
};

enum class RampShape { kSinSquared, kLinear };

/// One shaped pi/2 pulse followed by its inter-pulse gap.
///
/// `t_half_pi` is the total pulse duration including both ramps; the trailing
/// gap is extra. The flat-top Rabi rate is chosen so the pulse area is pi/2.
struct PulseSpec {
  double phase = 0.0;
  int sign = +1;
  double t_half_pi = 5.9e-6;
  double ramp_time = 40e-9;
  double gap_time = 40e-9;
  double amp_scale = 1.0;

  void validate() const;
  double axis_phase() const { return sign < 0 ? phase + kPi : phase; }
  double flat_time() const { return t_half_pi - 2.0 * ramp_time; }
  /// Flat-top Rabi frequency giving area pi/2 at unit amplitude.
  double nominal_rabi() const { return 0.5 * kPi / (t_half_pi - ramp_time); }
  double period() const { return t_half_pi + gap_time; }

  PulseSpec with_generator(Pulse p) const {
    PulseSpec out = *this;
    out.phase = phase + pulse_axis_phase(p);
    out.sign = +1;
    return out;
  }
};

/// ac Zeeman shift of the qubit, quadratic in the instantaneous drive
/// amplitude relative to the calibrated flat-top amplitude.
struct ZeemanModel {
  double shift_at_full_amp = 0.0;  // rad/s
  double shift(double rel_amplitude) const {
    return shift_at_full_amp * rel_amplitude * rel_amplitude;
  }
};

struct DriveParams {
  double omega_q = 0.0;    // flat-top Rabi frequency at amp_scale 1, rad/s
  double detuning = 0.0;   // drive minus bare qubit frequency, rad/s
  double phase = 0.0;      // common microwave phase, rad
  RampShape ramp_shape = RampShape::kSinSquared;
  ZeemanModel zeeman;
  int ramp_substeps = 64;

  static DriveParams for_pulse(const PulseSpec& pulse) {
    DriveParams d;
    d.omega_q = pulse.nominal_rabi();
    return d;
  }
  void validate() const;
  /// Qubit-minus-drive frequency offset at a given relative amplitude.
  double frame_offset(double rel_amplitude) const {
    return zeeman.shift(rel_amplitude) - detuning;
  }
  /// Same, from the mean squared relative amplitude over a sub-step.
  double frame_offset_sq(double rel_amplitude_sq) const {
    return zeeman.shift_at_full_amp * rel_amplitude_sq - detuning;
  }
};

/// Time-dependent multiplier on the drive amplitude, with time measured from
/// the start of the pulse. `max_step` bounds the sub-step length used when the
/// trace is sampled.
struct AmplitudeTrace {
  std::function<double(double)> multiplier;
  double max_step = 0.0;
};

/// Per-pulse perturbations supplied by noise hooks.
struct PulseNoise {
  double amp_multiplier = 1.0;
  double detuning_offset = 0.0;  // added to the frame offset, rad/s
  double phase_offset = 0.0;
  double z_kick_after = 0.0;     // Z rotation applied after the gap, rad
  std::optional<AmplitudeTrace> trace;
};

using NoiseHook = std::function<PulseNoise(std::size_t pulse_index, double t_start)>;

double ramp_profile(RampShape shape, double u);

/// Propagator of one pulse and its gap (piecewise-exact on constant segments).
Mat2 pulse_propagator(const PulseSpec& pulse, const DriveParams& drive,
                      const PulseNoise& noise = {});

/// Free evolution of the qubit over `duration` with no drive.
Mat2 gap_propagator(double duration, const DriveParams& drive, double detuning_offset = 0.0);

QubitState evolve_pulse(const QubitState& state, const PulseSpec& pulse, const DriveParams& drive,
                        const PulseNoise& noise = {});

/// Runs the pulse train of `seq` (Cliffords plus recovery). Each pulse uses
/// `base` rotated onto the generator axis; `hook`, when given, supplies the
/// per-pulse perturbations.
QubitState evolve_sequence(const QubitState& state, const GateSequence& seq,
                           const PulseSpec& base, const DriveParams& drive,
                           const NoiseHook& hook = {});

QubitState evolve_pulses(const QubitState& state, std::span<const Pulse> pulses,
                         const PulseSpec& base, const DriveParams& drive,
                         const NoiseHook& hook = {});

/// 1 - mean |<psi| U_ideal^dag U |psi>|^2 over the six cardinal states.
double average_state_infidelity(const Mat2& ideal, const Mat2& actual);

/// Error of a single generator pulse under `perturbation`, versus the ideal
/// pi/2 rotation. The gap is excluded.
double avg_pulse_error(Pulse generator, const PulseSpec& pulse, const DriveParams& drive,
                       const PulseNoise& perturbation);

// --- spectator levels --------------------------------------------------------

using Vec6 = Eigen::Matrix<Complex, 6, 1>;
using Mat6 = Eigen::Matrix<Complex, 6, 6>;

/// Each qubit level couples to two spectators detuned by +/- detuning_s with
/// Rabi rate rabi_ratio * Omega. Levels: |0>, |1>, s0+, s0-, s1+, s1-.
struct SpectatorConfig {
  double detuning_s = kTwoPi * 104e6;
  double rabi_ratio = 1.4;
  double t2_s = 40e-3;

  void validate() const;
};

struct SpectatorResult {
  Vec6 state;
  double leakage = 0.0;                  // population outside the qubit after the pulse
  double spectator_population_time = 0.0;  // integral of spectator population, s
};

SpectatorResult simulate_spectator(const Vec6& state, const PulseSpec& pulse,
                                   const DriveParams& drive, const SpectatorConfig& config);

Mat6 spectator_pulse_propagator(const PulseSpec& pulse, const DriveParams& drive,
                                const SpectatorConfig& config);

struct SpectatorRbResult {
  double error_per_clifford = 0.0;
  double leakage_part = 0.0;
  double dephasing_part = 0.0;
};

/// Per-Clifford error from spectator dressing, estimated by running random
/// Clifford sequences in the six-level space.
SpectatorRbResult spectator_rb_error(const PulseSpec& pulse, const DriveParams& drive,
                                     const SpectatorConfig& config, int n_cliffords,
                                     int n_sequences, std::uint64_t seed);

// --- counter-rotating term ---------------------------------------------------

struct CounterRotatingEstimate {
  double omega_low = 0.0;
  double error_low = 0.0;
  double error_high = 0.0;  // at 2 * omega_low
  double scaling_ratio = 0.0;
  double coefficient = 0.0;  // error ~ coefficient * (Omega / omega_q)^2
  double extrapolated = 0.0;
};

/// Error of one pi/2 pulse when the 2*omega_q counter-rotating term is kept,
/// simulated at an artificially low qubit frequency `omega_q_scaled`.
double counter_rotating_pulse_error(double omega_q_scaled, const PulseSpec& pulse,
                                    const DriveParams& drive, bool include_term = true);

/// Simulates at omega_q_scaled and 2*omega_q_scaled, fits the quadratic law
/// and extrapolates to `omega_q_physical`.
CounterRotatingEstimate counter_rotating_error(double omega_q_scaled, double omega_q_physical,
                                               const PulseSpec& pulse, const DriveParams& drive);

}  // namespace ionrb

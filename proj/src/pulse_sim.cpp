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

#include <array>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

namespace ionrb {
namespace {

constexpr double kNormTol = 1e-9;

void require_normalized(double norm) {
  if (std::abs(norm - 1.0) > kNormTol) {
    throw SimulationError("state is not normalized (norm " + std::to_string(norm) + ")");
  }
}

/// Calls `fn(dt, rel_amplitude, t_mid)` for each constant segment of the
/// pulse envelope (ramp up, flat top, ramp down). The gap is not included.
// Exact means of the ramp profile and its square over u in [a, b], so each
// constant sub-step carries the correct area and ac Zeeman phase.
double ramp_mean(RampShape shape, double a, double b) {
  if (shape == RampShape::kLinear) return 0.5 * (a + b);
  const double w = 0.5 * kPi;
  return 0.5 - (std::sin(2.0 * w * b) - std::sin(2.0 * w * a)) / (4.0 * w * (b - a));
}

double ramp_mean_sq(RampShape shape, double a, double b) {
  if (shape == RampShape::kLinear) return (a * a + a * b + b * b) / 3.0;
  // Antiderivative of sin^4(x): 3x/8 - sin(2x)/4 + sin(4x)/32.
  const double w = 0.5 * kPi;
  auto prim = [](double x) { return 0.375 * x - 0.25 * std::sin(2.0 * x) + std::sin(4.0 * x) / 32.0; };
  return (prim(w * b) - prim(w * a)) / (w * (b - a));
}

template <typename Fn>
void for_each_segment(const PulseSpec& pulse, const DriveParams& drive, const PulseNoise& noise,
                      int min_ramp_steps, int min_flat_steps, Fn&& fn) {
  const double scale = pulse.amp_scale * noise.amp_multiplier;
  const AmplitudeTrace* trace = noise.trace ? &*noise.trace : nullptr;
  auto steps_for = [&](double duration, int floor_steps) {
    int n = floor_steps;
    if (trace != nullptr && trace->max_step > 0.0) {
      n = std::max(n, static_cast<int>(std::ceil(duration / trace->max_step)));
    }
    return std::max(n, 1);
  };
  auto mult_at = [&](double t) { return trace != nullptr ? trace->multiplier(t) : 1.0; };

  const double ramp = pulse.ramp_time;
  const double flat = pulse.flat_time();
  if (ramp > 0.0) {
    const int n = steps_for(ramp, std::max(drive.ramp_substeps, min_ramp_steps));
    const double dt = ramp / n;
    for (int k = 0; k < n; ++k) {
      const double a = static_cast<double>(k) / n, b = static_cast<double>(k + 1) / n;
      const double t = 0.5 * (a + b) * ramp;
      const double m = scale * mult_at(t);
      fn(dt, m * ramp_mean(drive.ramp_shape, a, b), m * m * ramp_mean_sq(drive.ramp_shape, a, b), t);
    }
  }
  {
    const int n = steps_for(flat, min_flat_steps);
    const double dt = flat / n;
    for (int k = 0; k < n; ++k) {
      const double t = ramp + (k + 0.5) * dt;
      const double m = scale * mult_at(t);
      fn(dt, m, m * m, t);
    }
  }
  if (ramp > 0.0) {
    const int n = steps_for(ramp, std::max(drive.ramp_substeps, min_ramp_steps));
    const double dt = ramp / n;
    for (int k = 0; k < n; ++k) {
      const double a = static_cast<double>(k) / n, b = static_cast<double>(k + 1) / n;
      const double t = ramp + flat + 0.5 * (a + b) * ramp;
      const double m = scale * mult_at(t);
      fn(dt, m * ramp_mean(drive.ramp_shape, 1.0 - b, 1.0 - a),
         m * m * ramp_mean_sq(drive.ramp_shape, 1.0 - b, 1.0 - a), t);
    }
  }
}

Mat2 envelope_propagator(const PulseSpec& pulse, const DriveParams& drive,
                         const PulseNoise& noise) {
  const double axis = pulse.axis_phase() + drive.phase + noise.phase_offset;
  const double cx = std::cos(axis), cy = std::sin(axis);
  Mat2 u = Mat2::Identity();
  for_each_segment(pulse, drive, noise, 0, 1, [&](double dt, double rel, double rel_sq, double) {
    const double rabi = drive.omega_q * rel;
    const double offset = drive.frame_offset_sq(rel_sq) + noise.detuning_offset;
    u = su2_exp(rabi * cx, rabi * cy, offset, dt) * u;
  });
  return u;
}

}  // namespace

void PulseSpec::validate() const {
  if (!(t_half_pi > 0.0) || ramp_time < 0.0 || gap_time < 0.0) {
    throw SimulationError("pulse durations must be non-negative");
  }
  if (!(t_half_pi > 2.0 * ramp_time)) {
    throw SimulationError("pulse shorter than its two ramps");
  }
  if (!(amp_scale > 0.0)) throw SimulationError("amp_scale must be positive");
  if (sign != 1 && sign != -1) throw SimulationError("pulse sign must be +1 or -1");
}

void DriveParams::validate() const {
  if (!(omega_q > 0.0)) throw SimulationError("omega_q must be positive");
  if (ramp_substeps < 1) throw SimulationError("ramp_substeps must be >= 1");
}

void SpectatorConfig::validate() const {
  if (detuning_s == 0.0) throw SimulationError("spectator detuning must be non-zero");
}

double ramp_profile(RampShape shape, double u) {
  if (shape == RampShape::kLinear) return u;
  const double s = std::sin(0.5 * kPi * u);
  return s * s;
}

Mat2 gap_propagator(double duration, const DriveParams& drive, double detuning_offset) {
  if (duration < 0.0) throw SimulationError("negative gap duration");
  return su2_exp(0.0, 0.0, drive.frame_offset(0.0) + detuning_offset, duration);
}

Mat2 pulse_propagator(const PulseSpec& pulse, const DriveParams& drive, const PulseNoise& noise) {
  pulse.validate();
  drive.validate();
  Mat2 u = envelope_propagator(pulse, drive, noise);
  if (pulse.gap_time > 0.0) u = gap_propagator(pulse.gap_time, drive, noise.detuning_offset) * u;
  if (noise.z_kick_after != 0.0) u = z_rotation(noise.z_kick_after) * u;
  return u;
}

QubitState evolve_pulse(const QubitState& state, const PulseSpec& pulse, const DriveParams& drive,
                        const PulseNoise& noise) {
  require_normalized(state.norm());
  QubitState out;
  out.amp = pulse_propagator(pulse, drive, noise) * state.amp;
  return out;
}

QubitState evolve_pulses(const QubitState& state, std::span<const Pulse> pulses,
                         const PulseSpec& base, const DriveParams& drive, const NoiseHook& hook) {
  require_normalized(state.norm());
  Vec2 psi = state.amp;
  double t = 0.0;
  std::array<std::optional<Mat2>, 4> cache;
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    const PulseSpec spec = base.with_generator(pulses[i]);
    if (hook) {
      psi = pulse_propagator(spec, drive, hook(i, t)) * psi;
    } else {
      auto& slot = cache[static_cast<int>(pulses[i])];
      if (!slot) slot = pulse_propagator(spec, drive);
      psi = *slot * psi;
    }
    t += spec.period();
  }
  QubitState out;
  out.amp = psi;
  return out;
}

QubitState evolve_sequence(const QubitState& state, const GateSequence& seq,
                           const PulseSpec& base, const DriveParams& drive, const NoiseHook& hook) {
  const auto train = seq.pulse_train();
  return evolve_pulses(state, train, base, drive, hook);
}

double average_state_infidelity(const Mat2& ideal, const Mat2& actual) {
  const Mat2 err = ideal.adjoint() * actual;
  const double r = 1.0 / std::sqrt(2.0);
  const Complex i{0.0, 1.0};
  const std::array<Vec2, 6> states = {Vec2{1.0, 0.0},     Vec2{0.0, 1.0},
                                      Vec2{r, r},         Vec2{r, -r},
                                      Vec2{r, r * i},     Vec2{r, -r * i}};
  double total = 0.0;
  for (const auto& psi : states) total += std::norm(psi.dot(err * psi));
  return 1.0 - total / 6.0;
}

double avg_pulse_error(Pulse generator, const PulseSpec& pulse, const DriveParams& drive,
                       const PulseNoise& perturbation) {
  PulseSpec spec = pulse.with_generator(generator);
  spec.gap_time = 0.0;
  PulseNoise noise = perturbation;
  noise.z_kick_after = 0.0;
  const Mat2 ideal = equatorial_rotation(spec.axis_phase() + drive.phase, 0.5 * kPi);
  return average_state_infidelity(ideal, pulse_propagator(spec, drive, noise));
}

// --- spectator levels --------------------------------------------------------

namespace {

Mat6 spectator_hamiltonian(double rabi, double axis, double offset,
                           const SpectatorConfig& config) {
  Mat6 h = Mat6::Zero();
  const Complex coupling = 0.5 * rabi * std::polar(1.0, -axis);
  const Complex spectator = 0.5 * config.rabi_ratio * rabi * std::polar(1.0, -axis);
  h(0, 0) = 0.5 * offset;
  h(1, 1) = -0.5 * offset;
  h(0, 1) = coupling;
  h(1, 0) = std::conj(coupling);
  // |0> couples to levels 2 (+) and 3 (-), |1> to 4 (+) and 5 (-).
  const std::array<std::pair<int, int>, 4> links = {{{0, 2}, {0, 3}, {1, 4}, {1, 5}}};
  const std::array<double, 4> detunings = {config.detuning_s, -config.detuning_s,
                                           config.detuning_s, -config.detuning_s};
  for (int k = 0; k < 4; ++k) {
    const auto [q, s] = links[k];
    h(q, s) = spectator;
    h(s, q) = std::conj(spectator);
    h(s, s) = detunings[k];
  }
  return h;
}

Mat6 hermitian_exp(const Mat6& h, double dt) {
  Eigen::SelfAdjointEigenSolver<Mat6> solver(h);
  const auto& vals = solver.eigenvalues();
  Eigen::Matrix<Complex, 6, 1> phases;
  for (int k = 0; k < 6; ++k) phases(k) = std::polar(1.0, -vals(k) * dt);
  return solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
}

double spectator_population(const Vec6& psi) {
  return psi.tail<4>().squaredNorm();
}

int spectator_ramp_steps(const PulseSpec& pulse, const SpectatorConfig& config) {
  // Keep the spectator phase advance per sub-step small.
  return static_cast<int>(std::ceil(std::abs(config.detuning_s) * pulse.ramp_time / 0.05));
}

}  // namespace

SpectatorResult simulate_spectator(const Vec6& state, const PulseSpec& pulse,
                                   const DriveParams& drive, const SpectatorConfig& config) {
  pulse.validate();
  drive.validate();
  config.validate();
  require_normalized(state.norm());
  const double axis = pulse.axis_phase() + drive.phase;
  SpectatorResult out;
  Vec6 psi = state;
  double pop = spectator_population(psi);
  for_each_segment(pulse, drive, PulseNoise{}, spectator_ramp_steps(pulse, config), 16,
                   [&](double dt, double rel, double rel_sq, double) {
                     const double rabi = drive.omega_q * rel;
                     psi = hermitian_exp(
                               spectator_hamiltonian(rabi, axis, drive.frame_offset_sq(rel_sq), config),
                               dt) *
                           psi;
                     const double next = spectator_population(psi);
                     out.spectator_population_time += 0.5 * (pop + next) * dt;
                     pop = next;
                   });
  if (pulse.gap_time > 0.0) {
    psi = hermitian_exp(spectator_hamiltonian(0.0, axis, drive.frame_offset(0.0), config),
                        pulse.gap_time) *
          psi;
    out.spectator_population_time += pop * pulse.gap_time;
  }
  out.state = psi;
  out.leakage = spectator_population(psi);
  return out;
}

Mat6 spectator_pulse_propagator(const PulseSpec& pulse, const DriveParams& drive,
                                const SpectatorConfig& config) {
  Mat6 u = Mat6::Identity();
  for (int col = 0; col < 6; ++col) {
    Vec6 e = Vec6::Zero();
    e(col) = 1.0;
    u.col(col) = simulate_spectator(e, pulse, drive, config).state;
  }
  return u;
}

SpectatorRbResult spectator_rb_error(const PulseSpec& pulse, const DriveParams& drive,
                                     const SpectatorConfig& config, int n_cliffords,
                                     int n_sequences, std::uint64_t seed) {
  if (n_cliffords < 1 || n_sequences < 1) throw SimulationError("empty spectator run");
  std::array<Mat6, 4> props;
  double pop_time = 0.0;
  for (Pulse p : kAllPulses) {
    const PulseSpec spec = pulse.with_generator(p);
    props[static_cast<int>(p)] = spectator_pulse_propagator(spec, drive, config);
    Vec6 ground = Vec6::Zero();
    ground(0) = 1.0;
    pop_time += 0.25 * simulate_spectator(ground, spec, drive, config).spectator_population_time;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, kCliffordCount - 1);
  double leak_sum = 0.0;
  double pulses_sum = 0.0;
  for (int s = 0; s < n_sequences; ++s) {
    GateSequence seq;
    seq.cliffords.resize(n_cliffords);
    for (int& g : seq.cliffords) g = pick(rng);
    seq.recovery = recovery_gate(seq.cliffords);
    Vec6 psi = Vec6::Zero();
    psi(0) = 1.0;
    const auto train = seq.pulse_train();
    for (Pulse p : train) psi = props[static_cast<int>(p)] * psi;
    leak_sum += 1.0 - std::norm(psi(0));
    pulses_sum += static_cast<double>(train.size());
  }
  SpectatorRbResult out;
  out.leakage_part = leak_sum / (static_cast<double>(n_sequences) * n_cliffords);
  out.dephasing_part =
      (pulses_sum / n_sequences) * pop_time / config.t2_s / static_cast<double>(n_cliffords);
  out.error_per_clifford = out.leakage_part + out.dephasing_part;
  return out;
}

// --- counter-rotating term ---------------------------------------------------

namespace {

// One pulse with the counter-rotating term at frequency `omega` and time
// origin `t0`, compared with the rotating-wave pulse on the same grid.
double counter_rotating_single(double omega, double t0, const PulseSpec& pulse,
                               const DriveParams& drive) {
  // Resolve the 2*omega oscillation with 64 steps per period.
  const double dt_target = (kPi / omega) / 64.0;
  const double axis = pulse.axis_phase() + drive.phase;
  const double total = pulse.t_half_pi;
  const int n = static_cast<int>(std::ceil(total / dt_target));
  const double dt = total / n;
  const double rabi = pulse.nominal_rabi() * pulse.amp_scale;
  const double offset = drive.frame_offset(1.0);
  Mat2 with = Mat2::Identity();
  const Mat2 step_rwa = su2_exp(rabi * std::cos(axis), rabi * std::sin(axis), offset, dt);
  Mat2 without = Mat2::Identity();
  for (int k = 0; k < n; ++k) {
    const double t = (k + 0.5) * dt;
    // H_01 = (rabi/2) e^{-i axis} (1 + e^{-2 i omega t}) in the rotating frame.
    const Complex c = std::polar(1.0, -axis) * (1.0 + std::polar(1.0, -2.0 * omega * (t + t0)));
    with = su2_exp(rabi * c.real(), -rabi * c.imag(), offset, dt) * with;
    without = step_rwa * without;
  }
  return average_state_infidelity(without, with);
}

}  // namespace

double counter_rotating_pulse_error(double omega_q_scaled, const PulseSpec& pulse,
                                    const DriveParams& drive, bool include_term) {
  pulse.validate();
  drive.validate();
  if (!(omega_q_scaled >= 10.0 * drive.omega_q)) {
    throw SimulationError("scaled qubit frequency must be at least 10x the Rabi frequency");
  }
  if (!include_term) return 0.0;
  // Square pulse of the same area. At the scaled frequency a 40 ns ramp is
  // only partly adiabatic, which would distort the quadratic law; a sudden
  // edge gives an upper bound that scales cleanly. The fast-oscillation
  // phase at each edge is averaged over both the time origin and a window of
  // one 2*omega*T cycle in frequency.
  PulseSpec square = pulse;
  square.ramp_time = 0.0;
  constexpr int kGrid = 4;
  double sum = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    const double omega = omega_q_scaled + (kPi / square.t_half_pi) * i / kGrid;
    for (int j = 0; j < kGrid; ++j) {
      const double t0 = (kPi / omega) * j / kGrid;
      sum += counter_rotating_single(omega, t0, square, drive);
    }
  }
  return sum / (kGrid * kGrid);
}

CounterRotatingEstimate counter_rotating_error(double omega_q_scaled, double omega_q_physical,
                                               const PulseSpec& pulse, const DriveParams& drive) {
  CounterRotatingEstimate est;
  est.omega_low = omega_q_scaled;
  est.error_low = counter_rotating_pulse_error(omega_q_scaled, pulse, drive);
  est.error_high = counter_rotating_pulse_error(2.0 * omega_q_scaled, pulse, drive);
  est.scaling_ratio = est.error_low / est.error_high;
  const double x_low = drive.omega_q / omega_q_scaled;
  const double x_high = 0.5 * x_low;
  // Least squares through the origin in x^2.
  const double a = x_low * x_low, b = x_high * x_high;
  est.coefficient = (est.error_low * a + est.error_high * b) / (a * a + b * b);
  const double x_phys = drive.omega_q / omega_q_physical;
  est.extrapolated = est.coefficient * x_phys * x_phys;
  return est;
}

}  // namespace ionrb

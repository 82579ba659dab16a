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

#include "ionrb/calibration.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string_view>

#include "ionrb/clifford.hpp"
#include "ionrb/parallel.hpp"
#include "ionrb/rng.hpp"

namespace ionrb {
namespace {

Mat2 mat_pow(Mat2 base, long long n) {
  Mat2 out = Mat2::Identity();
  while (n > 0) {
    if (n & 1) out = base * out;
    base = base * base;
    n >>= 1;
  }
  return out;
}

double p0_of(const Mat2& u) { return std::norm(u(0, 0)); }

double binomial_se(int shots) { return shots > 0 ? 0.5 / std::sqrt(static_cast<double>(shots)) : 0.0; }

// Shot-averaged P(|0>) with and without the readout pulse. `sequence` maps a
// Rabi multiplier to that pair of probabilities.
struct PointOutcome {
  double with_readout = 0.5;
  double without_readout = 1.0;
};

using SequenceModel = std::function<PointOutcome(double multiplier)>;

PointOutcome measure_point(const CalTarget& target, int shots, std::uint64_t stream,
                           const SequenceModel& sequence) {
  if (shots == 0) return sequence(target.rabi_multiplier());
  if (target.amp_sigma == 0.0) {
    const PointOutcome p = sequence(target.rabi_multiplier());
    Rng rng = make_stream(target.seed, {stream, kTagCalibration});
    std::binomial_distribution<int> a(shots, std::clamp(p.with_readout, 0.0, 1.0));
    std::binomial_distribution<int> b(shots, std::clamp(p.without_readout, 0.0, 1.0));
    const int ka = a(rng);
    const int kb = b(rng);
    return {static_cast<double>(ka) / shots, static_cast<double>(kb) / shots};
  }
  std::vector<char> hit_a(shots), hit_b(shots);
  parallel_for(static_cast<std::size_t>(shots), target.workers, [&](std::size_t s) {
    Rng rng = make_stream(target.seed, {stream, static_cast<std::uint64_t>(s), kTagCalibration});
    std::normal_distribution<double> z;
    const PointOutcome p = sequence(target.rabi_multiplier(z(rng)));
    std::uniform_real_distribution<double> u;
    hit_a[s] = u(rng) < p.with_readout;
    hit_b[s] = u(rng) < p.without_readout;
  });
  double ka = 0.0, kb = 0.0;
  for (int s = 0; s < shots; ++s) {
    ka += hit_a[s];
    kb += hit_b[s];
  }
  return {ka / shots, kb / shots};
}

PulseSpec unit_pulse(const CalTarget& target, Pulse generator) {
  PulseSpec p = target.pulse.with_generator(generator);
  p.amp_scale = 1.0;
  return p;
}

PointOutcome amplitude_outcome(long long n, const CalTarget& target, double multiplier) {
  PulseNoise noise;
  noise.amp_multiplier = multiplier;
  const Mat2 u = pulse_propagator(unit_pulse(target, Pulse::kPlusX), target.drive, noise);
  const Mat2 body = mat_pow(u, 4 * n);
  return {p0_of(u * body), p0_of(body)};
}

PointOutcome frequency_outcome(long long n_pairs, const PulseSpec& pulse, const DriveParams& drive,
                               double multiplier) {
  PulseNoise noise;
  noise.amp_multiplier = multiplier;
  PulseSpec base = pulse;
  base.amp_scale = 1.0;
  const Mat2 plus = pulse_propagator(base.with_generator(Pulse::kPlusX), drive, noise);
  const Mat2 minus = pulse_propagator(base.with_generator(Pulse::kMinusX), drive, noise);
  const Mat2 y = pulse_propagator(base.with_generator(Pulse::kPlusY), drive, noise);
  const Mat2 body = mat_pow(minus * plus, n_pairs);
  return {p0_of(y * body), p0_of(body)};
}

DriveParams model_drive(const CalTarget& target, double offset_hz) {
  DriveParams d = target.drive;
  d.zeeman = {};
  d.detuning = -kTwoPi * offset_hz;
  return d;
}

// Safeguarded Newton solve of model(x) = y on [-bound, bound], where the model
// is increasing or decreasing but monotone.
double invert_monotone(const std::function<double(double)>& model, double y, double bound) {
  double lo = -bound, hi = bound;
  double flo = model(lo) - y, fhi = model(hi) - y;
  if (flo * fhi > 0.0) return std::abs(flo) < std::abs(fhi) ? lo : hi;
  const bool increasing = fhi > flo;
  const double h = bound * 1e-6;
  double x = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double f = model(x) - y;
    if (f == 0.0) return x;
    ((f > 0.0) == increasing ? hi : lo) = x;
    const double slope = (model(x + h) - model(x - h)) / (2.0 * h);
    double next = slope != 0.0 ? x - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-13 * bound) return next;
    x = next;
  }
  return x;
}

double mean_pulses_per_clifford() { return CliffordGroup::instance().mean_pulses(); }

struct LoopHooks {
  std::function<long long(long long)> pulses;
  std::function<CalStep(long long, const CalTarget&, int, std::uint64_t)> step;
  std::function<double(CalTarget&, double)> apply;  // returns the setting change
  std::function<double(const CalTarget&)> setting;
};

CalLoopResult run_loop(const CalLoopConfig& config, const CalTarget& initial,
                       const LoopHooks& hooks) {
  config.validate();
  initial.validate();
  CalLoopResult out;
  out.target = initial;
  CalTarget& t = out.target;
  const double se = binomial_se(config.shots_per_point);
  const double threshold = config.p_threshold - 0.5;
  long long n = config.n_start;
  std::uint64_t index = 0;
  bool contrast_lost = false;
  // Estimates taken since the last correction, pooled with weights
  // (contrast * pulses)^2 for the final correction.
  double pooled_w = 0.0, pooled_sum = 0.0;
  auto apply = [&](CalStep& step, double estimate) {
    step.correction = hooks.apply(t, estimate);
    pooled_w = pooled_sum = 0.0;
  };
  if (hooks.pulses(n) > config.max_pulses) throw CalibrationError("n_start exceeds max_pulses");
  while (hooks.pulses(n) <= config.max_pulses) {
    CalStep s = hooks.step(n, t, config.shots_per_point, index++);
    s.time = config.start_time;
    const long long next =
        std::max(n + 1, static_cast<long long>(std::ceil(static_cast<double>(n) * config.growth)));
    const double dev = std::abs(s.p0 - 0.5);
    s.significant = config.shots_per_point == 0 ? dev > 1e-12 : dev > config.significance * se;
    // Past the point where fast noise has eaten the contrast the angle is too
    // noisy to use; the loop stops and falls back on the earlier points.
    contrast_lost = s.contrast < config.min_contrast;
    const bool usable = !contrast_lost && s.contrast > config.significance * 2.0 * se;
    if (usable) {
      const double w = std::pow(s.contrast * static_cast<double>(s.pulses), 2);
      pooled_w += w;
      pooled_sum += w * s.estimate;
    }
    const bool last = contrast_lost || hooks.pulses(next) > config.max_pulses;
    if (usable && (s.significant || dev >= threshold)) {
      apply(s, s.estimate);
    } else if (last && config.final_correction && pooled_w > 0.0) {
      apply(s, pooled_sum / pooled_w);
    }
    s.setting = hooks.setting(t);
    out.steps.push_back(s);
    if (contrast_lost) break;
    n = next;
  }
  const bool first_lost = contrast_lost && out.steps.size() == 1;
  const bool ends_nonlinear = !out.steps.empty() && out.steps.back().nonlinear;
  out.converged = !first_lost && !ends_nonlinear;
  if (first_lost) {
    out.message = "fast noise exceeds the signal at the shortest sequence";
  } else if (ends_nonlinear) {
    out.message = "last point outside the linear regime";
  } else if (contrast_lost) {
    out.message = "stopped early: contrast lost at N = " + std::to_string(out.steps.back().n);
  } else {
    out.message = "reached max_pulses";
  }
  return out;
}

// Paley order: W(m) = (-1)^popcount(m) for the order 2^M - 1 function.
constexpr std::array<std::string_view, 5> kWalshTable = {
    "+", "+-", "+--+", "+--+-++-", "+--+-++--++-+--+"};

double antiderivative(const std::vector<double>& c, double t) {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * t + c[k] / static_cast<double>(k + 1);
  return acc * t;
}

double clamp_prob(double p) { return std::clamp(p, 1e-15, 1.0 - 1e-15); }

double binomial_nll(const WalshRun& run, const std::function<double(double)>& p_of_n) {
  double nll = 0.0;
  for (std::size_t i = 0; i < run.n_groups.size(); ++i) {
    const double p = clamp_prob(p_of_n(static_cast<double>(run.n_groups[i])));
    const double k = run.p0[i] * run.shots[i];
    nll -= k * std::log(p) + (run.shots[i] - k) * std::log(1.0 - p);
  }
  return nll;
}

double golden_min(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 300 && hi - lo > tol; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

}  // namespace

// --- target and config ---------------------------------------------------------

CalTarget CalTarget::for_pulse(const PulseSpec& pulse) {
  CalTarget t;
  t.pulse = pulse;
  t.drive = DriveParams::for_pulse(pulse);
  return t;
}

void CalTarget::validate() const {
  pulse.validate();
  drive.validate();
  if (!(amp_sigma >= 0.0) || !std::isfinite(amp_offset) || amp_offset <= -1.0) {
    throw std::invalid_argument("invalid amplitude offset or spread");
  }
  if (quantizer) quantizer->validate();
}

double CalTarget::rabi_multiplier(double z) const {
  double setting = pulse.amp_scale;
  if (quantizer) {
    const double a = quantizer->amp_scale;
    setting = quantize_amplitude(*quantizer, std::clamp(a * setting, 0.0, 1.0)) / a;
  }
  return setting * (1.0 + amp_offset) + amp_sigma * z;
}

void CalLoopConfig::validate() const {
  if (n_start < 1) throw std::invalid_argument("n_start must be >= 1");
  if (!(growth > 1.0)) throw std::invalid_argument("growth must exceed 1");
  if (!(p_threshold > 0.5 && p_threshold < 1.0)) {
    throw std::invalid_argument("p_threshold must be in (0.5, 1)");
  }
  if (shots_per_point < 0) throw std::invalid_argument("shots_per_point must be >= 0");
  if (max_pulses < 1) throw std::invalid_argument("max_pulses must be >= 1");
  if (!(significance > 0.0)) throw std::invalid_argument("significance must be positive");
  if (!(min_contrast >= 0.0 && min_contrast < 1.0)) {
    throw std::invalid_argument("min_contrast must be in [0, 1)");
  }
}

// --- trace log ---------------------------------------------------------------------

nlohmann::json to_json(const CalStep& s) {
  return {{"time", s.time},         {"N", s.n},
          {"pulses", s.pulses},     {"p0", s.p0},
          {"contrast", s.contrast}, {"estimate", s.estimate},
          {"correction", s.correction}, {"setting", s.setting},
          {"significant", s.significant}, {"nonlinear", s.nonlinear}};
}

CalStep cal_step_from_json(const nlohmann::json& j) {
  CalStep s;
  s.time = j.at("time").get<double>();
  s.n = j.at("N").get<long long>();
  s.pulses = j.value("pulses", 0LL);
  s.p0 = j.at("p0").get<double>();
  s.contrast = j.value("contrast", 1.0);
  s.estimate = j.at("estimate").get<double>();
  s.correction = j.at("correction").get<double>();
  s.setting = j.value("setting", 0.0);
  s.significant = j.value("significant", false);
  s.nonlinear = j.value("nonlinear", false);
  return s;
}

void write_trace(std::ostream& os, const std::vector<CalStep>& steps) {
  for (const auto& s : steps) os << to_json(s).dump() << '\n';
}

std::vector<CalStep> read_trace(std::istream& is) {
  std::vector<CalStep> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      out.push_back(cal_step_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::invalid_argument("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// --- amplitude -------------------------------------------------------------------

double amplitude_sequence_p0(long long n, const CalTarget& target, double multiplier,
                             bool readout_pulse) {
  const PointOutcome p = amplitude_outcome(n, target, multiplier);
  return readout_pulse ? p.with_readout : p.without_readout;
}

CalStep amplitude_cal_step(long long n, const CalTarget& target, int shots, std::uint64_t stream) {
  if (n < 1) throw std::invalid_argument("amplitude step needs N >= 1");
  if (shots < 0) throw std::invalid_argument("shots must be >= 0");
  target.validate();
  const PointOutcome m = measure_point(
      target, shots, stream, [&](double mult) { return amplitude_outcome(n, target, mult); });
  CalStep s;
  s.n = n;
  s.pulses = 4 * n + 1;
  s.p0 = m.with_readout;
  s.contrast = 2.0 * m.without_readout - 1.0;
  s.nonlinear = std::abs(s.p0 - 0.5) > kLinearRegime;
  // The run without the readout pulse measures the cosine quadrature of the
  // same rotation, so the pair gives the angle without a contrast model.
  const double angle = std::atan2(1.0 - 2.0 * s.p0, std::max(s.contrast, 0.0));
  s.estimate = angle / (static_cast<double>(s.pulses) * kPi / 2.0);
  return s;
}

CalLoopResult amplitude_cal_loop(const CalLoopConfig& config, const CalTarget& target) {
  LoopHooks h;
  h.pulses = [](long long n) { return 4 * n + 1; };
  h.step = amplitude_cal_step;
  h.apply = [](CalTarget& t, double est) {
    const double actual = t.rabi_multiplier() / (1.0 + t.amp_offset);
    const double before = t.pulse.amp_scale;
    t.pulse.amp_scale = actual / (1.0 + est);
    return t.pulse.amp_scale - before;
  };
  h.setting = [](const CalTarget& t) { return t.pulse.amp_scale; };
  CalLoopResult r = run_loop(config, target, h);
  r.residual = r.target.residual_amp_offset();
  r.residual_error = amplitude_offset_gate_error(r.residual, mean_pulses_per_clifford());
  return r;
}

// --- frequency -------------------------------------------------------------------

double frequency_sequence_p0(long long n_pairs, const CalTarget& target, double offset_hz,
                             bool readout_pulse) {
  const PointOutcome p =
      frequency_outcome(n_pairs, target.pulse, model_drive(target, offset_hz), 1.0);
  return readout_pulse ? p.with_readout : p.without_readout;
}

double frequency_sequence_p0_true(long long n_pairs, const CalTarget& target, bool readout_pulse) {
  const PointOutcome p =
      frequency_outcome(n_pairs, target.pulse, target.drive, target.rabi_multiplier());
  return readout_pulse ? p.with_readout : p.without_readout;
}

namespace {

// Rotation angle of the pair train from its two quadratures.
double pair_angle(double p_readout, double contrast) {
  return std::atan2(2.0 * p_readout - 1.0, contrast);
}

// Inverts a measured pair-train angle into a constant frame offset (Hz).
double invert_frequency(long long n_pairs, const CalTarget& target, double angle) {
  auto model = [&](double hz) {
    const PointOutcome p = frequency_outcome(n_pairs, target.pulse, model_drive(target, hz), 1.0);
    return pair_angle(p.with_readout, 2.0 * p.without_readout - 1.0);
  };
  // Small-signal slope sets the extent of the monotone branch.
  const double h = 1e-3 / (target.pulse.period() * static_cast<double>(n_pairs));
  const double slope = (model(h) - model(-h)) / (2.0 * h);
  if (slope == 0.0) throw CalibrationError("frequency sequence is insensitive to detuning");
  // Walk out until the angle stops moving the way the slope says; the branch
  // ends one step short of that.
  const double step = 0.125 * kPi / std::abs(slope);
  const double dir = slope > 0.0 ? 1.0 : -1.0;
  double bound = step;
  for (double up = model(step), down = model(-step); bound < 16.0 * step; bound += step) {
    const double next_up = model(bound + step), next_down = model(-bound - step);
    if (!(dir * (next_up - up) > 0.0 && dir * (down - next_down) > 0.0)) break;
    up = next_up;
    down = next_down;
  }
  return invert_monotone(model, angle, bound);
}

}  // namespace

CalStep frequency_cal_step(long long n_pairs, const CalTarget& target, int shots,
                           std::uint64_t stream) {
  if (n_pairs < 1) throw std::invalid_argument("frequency step needs N_pairs >= 1");
  if (shots < 0) throw std::invalid_argument("shots must be >= 0");
  target.validate();
  const PointOutcome m = measure_point(target, shots, stream, [&](double mult) {
    return frequency_outcome(n_pairs, target.pulse, target.drive, mult);
  });
  CalStep s;
  s.n = n_pairs;
  s.pulses = 2 * n_pairs + 1;
  s.p0 = m.with_readout;
  s.contrast = 2.0 * m.without_readout - 1.0;
  s.nonlinear = std::abs(s.p0 - 0.5) > kLinearRegime;
  s.estimate = invert_frequency(n_pairs, target, pair_angle(s.p0, s.contrast));
  return s;
}

double effective_frame_offset_hz(const CalTarget& target, long long n_pairs) {
  return invert_frequency(n_pairs, target,
                          pair_angle(frequency_sequence_p0_true(n_pairs, target),
                                     2.0 * frequency_sequence_p0_true(n_pairs, target, false) - 1.0));
}

CalLoopResult frequency_cal_loop(const CalLoopConfig& config, const CalTarget& target) {
  LoopHooks h;
  h.pulses = [](long long n) { return 2 * n + 1; };
  h.step = frequency_cal_step;
  // A positive estimate means the qubit sits above the drive: raise the drive.
  h.apply = [](CalTarget& t, double est) {
    t.drive.detuning += kTwoPi * est;
    return est;
  };
  h.setting = [](const CalTarget& t) { return t.drive.detuning / kTwoPi; };
  CalLoopResult r = run_loop(config, target, h);
  r.residual = effective_frame_offset_hz(r.target, 1);
  r.residual_error =
      detuning_gate_error(r.residual, r.target.pulse.t_half_pi, mean_pulses_per_clifford());
  return r;
}

double amplitude_offset_gate_error(double relative_offset, double pulses_per_clifford) {
  return pulses_per_clifford * 0.5 * relative_offset * relative_offset;
}

double detuning_gate_error(double delta_hz, double t_half_pi, double pulses_per_clifford) {
  const double x = t_half_pi * delta_hz;
  return pulses_per_clifford * kTwoPi * x * x;
}

// --- Walsh -------------------------------------------------------------------------

bool is_walsh_order(int order) {
  return order >= 0 && order < (1 << 30) && std::has_single_bit(static_cast<unsigned>(order) + 1u);
}

int walsh_m(int order) {
  if (!is_walsh_order(order)) throw std::invalid_argument("Walsh order must be 2^M - 1");
  return std::countr_zero(static_cast<unsigned>(order) + 1u);
}

int walsh_function(int order, int m) {
  const int big_m = walsh_m(order);
  if (m < 0 || m >= (1 << big_m)) throw std::out_of_range("Walsh segment index out of range");
  if (big_m < static_cast<int>(kWalshTable.size())) return kWalshTable[big_m][m] == '+' ? 1 : -1;
  return std::popcount(static_cast<unsigned>(m)) % 2 == 0 ? 1 : -1;
}

std::vector<double> walsh_flip_points(int order, double n_groups) {
  const int segments = 1 << walsh_m(order);
  std::vector<double> out(segments + 1);
  for (int m = 0; m <= segments; ++m) out[m] = m * n_groups / segments;
  return out;
}

std::vector<double> walsh_coefficients(int order, double n_groups, double omega_q, int k_max) {
  const int big_m = walsh_m(order);
  if (k_max < 0 || k_max > 12) throw std::invalid_argument("k_max must be in [0, 12]");
  if (!(omega_q > 0.0) || !(n_groups >= 0.0)) {
    throw std::invalid_argument("need omega_q > 0 and N >= 0");
  }
  const int segments = 1 << big_m;
  const double x = kTwoPi * n_groups / (omega_q * segments);
  std::vector<double> a(k_max + 1);
  for (int k = 0; k <= k_max; ++k) {
    // Exact integer inner sum; 16^13 still fits in 64 bits.
    long long sum = 0;
    for (int m = 0; m < segments; ++m) {
      long long hi = 1, lo = 1;
      for (int p = 0; p <= k; ++p) {
        hi *= m + 1;
        lo *= m;
      }
      sum += walsh_function(order, m) * (hi - lo);
    }
    a[k] = std::pow(x, k + 1) / (k + 1) * static_cast<double>(sum);
  }
  return a;
}

double walsh_probability(int order, double n_groups, double omega_q, const std::vector<double>& mu,
                         const std::vector<double>& sigma) {
  const std::size_t k_count = std::max(mu.size(), sigma.size());
  if (k_count == 0) return 1.0;
  const auto a = walsh_coefficients(order, n_groups, omega_q, static_cast<int>(k_count) - 1);
  double prod = 1.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    const double m = k < mu.size() ? mu[k] : 0.0;
    const double s = k < sigma.size() ? sigma[k] : 0.0;
    prod *= std::cos(a[k] * m) * std::exp(-0.5 * a[k] * a[k] * s * s);
  }
  return 0.5 + 0.5 * prod;
}

QubitState simulate_walsh_state(int order, long long n_groups, double omega_q,
                                const AmplitudePolynomial& drift) {
  const int segments = 1 << walsh_m(order);
  if (n_groups < 1 || n_groups % segments != 0) {
    throw std::invalid_argument("N must be a positive multiple of 2^M");
  }
  PulseSpec pulse;
  pulse.t_half_pi = 0.5 * kPi / omega_q;
  pulse.ramp_time = 0.0;
  pulse.gap_time = 0.0;
  DriveParams drive = DriveParams::for_pulse(pulse);
  const long long per_segment = 4 * n_groups / segments;
  std::vector<Pulse> train;
  train.reserve(static_cast<std::size_t>(4 * n_groups));
  for (int m = 0; m < segments; ++m) {
    const Pulse g = walsh_function(order, m) > 0 ? Pulse::kPlusX : Pulse::kMinusX;
    train.insert(train.end(), static_cast<std::size_t>(per_segment), g);
  }
  const double t_pulse = pulse.t_half_pi;
  // Every pulse is a rotation about +/-X, so the exact mean Rabi offset over
  // the pulse gives its exact angle.
  auto hook = [&](std::size_t i, double) {
    const double t0 = static_cast<double>(i) * t_pulse;
    PulseNoise n;
    const double mean =
        (antiderivative(drift.coeffs, t0 + t_pulse) - antiderivative(drift.coeffs, t0)) / t_pulse;
    n.amp_multiplier = 1.0 + mean / omega_q;
    return n;
  };
  return evolve_pulses(QubitState::basis(0), train, pulse, drive, hook);
}

void WalshRun::validate() const {
  walsh_m(order);
  if (n_groups.empty() || p0.size() != n_groups.size() || shots.size() != n_groups.size()) {
    throw std::invalid_argument("Walsh run needs matching N, P and shot lists");
  }
  for (std::size_t i = 0; i < n_groups.size(); ++i) {
    if (n_groups[i] < 1 || shots[i] < 1 || !(p0[i] >= 0.0 && p0[i] <= 1.0)) {
      throw std::invalid_argument("invalid Walsh run entry");
    }
  }
}

WalshRun simulate_walsh_run(int order, const std::vector<long long>& n_groups, double omega_q,
                            const AmplitudeNoiseModel& model, int shots, std::uint64_t seed,
                            SimTier tier) {
  model.validate();
  if (shots < 1) throw std::invalid_argument("shots must be >= 1");
  WalshRun run;
  run.order = order;
  const int k_max = std::max<int>(0, static_cast<int>(model.order()) - 1);
  for (std::size_t i = 0; i < n_groups.size(); ++i) {
    const auto a = walsh_coefficients(order, static_cast<double>(n_groups[i]), omega_q, k_max);
    Rng rng = make_stream(seed, {static_cast<std::uint64_t>(order), i, kTagCalibration});
    std::uniform_real_distribution<double> u;
    int hits = 0;
    for (int s = 0; s < shots; ++s) {
      const AmplitudePolynomial poly = sample_shot_amplitude(model, rng);
      double p;
      if (tier == SimTier::kFull) {
        p = simulate_walsh_state(order, n_groups[i], omega_q, poly).p0();
      } else {
        double theta = 0.0;
        for (std::size_t k = 0; k < poly.coeffs.size(); ++k) theta += poly.coeffs[k] * a[k];
        p = std::pow(std::cos(0.5 * theta), 2);
      }
      hits += u(rng) < p;
    }
    run.n_groups.push_back(n_groups[i]);
    run.p0.push_back(static_cast<double>(hits) / shots);
    run.shots.push_back(shots);
  }
  return run;
}

double WalshFit::sigma0_relative() const {
  for (const auto& t : terms) {
    if (t.k == 0) return t.sigma / omega_q;
  }
  return 0.0;
}

nlohmann::json WalshFit::to_json() const {
  nlohmann::json terms_j = nlohmann::json::array();
  for (const auto& t : terms) {
    terms_j.push_back({{"k", t.k},
                       {"mu", t.mu},
                       {"mu_upper", t.mu_upper},
                       {"sigma", t.sigma},
                       {"sigma_upper", t.sigma_upper},
                       {"nll", t.nll},
                       {"identifiable", t.identifiable}});
  }
  return {{"omega_q", omega_q}, {"sigma0_relative", sigma0_relative()}, {"terms", terms_j}};
}

namespace {

struct Fit1d {
  double best = 0.0;
  double upper = 0.0;
  double nll = 0.0;
  bool excludes_zero = false;
};

// Grid plus golden-section minimum of a one-parameter NLL on [0, hi], with the
// connected 2-unit likelihood interval around it.
Fit1d fit_1d(const std::function<double(double)>& nll, double hi, double resolution) {
  const int kGrid = static_cast<int>(std::clamp(std::ceil(hi / resolution), 16.0, 8192.0));
  const double step = hi / kGrid;
  std::vector<double> prof(kGrid + 1);
  for (int i = 0; i <= kGrid; ++i) prof[i] = nll(i * step);
  const int bi = static_cast<int>(std::min_element(prof.begin(), prof.end()) - prof.begin());
  Fit1d f;
  f.best = golden_min(nll, std::max(0.0, (bi - 1) * step), std::min(hi, (bi + 1) * step),
                      1e-10 * hi);
  f.nll = nll(f.best);
  if (prof[bi] < f.nll) {
    f.best = bi * step;
    f.nll = prof[bi];
  }
  int up = bi;
  while (up < kGrid && prof[up + 1] <= f.nll + 2.0) ++up;
  f.upper = std::max(f.best, std::min(hi, (up + 1) * step));
  int down = bi;
  while (down > 0 && prof[down - 1] <= f.nll + 2.0) --down;
  f.excludes_zero = down > 0;
  return f;
}

}  // namespace

WalshFit walsh_fit(const std::vector<WalshRun>& runs, double omega_q,
                   const WalshFitOptions& options) {
  if (!(omega_q > 0.0)) throw std::invalid_argument("omega_q must be positive");
  if (runs.empty()) throw std::invalid_argument("walsh_fit needs at least one run");
  WalshFit fit;
  fit.omega_q = omega_q;
  for (const auto& run : runs) {
    run.validate();
    const int k = walsh_m(run.order);
    const double n_min =
        static_cast<double>(*std::min_element(run.n_groups.begin(), run.n_groups.end()));
    const double n_max =
        static_cast<double>(*std::max_element(run.n_groups.begin(), run.n_groups.end()));
    const double a_min = std::abs(walsh_coefficients(run.order, n_min, omega_q, k)[k]);
    const double a_max = std::abs(walsh_coefficients(run.order, n_max, omega_q, k)[k]);
    if (a_min == 0.0) throw CalibrationError("Walsh coefficient vanishes for this run");
    // Past pi / A(N_min) the shortest run aliases; past a few tens of turns of
    // the longest run nothing new is learned. The NLL wiggles on the scale
    // 1 / A(N_max), which sets the grid.
    const double mu_hi = std::min(kPi / a_min, 64.0 * kPi / a_max);
    const double sigma_hi = std::min(4.0 / a_min, 64.0 / a_max);
    const double resolution = 0.125 / a_max;

    auto nll = [&](double mu, double sigma) {
      std::vector<double> mus(k + 1, 0.0), sigmas(k + 1, 0.0);
      mus[k] = mu;
      sigmas[k] = sigma;
      return binomial_nll(run, [&](double n) {
        return walsh_probability(run.order, n, omega_q, mus, sigmas);
      });
    };

    WalshTerm term;
    term.k = k;
    const bool fit_sigma = k == 0 || options.policy == WalshPolicy::kFitSigma;
    if (k == 0 && options.free_mu0) {
      // Grid over mu with the sigma profile, then alternate golden sections.
      auto profile_sigma = [&](double mu) {
        return golden_min([&](double s) { return nll(mu, s); }, 0.0, sigma_hi, 1e-9 * sigma_hi);
      };
      const Fit1d fm =
          fit_1d([&](double mu) { return nll(mu, profile_sigma(mu)); }, mu_hi, resolution);
      double bm = fm.best, bs = profile_sigma(bm);
      for (int round = 0; round < 10; ++round) {
        bm = golden_min([&](double m) { return nll(m, bs); }, std::max(0.0, bm - resolution),
                        std::min(mu_hi, bm + resolution), 1e-10 * mu_hi);
        bs = profile_sigma(bm);
      }
      term.mu = bm;
      term.mu_upper = std::max(bm, fm.upper);
      term.sigma = bs;
      term.nll = nll(bm, bs);
      const Fit1d fs = fit_1d([&](double s) { return nll(bm, s); }, sigma_hi, resolution);
      term.sigma_upper = fs.upper;
      term.identifiable = fm.excludes_zero || fs.excludes_zero;
    } else if (fit_sigma) {
      const Fit1d fs = fit_1d([&](double s) { return nll(0.0, s); }, sigma_hi, resolution);
      term.sigma = fs.best;
      term.sigma_upper = fs.upper;
      term.nll = fs.nll;
      term.identifiable = fs.excludes_zero && fs.upper < sigma_hi;
    } else {
      const Fit1d fm = fit_1d([&](double m) { return nll(m, 0.0); }, mu_hi, resolution);
      term.mu = fm.best;
      term.mu_upper = fm.upper;
      term.nll = fm.nll;
      term.identifiable = fm.excludes_zero && fm.upper < mu_hi;
    }
    fit.terms.push_back(term);
  }
  std::sort(fit.terms.begin(), fit.terms.end(),
            [](const WalshTerm& a, const WalshTerm& b) { return a.k < b.k; });
  return fit;
}

double drift_gate_error(int k, double mu, double omega_q, double duration,
                        double pulses_per_clifford) {
  if (k < 0 || !(omega_q > 0.0) || !(duration >= 0.0)) {
    throw std::invalid_argument("invalid drift term");
  }
  // Mean of (mu t^k / Omega_q)^2 over [0, T] is (mu / Omega_q)^2 T^2k / (2k + 1).
  const double r = mu / omega_q;
  return pulses_per_clifford * 0.5 * r * r * std::pow(duration, 2 * k) / (2 * k + 1);
}

}  // namespace ionrb

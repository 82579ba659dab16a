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

#include "ionrb/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ionrb {
namespace {

constexpr double kMaxLinearisedProbability = 0.5;

void check_linear(double p, const char* what) {
  if (p > kMaxLinearisedProbability) {
    throw std::invalid_argument(std::string(what) +
                                " probability exceeds 0.5; delay outside linear model");
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

// --- amplitude ---------------------------------------------------------------

void AmplitudeNoiseModel::validate() const {
  for (double s : sigma) {
    if (!(s >= 0.0)) throw std::invalid_argument("amplitude sigma must be non-negative");
  }
  for (double m : mu) {
    if (!std::isfinite(m)) throw std::invalid_argument("amplitude mu must be finite");
  }
}

bool AmplitudeNoiseModel::is_zero() const {
  return std::all_of(mu.begin(), mu.end(), [](double v) { return v == 0.0; }) &&
         std::all_of(sigma.begin(), sigma.end(), [](double v) { return v == 0.0; });
}

double AmplitudePolynomial::offset_at(double t) const {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * t + *it;
  return acc;
}

AmplitudePolynomial sample_shot_amplitude(const AmplitudeNoiseModel& model, Rng& rng) {
  model.validate();
  AmplitudePolynomial out;
  out.coeffs.resize(model.order());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < out.coeffs.size(); ++k) {
    const double m = k < model.mu.size() ? model.mu[k] : 0.0;
    const double s = k < model.sigma.size() ? model.sigma[k] : 0.0;
    // Always consume a draw so stream positions do not depend on sigma.
    const double z = normal(rng);
    out.coeffs[k] = s > 0.0 ? m + s * z : m;
  }
  return out;
}

// --- motion ------------------------------------------------------------------

void MotionalModel::validate() const {
  if (eta < 0.0 || omega_m < 0.0 || n_bar0 < 0.0 || heating_rate < 0.0) {
    throw std::invalid_argument("motional model parameters must be non-negative");
  }
}

double MotionalModel::depth(double t) const { return 2.0 * eta * std::sqrt(n_bar(t)); }

AmplitudeTrace motional_modulation(const MotionalModel& model, double t_elapsed, Rng& rng) {
  model.validate();
  if (t_elapsed < 0.0) throw std::invalid_argument("elapsed time must be non-negative");
  std::uniform_real_distribution<double> uniform(0.0, kTwoPi);
  const double theta = uniform(rng);
  AmplitudeTrace trace;
  if (model.eta == 0.0 || model.omega_m == 0.0) {
    trace.multiplier = [](double) { return 1.0; };
    return trace;
  }
  // n_bar is held at its pulse-start value; it changes by < 1e-2 quanta per pulse.
  const double depth = model.depth(t_elapsed);
  const double w = model.omega_m;
  trace.multiplier = [=](double t) { return 1.0 + depth * std::cos(w * (t_elapsed + t) + theta); };
  trace.max_step = (kTwoPi / w) / 16.0;
  return trace;
}

double motional_envelope_error(const MotionalModel& model, double n_bar, double t_half_pi) {
  if (!(t_half_pi > 0.0)) throw std::invalid_argument("t_half_pi must be positive");
  if (model.omega_m <= 0.0) return 0.0;
  const double d_omega = 0.75 * kPi * model.eta * std::sqrt(n_bar + 0.5) / t_half_pi;
  const double r = d_omega / model.omega_m;
  return r * r;
}

// --- quantiser ---------------------------------------------------------------

void QuantizerConfig::validate() const {
  if (bits < 1 || bits > 52) throw std::invalid_argument("quantizer bits must be in [1, 52]");
  if (!(amp_scale > 0.0 && amp_scale <= 1.0)) {
    throw std::invalid_argument("quantizer amp_scale must be in (0, 1]");
  }
}

double QuantizerConfig::step() const { return std::ldexp(1.0, -bits); }

double quantize_amplitude(const QuantizerConfig& config, double requested) {
  config.validate();
  if (!(requested >= 0.0 && requested <= 1.0)) {
    throw std::invalid_argument("requested amplitude must be in [0, 1]");
  }
  const double levels = std::ldexp(1.0, config.bits);
  return std::nearbyint(requested * levels) / levels;
}

double quantization_max_relative_offset(const QuantizerConfig& config) {
  config.validate();
  return 1.0 / (std::ldexp(1.0, config.bits + 1) * config.amp_scale);
}

double quantization_error_per_pulse(const QuantizerConfig& config) {
  const double d = quantization_max_relative_offset(config);
  return d * d / 6.0;
}

// --- idle channel ------------------------------------------------------------

void IdleRates::validate() const {
  if (eps_b < 0.0 || eps_d_plus_leak0 < 0.0 || eps_d_plus_leak1 < 0.0 || p_flip < 0.0) {
    throw std::invalid_argument("idle rates must be non-negative");
  }
}

IdleRates IdleRates::scaled(double factor) const {
  return {eps_b * factor, eps_d_plus_leak0 * factor, eps_d_plus_leak1 * factor, p_flip * factor};
}

double IdleRates::rb_error_rate() const {
  return 0.5 * eps_b + 0.5 * 0.5 * (eps_d_plus_leak0 + eps_d_plus_leak1) + p_flip;
}

IdlePopulations apply_idle_channel(const IdleRates& rates, double q0, double q1, double delay) {
  rates.validate();
  if (!(delay >= 0.0)) throw std::invalid_argument("delay must be non-negative");
  const double l0 = rates.eps_d_plus_leak0 * delay;
  const double l1 = rates.eps_d_plus_leak1 * delay;
  const double f = rates.p_flip * delay;
  check_linear(l0, "leakage from |0>");
  check_linear(l1, "leakage from |1>");
  check_linear(f, "bit-flip");
  check_linear(rates.eps_b * delay, "bright measurement error");
  IdlePopulations out;
  out.leak = q0 * l0 + q1 * l1;
  out.p0 = q0 * (1.0 - l0 - f) + q1 * f;
  out.p1 = q1 * (1.0 - l1 - f) + q0 * f;
  return out;
}

IdlePopulations apply_idle_channel(const IdleRates& rates, int prepared_state, double delay) {
  if (prepared_state != 0 && prepared_state != 1) {
    throw std::invalid_argument("prepared state must be 0 or 1");
  }
  return prepared_state == 0 ? apply_idle_channel(rates, 1.0, 0.0, delay)
                             : apply_idle_channel(rates, 0.0, 1.0, delay);
}

double bright_probability(const IdlePopulations& pops, bool shelve0, bool shelve1,
                          double eps_b_prob) {
  double bright = pops.leak;
  if (!shelve0) bright += pops.p0 * (1.0 - eps_b_prob);
  if (!shelve1) bright += pops.p1 * (1.0 - eps_b_prob);
  return bright;
}

double survival_probability(const IdleRates& rates, double q_expected, int expected_state,
                            bool shelve_expected, double delay) {
  const double q0 = expected_state == 0 ? q_expected : 1.0 - q_expected;
  const IdlePopulations pops = apply_idle_channel(rates, q0, 1.0 - q0, delay);
  const double eps_b = rates.eps_b * delay;
  const bool shelve0 = (expected_state == 0) == shelve_expected;
  const double bright = bright_probability(pops, shelve0, !shelve0, eps_b);
  return shelve_expected ? 1.0 - bright : bright;
}

// --- dephasing ---------------------------------------------------------------

double DephasingTrajectory::beta(double t) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    acc += amplitude[k] * std::cos(omega[k] * t + phase[k]);
  }
  return acc;
}

double DephasingTrajectory::phase_integral(double t0, double t1) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    acc += amplitude[k] / omega[k] *
           (std::sin(omega[k] * t1 + phase[k]) - std::sin(omega[k] * t0 + phase[k]));
  }
  return acc;
}

DephasingTrajectory dephasing_trajectory(const FrequencyPsd& psd, double duration,
                                         double resolution, Rng& rng,
                                         const TrajectoryOptions& options) {
  if (!(duration > 0.0) || !(resolution > 0.0)) {
    throw std::invalid_argument("duration and resolution must be positive");
  }
  if (options.tones_per_decade < 1) throw std::invalid_argument("tones_per_decade must be >= 1");
  const double f_lo = options.f_min > 0.0 ? options.f_min : 1.0 / duration;
  const double f_hi = options.f_max > 0.0 ? options.f_max : 0.5 / resolution;
  if (!(f_hi > f_lo)) throw std::invalid_argument("empty frequency band");

  const double decades = std::log10(f_hi / f_lo);
  const int bins = std::max(1, static_cast<int>(std::ceil(decades * options.tones_per_decade)));
  const double ratio = std::pow(f_hi / f_lo, 1.0 / bins);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  DephasingTrajectory out;
  double lo = f_lo;
  for (int b = 0; b < bins; ++b) {
    const double hi = lo * ratio;
    const double f = lo * std::pow(ratio, uniform(rng));
    const double theta = kTwoPi * uniform(rng);
    const double s = psd(f);
    if (!(s >= 0.0)) throw std::invalid_argument("PSD must be non-negative");
    if (s > 0.0) {
      out.omega.push_back(kTwoPi * f);
      out.amplitude.push_back(std::sqrt(2.0 * s * (hi - lo)));
      out.phase.push_back(theta);
    }
    lo = hi;
  }
  return out;
}

// --- SSB data ----------------------------------------------------------------

std::vector<SsbPoint> parse_ssb_csv(const std::string& text) {
  std::vector<SsbPoint> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ';', ',');
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::invalid_argument("SSB CSV line " + std::to_string(line_no) + ": need two columns");
    }
    const std::string a = trim(line.substr(0, comma));
    const std::string b = trim(line.substr(comma + 1));
    SsbPoint p;
    try {
      std::size_t used_a = 0, used_b = 0;
      p.freq_hz = std::stod(a, &used_a);
      p.dbc_per_hz = std::stod(b, &used_b);
      if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      if (out.empty()) continue;  // header row
      throw std::invalid_argument("SSB CSV line " + std::to_string(line_no) + ": not numeric");
    }
    if (!(p.freq_hz > 0.0)) {
      throw std::invalid_argument("SSB CSV line " + std::to_string(line_no) +
                                  ": frequency must be positive");
    }
    if (!out.empty() && !(p.freq_hz > out.back().freq_hz)) {
      throw std::invalid_argument("SSB CSV line " + std::to_string(line_no) +
                                  ": frequencies must increase");
    }
    out.push_back(p);
  }
  if (out.empty()) throw std::invalid_argument("SSB CSV contains no data");
  return out;
}

std::vector<SsbPoint> read_ssb_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open SSB CSV: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_ssb_csv(buf.str());
}

}  // namespace ionrb

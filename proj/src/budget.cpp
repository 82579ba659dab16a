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

#include "ionrb/budget.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ionrb/clifford.hpp"
#include "ionrb/estimator.hpp"
#include "ionrb/json_util.hpp"
#include "ionrb/pulse_sim.hpp"
#include "ionrb/rng.hpp"

namespace ionrb {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + " must be positive");
  }
}

void require_non_negative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + " must be non-negative");
  }
}

double table_ppc() { return CliffordGroup::instance().mean_pulses(); }

}  // namespace

// --- formulas ----------------------------------------------------------------

double err_decoherence(double t_half_pi, double t2_star_star, double ppc) {
  require_non_negative(t_half_pi, "t_half_pi");
  if (!(t2_star_star > 0.0)) throw std::invalid_argument("T2** must be positive");
  if (std::isinf(t2_star_star)) return 0.0;
  return ppc * t_half_pi / (3.0 * t2_star_star);
}

double mean_occupation(const MotionalModel& model, double duration) {
  require_non_negative(duration, "sequence duration");
  return model.n_bar(0.5 * duration);
}

double err_harmonic(const MotionalModel& model, double t_half_pi, double sequence_duration,
                    double ppc) {
  model.validate();
  require_positive(t_half_pi, "t_half_pi");
  return ppc * motional_envelope_error(model, mean_occupation(model, sequence_duration), t_half_pi);
}

double err_amp_noise(double sigma_rel, double ppc) {
  require_non_negative(sigma_rel, "sigma_rel");
  return ppc * 0.5 * sigma_rel * sigma_rel;
}

double err_zeeman(double residual_hz, double t_eff, double ppc) {
  require_non_negative(t_eff, "Zeeman time");
  return detuning_gate_error(residual_hz, t_eff, ppc);
}

double err_awg(const QuantizerConfig& config, double ppc) {
  config.validate();
  return ppc * quantization_error_per_pulse(config);
}

double leakage_rb_error(const IdleRates& rates, double gate_time) {
  rates.validate();
  require_non_negative(gate_time, "gate_time");
  return rates.rb_error_rate() * gate_time;
}

// --- drift -------------------------------------------------------------------

DriftError err_amp_drift(const std::vector<DriftSetpoint>& setpoints, double ppc) {
  if (setpoints.size() < 2) throw std::invalid_argument("drift needs at least two setpoints");
  for (std::size_t i = 0; i < setpoints.size(); ++i) {
    require_positive(setpoints[i].setting, "setpoint setting");
    if (i > 0 && !(setpoints[i].time > setpoints[i - 1].time)) {
      throw std::invalid_argument("setpoint times must increase");
    }
  }
  const double first = setpoints.front().setting;
  double cal = 0.0, uncal = 0.0;
  for (std::size_t i = 0; i + 1 < setpoints.size(); ++i) {
    const double dt = setpoints[i + 1].time - setpoints[i].time;
    const double s0 = setpoints[i].setting;
    const double s1 = setpoints[i + 1].setting;
    const double d = (s1 - s0) / s0;
    cal += dt * d * d / 3.0;
    // Mean square of a linear ramp from u to v.
    const double u = (s0 - first) / first;
    const double v = (s1 - first) / first;
    uncal += dt * (u * u + u * v + v * v) / 3.0;
  }
  const double span = setpoints.back().time - setpoints.front().time;
  return {0.5 * ppc * cal / span, 0.5 * ppc * uncal / span};
}

std::vector<DriftSetpoint> setpoints_from_trace(const std::vector<CalStep>& steps) {
  std::vector<DriftSetpoint> out;
  for (const CalStep& s : steps) {
    if (!out.empty() && out.back().time == s.time) {
      out.back().setting = s.setting;
    } else {
      out.push_back({s.time, s.setting});
    }
  }
  return out;
}

void DriftScenario::validate() const {
  require_non_negative(amplitude, "drift amplitude");
  require_positive(period, "drift period");
  require_positive(duration, "scenario duration");
  require_positive(interval, "calibration interval");
  if (interval > duration) throw std::invalid_argument("calibration interval exceeds duration");
  require_non_negative(sigma_rel, "sigma_rel");
  require_positive(gate_time, "gate_time");
  if (quantizer) quantizer->validate();
  loop.validate();
}

double DriftScenario::offset_at(double t) const {
  return amplitude * std::sin(kTwoPi * t / period);
}

namespace {

std::vector<double> calibration_times(const DriftScenario& sc) {
  std::vector<double> times;
  const long long n = static_cast<long long>(std::floor(sc.duration / sc.interval + 1e-9));
  for (long long k = 0; k <= n; ++k) times.push_back(static_cast<double>(k) * sc.interval);
  if (times.back() < sc.duration) times.push_back(sc.duration);
  return times;
}

CalTarget scenario_target(const DriftScenario& sc) {
  CalTarget t = CalTarget::for_pulse(pulse_for_gate_time(sc.gate_time));
  t.amp_sigma = sc.sigma_rel;
  t.quantizer = sc.quantizer;
  return t;
}

}  // namespace

std::vector<DriftSetpoint> ideal_drift_log(const DriftScenario& scenario) {
  scenario.validate();
  std::vector<DriftSetpoint> out;
  for (double t : calibration_times(scenario)) out.push_back({t, 1.0 / (1.0 + scenario.offset_at(t))});
  return out;
}

DriftScenarioResult simulate_drift_scenario(const DriftScenario& scenario) {
  scenario.validate();
  const double ppc = table_ppc();
  const std::vector<double> times = calibration_times(scenario);
  CalTarget target = scenario_target(scenario);
  DriftScenarioResult out;
  for (std::size_t k = 0; k < times.size(); ++k) {
    target.amp_offset = scenario.offset_at(times[k]);
    target.seed = stream_seed(scenario.seed, {static_cast<std::uint64_t>(k), kTagCalibration});
    CalLoopConfig loop = scenario.loop;
    loop.start_time = times[k];
    const CalLoopResult r = amplitude_cal_loop(loop, target);
    if (!r.converged) ++out.failed_calibrations;
    out.trace.insert(out.trace.end(), r.steps.begin(), r.steps.end());
    target.pulse.amp_scale = r.target.pulse.amp_scale;
    out.setpoints.push_back({times[k], target.pulse.amp_scale});
  }
  out.interpolated = err_amp_drift(out.setpoints, ppc);

  // Time averages of the actual residual, midpoint rule inside each interval.
  constexpr int kSub = 64;
  const double first_setting = out.setpoints.front().setting;
  double cal = 0.0, uncal = 0.0;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double dt = (times[k + 1] - times[k]) / kSub;
    for (int j = 0; j < kSub; ++j) {
      CalTarget t = target;
      t.amp_offset = scenario.offset_at(times[k] + (j + 0.5) * dt);
      t.pulse.amp_scale = out.setpoints[k].setting;
      const double a = t.residual_amp_offset();
      t.pulse.amp_scale = first_setting;
      const double b = t.residual_amp_offset();
      cal += dt * a * a;
      uncal += dt * b * b;
    }
  }
  const double span = times.back() - times.front();
  out.true_calibrated = 0.5 * ppc * cal / span;
  out.true_uncalibrated = 0.5 * ppc * uncal / span;
  return out;
}

nlohmann::json DriftScenarioResult::to_json() const {
  nlohmann::json sp = nlohmann::json::array();
  for (const auto& s : setpoints) sp.push_back({{"time", s.time}, {"setting", s.setting}});
  return {{"setpoints", sp},
          {"interpolated_calibrated", interpolated.calibrated},
          {"interpolated_uncalibrated", interpolated.uncalibrated},
          {"true_calibrated", true_calibrated},
          {"true_uncalibrated", true_uncalibrated},
          {"failed_calibrations", failed_calibrations}};
}

// --- idle-rate algebra -----------------------------------------------------------

std::string to_string(ShelveScheme scheme) {
  switch (scheme) {
    case ShelveScheme::kNone:
      return "none";
    case ShelveScheme::kPrepared:
      return "prepared";
    case ShelveScheme::kOther:
      return "other";
    case ShelveScheme::kBoth:
      return "both";
  }
  return "none";
}

ShelveScheme shelve_scheme_from_string(const std::string& s) {
  if (s == "none" || s == "a") return ShelveScheme::kNone;
  if (s == "prepared" || s == "b") return ShelveScheme::kPrepared;
  if (s == "other" || s == "c") return ShelveScheme::kOther;
  if (s == "both" || s == "d") return ShelveScheme::kBoth;
  throw std::invalid_argument("unknown shelving scheme '" + s + "'");
}

namespace {

bool shelves(ShelveScheme scheme, int prepared, int state) {
  switch (scheme) {
    case ShelveScheme::kNone:
      return false;
    case ShelveScheme::kPrepared:
      return state == prepared;
    case ShelveScheme::kOther:
      return state != prepared;
    case ShelveScheme::kBoth:
      return true;
  }
  return false;
}

// Schemes that shelve the prepared state report errors as bright events;
// the others as dark events.
bool error_is_bright(ShelveScheme scheme) {
  return scheme == ShelveScheme::kPrepared || scheme == ShelveScheme::kBoth;
}

struct Slope {
  double intercept = 0.0;
  RateEstimate slope;
};

// Error-like fraction and shot count of every point, in delay order.
struct Series {
  std::vector<double> delay, y, n;
};

Series error_series(const SchemeData& d) {
  std::vector<SchemePoint> pts = d.points;
  std::sort(pts.begin(), pts.end(),
            [](const SchemePoint& a, const SchemePoint& b) { return a.delay < b.delay; });
  Series s;
  for (const SchemePoint& p : pts) {
    if (p.shots <= 0 || p.bright < 0 || p.bright > p.shots) {
      throw std::invalid_argument("scheme point needs 0 <= bright <= shots and shots > 0");
    }
    require_non_negative(p.delay, "delay");
    const double k = error_is_bright(d.scheme) ? static_cast<double>(p.bright)
                                               : static_cast<double>(p.shots - p.bright);
    s.delay.push_back(p.delay);
    s.y.push_back(k / static_cast<double>(p.shots));
    s.n.push_back(static_cast<double>(p.shots));
  }
  const auto [lo, hi] = std::minmax_element(s.delay.begin(), s.delay.end());
  if (s.delay.size() < 2 || *lo == *hi) {
    throw std::invalid_argument("scheme '" + to_string(d.scheme) + "' needs two distinct delays");
  }
  return s;
}

Slope line_fit(const std::vector<double>& x, const std::vector<double>& y,
               const std::vector<double>& var) {
  double s = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 1.0 / var[i];
    s += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = s * sxx - sx * sx;
  Slope out;
  out.slope.value = (s * sxy - sx * sy) / det;
  out.slope.std_error = std::sqrt(s / det);
  out.intercept = (sy - out.slope.value * sx) / s;
  return out;
}

double binomial_var(double p, double n) {
  const double floor = 0.5 / n;
  const double q = std::clamp(p, floor, 1.0 - floor);
  return q * (1.0 - q) / n;
}

// Straight-line fit of a raw series. Weights come from the previous pass's
// fitted line, so a low count does not pull the fit towards itself.
struct RawFit {
  Slope fit;
  std::vector<double> var;  // binomial variance at the fitted line
};

RawFit raw_fit(const Series& s) {
  std::vector<double> p(s.y.size()), var(s.y.size());
  for (std::size_t i = 0; i < s.y.size(); ++i) p[i] = (s.y[i] * s.n[i] + 0.5) / (s.n[i] + 1.0);
  RawFit out;
  for (int pass = 0; pass < 3; ++pass) {
    for (std::size_t i = 0; i < p.size(); ++i) var[i] = binomial_var(p[i], s.n[i]);
    out.fit = line_fit(s.delay, s.y, var);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = out.fit.intercept + out.fit.slope.value * s.delay[i];
    }
  }
  for (std::size_t i = 0; i < p.size(); ++i) var[i] = binomial_var(p[i], s.n[i]);
  out.var = var;
  return out;
}

RateEstimate difference(const RateEstimate& a, const RateEstimate& b) {
  return {a.value - b.value, std::hypot(a.std_error, b.std_error)};
}

RateEstimate inverse_variance_mean(const RateEstimate& a, const RateEstimate& b) {
  const double wa = 1.0 / (a.std_error * a.std_error);
  const double wb = 1.0 / (b.std_error * b.std_error);
  return {(wa * a.value + wb * b.value) / (wa + wb), 1.0 / std::sqrt(wa + wb)};
}

bool agree(const RateEstimate& a, const RateEstimate& b, double sigmas) {
  return std::abs(a.value - b.value) <= sigmas * std::hypot(a.std_error, b.std_error);
}

nlohmann::json rate_json(const RateEstimate& r) {
  return {{"value", r.value}, {"std_error", r.std_error}};
}

}  // namespace

IdleRates IdleRateEstimate::rates() const {
  IdleRates r;
  r.eps_b = std::max(0.0, eps_b.value);
  r.eps_d_plus_leak0 = std::max(0.0, leak[0].value);
  r.eps_d_plus_leak1 = std::max(0.0, leak[1].value);
  r.p_flip = std::max(0.0, p_flip.value);
  return r;
}

nlohmann::json IdleRateEstimate::to_json() const {
  return {{"eps_b", rate_json(eps_b)},
          {"p_flip_ac", rate_json(flip_ac)},
          {"p_flip_bd", rate_json(flip_bd)},
          {"p_flip", rate_json(p_flip)},
          {"p_flip_upper", p_flip_upper},
          {"eps_d_plus_leak0", rate_json(leak[0])},
          {"eps_d_plus_leak1", rate_json(leak[1])},
          {"eps_d_plus_leak0_direct", rate_json(leak_direct[0])},
          {"eps_d_plus_leak1_direct", rate_json(leak_direct[1])},
          {"flip_consistent", flip_consistent},
          {"leak_consistent", leak_consistent},
          {"warnings", warnings}};
}

IdleRateEstimate estimate_idle_rates(const std::vector<SchemeData>& data) {
  // series[scheme][prepared]
  std::optional<Series> series[4][2];
  for (const SchemeData& d : data) {
    if (d.prepared_state != 0 && d.prepared_state != 1) {
      throw std::invalid_argument("prepared state must be 0 or 1");
    }
    auto& slot = series[static_cast<int>(d.scheme)][d.prepared_state];
    if (slot) throw std::invalid_argument("duplicate scheme dataset");
    slot = error_series(d);
  }
  for (int s = 0; s < 4; ++s) {
    for (int q = 0; q < 2; ++q) {
      if (!series[s][q]) {
        throw std::invalid_argument("missing dataset: scheme '" +
                                    to_string(static_cast<ShelveScheme>(s)) + "', prepared " +
                                    std::to_string(q));
      }
    }
  }

  // Per preparation the four signals are, to first order in each rate,
  //   none:     dark   = (1 - L t) e t
  //   prepared: bright = L t + f t (1 - e t)
  //   other:    dark   = f t + (1 - L t - f t) e t
  //   both:     bright = L t
  // Normalising pointwise by the measured non-leaked and non-dark fractions
  // makes each combination exactly linear in t before the slope fit.
  RateEstimate eps[2], fac[2], fbd[2], prep_raw[2];
  IdleRateEstimate out;
  for (int q = 0; q < 2; ++q) {
    const Series& a = *series[static_cast<int>(ShelveScheme::kNone)][q];
    const Series& b = *series[static_cast<int>(ShelveScheme::kPrepared)][q];
    const Series& c = *series[static_cast<int>(ShelveScheme::kOther)][q];
    const Series& d = *series[static_cast<int>(ShelveScheme::kBoth)][q];
    if (a.delay != b.delay || a.delay != c.delay || a.delay != d.delay) {
      throw std::invalid_argument("the four schemes of one preparation need the same delays");
    }
    const RawFit fa = raw_fit(a), fb = raw_fit(b), fc = raw_fit(c), fd = raw_fit(d);
    const std::size_t n = a.delay.size();
    std::vector<double> ye(n), ve(n), yac(n), vac(n), ybd(n), vbd(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double kept = std::max(1.0 - d.y[i], 1e-12);
      ye[i] = a.y[i] / kept;
      ve[i] = fa.var[i] / (kept * kept) + ye[i] * ye[i] * fd.var[i] / (kept * kept);
      const double lit = std::max(1.0 - ye[i], 1e-12);
      yac[i] = (c.y[i] - a.y[i]) / lit;
      vac[i] = (fc.var[i] + fa.var[i]) / (lit * lit) + yac[i] * yac[i] * ve[i] / (lit * lit);
      ybd[i] = (b.y[i] - d.y[i]) / lit;
      vbd[i] = (fb.var[i] + fd.var[i]) / (lit * lit) + ybd[i] * ybd[i] * ve[i] / (lit * lit);
    }
    eps[q] = line_fit(a.delay, ye, ve).slope;
    fac[q] = line_fit(a.delay, yac, vac).slope;
    fbd[q] = line_fit(a.delay, ybd, vbd).slope;
    prep_raw[q] = fb.fit.slope;
    out.leak_direct[q] = fd.fit.slope;
  }
  out.eps_b = inverse_variance_mean(eps[0], eps[1]);
  out.flip_ac = inverse_variance_mean(fac[0], fac[1]);
  out.flip_bd = inverse_variance_mean(fbd[0], fbd[1]);
  out.p_flip = inverse_variance_mean(out.flip_ac, out.flip_bd);
  out.p_flip_upper = std::max(0.0, out.p_flip.value) + 2.0 * out.p_flip.std_error;
  out.flip_consistent = agree(out.flip_ac, out.flip_bd, 3.0);
  if (!out.flip_consistent) {
    out.warnings.push_back("bit-flip estimators disagree by more than 3 sigma");
  }
  for (int q = 0; q < 2; ++q) {
    out.leak[q] = difference(prep_raw[q], out.p_flip);
    if (!agree(out.leak[q], out.leak_direct[q], 3.0)) {
      out.leak_consistent = false;
      out.warnings.push_back("leakage estimators for |" + std::to_string(q) +
                             "> disagree by more than 3 sigma");
    }
  }
  return out;
}

std::vector<SchemeData> simulate_idle_schemes(const IdleRates& rates,
                                              const std::vector<double>& delays, long long shots,
                                              std::uint64_t seed) {
  rates.validate();
  if (shots <= 0) throw std::invalid_argument("shots must be positive");
  if (delays.empty()) throw std::invalid_argument("need at least one delay");
  std::vector<SchemeData> out;
  for (int s = 0; s < 4; ++s) {
    for (int q = 0; q < 2; ++q) {
      SchemeData d;
      d.scheme = static_cast<ShelveScheme>(s);
      d.prepared_state = q;
      for (std::size_t i = 0; i < delays.size(); ++i) {
        const IdlePopulations pops = apply_idle_channel(rates, q, delays[i]);
        const double p = bright_probability(pops, shelves(d.scheme, q, 0), shelves(d.scheme, q, 1),
                                            rates.eps_b * delays[i]);
        Rng rng = make_stream(seed, {static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(q),
                                     static_cast<std::uint64_t>(i), kTagIdle});
        std::binomial_distribution<long long> draw(shots, std::clamp(p, 0.0, 1.0));
        d.points.push_back({delays[i], draw(rng), shots});
      }
      out.push_back(std::move(d));
    }
  }
  return out;
}

// --- budget ------------------------------------------------------------------

std::string to_string(Mechanism m) {
  switch (m) {
    case Mechanism::kDecoherence:
      return "decoherence";
    case Mechanism::kIdle:
      return "leakage_bitflip_measurement";
    case Mechanism::kAmpNoise:
      return "fast_amplitude_noise";
    case Mechanism::kHarmonic:
      return "harmonic_motion";
    case Mechanism::kAmpDrift:
      return "slow_amplitude_drift";
    case Mechanism::kZeeman:
      return "ac_zeeman_calibration";
    case Mechanism::kAwg:
      return "amplitude_resolution";
    case Mechanism::kSpectator:
      return "spectator_excitation";
    case Mechanism::kRamping:
      return "zeeman_ramping";
    case Mechanism::kNonRwa:
      return "non_rwa";
  }
  return "decoherence";
}

Mechanism mechanism_from_string(const std::string& s) {
  for (Mechanism m : all_mechanisms()) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown mechanism '" + s + "'");
}

std::vector<Mechanism> all_mechanisms() {
  return {Mechanism::kDecoherence, Mechanism::kIdle,     Mechanism::kAmpNoise,
          Mechanism::kHarmonic,    Mechanism::kAmpDrift, Mechanism::kZeeman,
          Mechanism::kAwg,         Mechanism::kSpectator, Mechanism::kRamping,
          Mechanism::kNonRwa};
}

std::string mechanism_label(Mechanism m) {
  switch (m) {
    case Mechanism::kDecoherence:
      return "A";
    case Mechanism::kIdle:
      return "B";
    case Mechanism::kAmpNoise:
      return "C";
    case Mechanism::kHarmonic:
      return "D";
    case Mechanism::kAmpDrift:
      return "E";
    case Mechanism::kAwg:
      return "F";
    default:
      return "";
  }
}

std::string to_string(ZeemanTime t) {
  switch (t) {
    case ZeemanTime::kHalfPi:
      return "half_pi";
    case ZeemanTime::kAreaEquivalent:
      return "area_equivalent";
    case ZeemanTime::kClifford:
      return "clifford";
  }
  return "half_pi";
}

ZeemanTime zeeman_time_from_string(const std::string& s) {
  if (s == "half_pi") return ZeemanTime::kHalfPi;
  if (s == "area_equivalent") return ZeemanTime::kAreaEquivalent;
  if (s == "clifford") return ZeemanTime::kClifford;
  throw std::invalid_argument("unknown Zeeman time convention '" + s + "'");
}

IdleRates long_delay_rates() {
  IdleRates r;
  r.eps_b = 1.6e-2;
  r.eps_d_plus_leak0 = 1.3e-2;
  r.eps_d_plus_leak1 = 1.2e-2;
  r.p_flip = 0.0;
  return r;
}

IdleRates idle_benchmark_rates() {
  const IdleRates r = long_delay_rates();
  return r.scaled(0.62e-7 / (r.rb_error_rate() * 13e-6));
}

void BudgetInput::validate() const {
  require_positive(gate_time, "gate_time");
  require_positive(t_half_pi, "t_half_pi");
  require_non_negative(ramp_time, "ramp_time");
  if (t_half_pi <= ramp_time) throw std::invalid_argument("t_half_pi must exceed ramp_time");
  require_non_negative(pulses_per_clifford, "pulses_per_clifford");
  if (!(t2_star_star > 0.0)) throw std::invalid_argument("T2** must be positive");
  require_non_negative(t2_uncertainty, "T2** uncertainty");
  idle.validate();
  require_non_negative(idle_rel_uncertainty, "idle uncertainty");
  motion.validate();
  require_non_negative(heating_rate_uncertainty, "heating rate uncertainty");
  if (longest_sequence < 0) throw std::invalid_argument("longest_sequence must be >= 0");
  require_non_negative(sigma_rel, "sigma_rel");
  require_non_negative(sigma_rel_uncertainty, "sigma_rel uncertainty");
  if (drift_log.size() == 1) throw std::invalid_argument("drift log needs zero or >= 2 setpoints");
  require_non_negative(drift_uncertainty, "drift uncertainty");
  require_non_negative(zeeman_uncertainty_hz, "Zeeman uncertainty");
  quantizer.validate();
  require_non_negative(spectator_bound, "spectator bound");
  require_non_negative(ramping_bound, "ramping bound");
  require_non_negative(non_rwa_bound, "non-RWA bound");
}

double BudgetInput::ppc() const {
  return pulses_per_clifford > 0.0 ? pulses_per_clifford : table_ppc();
}

double BudgetInput::zeeman_time_s() const {
  switch (zeeman_time) {
    case ZeemanTime::kHalfPi:
      return t_half_pi;
    case ZeemanTime::kAreaEquivalent:
      return t_half_pi - ramp_time;
    case ZeemanTime::kClifford:
      return gate_time;
  }
  return t_half_pi;
}

BudgetInput BudgetInput::at_gate_time(double g) const {
  require_positive(g, "gate_time");
  BudgetInput out = *this;
  out.t_half_pi = t_half_pi * g / gate_time;
  out.gate_time = g;
  return out;
}

nlohmann::json BudgetInput::to_json() const {
  nlohmann::json drift = nlohmann::json::array();
  for (const auto& s : drift_log) drift.push_back({{"time", s.time}, {"setting", s.setting}});
  nlohmann::json mech = nlohmann::json::array();
  for (Mechanism m : mechanisms) mech.push_back(to_string(m));
  return {{"gate_time", gate_time},
          {"t_half_pi", t_half_pi},
          {"ramp_time", ramp_time},
          {"pulses_per_clifford", ppc()},
          {"t2_star_star", t2_star_star},
          {"t2_uncertainty", t2_uncertainty},
          {"idle",
           {{"eps_b", idle.eps_b},
            {"eps_d_plus_leak0", idle.eps_d_plus_leak0},
            {"eps_d_plus_leak1", idle.eps_d_plus_leak1},
            {"p_flip", idle.p_flip}}},
          {"idle_rel_uncertainty", idle_rel_uncertainty},
          {"motion",
           {{"eta", motion.eta},
            {"omega_m", motion.omega_m},
            {"n_bar0", motion.n_bar0},
            {"heating_rate", motion.heating_rate}}},
          {"heating_rate_uncertainty", heating_rate_uncertainty},
          {"longest_sequence", longest_sequence},
          {"sigma_rel", sigma_rel},
          {"sigma_rel_uncertainty", sigma_rel_uncertainty},
          {"drift_log", drift},
          {"drift_uncertainty", drift_uncertainty},
          {"zeeman_residual_hz", zeeman_residual_hz},
          {"zeeman_uncertainty_hz", zeeman_uncertainty_hz},
          {"zeeman_time", to_string(zeeman_time)},
          {"quantizer", {{"bits", quantizer.bits}, {"amp_scale", quantizer.amp_scale}}},
          {"spectator_bound", spectator_bound},
          {"ramping_bound", ramping_bound},
          {"non_rwa_bound", non_rwa_bound},
          {"mechanisms", mech}};
}

BudgetInput BudgetInput::from_json(const nlohmann::json& j) {
  const std::string w = "budget";
  require_keys(j,
               {"gate_time", "t_half_pi", "ramp_time", "pulses_per_clifford", "t2_star_star",
                "t2_uncertainty", "idle", "idle_rel_uncertainty", "motion",
                "heating_rate_uncertainty", "longest_sequence", "sigma_rel",
                "sigma_rel_uncertainty", "drift_log", "drift_uncertainty", "zeeman_residual_hz",
                "zeeman_uncertainty_hz", "zeeman_time", "quantizer", "spectator_bound",
                "ramping_bound", "non_rwa_bound", "mechanisms"},
               w);
  BudgetInput in;
  // A new gate time without an explicit t_half_pi rescales the default.
  if (j.contains("gate_time") && !j.contains("t_half_pi")) {
    double g = in.gate_time;
    read_opt(j, "gate_time", g, w);
    in = in.at_gate_time(g);
  }
  read_opt(j, "gate_time", in.gate_time, w);
  read_opt(j, "t_half_pi", in.t_half_pi, w);
  read_opt(j, "ramp_time", in.ramp_time, w);
  read_opt(j, "pulses_per_clifford", in.pulses_per_clifford, w);
  read_opt(j, "t2_star_star", in.t2_star_star, w);
  read_opt(j, "t2_uncertainty", in.t2_uncertainty, w);
  if (j.contains("idle")) {
    const auto& s = j.at("idle");
    require_keys(s, {"eps_b", "eps_d_plus_leak0", "eps_d_plus_leak1", "p_flip"}, w + ".idle");
    read_opt(s, "eps_b", in.idle.eps_b, w + ".idle");
    read_opt(s, "eps_d_plus_leak0", in.idle.eps_d_plus_leak0, w + ".idle");
    read_opt(s, "eps_d_plus_leak1", in.idle.eps_d_plus_leak1, w + ".idle");
    read_opt(s, "p_flip", in.idle.p_flip, w + ".idle");
  }
  read_opt(j, "idle_rel_uncertainty", in.idle_rel_uncertainty, w);
  if (j.contains("motion")) {
    const auto& s = j.at("motion");
    require_keys(s, {"eta", "omega_m", "n_bar0", "heating_rate"}, w + ".motion");
    read_opt(s, "eta", in.motion.eta, w + ".motion");
    read_opt(s, "omega_m", in.motion.omega_m, w + ".motion");
    read_opt(s, "n_bar0", in.motion.n_bar0, w + ".motion");
    read_opt(s, "heating_rate", in.motion.heating_rate, w + ".motion");
  }
  read_opt(j, "heating_rate_uncertainty", in.heating_rate_uncertainty, w);
  read_opt(j, "longest_sequence", in.longest_sequence, w);
  read_opt(j, "sigma_rel", in.sigma_rel, w);
  read_opt(j, "sigma_rel_uncertainty", in.sigma_rel_uncertainty, w);
  if (j.contains("drift_log")) {
    const auto& arr = j.at("drift_log");
    if (!arr.is_array()) throw ConfigError(w + ".drift_log: expected an array");
    in.drift_log.clear();
    for (const auto& e : arr) {
      require_keys(e, {"time", "setting"}, w + ".drift_log[]");
      DriftSetpoint s;
      read_opt(e, "time", s.time, w + ".drift_log[]");
      read_opt(e, "setting", s.setting, w + ".drift_log[]");
      in.drift_log.push_back(s);
    }
  }
  read_opt(j, "drift_uncertainty", in.drift_uncertainty, w);
  read_opt(j, "zeeman_residual_hz", in.zeeman_residual_hz, w);
  read_opt(j, "zeeman_uncertainty_hz", in.zeeman_uncertainty_hz, w);
  if (j.contains("zeeman_time")) {
    std::string s;
    read_opt(j, "zeeman_time", s, w);
    try {
      in.zeeman_time = zeeman_time_from_string(s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(w + ".zeeman_time: " + e.what());
    }
  }
  if (j.contains("quantizer")) {
    const auto& s = j.at("quantizer");
    require_keys(s, {"bits", "amp_scale"}, w + ".quantizer");
    read_opt(s, "bits", in.quantizer.bits, w + ".quantizer");
    read_opt(s, "amp_scale", in.quantizer.amp_scale, w + ".quantizer");
  }
  read_opt(j, "spectator_bound", in.spectator_bound, w);
  read_opt(j, "ramping_bound", in.ramping_bound, w);
  read_opt(j, "non_rwa_bound", in.non_rwa_bound, w);
  if (j.contains("mechanisms")) {
    std::vector<std::string> names;
    read_opt(j, "mechanisms", names, w);
    in.mechanisms.clear();
    for (const auto& n : names) {
      try {
        in.mechanisms.push_back(mechanism_from_string(n));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(w + ".mechanisms: " + e.what());
      }
    }
  }
  try {
    in.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(w + ": " + e.what());
  }
  return in;
}

double ErrorBudget::error(Mechanism m) const {
  for (const auto& r : rows) {
    if (r.mechanism == m) return r.error;
  }
  return 0.0;
}

nlohmann::json ErrorBudget::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows) {
    rs.push_back({{"mechanism", to_string(r.mechanism)},
                  {"label", mechanism_label(r.mechanism)},
                  {"error", r.error},
                  {"uncertainty", r.uncertainty},
                  {"bound", r.bound}});
  }
  return {{"gate_time", gate_time},
          {"rows", rs},
          {"total", total},
          {"total_uncertainty", total_uncertainty}};
}

std::string ErrorBudget::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "mechanism,label,error,uncertainty,bound\n";
  for (const auto& r : rows) {
    os << to_string(r.mechanism) << ',' << mechanism_label(r.mechanism) << ',' << r.error << ','
       << r.uncertainty << ',' << (r.bound ? 1 : 0) << '\n';
  }
  if (!rows.empty()) os << "total,," << total << ',' << total_uncertainty << ",0\n";
  return os.str();
}

ErrorBudget budget_table(const BudgetInput& in) {
  in.validate();
  const double ppc = in.ppc();
  ErrorBudget out;
  out.gate_time = in.gate_time;
  const double sequence_duration = in.longest_sequence * in.gate_time;
  for (Mechanism m : all_mechanisms()) {
    if (std::find(in.mechanisms.begin(), in.mechanisms.end(), m) == in.mechanisms.end()) continue;
    BudgetRow r;
    r.mechanism = m;
    switch (m) {
      case Mechanism::kDecoherence:
        r.error = err_decoherence(in.t_half_pi, in.t2_star_star, ppc);
        r.uncertainty = r.error * in.t2_uncertainty / in.t2_star_star;
        break;
      case Mechanism::kIdle:
        r.error = leakage_rb_error(in.idle, in.gate_time);
        r.uncertainty = r.error * in.idle_rel_uncertainty;
        break;
      case Mechanism::kAmpNoise:
        r.error = err_amp_noise(in.sigma_rel, ppc);
        r.uncertainty = in.sigma_rel > 0.0 ? 2.0 * r.error * in.sigma_rel_uncertainty / in.sigma_rel
                                           : 0.0;
        break;
      case Mechanism::kHarmonic: {
        r.error = err_harmonic(in.motion, in.t_half_pi, sequence_duration, ppc);
        MotionalModel hot = in.motion;
        hot.heating_rate += in.heating_rate_uncertainty;
        r.uncertainty = err_harmonic(hot, in.t_half_pi, sequence_duration, ppc) - r.error;
        break;
      }
      case Mechanism::kAmpDrift:
        if (in.drift_log.size() >= 2) {
          r.error = err_amp_drift(in.drift_log, ppc).calibrated;
          r.uncertainty = in.drift_uncertainty;
        }
        break;
      case Mechanism::kZeeman:
        r.error = err_zeeman(in.zeeman_residual_hz, in.zeeman_time_s(), ppc);
        r.uncertainty = in.zeeman_residual_hz != 0.0
                            ? 2.0 * r.error * in.zeeman_uncertainty_hz /
                                  std::abs(in.zeeman_residual_hz)
                            : 0.0;
        break;
      case Mechanism::kAwg:
        r.error = err_awg(in.quantizer, ppc);
        break;
      case Mechanism::kSpectator:
        r.error = in.spectator_bound;
        r.bound = true;
        break;
      case Mechanism::kRamping:
        r.error = in.ramping_bound;
        r.bound = true;
        break;
      case Mechanism::kNonRwa:
        r.error = in.non_rwa_bound;
        r.bound = true;
        break;
    }
    out.total += r.error;
    out.total_uncertainty += r.uncertainty * r.uncertainty;
    out.rows.push_back(r);
  }
  out.total_uncertainty = std::sqrt(out.total_uncertainty);
  return out;
}

std::vector<double> default_curve_gate_times(int count) {
  if (count < 2) throw std::invalid_argument("curve needs at least two gate times");
  std::vector<double> out;
  const double lo = std::log(4.4e-6), hi = std::log(35e-6);
  for (int i = 0; i < count; ++i) out.push_back(std::exp(lo + (hi - lo) * i / (count - 1)));
  out.front() = 4.4e-6;
  out.back() = 35e-6;
  return out;
}

std::vector<ErrorBudget> budget_curve(const BudgetInput& input,
                                      const std::vector<double>& gate_times) {
  std::vector<ErrorBudget> out;
  for (double g : gate_times) out.push_back(budget_table(input.at_gate_time(g)));
  return out;
}

std::string curve_to_csv(const std::vector<ErrorBudget>& curve) {
  std::ostringstream os;
  os.precision(10);
  os << "gate_time,mechanism,error\n";
  for (const auto& b : curve) {
    for (const auto& r : b.rows) os << b.gate_time << ',' << to_string(r.mechanism) << ',' << r.error << '\n';
  }
  return os.str();
}

// --- simulated bounds and oracles -------------------------------------------------

nlohmann::json SimulatedBounds::to_json() const {
  return {{"spectator", spectator}, {"ramping", ramping}, {"non_rwa", non_rwa}};
}

McRbResult mc_rb_error(const RbNoiseConfig& noise, double gate_time, const McRbOptions& options) {
  if (options.n_sequences < 2) throw std::invalid_argument("need at least two sequences");
  RBPlanConfig pc;
  pc.lengths = options.lengths;
  pc.seqs_per_length = options.n_sequences;
  pc.shots_per_seq = options.shots;
  pc.gate_time = gate_time;
  pc.seed = options.seed;
  const RBPlan plan = generate_plan(pc);
  const std::vector<double> surv = mean_survival(plan, noise, {options.tier, options.workers});

  const std::size_t n_len = options.lengths.size();
  const int n_seq = options.n_sequences;
  // fail[length][sequence]
  std::vector<std::vector<double>> fail(n_len);
  for (std::size_t k = 0; k < plan.sequences.size(); ++k) {
    fail[plan.sequences[k].length_index].push_back(1.0 - surv[k]);
  }
  auto mean_fail = [&](int skip) {
    std::vector<double> m(n_len, 0.0);
    for (std::size_t l = 0; l < n_len; ++l) {
      int used = 0;
      for (int s = 0; s < n_seq; ++s) {
        if (s == skip) continue;
        m[l] += fail[l][s];
        ++used;
      }
      m[l] /= used;
    }
    return m;
  };
  McRbResult out;
  out.error = fit_mean_failures(options.lengths, mean_fail(-1)).epsilon;
  double acc = 0.0, acc_sq = 0.0;
  for (int s = 0; s < n_seq; ++s) {
    const double e = fit_mean_failures(options.lengths, mean_fail(s)).epsilon;
    acc += e;
    acc_sq += e * e;
  }
  const double mean = acc / n_seq;
  out.std_error = std::sqrt(std::max(0.0, (n_seq - 1.0) / n_seq * (acc_sq - n_seq * mean * mean)));
  return out;
}

SimulatedBounds simulate_bounds(double gate_time, const BoundOptions& options) {
  const PulseSpec pulse = pulse_for_gate_time(gate_time);
  const DriveParams drive = DriveParams::for_pulse(pulse);
  SimulatedBounds out;
  out.spectator = spectator_rb_error(pulse, drive, SpectatorConfig{}, options.spectator_cliffords,
                                     options.spectator_sequences, options.seed)
                      .error_per_clifford;

  // The calibration nulls the effective frame offset over a pulse pair; what
  // is left comes from the shift varying through ramps and gaps.
  CalTarget target = CalTarget::for_pulse(pulse);
  target.drive.zeeman.shift_at_full_amp = kTwoPi * options.zeeman_shift_hz;
  target.drive.detuning += kTwoPi * effective_frame_offset_hz(target);
  RbNoiseConfig noise;
  noise.pulse = pulse;
  noise.drive = target.drive;
  McRbOptions mc;
  mc.lengths = {1, 100, 400};
  mc.n_sequences = 4;
  mc.shots = 1;
  mc.tier = SimTier::kFull;
  mc.seed = options.seed;
  mc.workers = options.workers;
  out.ramping = std::max(0.0, mc_rb_error(noise, gate_time, mc).error);

  out.non_rwa = table_ppc() * counter_rotating_error(options.omega_q_scaled_ratio * drive.omega_q,
                                                     options.omega_q_physical, pulse, drive)
                                  .extrapolated;
  return out;
}

}  // namespace ionrb

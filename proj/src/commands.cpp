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

#include "ionrb/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <utility>

#include "ionrb/budget.hpp"
#include "ionrb/calibration.hpp"
#include "ionrb/clifford.hpp"
#include "ionrb/estimator.hpp"
#include "ionrb/ffunc.hpp"
#include "ionrb/json_util.hpp"
#include "ionrb/rng.hpp"

namespace ionrb {
namespace {

using json = nlohmann::json;

// Keys accepted at the top level of every configuration.
constexpr std::string_view kCommonKeys[] = {"schema_version", "experiment", "seed", "tier",
                                            "workers"};

const std::map<std::string, std::vector<std::string_view>>& command_sections() {
  static const std::map<std::string, std::vector<std::string_view>> m = {
      {"rb", {"plan", "noise", "bootstrap"}},
      {"idle-rb", {"plan", "idle", "spam", "gate_times", "bootstrap"}},
      {"irmb", {"plan", "noise", "delays", "bootstrap"}},
      {"calibrate", {"simulator", "loop", "drift"}},
      {"walsh", {"walsh"}},
      {"phase-noise", {"phase_noise"}},
      {"budget", {"budget", "curve", "bounds", "drift_trace"}},
      {"leakage-rates", {"leakage"}},
  };
  return m;
}

// --- config reading ------------------------------------------------------------

// One configuration object with a fixed key set.
class Section {
 public:
  Section(const json& j, std::string where, std::initializer_list<std::string_view> keys)
      : j_(j), where_(std::move(where)) {
    require_keys(j_, keys, where_);
  }

  bool has(const char* key) const { return j_.contains(key); }
  template <typename T>
  void get(const char* key, T& out) const {
    read_opt(j_, key, out, where_);
  }
  const json& at(const char* key) const { return j_.at(key); }
  std::string path(const char* key) const { return where_ + "." + key; }
  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
};

const json& empty_object() {
  static const json e = json::object();
  return e;
}

const json& section_or_empty(const json& config, const char* key) {
  return config.contains(key) ? config.at(key) : empty_object();
}

// Re-raises validation failures of the core types as configuration errors.
void checked(const std::string& where, const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

IdleRates parse_idle(const json& j, const std::string& where, IdleRates r) {
  Section s(j, where, {"eps_b", "eps_d_plus_leak0", "eps_d_plus_leak1", "p_flip"});
  s.get("eps_b", r.eps_b);
  s.get("eps_d_plus_leak0", r.eps_d_plus_leak0);
  s.get("eps_d_plus_leak1", r.eps_d_plus_leak1);
  s.get("p_flip", r.p_flip);
  checked(where, [&] { r.validate(); });
  return r;
}

QuantizerConfig parse_quantizer(const json& j, const std::string& where, QuantizerConfig q) {
  Section s(j, where, {"bits", "amp_scale"});
  s.get("bits", q.bits);
  s.get("amp_scale", q.amp_scale);
  checked(where, [&] { q.validate(); });
  return q;
}

MotionalModel parse_motion(const json& j, const std::string& where) {
  Section s(j, where, {"eta", "omega_m", "n_bar0", "heating_rate"});
  MotionalModel m;
  s.get("eta", m.eta);
  s.get("omega_m", m.omega_m);
  s.get("n_bar0", m.n_bar0);
  s.get("heating_rate", m.heating_rate);
  checked(where, [&] { m.validate(); });
  return m;
}

RBPlanConfig parse_plan(const json& j) {
  Section s(j, "plan", {"lengths", "seqs_per_length", "shots_per_seq", "gate_time"});
  RBPlanConfig p;
  s.get("lengths", p.lengths);
  s.get("seqs_per_length", p.seqs_per_length);
  s.get("shots_per_seq", p.shots_per_seq);
  s.get("gate_time", p.gate_time);
  checked("plan", [&] { p.validate(); });
  return p;
}

// Amplitude coefficients are given relative to the Rabi frequency of the
// plan's pulse, per s^k.
RbNoiseConfig parse_noise(const json& j, double gate_time) {
  Section s(j, "noise",
            {"ramp_time", "gap_time", "depolarizing", "spam", "t2", "static_detuning_hz",
             "zeeman_shift_hz", "amplitude", "motion", "quantizer", "idle", "phase_compensation"});
  RbNoiseConfig n;
  s.get("ramp_time", n.pulse.ramp_time);
  s.get("gap_time", n.pulse.gap_time);
  s.get("depolarizing", n.depolarizing);
  s.get("spam", n.spam);
  s.get("t2", n.t2);
  double hz = 0.0;
  s.get("static_detuning_hz", hz);
  n.static_detuning = kTwoPi * hz;
  double zeeman_hz = 0.0;
  s.get("zeeman_shift_hz", zeeman_hz);
  n.drive.zeeman.shift_at_full_amp = kTwoPi * zeeman_hz;
  s.get("phase_compensation", n.phase_compensation);
  if (s.has("amplitude")) {
    Section a(s.at("amplitude"), s.path("amplitude"), {"mu_rel", "sigma_rel"});
    std::vector<double> mu, sigma;
    a.get("mu_rel", mu);
    a.get("sigma_rel", sigma);
    double omega_q = 0.0;
    checked("noise", [&] { omega_q = pulse_for_gate_time(gate_time, n.pulse).nominal_rabi(); });
    for (double& v : mu) v *= omega_q;
    for (double& v : sigma) v *= omega_q;
    n.amplitude.mu = mu;
    n.amplitude.sigma = sigma;
  }
  if (s.has("motion")) n.motion = parse_motion(s.at("motion"), s.path("motion"));
  if (s.has("quantizer")) {
    n.quantizer = parse_quantizer(s.at("quantizer"), s.path("quantizer"), QuantizerConfig{});
  }
  if (s.has("idle")) n.idle = parse_idle(s.at("idle"), s.path("idle"), IdleRates{});
  checked("noise", [&] {
    n.validate();
    pulse_for_gate_time(gate_time, n.pulse);
  });
  return n;
}

BootstrapOptions parse_bootstrap(const json& j) {
  Section s(j, "bootstrap", {"n_resamples", "max_failed_fraction"});
  BootstrapOptions b;
  s.get("n_resamples", b.n_resamples);
  s.get("max_failed_fraction", b.max_failed_fraction);
  if (b.n_resamples < 0) throw ConfigError("bootstrap.n_resamples: must be >= 0");
  if (!(b.max_failed_fraction >= 0.0 && b.max_failed_fraction <= 1.0)) {
    throw ConfigError("bootstrap.max_failed_fraction: must be in [0, 1]");
  }
  return b;
}

CalLoopConfig parse_loop(const json& j) {
  Section s(j, "loop",
            {"n_start", "growth", "p_threshold", "shots_per_point", "max_pulses", "significance",
             "final_correction", "min_contrast"});
  CalLoopConfig c;
  s.get("n_start", c.n_start);
  s.get("growth", c.growth);
  s.get("p_threshold", c.p_threshold);
  s.get("shots_per_point", c.shots_per_point);
  s.get("max_pulses", c.max_pulses);
  s.get("significance", c.significance);
  s.get("final_correction", c.final_correction);
  s.get("min_contrast", c.min_contrast);
  checked("loop", [&] { c.validate(); });
  return c;
}

std::vector<double> parse_positive_list(const Section& s, const char* key,
                                        std::vector<double> fallback, bool allow_zero) {
  s.get(key, fallback);
  if (fallback.empty()) throw ConfigError(s.path(key) + ": must not be empty");
  for (double v : fallback) {
    if (!std::isfinite(v) || v < 0.0 || (!allow_zero && v == 0.0)) {
      throw ConfigError(s.path(key) + ": values must be " + (allow_zero ? "non-negative" : "positive"));
    }
  }
  return fallback;
}

// --- output formatting ---------------------------------------------------------

// Shortest round-trip text, so files are byte-stable.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// Non-finite values become null in JSON.
json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Context {
  std::string command;
  json config;
  std::uint64_t seed = 1;
  SimTier tier = SimTier::kFast;
  int workers = 1;
  CommandOutput* out = nullptr;

  RunOptions run_options() const { return {tier, workers}; }

  json header() const {
    return {{"tool", "ionrb"},
            {"version", kVersion},
            {"command", command},
            {"schema_version", kConfigSchemaVersion},
            {"config_hash", out->config_hash},
            {"seed", seed}};
  }

  std::string comment_header() const {
    std::ostringstream os;
    os << "# tool: ionrb\n# version: " << kVersion << "\n# command: " << command
       << "\n# schema_version: " << kConfigSchemaVersion << "\n# config_hash: " << out->config_hash
       << "\n# seed: " << seed << '\n';
    return os.str();
  }

  void add_json(const std::string& name, json data) const {
    json doc = {{"header", header()}, {"data", std::move(data)}};
    out->files.push_back({name, doc.dump(2) + "\n"});
  }

  // CSV and JSON-lines files take the header as # comment lines.
  void add_text(const std::string& name, const std::string& body) const {
    out->files.push_back({name, comment_header() + body});
  }
};

std::string dataset_csv(const RBDataset& d) {
  std::ostringstream os;
  os << "length,seq_id,errors,shots\n";
  for (const auto& r : d.records) {
    os << r.length << ',' << r.seq_id << ',' << r.errors << ',' << r.shots << '\n';
  }
  return os.str();
}

std::string survival_csv(const RBDataset& d, const DecayFit& fit) {
  std::ostringstream os;
  os << "length,shots,errors,survival,model\n";
  for (const auto& c : pool_counts(d)) {
    const double surv = 1.0 - static_cast<double>(c.errors) / static_cast<double>(c.shots);
    os << c.length << ',' << c.shots << ',' << c.errors << ',' << num(surv) << ','
       << num(survival_model(c.length, fit.amplitude, fit.epsilon)) << '\n';
  }
  return os.str();
}

// Maximum-likelihood fit plus a parametric bootstrap on its own stream.
DecayFit fit_dataset(const RBDataset& d, const BootstrapOptions& boot, const Context& ctx,
                     std::uint64_t index) {
  DecayFit fit = mle_fit(d);
  if (!fit.converged) throw CommandError("decay fit did not converge");
  if (boot.n_resamples > 0) {
    BootstrapOptions b = boot;
    b.seed = stream_seed(ctx.seed, {index, kTagBootstrap});
    b.workers = ctx.workers;
    fit = bootstrap_ci(d, fit, b);
  }
  return fit;
}

struct LineFit {
  double slope = 0.0;
  double slope_error = 0.0;
  double intercept = 0.0;
  double intercept_error = 0.0;
};

// Weighted straight line; unit weights when any error bar is zero.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& sigma) {
  const bool weighted = std::all_of(sigma.begin(), sigma.end(), [](double s) { return s > 0.0; });
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = weighted ? 1.0 / (sigma[i] * sigma[i]) : 1.0;
    sw += w, sx += w * x[i], sy += w * y[i], sxx += w * x[i] * x[i], sxy += w * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  LineFit f;
  if (!(det > 0.0)) throw CommandError("line fit needs two distinct abscissae");
  f.slope = (sw * sxy - sx * sy) / det;
  f.intercept = (sxx * sy - sx * sxy) / det;
  if (weighted) {
    f.slope_error = std::sqrt(sw / det);
    f.intercept_error = std::sqrt(sxx / det);
  }
  return f;
}

json line_json(const LineFit& f) {
  return {{"slope", f.slope},
          {"slope_error", f.slope_error},
          {"intercept", f.intercept},
          {"intercept_error", f.intercept_error}};
}

// --- commands -------------------------------------------------------------------

void cmd_rb(const Context& ctx) {
  const json& c = ctx.config;
  RBPlanConfig pc = parse_plan(section_or_empty(c, "plan"));
  pc.mode = RbMode::kGate;
  pc.seed = stream_seed(ctx.seed, {0, kTagPlan});
  const RbNoiseConfig noise = parse_noise(section_or_empty(c, "noise"), pc.gate_time);
  const BootstrapOptions boot = parse_bootstrap(section_or_empty(c, "bootstrap"));

  const RBPlan plan = generate_plan(pc);
  const RBDataset d = run_rb(plan, noise, ctx.run_options());
  const DecayFit fit = fit_dataset(d, boot, ctx, 0);

  ctx.add_json("dataset.json", d.to_json());
  ctx.add_text("counts.csv", dataset_csv(d));
  ctx.add_text("survival.csv", survival_csv(d, fit));
  ctx.add_json("fit.json", fit.to_json());
  ctx.out->report = {{"fit", fit.to_json()},
                     {"gate_time", pc.gate_time},
                     {"records", d.records.size()}};
}

void cmd_idle_rb(const Context& ctx) {
  const json& c = ctx.config;
  const Section s(c, "config",
                  {"schema_version", "experiment", "seed", "tier", "workers", "plan", "idle",
                   "spam", "gate_times", "bootstrap"});
  RBPlanConfig pc = parse_plan(section_or_empty(c, "plan"));
  pc.mode = RbMode::kIdle;
  const IdleRates rates =
      c.contains("idle") ? parse_idle(c.at("idle"), "idle", idle_benchmark_rates())
                         : idle_benchmark_rates();
  double spam = 0.0;
  s.get("spam", spam);
  if (!(spam >= 0.0 && spam <= 0.5)) throw ConfigError("spam: must be in [0, 0.5]");
  const std::vector<double> gate_times = parse_positive_list(s, "gate_times", {pc.gate_time}, false);
  const BootstrapOptions boot = parse_bootstrap(section_or_empty(c, "bootstrap"));

  std::ostringstream csv;
  csv << "gate_time,epsilon,stderr,predicted\n";
  json fits = json::array(), datasets = json::array();
  std::vector<double> eps, err;
  for (std::size_t i = 0; i < gate_times.size(); ++i) {
    RBPlanConfig p = pc;
    p.gate_time = gate_times[i];
    p.seed = stream_seed(ctx.seed, {i, kTagPlan});
    const RBDataset d = run_idle_rb(generate_plan(p), rates, spam, ctx.run_options());
    const DecayFit fit = fit_dataset(d, boot, ctx, i);
    const double predicted = leakage_rb_error(rates, p.gate_time);
    csv << num(p.gate_time) << ',' << num(fit.epsilon) << ',' << num(fit.epsilon_stderr) << ','
        << num(predicted) << '\n';
    json f = fit.to_json();
    f["gate_time"] = p.gate_time;
    f["predicted"] = predicted;
    fits.push_back(f);
    datasets.push_back(d.to_json());
    eps.push_back(fit.epsilon);
    err.push_back(fit.epsilon_stderr);
  }
  // Error per Clifford grows linearly with the idle time per Clifford.
  json slope;
  if (gate_times.size() >= 2) {
    slope = line_json(fit_line(gate_times, eps, err));
  } else {
    slope = {{"slope", eps[0] / gate_times[0]},
             {"slope_error", err[0] / gate_times[0]},
             {"intercept", 0.0},
             {"intercept_error", 0.0}};
  }
  slope["predicted_slope"] = rates.rb_error_rate();

  ctx.add_text("idle_rb.csv", csv.str());
  ctx.add_json("fits.json", fits);
  ctx.add_json("datasets.json", datasets);
  ctx.out->report = {{"fits", fits}, {"linear_model", slope}};
}

void cmd_irmb(const Context& ctx) {
  const json& c = ctx.config;
  const Section s(c, "config",
                  {"schema_version", "experiment", "seed", "tier", "workers", "plan", "noise",
                   "delays", "bootstrap"});
  RBPlanConfig pc = parse_plan(section_or_empty(c, "plan"));
  pc.mode = RbMode::kIrmb;
  const RbNoiseConfig noise = parse_noise(section_or_empty(c, "noise"), pc.gate_time);
  const std::vector<double> delays =
      parse_positive_list(s, "delays", {0.0, 1e-3, 2e-3, 4e-3}, true);
  if (delays.size() < 2) throw ConfigError("config.delays: need at least two delays");
  const BootstrapOptions boot = parse_bootstrap(section_or_empty(c, "bootstrap"));

  std::ostringstream csv;
  csv << "delay,epsilon,stderr\n";
  json fits = json::array();
  std::vector<double> eps, err;
  for (std::size_t i = 0; i < delays.size(); ++i) {
    RBPlanConfig p = pc;
    p.irmb_delay = delays[i];
    p.seed = stream_seed(ctx.seed, {i, kTagPlan});
    const RBDataset d = run_irmb(generate_plan(p), noise, ctx.run_options());
    const DecayFit fit = fit_dataset(d, boot, ctx, i);
    csv << num(delays[i]) << ',' << num(fit.epsilon) << ',' << num(fit.epsilon_stderr) << '\n';
    json f = fit.to_json();
    f["delay"] = delays[i];
    fits.push_back(f);
    eps.push_back(fit.epsilon);
    err.push_back(fit.epsilon_stderr);
  }
  const LineFit line = fit_line(delays, eps, err);
  json model = line_json(line);
  const double ppc = CliffordGroup::instance().mean_pulses();
  model["t2_star_star"] = jnum(line.slope > 0.0 ? ppc / (3.0 * line.slope)
                                                : std::numeric_limits<double>::infinity());

  ctx.add_text("irmb.csv", csv.str());
  ctx.add_json("fits.json", fits);
  ctx.out->report = {{"fits", fits}, {"linear_model", model}};
}

json loop_json(const CalLoopResult& r) {
  json steps = json::array();
  for (const auto& st : r.steps) steps.push_back(to_json(st));
  return {{"converged", r.converged},
          {"message", r.message},
          {"steps", r.steps.size()},
          {"residual", r.residual},
          {"residual_error", r.residual_error},
          {"final_state", r.steps.empty() ? json(nullptr) : steps.back()}};
}

// Steps until the true per-Clifford error of the setting first falls below
// the target, or null when it never does.
constexpr double kCalTargetError = 1e-8;

json steps_to_target(const std::vector<CalStep>& steps,
                     const std::function<double(double)>& error_at) {
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (error_at(steps[i].setting) <= kCalTargetError) return i + 1;
  }
  return nullptr;
}

std::string trace_text(const std::vector<CalStep>& steps) {
  std::ostringstream os;
  write_trace(os, steps);
  return os.str();
}

void cmd_calibrate(const Context& ctx) {
  const json& c = ctx.config;
  if (!c.contains("simulator")) throw ConfigError("config.simulator: required");
  const Section s(c.at("simulator"), "simulator",
                  {"gate_time", "ramp_time", "gap_time", "amp_offset", "amp_sigma", "amp_scale",
                   "detuning_hz", "zeeman_shift_hz", "quantizer"});
  double gate_time = 13e-6, detuning_hz = 0.0, zeeman_hz = 0.0;
  PulseSpec base;
  s.get("gate_time", gate_time);
  s.get("ramp_time", base.ramp_time);
  s.get("gap_time", base.gap_time);
  s.get("amp_scale", base.amp_scale);
  s.get("detuning_hz", detuning_hz);
  s.get("zeeman_shift_hz", zeeman_hz);
  CalTarget target;
  checked("simulator", [&] { target = CalTarget::for_pulse(pulse_for_gate_time(gate_time, base)); });
  s.get("amp_offset", target.amp_offset);
  s.get("amp_sigma", target.amp_sigma);
  target.drive.detuning = kTwoPi * detuning_hz;
  target.drive.zeeman.shift_at_full_amp = kTwoPi * zeeman_hz;
  if (s.has("quantizer")) {
    target.quantizer = parse_quantizer(s.at("quantizer"), s.path("quantizer"), QuantizerConfig{});
  }
  target.workers = ctx.workers;
  checked("simulator", [&] { target.validate(); });
  const CalLoopConfig loop = parse_loop(section_or_empty(c, "loop"));

  std::optional<DriftScenario> scenario;
  if (c.contains("drift")) {
    const Section d(c.at("drift"), "drift",
                    {"amplitude", "period", "duration", "interval", "sigma_rel", "quantizer"});
    DriftScenario sc;
    d.get("amplitude", sc.amplitude);
    d.get("period", sc.period);
    d.get("duration", sc.duration);
    d.get("interval", sc.interval);
    d.get("sigma_rel", sc.sigma_rel);
    if (d.has("quantizer")) {
      const json& q = d.at("quantizer");
      sc.quantizer = q.is_null() ? std::nullopt
                                 : std::optional(parse_quantizer(q, d.path("quantizer"),
                                                                 QuantizerConfig{15, 0.24}));
    }
    sc.gate_time = gate_time;
    sc.loop = loop;
    sc.seed = stream_seed(ctx.seed, {2, kTagCalibration});
    checked("drift", [&] { sc.validate(); });
    scenario = sc;
  }

  const double ppc = CliffordGroup::instance().mean_pulses();
  const double t_half_pi = target.pulse.t_half_pi;

  target.seed = stream_seed(ctx.seed, {0, kTagCalibration});
  const double amp_before = amplitude_offset_gate_error(target.residual_amp_offset(), ppc);
  const CalLoopResult amp = amplitude_cal_loop(loop, target);

  CalTarget ft = amp.target;
  ft.seed = stream_seed(ctx.seed, {1, kTagCalibration});
  const double hz_before = effective_frame_offset_hz(ft);
  const CalLoopResult freq = frequency_cal_loop(loop, ft);

  json a = loop_json(amp);
  a["error_before"] = amp_before;
  a["steps_to_target"] = steps_to_target(amp.steps, [&](double setting) {
    CalTarget t = target;
    t.pulse.amp_scale = setting;
    return amplitude_offset_gate_error(t.residual_amp_offset(), ppc);
  });
  a["final_setting"] = amp.target.pulse.amp_scale;
  json f = loop_json(freq);
  f["offset_before_hz"] = hz_before;
  f["error_before"] = detuning_gate_error(hz_before, t_half_pi, ppc);
  f["final_detuning_hz"] = freq.target.drive.detuning / kTwoPi;
  f["steps_to_target"] = steps_to_target(freq.steps, [&](double setting_hz) {
    CalTarget t = ft;
    t.drive.detuning = kTwoPi * setting_hz;
    return detuning_gate_error(effective_frame_offset_hz(t), t_half_pi, ppc);
  });
  json report = {{"amplitude", a},
                 {"frequency", f},
                 {"pulses_per_clifford", ppc},
                 {"target_error", kCalTargetError}};

  ctx.add_text("amplitude_trace.jsonl", trace_text(amp.steps));
  ctx.add_text("frequency_trace.jsonl", trace_text(freq.steps));
  if (scenario) {
    const DriftScenarioResult dr = simulate_drift_scenario(*scenario);
    ctx.add_text("drift_trace.jsonl", trace_text(dr.trace));
    ctx.add_json("drift.json", dr.to_json());
    report["drift"] = dr.to_json();
    report["drift"].erase("trace");
  }
  ctx.add_json("calibration.json", report);
  ctx.out->report = report;
  ctx.out->converged = amp.converged && freq.converged;
}

void cmd_walsh(const Context& ctx) {
  const Section s(section_or_empty(ctx.config, "walsh"), "walsh",
                  {"gate_time", "runs", "shots", "mu_rel", "sigma_rel", "policy", "free_mu0",
                   "sequence_duration"});
  double gate_time = 13e-6;
  s.get("gate_time", gate_time);
  double omega_q = 0.0;
  checked("walsh", [&] { omega_q = pulse_for_gate_time(gate_time).nominal_rabi(); });
  int shots = 100;
  s.get("shots", shots);
  if (shots < 1) throw ConfigError("walsh.shots: must be >= 1");
  std::vector<double> mu_rel, sigma_rel = {1.4e-4};
  s.get("mu_rel", mu_rel);
  s.get("sigma_rel", sigma_rel);
  AmplitudeNoiseModel model;
  for (double v : mu_rel) model.mu.push_back(v * omega_q);
  for (double v : sigma_rel) model.sigma.push_back(v * omega_q);
  checked("walsh", [&] { model.validate(); });
  WalshFitOptions fo;
  std::string policy = "mu";
  s.get("policy", policy);
  if (policy == "mu") {
    fo.policy = WalshPolicy::kFitMu;
  } else if (policy == "sigma") {
    fo.policy = WalshPolicy::kFitSigma;
  } else {
    throw ConfigError("walsh.policy: expected 'mu' or 'sigma'");
  }
  s.get("free_mu0", fo.free_mu0);
  double duration = 30000 * gate_time;
  s.get("sequence_duration", duration);
  if (!(duration > 0.0)) throw ConfigError("walsh.sequence_duration: must be positive");

  struct RunSpec {
    int order = 0;
    std::vector<long long> n_groups;
  };
  std::vector<RunSpec> specs;
  const std::vector<long long> default_groups = {16, 64, 256, 1024, 3744};
  if (s.has("runs")) {
    const json& arr = s.at("runs");
    if (!arr.is_array() || arr.empty()) throw ConfigError("walsh.runs: expected a non-empty array");
    for (const auto& e : arr) {
      const Section r(e, "walsh.runs[]", {"order", "n_groups"});
      RunSpec spec;
      spec.n_groups = default_groups;
      r.get("order", spec.order);
      r.get("n_groups", spec.n_groups);
      specs.push_back(spec);
    }
  } else {
    for (int order : {0, 1, 3, 7}) specs.push_back({order, default_groups});
  }

  std::vector<WalshRun> runs;
  std::ostringstream csv;
  csv << "order,n_groups,p0,shots\n";
  for (const auto& spec : specs) {
    if (!is_walsh_order(spec.order)) {
      throw ConfigError("walsh.runs[].order: " + std::to_string(spec.order) +
                        " is not of the form 2^M - 1");
    }
    WalshRun run;
    checked("walsh.runs[]", [&] {
      run = simulate_walsh_run(spec.order, spec.n_groups, omega_q, model, shots,
                               stream_seed(ctx.seed, {static_cast<std::uint64_t>(spec.order),
                                                      kTagCalibration}),
                               ctx.tier);
    });
    for (std::size_t i = 0; i < run.n_groups.size(); ++i) {
      csv << run.order << ',' << run.n_groups[i] << ',' << num(run.p0[i]) << ',' << run.shots[i]
          << '\n';
    }
    runs.push_back(std::move(run));
  }
  const WalshFit fit = walsh_fit(runs, omega_q, fo);
  const double ppc = CliffordGroup::instance().mean_pulses();
  json report = fit.to_json();
  json errors = json::array();
  for (const auto& t : fit.terms) {
    errors.push_back({{"k", t.k},
                      {"gate_error", drift_gate_error(t.k, t.mu, omega_q, duration, ppc)},
                      {"gate_error_upper", drift_gate_error(t.k, t.mu_upper, omega_q, duration, ppc)}});
  }
  report["gate_errors"] = errors;
  report["sequence_duration"] = duration;

  ctx.add_text("walsh_data.csv", csv.str());
  ctx.add_json("walsh_fit.json", report);
  ctx.out->report = report;
}

void cmd_phase_noise(const Context& ctx) {
  const Section s(section_or_empty(ctx.config, "phase_noise"), "phase_noise",
                  {"ssb", "scale", "t2_floor", "tune_t2", "t_half_pi", "delays", "lengths",
                   "n_random_seqs", "static_detuning_hz", "ramsey_taus", "echo_taus"});
  PhasePsd psd;
  if (s.has("ssb")) {
    std::vector<std::pair<double, double>> pts;
    s.get("ssb", pts);
    for (const auto& [f, l] : pts) psd.ssb.push_back({f, l});
  } else {
    psd.ssb = synthetic_ssb_curve();
  }
  s.get("scale", psd.scale);
  s.get("t2_floor", psd.t2_floor);
  checked("phase_noise", [&] { psd.validate(); });
  double t_half_pi = 5.9e-6;
  s.get("t_half_pi", t_half_pi);
  if (!(t_half_pi > 0.0)) throw ConfigError("phase_noise.t_half_pi: must be positive");
  const std::vector<double> delays =
      parse_positive_list(s, "delays", {0.0, 1e-3, 2e-3, 4e-3}, true);
  IrmbPredictOptions po;
  s.get("lengths", po.lengths);
  s.get("n_random_seqs", po.n_random_seqs);
  s.get("static_detuning_hz", po.static_detuning_hz);
  po.seed = stream_seed(ctx.seed, {0, kTagTrajectory});
  po.workers = ctx.workers;
  checked("phase_noise", [&] { po.validate(); });
  std::vector<double> ramsey, echo;
  s.get("ramsey_taus", ramsey);
  s.get("echo_taus", echo);
  for (double t : ramsey) {
    if (!(t > 0.0)) throw ConfigError("phase_noise.ramsey_taus: values must be positive");
  }
  for (double t : echo) {
    if (!(t > 0.0)) throw ConfigError("phase_noise.echo_taus: values must be positive");
  }

  json report;
  if (s.has("tune_t2")) {
    double target = 0.0;
    s.get("tune_t2", target);
    if (!(target > 0.0)) throw ConfigError("phase_noise.tune_t2: must be positive");
    psd.scale = tune_psd_scale(psd, t_half_pi, delays, target, po);
    report["tuned_scale"] = psd.scale;
  }
  const IrmbPrediction pred = predict_irmb(psd, t_half_pi, delays, po);

  std::ostringstream pcsv;
  pcsv << "freq_hz,dbc_per_hz,s_phi\n";
  for (const auto& p : psd.ssb) {
    pcsv << num(p.freq_hz) << ',' << num(p.dbc_per_hz) << ',' << num(psd(p.freq_hz)) << '\n';
  }
  std::ostringstream ccsv;
  ccsv << "sequence,tau,chi,fidelity\n";
  json decays = json::array();
  auto add_decay = [&](const char* kind, double tau, const ControlTimeline& tl) {
    const ChiResult r = chi_overlap(psd, tl);
    ccsv << kind << ',' << num(tau) << ',' << num(r.chi) << ',' << num(r.fidelity) << '\n';
    json e = r.to_json();
    e["sequence"] = kind;
    e["tau"] = tau;
    decays.push_back(e);
  };
  for (double t : ramsey) add_decay("ramsey", t, ControlTimeline::free_evolution(t));
  for (double t : echo) add_decay("echo", t, ControlTimeline::spin_echo(t, 2.0 * t_half_pi));

  report["psd"] = psd.to_json();
  report["prediction"] = pred.to_json();
  report["decays"] = decays;
  ctx.add_text("psd.csv", pcsv.str());
  ctx.add_text("irmb_prediction.csv", pred.to_csv());
  if (!decays.empty()) ctx.add_text("decays.csv", ccsv.str());
  ctx.add_json("phase_noise.json", report);
  ctx.out->report = report;
}

void cmd_budget(const Context& ctx) {
  const json& c = ctx.config;
  BudgetInput in;
  checked("budget", [&] { in = BudgetInput::from_json(section_or_empty(c, "budget")); });
  if (c.contains("drift_trace")) {
    if (c.contains("budget") && c.at("budget").contains("drift_log")) {
      throw ConfigError("drift_trace: conflicts with budget.drift_log");
    }
    std::string path;
    read_opt(c, "drift_trace", path, "config");
    std::ifstream is(path);
    if (!is) throw ConfigError("drift_trace: cannot open '" + path + "'");
    checked("drift_trace", [&] {
      in.drift_log = setpoints_from_trace(read_trace(is));
      in.validate();
    });
  }
  const Section cs(section_or_empty(c, "curve"), "curve", {"gate_times", "count"});
  int count = 32;
  cs.get("count", count);
  if (count < 2) throw ConfigError("curve.count: must be >= 2");
  std::vector<double> times;
  checked("curve", [&] { times = default_curve_gate_times(count); });
  times = parse_positive_list(cs, "gate_times", times, false);

  json report;
  const Section bs(section_or_empty(c, "bounds"), "bounds",
                   {"simulate", "spectator_cliffords", "spectator_sequences"});
  bool simulate = false;
  bs.get("simulate", simulate);
  if (simulate) {
    BoundOptions bo;
    bs.get("spectator_cliffords", bo.spectator_cliffords);
    bs.get("spectator_sequences", bo.spectator_sequences);
    bo.seed = stream_seed(ctx.seed, {0, kTagTrajectory});
    bo.workers = ctx.workers;
    const SimulatedBounds sb = simulate_bounds(in.gate_time, bo);
    in.spectator_bound = sb.spectator;
    in.ramping_bound = sb.ramping;
    in.non_rwa_bound = sb.non_rwa;
    ctx.add_json("bounds.json", sb.to_json());
    report["simulated_bounds"] = sb.to_json();
  }

  const ErrorBudget table = budget_table(in);
  const std::vector<ErrorBudget> curve = budget_curve(in, times);
  ctx.add_json("input.json", in.to_json());
  ctx.add_text("budget.csv", table.to_csv());
  ctx.add_json("budget.json", table.to_json());
  ctx.add_text("curve.csv", curve_to_csv(curve));
  report["budget"] = table.to_json();
  ctx.out->report = report;
}

ShelveScheme parse_scheme(const json& j, const std::string& where) {
  std::string name;
  try {
    name = j.get<std::string>();
    return shelve_scheme_from_string(name);
  } catch (const std::exception&) {
    throw ConfigError(where + ": unknown scheme");
  }
}

void cmd_leakage_rates(const Context& ctx) {
  const Section s(section_or_empty(ctx.config, "leakage"), "leakage",
                  {"rates", "delays", "shots", "data", "gate_time"});
  double gate_time = 13e-6;
  s.get("gate_time", gate_time);
  if (!(gate_time > 0.0)) throw ConfigError("leakage.gate_time: must be positive");
  std::vector<SchemeData> data;
  json report;
  if (s.has("data")) {
    if (s.has("rates") || s.has("delays") || s.has("shots")) {
      throw ConfigError("leakage: data excludes rates, delays and shots");
    }
    const json& arr = s.at("data");
    if (!arr.is_array()) throw ConfigError("leakage.data: expected an array");
    for (const auto& e : arr) {
      const Section d(e, "leakage.data[]", {"scheme", "prepared_state", "points"});
      SchemeData sd;
      if (!d.has("scheme")) throw ConfigError("leakage.data[].scheme: required");
      sd.scheme = parse_scheme(d.at("scheme"), d.path("scheme"));
      d.get("prepared_state", sd.prepared_state);
      if (!d.has("points") || !d.at("points").is_array()) {
        throw ConfigError("leakage.data[].points: expected an array");
      }
      for (const auto& p : d.at("points")) {
        const Section ps(p, "leakage.data[].points[]", {"delay", "bright", "shots"});
        SchemePoint pt;
        ps.get("delay", pt.delay);
        ps.get("bright", pt.bright);
        ps.get("shots", pt.shots);
        sd.points.push_back(pt);
      }
      data.push_back(std::move(sd));
    }
  } else {
    IdleRates truth = long_delay_rates();
    if (s.has("rates")) truth = parse_idle(s.at("rates"), s.path("rates"), truth);
    const std::vector<double> delays =
        parse_positive_list(s, "delays", {0.0, 3.0, 6.0, 9.0, 12.0, 15.0}, true);
    long long shots = 1000;
    s.get("shots", shots);
    if (shots < 1) throw ConfigError("leakage.shots: must be >= 1");
    checked("leakage", [&] {
      data = simulate_idle_schemes(truth, delays, shots, stream_seed(ctx.seed, {0, kTagIdle}));
    });
    report["simulated_rates"] = {{"eps_b", truth.eps_b},
                                 {"eps_d_plus_leak0", truth.eps_d_plus_leak0},
                                 {"eps_d_plus_leak1", truth.eps_d_plus_leak1},
                                 {"p_flip", truth.p_flip}};
  }
  IdleRateEstimate est;
  checked("leakage.data", [&] { est = estimate_idle_rates(data); });

  std::ostringstream csv;
  csv << "scheme,prepared_state,delay,bright,shots\n";
  for (const auto& d : data) {
    for (const auto& p : d.points) {
      csv << to_string(d.scheme) << ',' << d.prepared_state << ',' << num(p.delay) << ','
          << p.bright << ',' << p.shots << '\n';
    }
  }
  report["estimate"] = est.to_json();
  report["gate_time"] = gate_time;
  report["rb_error"] = leakage_rb_error(est.rates(), gate_time);
  ctx.add_text("schemes.csv", csv.str());
  ctx.add_json("rates.json", report);
  ctx.out->report = report;
}

using Runner = void (*)(const Context&);

Runner runner_for(const std::string& command) {
  static const std::map<std::string, Runner> m = {
      {"rb", cmd_rb},
      {"idle-rb", cmd_idle_rb},
      {"irmb", cmd_irmb},
      {"calibrate", cmd_calibrate},
      {"walsh", cmd_walsh},
      {"phase-noise", cmd_phase_noise},
      {"budget", cmd_budget},
      {"leakage-rates", cmd_leakage_rates},
  };
  return m.at(command);
}

}  // namespace

std::vector<std::string> command_names() {
  std::vector<std::string> out;
  for (const auto& [name, sections] : command_sections()) out.push_back(name);
  return out;
}

bool is_command(const std::string& name) { return command_sections().count(name) > 0; }

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xf];
  return out;
}

json effective_config(const std::string& command, const json& config,
                      const CommandOverrides& overrides) {
  if (!is_command(command)) throw ConfigError("unknown command '" + command + "'");
  if (!config.is_object()) throw ConfigError("config: expected an object");
  if (!config.contains("schema_version")) throw ConfigError("config.schema_version: required");
  const json& v = config.at("schema_version");
  if (!v.is_number_integer() || v.get<long long>() != kConfigSchemaVersion) {
    throw ConfigError("config.schema_version: unsupported, expected " +
                      std::to_string(kConfigSchemaVersion));
  }
  for (const auto& [key, value] : config.items()) {
    const auto& sections = command_sections().at(command);
    const bool known =
        std::find(std::begin(kCommonKeys), std::end(kCommonKeys), key) != std::end(kCommonKeys) ||
        std::find(sections.begin(), sections.end(), key) != sections.end();
    if (!known) throw ConfigError("config: unknown key '" + key + "' for " + command);
  }
  if (config.contains("experiment")) {
    const json& e = config.at("experiment");
    if (!e.is_string() || e.get<std::string>() != command) {
      throw ConfigError("config.experiment: does not match command " + command);
    }
  }
  if (config.contains("seed") &&
      !(config.at("seed").is_number_unsigned() ||
        (config.at("seed").is_number_integer() && config.at("seed").get<long long>() >= 0))) {
    throw ConfigError("config.seed: expected a non-negative integer");
  }
  if (config.contains("workers")) {
    const json& w = config.at("workers");
    if (!w.is_number_integer() || w.get<long long>() < 1) {
      throw ConfigError("config.workers: expected a positive integer");
    }
  }
  json e = config;
  e["experiment"] = command;
  // Canonical unsigned form, so the hash does not depend on how it was built.
  if (e.contains("seed")) e["seed"] = e.at("seed").get<std::uint64_t>();
  if (overrides.seed) e["seed"] = *overrides.seed;
  if (!e.contains("seed")) e["seed"] = std::uint64_t{1};
  if (overrides.tier) e["tier"] = to_string(*overrides.tier);
  if (!e.contains("tier")) e["tier"] = to_string(SimTier::kFast);
  try {
    sim_tier_from_string(e.at("tier").get<std::string>());
  } catch (const std::exception&) {
    throw ConfigError("config.tier: expected 'fast' or 'full'");
  }
  // The worker count never changes results, so it stays out of the hash.
  e.erase("workers");
  return e;
}

CommandOutput run_command(const std::string& command, const json& config,
                          const CommandOverrides& overrides) {
  const json eff = effective_config(command, config, overrides);
  CommandOutput out;
  out.command = command;
  out.config_hash = fnv1a64_hex(eff.dump());
  Context ctx;
  ctx.command = command;
  ctx.config = eff;
  ctx.seed = eff.at("seed").get<std::uint64_t>();
  ctx.tier = sim_tier_from_string(eff.at("tier").get<std::string>());
  ctx.workers = config.value("workers", 1);
  if (overrides.workers) {
    if (*overrides.workers < 1) throw ConfigError("workers: must be >= 1");
    ctx.workers = *overrides.workers;
  }
  ctx.out = &out;
  out.seed = ctx.seed;
  ctx.add_json("config.json", eff);
  try {
    runner_for(command)(ctx);
  } catch (const ConfigError&) {
    throw;
  } catch (const CommandError&) {
    throw;
  } catch (const std::exception& e) {
    throw CommandError(command + ": " + e.what());
  }
  return out;
}

}  // namespace ionrb

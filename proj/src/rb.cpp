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

#include "ionrb/rb.hpp"

#include <array>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "ionrb/parallel.hpp"
#include "ionrb/rng.hpp"

namespace ionrb {
namespace {

// Run-wide quantities shared by every shot.
struct RunContext {
  RbMode mode = RbMode::kGate;
  SimTier tier = SimTier::kFast;
  PulseSpec pulse;       // timing of one generator pulse, gap includes any IRMB delay
  DriveParams drive;
  const RbNoiseConfig* noise = nullptr;
  double idle_period = 0.0;  // wall-clock per pulse for idle RB
  double quant_mult = 1.0;
  double kick_sigma = 0.0;   // std dev of the per-pulse dephasing kick
  double compensation = 0.0;  // Z angle restoring the frame after each delay
  std::uint64_t seed = 0;
  bool varying_amplitude = false;
};

RunContext make_context(const RBPlan& plan, const RbNoiseConfig& noise, SimTier tier) {
  noise.validate();
  RunContext ctx;
  ctx.mode = plan.config.mode;
  ctx.tier = tier;
  ctx.noise = &noise;
  ctx.seed = plan.config.seed;
  ctx.pulse = pulse_for_gate_time(plan.config.gate_time, noise.pulse);
  ctx.idle_period = ctx.pulse.period();
  const double delay = plan.config.mode == RbMode::kIrmb ? plan.config.irmb_delay : 0.0;
  ctx.pulse.gap_time += delay;
  ctx.drive = noise.drive;
  ctx.drive.omega_q = ctx.pulse.nominal_rabi();
  if (noise.quantizer) {
    const double a = noise.quantizer->amp_scale;
    ctx.quant_mult = quantize_amplitude(*noise.quantizer, a) / a;
  }
  if (noise.t2 > 0.0) ctx.kick_sigma = std::sqrt(2.0 * ctx.pulse.period() / noise.t2);
  // Without drive the qubit lacks the ac Zeeman shift the drive frequency was
  // calibrated against; advancing later pulse phases is equivalent to undoing
  // that known frame rotation right after each delay.
  if (noise.phase_compensation && delay > 0.0) {
    ctx.compensation = -ctx.drive.frame_offset(0.0) * delay;
  }
  ctx.varying_amplitude = noise.motion.has_value() || noise.amplitude.order() > 1;
  return ctx;
}

double apply_readout(const RunContext& ctx, double q_expected, const GateSequence& g,
                     double duration) {
  const double survive =
      survival_probability(ctx.noise->idle, q_expected, g.prepared_state, g.shelve_expected,
                           duration);
  const double s = ctx.noise->spam;
  return s + (1.0 - 2.0 * s) * survive;
}

// Square-pulse propagator used by the fast tier.
Mat2 fast_pulse(const RunContext& ctx, Pulse gen, double mult) {
  const PulseSpec spec = ctx.pulse.with_generator(gen);
  const double axis = spec.axis_phase() + ctx.drive.phase;
  const double rabi = 0.5 * kPi / spec.t_half_pi * mult;
  const double extra = ctx.noise->static_detuning;
  Mat2 u = su2_exp(rabi * std::cos(axis), rabi * std::sin(axis), ctx.drive.frame_offset(1.0) + extra,
                   spec.t_half_pi);
  if (spec.gap_time > 0.0) u = gap_propagator(spec.gap_time, ctx.drive, extra) * u;
  return u;
}

Mat2 full_pulse(const RunContext& ctx, Pulse gen, double mult,
                const std::optional<AmplitudeTrace>& trace) {
  PulseNoise n;
  n.amp_multiplier = mult;
  n.detuning_offset = ctx.noise->static_detuning;
  n.trace = trace;
  return pulse_propagator(ctx.pulse.with_generator(gen), ctx.drive, n);
}

// Mean of the motional multiplier over a square pulse, in closed form.
double motional_mean(const MotionalModel& m, double t_start, double duration, double theta) {
  const double w = m.omega_m;
  if (m.eta == 0.0 || w == 0.0) return 1.0;
  const double d = m.depth(t_start);
  return 1.0 + d * (std::sin(w * (t_start + duration) + theta) - std::sin(w * t_start + theta)) /
                   (w * duration);
}

void apply_kick(Vec2& psi, double angle) {
  if (angle == 0.0) return;
  psi(0) *= std::polar(1.0, -0.5 * angle);
  psi(1) *= std::polar(1.0, 0.5 * angle);
}

double shot_survival(const RunContext& ctx, const std::vector<Pulse>& pulses,
                     const PlannedSequence& ps, int shot) {
  const GateSequence& g = ps.gates;
  if (ctx.mode == RbMode::kIdle) {
    return apply_readout(ctx, 1.0, g, static_cast<double>(pulses.size()) * ctx.idle_period);
  }
  const RbNoiseConfig& noise = *ctx.noise;
  Rng rng = make_stream(ctx.seed, {static_cast<std::uint64_t>(ps.seq_id),
                                   static_cast<std::uint64_t>(shot), kTagShot});
  const AmplitudePolynomial poly = sample_shot_amplitude(noise.amplitude, rng);
  const double omega_q = ctx.drive.omega_q;
  const double period = ctx.pulse.period();
  const double t_pulse = ctx.pulse.t_half_pi;
  auto base_mult = [&](double t0) {
    return ctx.quant_mult * (1.0 + poly.offset_at(t0 + 0.5 * t_pulse) / omega_q);
  };

  std::array<Mat2, 4> cache;
  if (!ctx.varying_amplitude) {
    const double m = base_mult(0.0);
    for (Pulse p : kAllPulses) {
      cache[static_cast<int>(p)] = ctx.tier == SimTier::kFast ? fast_pulse(ctx, p, m)
                                                              : full_pulse(ctx, p, m, std::nullopt);
    }
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);

  Vec2 psi = QubitState::basis(g.prepared_state).amp;
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    const double t0 = static_cast<double>(i) * period;
    if (ctx.varying_amplitude) {
      double m = base_mult(t0);
      if (ctx.tier == SimTier::kFast) {
        if (noise.motion) m *= motional_mean(*noise.motion, t0, t_pulse, phase(rng));
        psi = fast_pulse(ctx, pulses[i], m) * psi;
      } else {
        std::optional<AmplitudeTrace> trace;
        if (noise.motion) trace = motional_modulation(*noise.motion, t0, rng);
        psi = full_pulse(ctx, pulses[i], m, trace) * psi;
      }
    } else {
      psi = cache[static_cast<int>(pulses[i])] * psi;
    }
    double kick = ctx.compensation;
    if (ctx.kick_sigma > 0.0) kick += ctx.kick_sigma * normal(rng);
    apply_kick(psi, kick);
  }
  double q = std::norm(psi(g.prepared_state));
  if (noise.depolarizing > 0.0) {
    const double f = std::pow(1.0 - 2.0 * noise.depolarizing,
                              static_cast<double>(g.clifford_count() + 1));
    q = f * q + 0.5 * (1.0 - f);
  }
  return apply_readout(ctx, q, g, static_cast<double>(pulses.size()) * period);
}

RBDataset run_engine(const RBPlan& plan, const RbNoiseConfig& noise, const RunOptions& options) {
  const RunContext ctx = make_context(plan, noise, options.tier);
  const int shots = plan.config.shots_per_seq;
  const bool shared = ctx.mode == RbMode::kIdle || noise.shot_independent();
  RBDataset out;
  out.mode = plan.config.mode;
  out.gate_time = plan.config.gate_time;
  out.irmb_delay = plan.config.mode == RbMode::kIrmb ? plan.config.irmb_delay : 0.0;
  out.seed = plan.config.seed;
  out.records.resize(plan.sequences.size());

  parallel_for(plan.sequences.size(), options.workers, [&](std::size_t k) {
    const PlannedSequence& ps = plan.sequences[k];
    const std::vector<Pulse> pulses = ps.gates.pulse_train();
    Rng readout = make_stream(ctx.seed, {static_cast<std::uint64_t>(ps.seq_id), kTagReadout});
    int errors = 0;
    if (shared) {
      const double p = shot_survival(ctx, pulses, ps, 0);
      const double fail = std::clamp(1.0 - p, 0.0, 1.0);
      std::binomial_distribution<int> draw(shots, fail);
      errors = draw(readout);
    } else {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (int s = 0; s < shots; ++s) {
        if (u(readout) >= shot_survival(ctx, pulses, ps, s)) ++errors;
      }
    }
    out.records[k] = {plan.config.lengths[ps.length_index], ps.seq_id, errors, shots};
  });
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string to_string(RbMode mode) {
  switch (mode) {
    case RbMode::kGate:
      return "gate";
    case RbMode::kIdle:
      return "idle";
    case RbMode::kIrmb:
      return "irmb";
  }
  return "gate";
}

RbMode rb_mode_from_string(const std::string& s) {
  if (s == "gate") return RbMode::kGate;
  if (s == "idle") return RbMode::kIdle;
  if (s == "irmb") return RbMode::kIrmb;
  throw std::invalid_argument("unknown RB mode: " + s);
}

std::string to_string(SimTier tier) { return tier == SimTier::kFast ? "fast" : "full"; }

SimTier sim_tier_from_string(const std::string& s) {
  if (s == "fast") return SimTier::kFast;
  if (s == "full") return SimTier::kFull;
  throw std::invalid_argument("unknown simulation tier: " + s);
}

std::vector<int> default_lengths(int count, int first, int last) {
  if (count < 1 || first < 1 || last < first) throw std::invalid_argument("bad length range");
  if (count == 1) return {last};
  std::vector<int> out;
  const double ratio = std::pow(static_cast<double>(last) / first, 1.0 / (count - 1));
  for (int i = 0; i < count; ++i) {
    int v = static_cast<int>(std::lround(first * std::pow(ratio, i)));
    if (!out.empty() && v <= out.back()) v = out.back() + 1;
    out.push_back(v);
  }
  out.back() = last;
  return out;
}

void RBPlanConfig::validate() const {
  if (lengths.empty()) throw std::invalid_argument("plan needs at least one length");
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] < 1) throw std::invalid_argument("sequence lengths must be >= 1");
    if (i > 0 && lengths[i] <= lengths[i - 1]) {
      throw std::invalid_argument("sequence lengths must be strictly increasing");
    }
  }
  if (seqs_per_length < 1 || shots_per_seq < 1) {
    throw std::invalid_argument("sequence and shot counts must be >= 1");
  }
  if (!(gate_time > 0.0)) throw std::invalid_argument("gate_time must be positive");
  if (irmb_delay < 0.0) throw std::invalid_argument("irmb_delay must be non-negative");
}

nlohmann::json RBPlan::to_json() const {
  nlohmann::json seqs = nlohmann::json::array();
  for (const auto& s : sequences) {
    seqs.push_back({{"seq_id", s.seq_id},
                    {"length", config.lengths[s.length_index]},
                    {"cliffords", s.gates.cliffords},
                    {"recovery", s.gates.recovery},
                    {"prepared_state", s.gates.prepared_state},
                    {"shelve_expected", s.gates.shelve_expected}});
  }
  return {{"mode", to_string(config.mode)},
          {"lengths", config.lengths},
          {"seqs_per_length", config.seqs_per_length},
          {"shots_per_seq", config.shots_per_seq},
          {"gate_time", config.gate_time},
          {"irmb_delay", config.irmb_delay},
          {"seed", config.seed},
          {"sequences", seqs}};
}

RBPlan generate_plan(const RBPlanConfig& config) {
  config.validate();
  RBPlan plan;
  plan.config = config;
  std::uniform_int_distribution<int> pick(0, kCliffordCount - 1);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t li = 0; li < config.lengths.size(); ++li) {
    for (int s = 0; s < config.seqs_per_length; ++s) {
      PlannedSequence ps;
      ps.length_index = static_cast<int>(li);
      ps.seq_id = static_cast<int>(li) * config.seqs_per_length + s;
      Rng rng = make_stream(config.seed, {li, static_cast<std::uint64_t>(s), kTagPlan});
      ps.gates.cliffords.resize(config.lengths[li]);
      for (int& c : ps.gates.cliffords) c = pick(rng);
      ps.gates.recovery = recovery_gate(ps.gates.cliffords);
      ps.gates.prepared_state = coin(rng) ? 1 : 0;
      ps.gates.shelve_expected = coin(rng);
      plan.sequences.push_back(std::move(ps));
    }
  }
  return plan;
}

PulseSpec pulse_for_gate_time(double gate_time, const PulseSpec& base) {
  if (!(gate_time > 0.0)) throw std::invalid_argument("gate_time must be positive");
  PulseSpec p = base;
  p.t_half_pi = gate_time / CliffordGroup::instance().mean_pulses() - base.gap_time;
  p.validate();
  return p;
}

void RbNoiseConfig::validate() const {
  pulse.validate();
  amplitude.validate();
  if (motion) motion->validate();
  if (quantizer) quantizer->validate();
  idle.validate();
  if (t2 < 0.0) throw std::invalid_argument("t2 must be non-negative");
  if (depolarizing < 0.0 || depolarizing > 0.5) {
    throw std::invalid_argument("depolarizing error must be in [0, 0.5]");
  }
  if (spam < 0.0 || spam > 0.5) throw std::invalid_argument("spam must be in [0, 0.5]");
}

bool RbNoiseConfig::shot_independent() const {
  const bool random_amp = std::any_of(amplitude.sigma.begin(), amplitude.sigma.end(),
                                      [](double s) { return s > 0.0; });
  return !random_amp && !motion && t2 == 0.0;
}

void RBDataset::validate() const {
  for (const auto& r : records) {
    if (r.shots < 1 || r.errors < 0 || r.errors > r.shots || r.length < 0) {
      throw std::invalid_argument("dataset record out of range");
    }
  }
}

std::vector<int> RBDataset::lengths() const {
  std::vector<int> out;
  for (const auto& r : records) out.push_back(r.length);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

nlohmann::json RBDataset::to_json() const {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records) {
    recs.push_back({{"length", r.length}, {"seq_id", r.seq_id}, {"errors", r.errors},
                    {"shots", r.shots}});
  }
  return {{"mode", to_string(mode)},
          {"gate_time", gate_time},
          {"irmb_delay", irmb_delay},
          {"seed", seed},
          {"records", recs}};
}

RBDataset RBDataset::from_json(const nlohmann::json& j) {
  RBDataset d;
  d.mode = rb_mode_from_string(j.at("mode").get<std::string>());
  d.gate_time = j.value("gate_time", 0.0);
  d.irmb_delay = j.value("irmb_delay", 0.0);
  d.seed = j.value("seed", std::uint64_t{0});
  for (const auto& r : j.at("records")) {
    d.records.push_back({r.at("length").get<int>(), r.at("seq_id").get<int>(),
                         r.at("errors").get<int>(), r.at("shots").get<int>()});
  }
  d.validate();
  return d;
}

std::string RBDataset::to_csv() const {
  std::ostringstream os;
  os << "# mode=" << to_string(mode) << "\n";
  os << "# gate_time=" << format_double(gate_time) << "\n";
  os << "# irmb_delay=" << format_double(irmb_delay) << "\n";
  os << "# seed=" << seed << "\n";
  os << "length,seq_id,errors,shots\n";
  for (const auto& r : records) {
    os << r.length << "," << r.seq_id << "," << r.errors << "," << r.shots << "\n";
  }
  return os.str();
}

RBDataset RBDataset::from_csv(const std::string& text) {
  RBDataset d;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::string value = line.substr(eq + 1);
      if (key == "mode") d.mode = rb_mode_from_string(value);
      if (key == "gate_time") d.gate_time = std::stod(value);
      if (key == "irmb_delay") d.irmb_delay = std::stod(value);
      if (key == "seed") d.seed = std::stoull(value);
      continue;
    }
    if (!header_seen && line.rfind("length", 0) == 0) {
      header_seen = true;
      continue;
    }
    std::istringstream row(line);
    RBRecord r;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(row >> r.length >> c1 >> r.seq_id >> c2 >> r.errors >> c3 >> r.shots) || c1 != ',' ||
        c2 != ',' || c3 != ',') {
      throw std::invalid_argument("malformed RB CSV row: " + line);
    }
    d.records.push_back(r);
  }
  d.validate();
  return d;
}

double sequence_survival(const RBPlan& plan, const PlannedSequence& seq,
                         const RbNoiseConfig& noise, SimTier tier, int shot) {
  const RunContext ctx = make_context(plan, noise, tier);
  return shot_survival(ctx, seq.gates.pulse_train(), seq, shot);
}

std::vector<double> mean_survival(const RBPlan& plan, const RbNoiseConfig& noise,
                                  const RunOptions& options) {
  const RunContext ctx = make_context(plan, noise, options.tier);
  const int shots = ctx.mode == RbMode::kIdle || noise.shot_independent()
                        ? 1
                        : plan.config.shots_per_seq;
  std::vector<double> out(plan.sequences.size());
  parallel_for(plan.sequences.size(), options.workers, [&](std::size_t k) {
    const PlannedSequence& ps = plan.sequences[k];
    const std::vector<Pulse> pulses = ps.gates.pulse_train();
    double acc = 0.0;
    for (int s = 0; s < shots; ++s) acc += shot_survival(ctx, pulses, ps, s);
    out[k] = acc / shots;
  });
  return out;
}

RBDataset run_rb(const RBPlan& plan, const RbNoiseConfig& noise, const RunOptions& options) {
  return run_engine(plan, noise, options);
}

RBDataset run_idle_rb(const RBPlan& plan, const IdleRates& rates, double spam,
                      const RunOptions& options) {
  if (plan.config.mode != RbMode::kIdle) throw std::invalid_argument("plan mode must be idle");
  RbNoiseConfig noise;
  noise.idle = rates;
  noise.spam = spam;
  return run_engine(plan, noise, options);
}

RBDataset run_irmb(const RBPlan& plan, const RbNoiseConfig& noise, const RunOptions& options) {
  if (plan.config.mode != RbMode::kIrmb) throw std::invalid_argument("plan mode must be irmb");
  return run_engine(plan, noise, options);
}

}  // namespace ionrb

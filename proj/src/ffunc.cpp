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

#include "ionrb/ffunc.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "ionrb/estimator.hpp"
#include "ionrb/parallel.hpp"
#include "ionrb/rb.hpp"

namespace ionrb {
namespace {

constexpr double kBoltzmann = 1.380649e-23;

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

// Rotation by `angle` about the equatorial axis at azimuth `phase`; the
// SO(3) image of exp(-i angle n.sigma / 2).
Mat3 equatorial_so3(double phase, double angle) {
  const Vec3 n(std::cos(phase), std::sin(phase), 0.0);
  Mat3 cross;
  cross << 0.0, -n.z(), n.y(), n.z(), 0.0, -n.x(), -n.y(), n.x(), 0.0;
  return std::cos(angle) * Mat3::Identity() + std::sin(angle) * cross +
         (1.0 - std::cos(angle)) * n * n.transpose();
}

// Per-segment toggling-frame data: c(t_k + s) = a cos(rabi s) + b sin(rabi s).
struct SegmentFrame {
  double start = 0.0;
  Vec3 a;
  Vec3 b;
};

std::vector<SegmentFrame> segment_frames(const ControlTimeline& timeline) {
  std::vector<SegmentFrame> frames;
  frames.reserve(timeline.segments.size());
  Mat3 r = Mat3::Identity();
  double t = 0.0;
  for (const auto& seg : timeline.segments) {
    SegmentFrame f;
    f.start = t;
    f.a = r.transpose() * Vec3::UnitZ();
    f.b = r.transpose() * Vec3(-std::sin(seg.phase), std::cos(seg.phase), 0.0);
    frames.push_back(f);
    if (seg.rabi != 0.0) r = equatorial_so3(seg.phase, seg.rabi * seg.duration) * r;
    t += seg.duration;
  }
  return frames;
}

// Integral of e^{i nu s} over [0, d].
std::complex<double> window(double nu, double d) {
  const double x = 0.5 * nu * d;
  const double sinc = std::abs(x) < 1e-4 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
  return std::polar(d * sinc, x);
}

// Integrals of e^{i omega s} cos(rabi s) and e^{i omega s} sin(rabi s) over [0, d].
std::pair<std::complex<double>, std::complex<double>> segment_kernels(double omega, double d,
                                                                       double rabi) {
  if (rabi == 0.0) return {window(omega, d), 0.0};
  const auto ep = window(omega + rabi, d);
  const auto em = window(omega - rabi, d);
  return {0.5 * (ep + em), std::complex<double>(0.0, -0.5) * (ep - em)};
}

double projected_norm(const std::array<std::complex<double>, 3>& y, FilterProjection p) {
  double s = std::norm(y[0]) + std::norm(y[1]);
  if (p == FilterProjection::kFull) s += std::norm(y[2]);
  return s;
}

double interp_loglog(const std::vector<SsbPoint>& pts, double f) {
  if (f <= pts.front().freq_hz) return pts.front().dbc_per_hz;
  if (f >= pts.back().freq_hz) return pts.back().dbc_per_hz;
  const auto it = std::upper_bound(pts.begin(), pts.end(), f,
                                   [](double v, const SsbPoint& p) { return v < p.freq_hz; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double w = std::log(f / lo.freq_hz) / std::log(hi.freq_hz / lo.freq_hz);
  // dBc is already logarithmic, so linear in log f is log-log linear in S.
  return lo.dbc_per_hz + w * (hi.dbc_per_hz - lo.dbc_per_hz);
}

struct Quadrature {
  double chi = 0.0;
  double low = 0.0;
  double high = 0.0;
};

Quadrature integrate(const PhasePsd& psd, const FilterEvaluator& filter, double f_min,
                     double f_max, int ppd) {
  const double decades = std::log10(f_max / f_min);
  const int n = std::max(2, static_cast<int>(std::ceil(decades * ppd)) + 1);
  const double du = std::log(f_max / f_min) / (n - 1);
  std::vector<double> freqs(n);
  std::vector<double> omegas(n);
  for (int i = 0; i < n; ++i) {
    freqs[i] = f_min * std::exp(du * i);
    omegas[i] = kTwoPi * freqs[i];
  }
  const auto g = filter(omegas);
  if (g.size() != omegas.size()) throw std::logic_error("filter returned the wrong size");
  // chi = (1/pi) int S G d omega = 2 int f S(f) G d(ln f).
  Quadrature q;
  const double low_edge = f_min * 10.0;
  const double high_edge = f_max / 10.0;
  for (int i = 0; i + 1 < n; ++i) {
    const double h0 = 2.0 * freqs[i] * psd(freqs[i]) * g[i];
    const double h1 = 2.0 * freqs[i + 1] * psd(freqs[i + 1]) * g[i + 1];
    const double piece = 0.5 * du * (h0 + h1);
    q.chi += piece;
    const double mid = std::sqrt(freqs[i] * freqs[i + 1]);
    if (mid < low_edge) q.low += piece;
    if (mid > high_edge) q.high += piece;
  }
  return q;
}

std::string percent(double x) {
  std::ostringstream os;
  os.precision(3);
  os << 100.0 * x << "%";
  return os.str();
}

}  // namespace

// --- phase-noise spectra ----------------------------------------------------

double ssb_to_sphi(double dbc_per_hz) { return 2.0 * std::pow(10.0, dbc_per_hz / 10.0); }

double thermal_floor_dbc(double temperature_k, double carrier_dbm) {
  if (!(temperature_k > 0.0)) throw std::invalid_argument("temperature must be positive");
  return 30.0 + 10.0 * std::log10(kBoltzmann * temperature_k) - carrier_dbm;
}

void PhasePsd::validate() const {
  for (std::size_t i = 0; i < ssb.size(); ++i) {
    if (!(ssb[i].freq_hz > 0.0) || !std::isfinite(ssb[i].freq_hz)) {
      throw std::invalid_argument("SSB frequencies must be positive");
    }
    if (i > 0 && ssb[i].freq_hz <= ssb[i - 1].freq_hz) {
      throw std::invalid_argument("SSB frequencies must be strictly increasing");
    }
    if (!std::isfinite(ssb[i].dbc_per_hz)) throw std::invalid_argument("SSB level must be finite");
  }
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("PSD scale must be non-negative");
  }
  if (!(t2_floor >= 0.0)) throw std::invalid_argument("t2_floor must be non-negative");
}

double PhasePsd::operator()(double f_hz) const {
  double s = 0.0;
  if (!ssb.empty() && scale > 0.0) s += scale * ssb_to_sphi(interp_loglog(ssb, f_hz));
  if (t2_floor > 0.0) {
    const double w = kTwoPi * f_hz;
    s += 4.0 / (t2_floor * w * w);
  }
  return s;
}

double PhasePsd::frequency_psd(double f_hz) const {
  const double w = kTwoPi * f_hz;
  return w * w * (*this)(f_hz);
}

bool PhasePsd::is_zero() const { return (ssb.empty() || scale == 0.0) && t2_floor == 0.0; }

std::pair<double, double> PhasePsd::band() const {
  if (ssb.empty()) return {0.0, 0.0};
  return {ssb.front().freq_hz, ssb.back().freq_hz};
}

nlohmann::json PhasePsd::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : ssb) pts.push_back({p.freq_hz, p.dbc_per_hz});
  return {{"ssb", pts}, {"scale", scale}, {"t2_floor", t2_floor}};
}

PhasePsd ssb_to_psd(const std::vector<SsbPoint>& curve) {
  PhasePsd psd;
  psd.ssb = curve;
  psd.validate();
  return psd;
}

PhasePsd white_frequency_psd(double t2) {
  if (!(t2 > 0.0)) throw std::invalid_argument("t2 must be positive");
  PhasePsd psd;
  psd.t2_floor = t2;
  return psd;
}

std::vector<SsbPoint> synthetic_ssb_curve() {
  // S_phi = h / f^2 with h = 4 / ((2 pi)^2 69 s) on the slope.
  const double h = 4.0 / (kTwoPi * kTwoPi * 69.0);
  auto slope = [&](double f) { return 10.0 * std::log10(h / (2.0 * f * f)); };
  std::vector<SsbPoint> pts;
  for (double f : {1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4}) pts.push_back({f, slope(f)});
  pts.push_back({3e4, -150.0});
  pts.push_back({1e7, -150.0});
  return pts;
}

// --- control timelines ------------------------------------------------------

void ControlTimeline::validate() const {
  if (segments.empty()) throw std::invalid_argument("timeline needs at least one segment");
  for (const auto& s : segments) {
    if (!(s.duration > 0.0) || !std::isfinite(s.duration)) {
      throw std::invalid_argument("segment durations must be positive");
    }
    if (!std::isfinite(s.phase) || !std::isfinite(s.rabi)) {
      throw std::invalid_argument("segment phase and rate must be finite");
    }
  }
}

double ControlTimeline::duration() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

ControlTimeline ControlTimeline::free_evolution(double tau) {
  ControlTimeline tl;
  tl.segments.push_back({tau, 0.0, 0.0});
  tl.validate();
  return tl;
}

ControlTimeline ControlTimeline::spin_echo(double tau, double t_pi) {
  ControlTimeline tl;
  tl.segments.push_back({0.5 * tau, 0.0, 0.0});
  tl.segments.push_back({t_pi, 0.0, kPi / t_pi});
  tl.segments.push_back({0.5 * tau, 0.0, 0.0});
  tl.validate();
  return tl;
}

ControlTimeline ControlTimeline::from_pulses(std::span<const Pulse> pulses, double t_half_pi,
                                             double delay) {
  if (!(t_half_pi > 0.0)) throw std::invalid_argument("t_half_pi must be positive");
  if (delay < 0.0) throw std::invalid_argument("delay must be non-negative");
  ControlTimeline tl;
  tl.segments.reserve(pulses.size() * (delay > 0.0 ? 2 : 1));
  const double rabi = 0.5 * kPi / t_half_pi;
  for (Pulse p : pulses) {
    tl.segments.push_back({t_half_pi, pulse_axis_phase(p), rabi});
    if (delay > 0.0) tl.segments.push_back({delay, 0.0, 0.0});
  }
  if (tl.segments.empty()) throw std::invalid_argument("timeline needs at least one pulse");
  return tl;
}

std::array<double, 3> toggling_sigma_z(const ControlTimeline& timeline, double t) {
  timeline.validate();
  const auto frames = segment_frames(timeline);
  std::size_t k = 0;
  while (k + 1 < frames.size() && frames[k + 1].start <= t) ++k;
  const double s = std::clamp(t - frames[k].start, 0.0, timeline.segments[k].duration);
  const double th = timeline.segments[k].rabi * s;
  const Vec3 c = frames[k].a * std::cos(th) + frames[k].b * std::sin(th);
  return {c.x(), c.y(), c.z()};
}

std::vector<double> filter_function(const ControlTimeline& timeline,
                                    const std::vector<double>& omegas,
                                    FilterProjection projection) {
  timeline.validate();
  const auto frames = segment_frames(timeline);
  // Segments share a handful of (duration, rate) shapes; the kernels and the
  // phase steps are computed once per shape and frequency.
  std::map<std::pair<double, double>, int> shape_index;
  std::vector<std::pair<double, double>> shapes;
  std::vector<int> shape_of(timeline.segments.size());
  for (std::size_t k = 0; k < timeline.segments.size(); ++k) {
    const auto key = std::make_pair(timeline.segments[k].duration, timeline.segments[k].rabi);
    auto [it, inserted] = shape_index.emplace(key, static_cast<int>(shapes.size()));
    if (inserted) shapes.push_back(key);
    shape_of[k] = it->second;
  }
  std::vector<double> out(omegas.size());
  std::vector<std::complex<double>> kc(shapes.size());
  std::vector<std::complex<double>> ks(shapes.size());
  std::vector<std::complex<double>> step(shapes.size());
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    const double w = omegas[i];
    for (std::size_t s = 0; s < shapes.size(); ++s) {
      std::tie(kc[s], ks[s]) = segment_kernels(w, shapes[s].first, shapes[s].second);
      step[s] = std::polar(1.0, w * shapes[s].first);
    }
    std::array<std::complex<double>, 3> y{};
    std::complex<double> phase(1.0, 0.0);
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const int s = shape_of[k];
      const auto pc = phase * kc[s];
      const auto ps = phase * ks[s];
      for (int j = 0; j < 3; ++j) y[j] += frames[k].a[j] * pc + frames[k].b[j] * ps;
      phase *= step[s];
    }
    out[i] = 0.25 * w * w * projected_norm(y, projection);
  }
  return out;
}

double static_weight(const ControlTimeline& timeline, FilterProjection projection,
                     bool free_only) {
  timeline.validate();
  const auto frames = segment_frames(timeline);
  std::array<std::complex<double>, 3> y{};
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (free_only && timeline.segments[k].rabi != 0.0) continue;
    const auto [kc, ks] =
        segment_kernels(0.0, timeline.segments[k].duration, timeline.segments[k].rabi);
    for (int j = 0; j < 3; ++j) y[j] += frames[k].a[j] * kc + frames[k].b[j] * ks;
  }
  return projected_norm(y, projection);
}

double ramsey_filter(double omega, double tau) {
  const double s = std::sin(0.5 * omega * tau);
  return s * s;
}

double spin_echo_filter(double omega, double tau) {
  const double s = std::sin(0.25 * omega * tau);
  return 4.0 * s * s * s * s;
}

// --- overlap integral -------------------------------------------------------

nlohmann::json ChiResult::to_json() const {
  return {{"chi", chi},
          {"fidelity", fidelity},
          {"points_per_decade", points_per_decade},
          {"converged", converged},
          {"low_edge_fraction", low_edge_fraction},
          {"high_edge_fraction", high_edge_fraction},
          {"warnings", warnings}};
}

ChiResult chi_overlap(const PhasePsd& psd, const FilterEvaluator& filter, double duration,
                      const ChiOptions& options) {
  psd.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
  if (options.points_per_decade < 2 || options.max_points_per_decade < options.points_per_decade) {
    throw std::invalid_argument("bad quadrature density");
  }
  const double f_min = options.f_min > 0.0 ? options.f_min : 1e-5 / duration;
  const double f_max = options.f_max > 0.0 ? options.f_max : 1e4 / duration;
  if (!(f_max > 10.0 * f_min)) throw std::invalid_argument("quadrature band must span a decade");

  ChiResult r;
  if (psd.is_zero()) {
    r.points_per_decade = options.points_per_decade;
    return r;
  }
  int ppd = options.points_per_decade;
  Quadrature q = integrate(psd, filter, f_min, f_max, ppd);
  r.converged = !options.adaptive;
  while (options.adaptive && 2 * ppd <= options.max_points_per_decade) {
    const Quadrature finer = integrate(psd, filter, f_min, f_max, 2 * ppd);
    ppd *= 2;
    const bool done = std::abs(finer.chi - q.chi) <= options.rel_tol * std::abs(finer.chi);
    q = finer;
    if (done) {
      r.converged = true;
      break;
    }
  }
  r.chi = std::max(0.0, q.chi);
  r.fidelity = fidelity_from_chi(r.chi);
  r.points_per_decade = ppd;
  if (q.chi > 0.0) {
    r.low_edge_fraction = q.low / q.chi;
    r.high_edge_fraction = q.high / q.chi;
  }
  if (!r.converged) {
    r.warnings.push_back("quadrature not converged at " + std::to_string(ppd) +
                         " points per decade");
  }
  if (r.low_edge_fraction > options.edge_mass_limit) {
    r.warnings.push_back(percent(r.low_edge_fraction) +
                         " of the overlap sits in the lowest decade; extend f_min");
  }
  if (r.high_edge_fraction > options.edge_mass_limit) {
    r.warnings.push_back(percent(r.high_edge_fraction) +
                         " of the overlap sits in the highest decade; extend f_max");
  }
  return r;
}

ChiResult chi_overlap(const PhasePsd& psd, const ControlTimeline& timeline,
                      FilterProjection projection, const ChiOptions& options) {
  timeline.validate();
  return chi_overlap(
      psd,
      [&](const std::vector<double>& w) { return filter_function(timeline, w, projection); },
      timeline.duration(), options);
}

// --- IRMB prediction --------------------------------------------------------

void IrmbPredictOptions::validate() const {
  if (lengths.size() < 2) throw std::invalid_argument("IRMB prediction needs two lengths");
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] < 1 || (i > 0 && lengths[i] <= lengths[i - 1])) {
      throw std::invalid_argument("lengths must be positive and strictly increasing");
    }
  }
  if (n_random_seqs < 10) throw std::invalid_argument("n_random_seqs must be >= 10");
  if (points_per_decade < 4) throw std::invalid_argument("points_per_decade must be >= 4");
  if (f_max < 0.0) throw std::invalid_argument("f_max must be non-negative");
  if (!std::isfinite(static_detuning_hz)) throw std::invalid_argument("detuning must be finite");
}

nlohmann::json IrmbPrediction::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) {
    pts.push_back({{"delay", p.delay},
                   {"error", p.error},
                   {"std_error", p.std_error},
                   {"amplitude", p.amplitude},
                   {"fit_ok", p.fit_ok}});
  }
  nlohmann::json j = {{"t_half_pi", t_half_pi}, {"points", pts},     {"slope", slope},
                      {"intercept", intercept}, {"warnings", warnings}};
  j["t2_star_star"] = t2_star_star > 0.0 ? nlohmann::json(t2_star_star) : nlohmann::json();
  return j;
}

std::string IrmbPrediction::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "delay_s,predicted_error,stderr\n";
  for (const auto& p : points) os << p.delay << ',' << p.error << ',' << p.std_error << '\n';
  return os.str();
}

IrmbPrediction predict_irmb(const PhasePsd& psd, double t_half_pi,
                            const std::vector<double>& delays,
                            const IrmbPredictOptions& options) {
  psd.validate();
  options.validate();
  if (!(t_half_pi > 0.0)) throw std::invalid_argument("t_half_pi must be positive");
  if (delays.empty()) throw std::invalid_argument("need at least one delay");
  for (double d : delays) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw std::invalid_argument("delays must be >= 0");
  }

  RBPlanConfig pc;
  pc.lengths = options.lengths;
  pc.seqs_per_length = options.n_random_seqs;
  pc.shots_per_seq = 1;
  pc.seed = options.seed;
  const RBPlan plan = generate_plan(pc);
  const std::size_t n_len = options.lengths.size();
  const std::size_t n_seq = static_cast<std::size_t>(options.n_random_seqs);
  const double f_max = options.f_max > 0.0 ? options.f_max : 1e3 / t_half_pi;
  const double detuning = kTwoPi * options.static_detuning_hz;

  IrmbPrediction out;
  out.t_half_pi = t_half_pi;
  const std::size_t n_jobs = delays.size() * plan.sequences.size();
  std::vector<double> fail(n_jobs, 0.0);
  std::vector<char> edge_warn(n_jobs, 0);
  parallel_for(n_jobs, options.workers, [&](std::size_t job) {
    const double delay = delays[job / plan.sequences.size()];
    const auto& seq = plan.sequences[job % plan.sequences.size()];
    const auto pulses = seq.gates.pulse_train();
    if (pulses.empty()) return;  // all identities: nothing happens
    const ControlTimeline tl = ControlTimeline::from_pulses(pulses, t_half_pi, delay);
    double chi = 0.0;
    if (!psd.is_zero()) {
      ChiOptions co;
      co.f_min = 0.1 / tl.duration();
      co.f_max = std::max(f_max, 100.0 * co.f_min);
      co.points_per_decade = options.points_per_decade;
      co.adaptive = false;
      const ChiResult r = chi_overlap(psd, tl, FilterProjection::kTransverse, co);
      chi = r.chi;
      edge_warn[job] = r.high_edge_fraction > co.edge_mass_limit ||
                       r.low_edge_fraction > co.edge_mass_limit;
    }
    if (detuning != 0.0) {
      chi += 0.5 * detuning * detuning * static_weight(tl, FilterProjection::kTransverse, true);
    }
    fail[job] = 1.0 - fidelity_from_chi(chi);
  });
  if (std::any_of(edge_warn.begin(), edge_warn.end(), [](char c) { return c != 0; })) {
    out.warnings.push_back("more than 1% of some overlap integrals sits in an outer decade");
  }

  for (std::size_t di = 0; di < delays.size(); ++di) {
    // Sequence (li, s) sits at li * n_seq + s in the plan.
    auto mean_fail = [&](std::size_t skip) {
      std::vector<double> m(n_len, 0.0);
      for (std::size_t li = 0; li < n_len; ++li) {
        int used = 0;
        for (std::size_t s = 0; s < n_seq; ++s) {
          if (s == skip) continue;
          m[li] += fail[di * plan.sequences.size() + li * n_seq + s];
          ++used;
        }
        m[li] /= used;
      }
      return m;
    };
    IrmbPoint p;
    p.delay = delays[di];
    const DecayFit fit = fit_mean_failures(options.lengths, mean_fail(n_seq));
    p.error = fit.epsilon;
    p.amplitude = fit.amplitude;
    p.fit_ok = fit.converged && !fit.unidentifiable;
    std::vector<double> jack(n_seq);
    double jm = 0.0;
    for (std::size_t s = 0; s < n_seq; ++s) {
      jack[s] = fit_mean_failures(options.lengths, mean_fail(s)).epsilon;
      jm += jack[s];
    }
    jm /= static_cast<double>(n_seq);
    double ss = 0.0;
    for (double e : jack) ss += (e - jm) * (e - jm);
    p.std_error = std::sqrt(ss * static_cast<double>(n_seq - 1) / static_cast<double>(n_seq));
    if (!p.fit_ok) out.warnings.push_back("decay fit flagged at delay " + std::to_string(p.delay));
    out.points.push_back(p);
  }

  if (out.points.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (const auto& p : out.points) {
      mx += p.delay;
      my += p.error;
    }
    mx /= static_cast<double>(out.points.size());
    my /= static_cast<double>(out.points.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& p : out.points) {
      sxy += (p.delay - mx) * (p.error - my);
      sxx += (p.delay - mx) * (p.delay - mx);
    }
    if (sxx > 0.0) {
      out.slope = sxy / sxx;
      out.intercept = my - out.slope * mx;
    }
    if (out.slope > 0.0) {
      out.t2_star_star = CliffordGroup::instance().mean_pulses() / (3.0 * out.slope);
    } else {
      out.warnings.push_back("no error growth with delay; T2** undefined");
    }
  } else {
    out.intercept = out.points.front().error;
    out.warnings.push_back("a single delay gives no slope");
  }
  return out;
}

double tune_psd_scale(const PhasePsd& psd, double t_half_pi, const std::vector<double>& delays,
                      double target_t2, const IrmbPredictOptions& options) {
  if (!(target_t2 > 0.0)) throw std::invalid_argument("target T2** must be positive");
  if (psd.ssb.empty()) throw std::invalid_argument("no tabulated PSD to scale");
  if (delays.size() < 2) throw std::invalid_argument("need two delays for a slope");
  // The slope is linear in the scale, so one probe per part fixes it.
  PhasePsd unit = psd;
  unit.scale = 1.0;
  unit.t2_floor = 0.0;
  const double s_tab = predict_irmb(unit, t_half_pi, delays, options).slope;
  double s_floor = 0.0;
  if (psd.t2_floor > 0.0) {
    s_floor = predict_irmb(white_frequency_psd(psd.t2_floor), t_half_pi, delays, options).slope;
  }
  const double target = CliffordGroup::instance().mean_pulses() / (3.0 * target_t2);
  if (!(s_tab > 0.0) || target <= s_floor) {
    throw std::invalid_argument("target T2** is out of reach with this PSD");
  }
  return (target - s_floor) / s_tab;
}

}  // namespace ionrb

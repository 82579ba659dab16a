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

#include "ionrb/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "ionrb/parallel.hpp"
#include "ionrb/rng.hpp"

namespace ionrb {
namespace {

constexpr double kLogEpsMin = -14.0;  // log10 of the smallest non-zero epsilon searched
constexpr double kEpsMax = 0.5;
constexpr double kGridStep = 0.05;    // decades
constexpr double kAmpFloor = 1e-6;

double decay(double length, double epsilon) {
  if (epsilon >= 0.5) return length == 0.0 ? 1.0 : 0.0;
  return std::exp(length * std::log1p(-2.0 * epsilon));
}

double xlogy(double x, double y) {
  if (x == 0.0) return 0.0;
  if (y <= 0.0) return -std::numeric_limits<double>::infinity();
  return x * std::log(y);
}

// Best amplitude for a fixed epsilon. The likelihood is concave in A, so the
// root of its derivative is bracketed on [0, 1/2].
double profile_amplitude(const std::vector<LengthCounts>& counts, double epsilon) {
  std::vector<double> d(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) d[i] = decay(counts[i].length, epsilon);
  auto derivative = [&](double a) {
    double g = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const double p = a * d[i] + 0.5;
      const double ok = static_cast<double>(counts[i].shots - counts[i].errors);
      const double bad = static_cast<double>(counts[i].errors);
      if (bad > 0.0 && 1.0 - p <= 0.0) return -std::numeric_limits<double>::infinity();
      g += d[i] * (ok / p - (bad > 0.0 ? bad / (1.0 - p) : 0.0));
    }
    return g;
  };
  if (derivative(0.5) >= 0.0) return 0.5;
  if (derivative(0.0) <= 0.0) return 0.0;
  double lo = 0.0, hi = 0.5;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (derivative(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct ProfilePoint {
  double log_eps;
  double amplitude;
  double ll;
};

ProfilePoint profile(const std::vector<LengthCounts>& counts, double log_eps) {
  const double eps = std::min(kEpsMax, std::pow(10.0, log_eps));
  const double a = profile_amplitude(counts, eps);
  return {log_eps, a, log_likelihood(counts, a, eps)};
}

void validate_counts(const std::vector<LengthCounts>& counts) {
  int distinct = 0;
  for (const auto& c : counts) {
    if (c.shots < 0 || c.errors < 0 || c.errors > c.shots || c.length < 0) {
      throw std::invalid_argument("invalid counts");
    }
    if (c.shots > 0) ++distinct;
  }
  if (distinct < 2) throw std::invalid_argument("fit needs at least two lengths with shots");
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= v.size()) return v.back();
  return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

}  // namespace

double survival_model(double length, double amplitude, double epsilon) {
  if (length < 0.0) throw std::invalid_argument("length must be non-negative");
  return std::clamp(amplitude * decay(length, epsilon) + 0.5, 0.0, 1.0);
}

std::vector<LengthCounts> pool_counts(const RBDataset& data) {
  data.validate();
  std::map<int, LengthCounts> pooled;
  for (const auto& r : data.records) {
    auto& c = pooled[r.length];
    c.length = r.length;
    c.errors += r.errors;
    c.shots += r.shots;
  }
  std::vector<LengthCounts> out;
  for (const auto& [len, c] : pooled) out.push_back(c);
  return out;
}

double log_likelihood(const std::vector<LengthCounts>& counts, double amplitude, double epsilon) {
  double ll = 0.0;
  for (const auto& c : counts) {
    const double p = amplitude * decay(c.length, epsilon) + 0.5;
    ll += xlogy(static_cast<double>(c.shots - c.errors), p) +
          xlogy(static_cast<double>(c.errors), 1.0 - p);
  }
  return ll;
}

DecayFit mle_fit(const std::vector<LengthCounts>& counts) {
  validate_counts(counts);
  // Coarse grid over log10(epsilon).
  const double log_max = std::log10(kEpsMax);
  const int n_grid = static_cast<int>(std::ceil((log_max - kLogEpsMin) / kGridStep));
  std::vector<ProfilePoint> grid;
  grid.reserve(n_grid + 1);
  for (int i = 0; i <= n_grid; ++i) {
    grid.push_back(profile(counts, std::min(log_max, kLogEpsMin + i * kGridStep)));
  }
  const auto best_it = std::max_element(grid.begin(), grid.end(),
                                        [](const auto& a, const auto& b) { return a.ll < b.ll; });
  const std::size_t bi = static_cast<std::size_t>(best_it - grid.begin());

  // Golden-section refinement inside the bracketing grid cells.
  double lo = grid[bi == 0 ? 0 : bi - 1].log_eps;
  double hi = grid[std::min(bi + 1, grid.size() - 1)].log_eps;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  ProfilePoint c = profile(counts, hi - gr * (hi - lo));
  ProfilePoint d = profile(counts, lo + gr * (hi - lo));
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    if (hi - lo < 1e-9) {
      converged = true;
      break;
    }
    if (c.ll > d.ll) {
      hi = d.log_eps;
      d = c;
      c = profile(counts, hi - gr * (hi - lo));
    } else {
      lo = c.log_eps;
      c = d;
      d = profile(counts, lo + gr * (hi - lo));
    }
  }
  ProfilePoint best = c.ll > d.ll ? c : d;
  if (best_it->ll > best.ll) best = *best_it;

  DecayFit fit;
  fit.epsilon = std::min(kEpsMax, std::pow(10.0, best.log_eps));
  fit.amplitude = best.amplitude;
  fit.log_likelihood = best.ll;
  fit.converged = converged;

  // Epsilon = 0 is the closure of the log grid; take it when it is no worse.
  const double a0 = profile_amplitude(counts, 0.0);
  const double ll0 = log_likelihood(counts, a0, 0.0);
  if (ll0 >= fit.log_likelihood - 1e-9) {
    fit.epsilon = 0.0;
    fit.amplitude = a0;
    fit.log_likelihood = ll0;
    fit.at_boundary = true;
    fit.converged = true;
  }
  fit.unidentifiable = fit.amplitude < kAmpFloor || fit.epsilon > 0.49;
  return fit;
}

DecayFit mle_fit(const RBDataset& data) { return mle_fit(pool_counts(data)); }

DecayFit bootstrap_ci(const std::vector<LengthCounts>& counts, const DecayFit& fit,
                      const BootstrapOptions& options) {
  if (options.n_resamples < 1) throw std::invalid_argument("bootstrap needs n_resamples >= 1");
  if (!fit.converged) throw EstimationError("bootstrap requires a converged fit");
  const int n = options.n_resamples;
  std::vector<double> eps(n), amp(n);
  std::vector<char> ok(n, 0);
  parallel_for(static_cast<std::size_t>(n), options.workers, [&](std::size_t b) {
    Rng rng = make_stream(options.seed, {static_cast<std::uint64_t>(b), kTagBootstrap});
    std::vector<LengthCounts> synth = counts;
    for (auto& c : synth) {
      const double fail = 1.0 - survival_model(c.length, fit.amplitude, fit.epsilon);
      std::binomial_distribution<long long> draw(c.shots, std::clamp(fail, 0.0, 1.0));
      c.errors = draw(rng);
    }
    try {
      const DecayFit r = mle_fit(synth);
      if (r.converged && !r.unidentifiable) {
        eps[b] = r.epsilon;
        amp[b] = r.amplitude;
        ok[b] = 1;
      }
    } catch (const std::exception&) {
      ok[b] = 0;
    }
  });
  std::vector<double> good_eps, good_amp;
  for (int b = 0; b < n; ++b) {
    if (ok[b]) {
      good_eps.push_back(eps[b]);
      good_amp.push_back(amp[b]);
    }
  }
  DecayFit out = fit;
  out.n_bootstrap = n;
  out.failed_fraction = 1.0 - static_cast<double>(good_eps.size()) / n;
  if (out.failed_fraction > options.max_failed_fraction) {
    std::ostringstream msg;
    msg << "bootstrap: " << out.failed_fraction * 100.0 << "% of refits failed";
    throw EstimationError(msg.str());
  }
  out.epsilon_stderr = stddev(good_eps);
  out.amplitude_stderr = stddev(good_amp);
  out.epsilon_ci = {percentile(good_eps, 0.025), percentile(good_eps, 0.975)};
  out.amplitude_ci = {percentile(good_amp, 0.025), percentile(good_amp, 0.975)};
  return out;
}

DecayFit fit_mean_failures(const std::vector<int>& lengths, const std::vector<double>& mean_fail) {
  if (lengths.size() != mean_fail.size()) throw std::invalid_argument("length/failure size mismatch");
  constexpr long long kShots = 1000000000000LL;
  std::vector<LengthCounts> counts;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const double f = std::clamp(mean_fail[i], 0.0, 1.0);
    counts.push_back({lengths[i], std::llround(f * static_cast<double>(kShots)), kShots});
  }
  return mle_fit(counts);
}

DecayFit bootstrap_ci(const RBDataset& data, const DecayFit& fit, const BootstrapOptions& options) {
  return bootstrap_ci(pool_counts(data), fit, options);
}

nlohmann::json DecayFit::to_json() const {
  return {{"epsilon", epsilon},
          {"amplitude_A", amplitude},
          {"epsilon_stderr", epsilon_stderr},
          {"A_stderr", amplitude_stderr},
          {"epsilon_ci", {epsilon_ci.lo, epsilon_ci.hi}},
          {"A_ci", {amplitude_ci.lo, amplitude_ci.hi}},
          {"log_likelihood", log_likelihood},
          {"n_bootstrap", n_bootstrap},
          {"failed_fraction", failed_fraction},
          {"converged", converged},
          {"at_boundary", at_boundary},
          {"unidentifiable", unidentifiable}};
}

std::string DecayFit::summary() const {
  std::ostringstream os;
  os.precision(4);
  os << "epsilon = " << epsilon;
  if (n_bootstrap > 0) os << " +/- " << epsilon_stderr;
  os << ", A = " << amplitude;
  if (n_bootstrap > 0) os << " +/- " << amplitude_stderr;
  if (at_boundary) os << " [epsilon at boundary 0]";
  if (unidentifiable) os << " [unidentifiable]";
  if (!converged) os << " [not converged]";
  return os.str();
}

}  // namespace ionrb

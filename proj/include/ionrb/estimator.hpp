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
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ionrb/rb.hpp"

namespace ionrb {

class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// p(l) = A (1 - 2 eps)^l + 1/2, clamped to [0, 1].
double survival_model(double length, double amplitude, double epsilon);

/// Error counts pooled over the sequences of one length.
struct LengthCounts {
  int length = 0;
  long long errors = 0;
  long long shots = 0;
};

std::vector<LengthCounts> pool_counts(const RBDataset& data);

/// Binomial log-likelihood of the pooled counts (without the constant
/// binomial coefficients).
double log_likelihood(const std::vector<LengthCounts>& counts, double amplitude, double epsilon);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct DecayFit {
  double epsilon = 0.0;
  double amplitude = 0.0;
  double epsilon_stderr = 0.0;
  double amplitude_stderr = 0.0;
  Interval epsilon_ci;  // 2.5 / 97.5 percentiles of the bootstrap refits
  Interval amplitude_ci;
  double log_likelihood = 0.0;
  int n_bootstrap = 0;
  double failed_fraction = 0.0;
  bool converged = false;
  bool at_boundary = false;    // epsilon pinned at 0
  bool unidentifiable = false;  // no decay signal: A near 0 or epsilon near 1/2

  nlohmann::json to_json() const;
  std::string summary() const;
};

DecayFit mle_fit(const std::vector<LengthCounts>& counts);
DecayFit mle_fit(const RBDataset& data);

/// Decay fit of exact per-length mean failure probabilities, treated as very
/// large binomial samples. For noiseless-readout model predictions.
DecayFit fit_mean_failures(const std::vector<int>& lengths, const std::vector<double>& mean_fail);

struct BootstrapOptions {
  int n_resamples = 1000;
  std::uint64_t seed = 1;
  int workers = 1;
  double max_failed_fraction = 0.05;
};

/// Parametric bootstrap: redraws binomial counts from the fitted curve,
/// refits, and fills the stderr / interval fields of the returned fit.
DecayFit bootstrap_ci(const RBDataset& data, const DecayFit& fit,
                      const BootstrapOptions& options = {});
DecayFit bootstrap_ci(const std::vector<LengthCounts>& counts, const DecayFit& fit,
                      const BootstrapOptions& options = {});

}  // namespace ionrb

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
#include <random>

#include <gtest/gtest.h>

namespace ionrb {
namespace {

constexpr double kTrueA = 0.4989;
constexpr double kTrueEps = 1.5e-7;

// Synthetic per-sequence counts drawn straight from the decay model, with no
// simulator in the loop.
RBDataset synthetic(double a, double eps, int seqs, int shots, std::uint64_t seed,
                    std::vector<int> lengths = default_lengths()) {
  std::mt19937_64 rng(seed);
  RBDataset d;
  int id = 0;
  for (int l : lengths) {
    const double p_fail = 1.0 - (a * std::pow(1.0 - 2.0 * eps, l) + 0.5);
    std::binomial_distribution<int> draw(shots, p_fail);
    for (int s = 0; s < seqs; ++s) d.records.push_back({l, id++, draw(rng), shots});
  }
  return d;
}

TEST(SurvivalModel, Examples) {
  for (double l : {0.0, 1.0, 1e4}) EXPECT_DOUBLE_EQ(survival_model(l, 0.3, 0.0), 0.8);
  EXPECT_NEAR(survival_model(30000, kTrueA, kTrueEps), 0.9944, 5e-5);
  for (double l : {1.0, 7.0, 300.0}) EXPECT_DOUBLE_EQ(survival_model(l, 0.4, 0.5), 0.5);
  EXPECT_THROW(survival_model(-1, 0.5, 0.1), std::invalid_argument);
}

TEST(MleFit, RecoversKnownCurveFromExactCounts) {
  std::vector<LengthCounts> counts;
  for (int l : {10, 100, 1000, 10000}) {
    const long long shots = 1000000000LL;
    const double fail = 1.0 - survival_model(l, 0.45, 2e-5);
    counts.push_back({l, std::llround(fail * shots), shots});
  }
  const auto fit = mle_fit(counts);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.epsilon / 2e-5, 1.0, 1e-4);
  EXPECT_NEAR(fit.amplitude, 0.45, 1e-6);
}

TEST(MleFit, AllZeroErrorsIsBoundary) {
  RBDataset d;
  for (int l : {10, 100, 1000}) d.records.push_back({l, 0, 0, 100});
  const auto fit = mle_fit(d);
  EXPECT_EQ(fit.epsilon, 0.0);
  EXPECT_TRUE(fit.at_boundary);
  EXPECT_DOUBLE_EQ(fit.amplitude, 0.5);
}

TEST(MleFit, FlatHalfIsUnidentifiable) {
  RBDataset d;
  for (int l : {10, 100, 1000}) d.records.push_back({l, 0, 500, 1000});
  const auto fit = mle_fit(d);
  EXPECT_TRUE(fit.unidentifiable);
  EXPECT_TRUE(fit.amplitude < 1e-6 || fit.epsilon > 0.49);
}

TEST(MleFit, NeedsTwoLengths) {
  RBDataset d;
  d.records.push_back({10, 0, 3, 100});
  d.records.push_back({10, 1, 2, 100});
  EXPECT_THROW(mle_fit(d), std::invalid_argument);
}

TEST(MleFit, PermutationInvariantAndDeterministic) {
  auto d = synthetic(kTrueA, 1e-5, 10, 100, 3);
  const auto a = mle_fit(d);
  std::mt19937 rng(1);
  std::shuffle(d.records.begin(), d.records.end(), rng);
  const auto b = mle_fit(d);
  EXPECT_EQ(a.epsilon, b.epsilon);
  EXPECT_EQ(a.amplitude, b.amplitude);
  EXPECT_EQ(mle_fit(d).log_likelihood, b.log_likelihood);
}

TEST(MleFit, LikelihoodAtFitBeatsTruth) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto d = synthetic(kTrueA, kTrueEps, 30, 100, 100 + s);
    const auto counts = pool_counts(d);
    const auto fit = mle_fit(counts);
    EXPECT_GE(fit.log_likelihood, log_likelihood(counts, kTrueA, kTrueEps) - 1e-9);
  }
}

TEST(MleFit, UnbiasedAtDeskScale) {
  constexpr int kReps = 200;
  std::vector<double> eps;
  for (int r = 0; r < kReps; ++r) eps.push_back(mle_fit(synthetic(kTrueA, kTrueEps, 30, 100, 7000 + r)).epsilon);
  double mean = 0.0;
  for (double e : eps) mean += e;
  mean /= kReps;
  double var = 0.0;
  for (double e : eps) var += (e - mean) * (e - mean);
  const double se = std::sqrt(var / (kReps - 1) / kReps);
  EXPECT_NEAR(mean, kTrueEps, 2.0 * se);
}

TEST(Bootstrap, RejectsZeroResamples) {
  const auto d = synthetic(kTrueA, kTrueEps, 30, 100, 1);
  BootstrapOptions o;
  o.n_resamples = 0;
  EXPECT_THROW(bootstrap_ci(d, mle_fit(d), o), std::invalid_argument);
}

TEST(Bootstrap, PaperScaleStderr) {
  const auto d = synthetic(kTrueA, kTrueEps, 30, 100, 11);
  BootstrapOptions o;
  o.n_resamples = 400;
  const auto fit = bootstrap_ci(d, mle_fit(d), o);
  EXPECT_NEAR(fit.epsilon_stderr / 0.4e-7, 1.0, 0.5);
  EXPECT_LE(fit.failed_fraction, 0.05);
  EXPECT_LT(fit.epsilon_ci.lo, fit.epsilon);
  EXPECT_GT(fit.epsilon_ci.hi, fit.epsilon);
}

TEST(Bootstrap, StderrScalesWithShots) {
  BootstrapOptions o;
  o.n_resamples = 400;
  const auto d1 = synthetic(kTrueA, kTrueEps, 30, 100, 21);
  const auto d2 = synthetic(kTrueA, kTrueEps, 30, 200, 22);
  const auto f1 = bootstrap_ci(d1, mle_fit(d1), o);
  const auto f2 = bootstrap_ci(d2, mle_fit(d2), o);
  EXPECT_NEAR(f1.epsilon_stderr / f2.epsilon_stderr, std::sqrt(2.0), 0.2 * std::sqrt(2.0));
}

TEST(Bootstrap, Coverage) {
  int covered = 0;
  constexpr int kReps = 100;
  BootstrapOptions o;
  o.n_resamples = 200;
  for (int r = 0; r < kReps; ++r) {
    const auto d = synthetic(kTrueA, kTrueEps, 30, 100, 500 + r);
    o.seed = 900 + r;
    const auto fit = bootstrap_ci(d, mle_fit(d), o);
    if (std::abs(fit.epsilon - kTrueEps) <= 2.0 * fit.epsilon_stderr) ++covered;
  }
  EXPECT_GE(covered, 90);
}

TEST(Bootstrap, WorkersDoNotChangeResult) {
  const auto d = synthetic(kTrueA, kTrueEps, 30, 100, 5);
  BootstrapOptions o;
  o.n_resamples = 60;
  const auto a = bootstrap_ci(d, mle_fit(d), o);
  o.workers = 3;
  const auto b = bootstrap_ci(d, mle_fit(d), o);
  EXPECT_EQ(a.epsilon_stderr, b.epsilon_stderr);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

}  // namespace
}  // namespace ionrb

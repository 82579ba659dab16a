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
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ionrb/clifford.hpp"
#include "ionrb/noise.hpp"
#include "ionrb/pulse_sim.hpp"

namespace ionrb {

enum class RbMode { kGate, kIdle, kIrmb };
enum class SimTier { kFast, kFull };

std::string to_string(RbMode mode);
RbMode rb_mode_from_string(const std::string& s);
std::string to_string(SimTier tier);
SimTier sim_tier_from_string(const std::string& s);

/// `count` geometrically spaced Clifford counts from `first` to `last`.
std::vector<int> default_lengths(int count = 5, int first = 100, int last = 30000);

struct RBPlanConfig {
  std::vector<int> lengths = default_lengths();
  int seqs_per_length = 30;
  int shots_per_seq = 100;
  double gate_time = 13e-6;  // wall-clock time per average Clifford, s
  RbMode mode = RbMode::kGate;
  double irmb_delay = 0.0;   // s, inserted after every pulse in IRMB mode
  std::uint64_t seed = 1;

  void validate() const;
};

struct PlannedSequence {
  int length_index = 0;
  int seq_id = 0;  // global index within the plan
  GateSequence gates;
};

struct RBPlan {
  RBPlanConfig config;
  std::vector<PlannedSequence> sequences;

  nlohmann::json to_json() const;
};

RBPlan generate_plan(const RBPlanConfig& config);

/// Pulse timing whose average Clifford (table mean pulse count) lasts
/// `gate_time` including the inter-pulse gaps of `base`.
PulseSpec pulse_for_gate_time(double gate_time, const PulseSpec& base = {});

/// Everything that can perturb a benchmarking run.
struct RbNoiseConfig {
  PulseSpec pulse;  // ramp and gap; t_half_pi comes from the plan's gate_time
  DriveParams drive;  // omega_q is recalibrated to the pulse
  AmplitudeNoiseModel amplitude;  // Rabi offset polynomial, rad/s per s^k
  std::optional<MotionalModel> motion;
  std::optional<QuantizerConfig> quantizer;
  double static_detuning = 0.0;  // rad/s, uncalibrated qubit-frame offset
  double t2 = 0.0;               // s, white frequency-noise dephasing; 0 disables
  double depolarizing = 0.0;     // RB error per Clifford injected directly
  IdleRates idle;
  double spam = 0.0;             // symmetric readout flip probability
  bool phase_compensation = true;

  void validate() const;
  /// True when every shot of a sequence sees the same coherent evolution.
  bool shot_independent() const;
};

struct RunOptions {
  SimTier tier = SimTier::kFast;
  int workers = 1;
};

struct RBRecord {
  int length = 0;
  int seq_id = 0;
  int errors = 0;
  int shots = 0;
};

struct RBDataset {
  RbMode mode = RbMode::kGate;
  double gate_time = 0.0;
  double irmb_delay = 0.0;
  std::uint64_t seed = 0;
  std::vector<RBRecord> records;

  void validate() const;
  std::vector<int> lengths() const;

  nlohmann::json to_json() const;
  static RBDataset from_json(const nlohmann::json& j);
  std::string to_csv() const;
  static RBDataset from_csv(const std::string& text);
};

/// Survival probability of one sequence for one shot, before the binary
/// draw. `shot` selects the noise stream. Exposed for cross-tier checks.
double sequence_survival(const RBPlan& plan, const PlannedSequence& seq,
                         const RbNoiseConfig& noise, SimTier tier, int shot);

/// Exact survival of every planned sequence averaged over its shots, with no
/// binomial readout draw. Index matches plan.sequences. For model oracles.
std::vector<double> mean_survival(const RBPlan& plan, const RbNoiseConfig& noise,
                                  const RunOptions& options = {});

/// Dispatches on the plan's mode.
RBDataset run_rb(const RBPlan& plan, const RbNoiseConfig& noise, const RunOptions& options = {});
RBDataset run_idle_rb(const RBPlan& plan, const IdleRates& rates, double spam = 0.0,
                      const RunOptions& options = {});
RBDataset run_irmb(const RBPlan& plan, const RbNoiseConfig& noise, const RunOptions& options = {});

}  // namespace ionrb

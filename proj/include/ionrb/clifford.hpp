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

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ionrb/linalg.hpp"

namespace ionrb {

/// The four physical generators: +/- pi/2 rotations about X and Y.
enum class Pulse : std::uint8_t { kPlusX = 0, kMinusX = 1, kPlusY = 2, kMinusY = 3 };

inline constexpr std::array<Pulse, 4> kAllPulses = {Pulse::kPlusX, Pulse::kMinusX,
                                                    Pulse::kPlusY, Pulse::kMinusY};

/// Azimuth of the drive axis for a generator (a -X90 is an X90 at phase pi).
double pulse_axis_phase(Pulse p);
std::string_view pulse_name(Pulse p);
Mat2 pulse_unitary(Pulse p);

/// Product of a pulse word applied first-to-last: U = U(w[n-1]) ... U(w[0]).
Mat2 word_unitary(std::span<const Pulse> word);

inline constexpr int kCliffordCount = 24;
inline constexpr int kIdentityClifford = 0;

/// The single-qubit Clifford group with a fixed pulse decomposition per
/// element.
///
/// Elements are indexed in breadth-first discovery order over the generator
/// set (+X90, -X90, +Y90, -Y90), so index 0 is the identity and each element's
/// decomposition is its first-found minimal word. Representatives carry the
/// canonical global phase of `canonical_phase`. The table is immutable and
/// built once.
class CliffordGroup {
 public:
  static const CliffordGroup& instance();

  /// Index of the element equal to "apply `first`, then `second`".
  int compose(int first, int second) const { return compose_[first][second]; }
  int inverse(int g) const { return inverse_[g]; }
  const Mat2& rep(int g) const { return reps_[g]; }
  std::span<const Pulse> pulses(int g) const { return words_[g]; }

  /// Returns -1 when `u` is not a Clifford (up to global phase).
  int index_of(const Mat2& u) const;

  /// Average physical pulse count over the 24 elements.
  double mean_pulses() const { return mean_pulses_; }
  int max_pulses() const;

  nlohmann::json to_json() const;

 private:
  CliffordGroup();

  std::array<Mat2, kCliffordCount> reps_;
  std::array<std::vector<Pulse>, kCliffordCount> words_;
  std::array<std::array<int, kCliffordCount>, kCliffordCount> compose_{};
  std::array<int, kCliffordCount> inverse_{};
  double mean_pulses_ = 0.0;
};

/// Minimal generator word for a Clifford, found by exhaustive enumeration of
/// words in increasing length (lexicographic within a length). Independent of
/// the table construction; used to check it.
std::vector<Pulse> min_pulse_decomposition(int index);

/// Clifford that returns the qubit to its initial state after `cliffords`.
int recovery_gate(std::span<const int> cliffords);

/// Product of the Clifford representatives applied in order.
Mat2 sequence_unitary(std::span<const int> cliffords);

/// A benchmarking sequence: random Cliffords, their recovery element, and the
/// per-sequence preparation / shelving randomisation.
struct GateSequence {
  std::vector<int> cliffords;
  int recovery = kIdentityClifford;
  int prepared_state = 0;
  bool shelve_expected = true;

  /// Physical pulse list including the recovery gate.
  std::vector<Pulse> pulse_train() const;
  std::size_t clifford_count() const { return cliffords.size(); }
};

}  // namespace ionrb

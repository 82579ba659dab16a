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

#include "ionrb/clifford.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace ionrb {
namespace {

constexpr double kMatchTol = 1e-9;

bool same_up_to_phase(const Mat2& a, const Mat2& b) {
  return phase_distance(a, b) < kMatchTol;
}

}  // namespace

double pulse_axis_phase(Pulse p) {
  switch (p) {
    case Pulse::kPlusX:
      return 0.0;
    case Pulse::kMinusX:
      return kPi;
    case Pulse::kPlusY:
      return 0.5 * kPi;
    case Pulse::kMinusY:
      return 1.5 * kPi;
  }
  return 0.0;
}

std::string_view pulse_name(Pulse p) {
  switch (p) {
    case Pulse::kPlusX:
      return "+X90";
    case Pulse::kMinusX:
      return "-X90";
    case Pulse::kPlusY:
      return "+Y90";
    case Pulse::kMinusY:
      return "-Y90";
  }
  return "?";
}

Mat2 pulse_unitary(Pulse p) { return equatorial_rotation(pulse_axis_phase(p), 0.5 * kPi); }

Mat2 word_unitary(std::span<const Pulse> word) {
  Mat2 u = Mat2::Identity();
  for (Pulse p : word) u = pulse_unitary(p) * u;
  return u;
}

const CliffordGroup& CliffordGroup::instance() {
  static const CliffordGroup group;
  return group;
}

CliffordGroup::CliffordGroup() {
  // Breadth-first closure from the identity. Expanding each frontier element
  // by generators in enum order gives lexicographic tie-breaking.
  std::vector<Mat2> found{canonical_phase(Mat2::Identity())};
  std::vector<std::vector<Pulse>> words{{}};
  std::deque<int> frontier{0};
  while (!frontier.empty()) {
    const int cur = frontier.front();
    frontier.pop_front();
    for (Pulse p : kAllPulses) {
      const Mat2 next = canonical_phase(pulse_unitary(p) * found[cur]);
      const bool known = std::any_of(found.begin(), found.end(),
                                     [&](const Mat2& m) { return same_up_to_phase(m, next); });
      if (known) continue;
      std::vector<Pulse> w = words[cur];
      w.push_back(p);
      found.push_back(next);
      words.push_back(std::move(w));
      frontier.push_back(static_cast<int>(found.size()) - 1);
    }
  }
  if (found.size() != kCliffordCount) {
    throw std::logic_error("Clifford closure produced " + std::to_string(found.size()) +
                           " elements");
  }

  std::size_t total = 0;
  for (int g = 0; g < kCliffordCount; ++g) {
    reps_[g] = found[g];
    words_[g] = words[g];
    total += words_[g].size();
  }
  mean_pulses_ = static_cast<double>(total) / kCliffordCount;

  for (int a = 0; a < kCliffordCount; ++a) {
    for (int b = 0; b < kCliffordCount; ++b) {
      const int c = index_of(reps_[b] * reps_[a]);
      if (c < 0) throw std::logic_error("Clifford table not closed");
      compose_[a][b] = c;
      if (c == kIdentityClifford) inverse_[a] = b;
    }
  }
}

int CliffordGroup::index_of(const Mat2& u) const {
  const Mat2 cu = canonical_phase(u);
  for (int g = 0; g < kCliffordCount; ++g) {
    if ((reps_[g] - cu).cwiseAbs().maxCoeff() < kMatchTol) return g;
  }
  return -1;
}

int CliffordGroup::max_pulses() const {
  std::size_t best = 0;
  for (const auto& w : words_) best = std::max(best, w.size());
  return static_cast<int>(best);
}

nlohmann::json CliffordGroup::to_json() const {
  nlohmann::json elements = nlohmann::json::array();
  for (int g = 0; g < kCliffordCount; ++g) {
    nlohmann::json pulses = nlohmann::json::array();
    for (Pulse p : words_[g]) pulses.push_back(pulse_name(p));
    nlohmann::json rep = nlohmann::json::array();
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) rep.push_back({reps_[g](r, c).real(), reps_[g](r, c).imag()});
    }
    elements.push_back({{"index", g}, {"pulses", pulses}, {"inverse", inverse_[g]}, {"rep", rep}});
  }
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : compose_) table.push_back(row);
  return {{"elements", elements}, {"compose", table}, {"mean_pulses", mean_pulses_}};
}

std::vector<Pulse> min_pulse_decomposition(int index) {
  if (index < 0 || index >= kCliffordCount) throw std::out_of_range("Clifford index");
  const Mat2& target = CliffordGroup::instance().rep(index);
  // Every single-qubit Clifford is reachable within this depth.
  constexpr int kMaxDepth = 6;
  std::vector<Pulse> word;
  for (int len = 0; len <= kMaxDepth; ++len) {
    word.assign(len, Pulse::kPlusX);
    // Odometer over base-4 digits, most significant digit first.
    while (true) {
      if (same_up_to_phase(word_unitary(word), target)) return word;
      int pos = len - 1;
      while (pos >= 0 && word[pos] == Pulse::kMinusY) {
        word[pos] = Pulse::kPlusX;
        --pos;
      }
      if (pos < 0) break;
      word[pos] = static_cast<Pulse>(static_cast<int>(word[pos]) + 1);
    }
  }
  throw std::logic_error("no decomposition found");
}

int recovery_gate(std::span<const int> cliffords) {
  const auto& group = CliffordGroup::instance();
  int net = kIdentityClifford;
  for (int g : cliffords) net = group.compose(net, g);
  return group.inverse(net);
}

Mat2 sequence_unitary(std::span<const int> cliffords) {
  const auto& group = CliffordGroup::instance();
  Mat2 u = Mat2::Identity();
  for (int g : cliffords) u = group.rep(g) * u;
  return u;
}

std::vector<Pulse> GateSequence::pulse_train() const {
  const auto& group = CliffordGroup::instance();
  std::vector<Pulse> out;
  out.reserve(3 * (cliffords.size() + 1));
  for (int g : cliffords) {
    auto w = group.pulses(g);
    out.insert(out.end(), w.begin(), w.end());
  }
  auto w = group.pulses(recovery);
  out.insert(out.end(), w.begin(), w.end());
  return out;
}

}  // namespace ionrb

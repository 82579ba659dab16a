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
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ionrb/rb.hpp"

namespace ionrb {

// Pipeline commands behind the C API and the command-line tool. A command
// takes a JSON run configuration and returns its output files in memory, so
// identical inputs give byte-identical files whatever the worker count.

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kVersion = "1.0.0";

std::vector<std::string> command_names();
bool is_command(const std::string& name);

/// Command-line values that take precedence over the configuration.
struct CommandOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<SimTier> tier;
  std::optional<int> workers;
};

struct OutputFile {
  std::string name;
  std::string content;
};

struct CommandOutput {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<OutputFile> files;
  nlohmann::json report;
  bool converged = true;  // false when a calibration loop gave up
};

/// A stage failed after validation. Validation failures raise ConfigError.
class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a of a byte string, as 16 lowercase hex digits.
std::string fnv1a64_hex(const std::string& bytes);

/// The configuration with overrides applied and the worker count dropped,
/// which is what the hash covers. Checks the schema version, the command
/// name and the top-level keys.
nlohmann::json effective_config(const std::string& command, const nlohmann::json& config,
                                const CommandOverrides& overrides = {});

/// Parses, validates and runs. Throws ConfigError before any work when the
/// configuration is invalid.
CommandOutput run_command(const std::string& command, const nlohmann::json& config,
                          const CommandOverrides& overrides = {});

}  // namespace ionrb

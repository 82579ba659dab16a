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

#include "ionrb/ionrb.h"

#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "ionrb/clifford.hpp"
#include "ionrb/commands.hpp"
#include "ionrb/json_util.hpp"

struct ionrb_config {
  nlohmann::json json;
};

struct ionrb_result {
  ionrb::CommandOutput output;
  std::string report;
};

namespace {

thread_local std::string g_last_error;

ionrb_status fail(ionrb_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

ionrb_status ok() {
  g_last_error.clear();
  return IONRB_OK;
}

ionrb::CommandOverrides overrides_from(const ionrb_run_options* o) {
  ionrb::CommandOverrides ov;
  if (!o) return ov;
  if (o->has_seed) ov.seed = o->seed;
  if (o->tier == IONRB_TIER_FAST) ov.tier = ionrb::SimTier::kFast;
  if (o->tier == IONRB_TIER_FULL) ov.tier = ionrb::SimTier::kFull;
  if (o->workers != 0) ov.workers = o->workers;
  return ov;
}

// Maps C++ exceptions from the core onto status codes. Call inside a catch.
ionrb_status translate_current() {
  try {
    throw;
  } catch (const ionrb::ConfigError& e) {
    return fail(IONRB_ERR_CONFIG, e.what());
  } catch (const ionrb::CommandError& e) {
    return fail(IONRB_ERR_RUNTIME, e.what());
  } catch (const std::bad_alloc&) {
    return fail(IONRB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(IONRB_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(IONRB_ERR_INTERNAL, "unknown exception");
  }
}

bool valid_options(const ionrb_run_options* o) {
  return !o || ((o->tier == IONRB_TIER_DEFAULT || o->tier == IONRB_TIER_FAST ||
                 o->tier == IONRB_TIER_FULL) &&
                o->workers >= 0);
}

}  // namespace

extern "C" {

const char* ionrb_version(void) { return ionrb::kVersion; }

const char* ionrb_status_name(ionrb_status status) {
  switch (status) {
    case IONRB_OK: return "ok";
    case IONRB_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case IONRB_ERR_PARSE: return "parse_error";
    case IONRB_ERR_CONFIG: return "config_error";
    case IONRB_ERR_RUNTIME: return "runtime_error";
    case IONRB_ERR_NOT_CONVERGED: return "not_converged";
    case IONRB_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

const char* ionrb_last_error(void) { return g_last_error.c_str(); }

size_t ionrb_command_count(void) { return ionrb::command_names().size(); }

const char* ionrb_command_name(size_t index) {
  static const std::vector<std::string> names = ionrb::command_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

double ionrb_pulses_per_clifford(void) { return ionrb::CliffordGroup::instance().mean_pulses(); }

ionrb_status ionrb_config_parse(const char* json_text, ionrb_config** out) {
  if (!out) return fail(IONRB_ERR_INVALID_ARGUMENT, "null output pointer");
  *out = nullptr;
  if (!json_text) return fail(IONRB_ERR_INVALID_ARGUMENT, "null config text");
  try {
    auto* c = new ionrb_config;
    try {
      c->json = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
      delete c;
      return fail(IONRB_ERR_PARSE, e.what());
    }
    *out = c;
    return ok();
  } catch (...) {
    return translate_current();
  }
}

void ionrb_config_free(ionrb_config* config) { delete config; }

ionrb_status ionrb_config_hash(const ionrb_config* config, const char* command,
                               const ionrb_run_options* options, char hash_out[17]) {
  if (!config || !command || !hash_out) return fail(IONRB_ERR_INVALID_ARGUMENT, "null argument");
  if (!valid_options(options)) return fail(IONRB_ERR_INVALID_ARGUMENT, "invalid run options");
  try {
    const auto eff = ionrb::effective_config(command, config->json, overrides_from(options));
    const std::string h = ionrb::fnv1a64_hex(eff.dump());
    std::memcpy(hash_out, h.c_str(), h.size() + 1);
    return ok();
  } catch (...) {
    return translate_current();
  }
}

ionrb_status ionrb_run(const char* command, const ionrb_config* config,
                       const ionrb_run_options* options, ionrb_result** out) {
  if (!out) return fail(IONRB_ERR_INVALID_ARGUMENT, "null output pointer");
  *out = nullptr;
  if (!command || !config) return fail(IONRB_ERR_INVALID_ARGUMENT, "null argument");
  if (!ionrb::is_command(command)) {
    return fail(IONRB_ERR_INVALID_ARGUMENT, std::string("unknown command '") + command + "'");
  }
  if (!valid_options(options)) return fail(IONRB_ERR_INVALID_ARGUMENT, "invalid run options");
  try {
    auto* r = new ionrb_result;
    try {
      r->output = ionrb::run_command(command, config->json, overrides_from(options));
      r->report = r->output.report.dump(2);
    } catch (...) {
      delete r;
      throw;
    }
    *out = r;
    if (!r->output.converged) {
      return fail(IONRB_ERR_NOT_CONVERGED, "calibration loop did not converge");
    }
    return ok();
  } catch (...) {
    return translate_current();
  }
}

void ionrb_result_free(ionrb_result* result) { delete result; }

size_t ionrb_result_file_count(const ionrb_result* result) {
  return result ? result->output.files.size() : 0;
}

const char* ionrb_result_file_name(const ionrb_result* result, size_t index) {
  if (!result || index >= result->output.files.size()) return nullptr;
  return result->output.files[index].name.c_str();
}

const char* ionrb_result_file_data(const ionrb_result* result, size_t index, size_t* size) {
  if (!result || index >= result->output.files.size()) {
    if (size) *size = 0;
    return nullptr;
  }
  const std::string& s = result->output.files[index].content;
  if (size) *size = s.size();
  return s.c_str();
}

const char* ionrb_result_report(const ionrb_result* result) {
  return result ? result->report.c_str() : nullptr;
}

const char* ionrb_result_config_hash(const ionrb_result* result) {
  return result ? result->output.config_hash.c_str() : nullptr;
}

uint64_t ionrb_result_seed(const ionrb_result* result) { return result ? result->output.seed : 0; }

}  // extern "C"

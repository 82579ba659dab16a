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

// Command-line front end over the C API. Each subcommand reads a JSON run
// configuration, runs one pipeline and writes its files into --out.

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ionrb/ionrb.h"

namespace fs = std::filesystem;

namespace {

struct Args {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool has_seed = false;
  std::string tier;
  int workers = 0;
  bool print_report = false;
};

// Exit codes for failures that happen before the library is called.
constexpr int kExitUsage = 64;
constexpr int kExitIo = 74;

int report_error(const std::string& command, const std::string& status, int code,
                 const std::string& message) {
  const nlohmann::json rec = {{"command", command},
                              {"status", status},
                              {"code", code},
                              {"message", message}};
  std::cerr << rec.dump() << '\n';
  return code;
}

int library_error(const std::string& command, ionrb_status s) {
  return report_error(command, ionrb_status_name(s), static_cast<int>(s), ionrb_last_error());
}

// IONRB_WORKERS fills in when --workers is absent.
int env_workers() {
  const char* v = std::getenv("IONRB_WORKERS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  errno = 0;
  const long n = std::strtol(v, &end, 10);
  if (errno != 0 || *end != '\0' || n < 1 || n > 4096) return -1;
  return static_cast<int>(n);
}

int run(const std::string& command, const Args& a) {
  std::ifstream in(a.config_path, std::ios::binary);
  if (!in) return report_error(command, "io_error", kExitIo, "cannot read " + a.config_path);
  std::ostringstream text;
  text << in.rdbuf();

  ionrb_run_options opt{};
  opt.has_seed = a.has_seed ? 1 : 0;
  opt.seed = a.seed;
  opt.tier = a.tier == "fast" ? IONRB_TIER_FAST : a.tier == "full" ? IONRB_TIER_FULL
                                                                    : IONRB_TIER_DEFAULT;
  opt.workers = a.workers;
  if (opt.workers == 0) {
    const int w = env_workers();
    if (w < 0) return report_error(command, "usage_error", kExitUsage, "invalid IONRB_WORKERS");
    opt.workers = w;
  }

  ionrb_config* raw_cfg = nullptr;
  ionrb_status s = ionrb_config_parse(text.str().c_str(), &raw_cfg);
  std::unique_ptr<ionrb_config, decltype(&ionrb_config_free)> cfg(raw_cfg, ionrb_config_free);
  if (s != IONRB_OK) return library_error(command, s);

  ionrb_result* raw_res = nullptr;
  s = ionrb_run(command.c_str(), cfg.get(), &opt, &raw_res);
  std::unique_ptr<ionrb_result, decltype(&ionrb_result_free)> res(raw_res, ionrb_result_free);
  if (!res) return library_error(command, s);

  // Files are written only once the run has produced them all.
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) return report_error(command, "io_error", kExitIo, "cannot create " + a.out_dir);
  nlohmann::json written = nlohmann::json::array();
  for (size_t i = 0; i < ionrb_result_file_count(res.get()); ++i) {
    size_t size = 0;
    const char* data = ionrb_result_file_data(res.get(), i, &size);
    const fs::path path = fs::path(a.out_dir) / ionrb_result_file_name(res.get(), i);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os.write(data, static_cast<std::streamsize>(size));
    if (!os) return report_error(command, "io_error", kExitIo, "cannot write " + path.string());
    written.push_back(path.string());
  }

  if (a.print_report) std::cout << ionrb_result_report(res.get()) << '\n';
  const nlohmann::json summary = {{"command", command},
                                  {"status", ionrb_status_name(s)},
                                  {"config_hash", ionrb_result_config_hash(res.get())},
                                  {"seed", ionrb_result_seed(res.get())},
                                  {"files", written}};
  if (s != IONRB_OK) {
    std::cerr << nlohmann::json({{"command", command},
                                 {"status", ionrb_status_name(s)},
                                 {"code", static_cast<int>(s)},
                                 {"message", ionrb_last_error()}})
                     .dump()
              << '\n';
  }
  std::cout << summary.dump() << '\n';
  return static_cast<int>(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized-benchmarking simulation, calibration and error-budget pipelines"};
  app.set_version_flag("--version", ionrb_version());
  app.require_subcommand(1);

  const struct {
    const char* name;
    const char* help;
  } commands[] = {
      {"rb", "simulate gate RB, fit the decay and bootstrap the error"},
      {"idle-rb", "RB with pulses replaced by delays, and the linear idle model"},
      {"irmb", "RB with inserted delays; error slope against delay"},
      {"calibrate", "amplitude and frequency loops, optional drift scenario"},
      {"walsh", "Walsh amplitude spectroscopy and drift-term fit"},
      {"phase-noise", "phase-noise PSD to filter-function decay predictions"},
      {"budget", "per-mechanism error table and gate-time curve"},
      {"leakage-rates", "idle rates from the four shelving schemes"},
  };

  Args args;
  std::string selected;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", args.config_path, "JSON run configuration")
        ->required();
    sub->add_option("--out", args.out_dir, "output directory")->capture_default_str();
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { args.seed = v, args.has_seed = true; },
        "master seed, overrides the configuration");
    sub->add_option("--tier", args.tier, "simulation tier")
        ->check(CLI::IsMember({"fast", "full"}));
    sub->add_option("--workers", args.workers, "worker threads (or IONRB_WORKERS)")
        ->check(CLI::Range(1, 4096));
    sub->add_flag("--report", args.print_report, "print the run report to stdout");
    sub->callback([&selected, name = std::string(c.name)] { selected = name; });
  }

  CLI11_PARSE(app, argc, argv);
  return run(selected, args);
}

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

// Exercises the shared library through its C header only.

#include "ionrb/ionrb.h"

#include <cstring>
#include <set>
#include <string>

#include <gtest/gtest.h>

namespace {

ionrb_config* parse(const char* text) {
  ionrb_config* c = nullptr;
  EXPECT_EQ(ionrb_config_parse(text, &c), IONRB_OK) << ionrb_last_error();
  return c;
}

TEST(CApi, Metadata) {
  EXPECT_STREQ(ionrb_version(), "1.0.0");
  EXPECT_STREQ(ionrb_status_name(IONRB_ERR_CONFIG), "config_error");
  std::set<std::string> names;
  for (size_t i = 0; i < ionrb_command_count(); ++i) names.insert(ionrb_command_name(i));
  EXPECT_EQ(names, (std::set<std::string>{"budget", "calibrate", "idle-rb", "irmb",
                                          "leakage-rates", "phase-noise", "rb", "walsh"}));
  EXPECT_EQ(ionrb_command_name(ionrb_command_count()), nullptr);
  EXPECT_NEAR(ionrb_pulses_per_clifford(), 52.0 / 24.0, 1e-15);
}

TEST(CApi, ParseErrors) {
  ionrb_config* c = reinterpret_cast<ionrb_config*>(0x1);
  EXPECT_EQ(ionrb_config_parse("{\"schema_version\": ", &c), IONRB_ERR_PARSE);
  EXPECT_EQ(c, nullptr);
  EXPECT_STRNE(ionrb_last_error(), "");
  EXPECT_EQ(ionrb_config_parse(nullptr, &c), IONRB_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(ionrb_config_parse("{}", nullptr), IONRB_ERR_INVALID_ARGUMENT);
}

TEST(CApi, RunBudget) {
  ionrb_config* c = parse("{\"schema_version\": 1, \"seed\": 5}");
  ionrb_result* r = nullptr;
  ASSERT_EQ(ionrb_run("budget", c, nullptr, &r), IONRB_OK) << ionrb_last_error();
  ASSERT_NE(r, nullptr);
  EXPECT_STREQ(ionrb_last_error(), "");
  EXPECT_EQ(ionrb_result_seed(r), 5u);
  char hash[17] = {};
  ASSERT_EQ(ionrb_config_hash(c, "budget", nullptr, hash), IONRB_OK);
  EXPECT_STREQ(hash, ionrb_result_config_hash(r));
  EXPECT_EQ(std::strlen(hash), 16u);

  std::set<std::string> files;
  for (size_t i = 0; i < ionrb_result_file_count(r); ++i) {
    size_t size = 0;
    const char* data = ionrb_result_file_data(r, i, &size);
    ASSERT_NE(data, nullptr);
    EXPECT_EQ(std::strlen(data), size);
    EXPECT_NE(std::string(data, size).find(hash), std::string::npos);
    files.insert(ionrb_result_file_name(r, i));
  }
  EXPECT_TRUE(files.count("budget.csv"));
  EXPECT_TRUE(files.count("curve.csv"));
  EXPECT_EQ(ionrb_result_file_name(r, 1000), nullptr);
  size_t size = 7;
  EXPECT_EQ(ionrb_result_file_data(r, 1000, &size), nullptr);
  EXPECT_EQ(size, 0u);
  EXPECT_NE(std::string(ionrb_result_report(r)).find("\"total\""), std::string::npos);
  ionrb_result_free(r);
  ionrb_config_free(c);
}

TEST(CApi, OverridesChangeHash) {
  ionrb_config* c = parse("{\"schema_version\": 1}");
  char a[17], b[17], w[17];
  ASSERT_EQ(ionrb_config_hash(c, "rb", nullptr, a), IONRB_OK);
  ionrb_run_options o{};
  o.has_seed = 1;
  o.seed = 77;
  ASSERT_EQ(ionrb_config_hash(c, "rb", &o, b), IONRB_OK);
  EXPECT_STRNE(a, b);
  ionrb_run_options ow{};
  ow.workers = 4;
  ASSERT_EQ(ionrb_config_hash(c, "rb", &ow, w), IONRB_OK);
  EXPECT_STREQ(a, w);
  ionrb_run_options bad{};
  bad.workers = -2;
  EXPECT_EQ(ionrb_config_hash(c, "rb", &bad, w), IONRB_ERR_INVALID_ARGUMENT);
  ionrb_config_free(c);
}

TEST(CApi, ErrorCodes) {
  ionrb_result* r = reinterpret_cast<ionrb_result*>(0x1);
  ionrb_config* c = parse("{\"schema_version\": 1, \"plan\": {\"shots_per_seq\": -1}}");
  EXPECT_EQ(ionrb_run("rb", c, nullptr, &r), IONRB_ERR_CONFIG);
  EXPECT_EQ(r, nullptr);
  EXPECT_NE(std::string(ionrb_last_error()).find("plan"), std::string::npos);
  EXPECT_EQ(ionrb_run("nope", c, nullptr, &r), IONRB_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(ionrb_run(nullptr, c, nullptr, &r), IONRB_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(ionrb_run("rb", nullptr, nullptr, &r), IONRB_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(ionrb_run("rb", c, nullptr, nullptr), IONRB_ERR_INVALID_ARGUMENT);
  ionrb_config_free(c);

  // A loop that gives up still returns its trace.
  c = parse(
      "{\"schema_version\": 1, \"simulator\": {\"amp_offset\": 1e-4, \"amp_sigma\": 0.3}}");
  EXPECT_EQ(ionrb_run("calibrate", c, nullptr, &r), IONRB_ERR_NOT_CONVERGED);
  ASSERT_NE(r, nullptr);
  EXPECT_GT(ionrb_result_file_count(r), 0u);
  ionrb_result_free(r);
  ionrb_config_free(c);

  ionrb_result_free(nullptr);
  ionrb_config_free(nullptr);
  EXPECT_EQ(ionrb_result_file_count(nullptr), 0u);
}

}  // namespace

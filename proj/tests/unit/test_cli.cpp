// Copyright 2026 The cgpo-kit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "commands.hpp"

using cgpo::cli::json;
using cgpo::cli::run_command;

TEST(Cli, FreeEnergyPreset) {
  const auto r = run_command("free-energy", json::parse(R"({"system":"paper-qubit","state":"paper-qubit-rho"})"));
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NEAR(r.report.at("free_energy").get<double>(), 1.291, 1e-3);
  EXPECT_TRUE(r.report.at("incoherent").get<bool>());
}

TEST(Cli, ExtendedFreeEnergyAcceptsInfinity) {
  const auto r = run_command(
      "free-energy", json::parse(R"({"system":"paper-qubit","state":"paper-qubit-rho","alpha":[0.5,1,"inf"]})"));
  ASSERT_EQ(r.exit_code, 0);
  const auto& ext = r.report.at("extended_free_energy");
  ASSERT_EQ(ext.size(), 3u);
  EXPECT_EQ(ext[2].at("alpha"), "inf");
  EXPECT_TRUE(ext[2].at("endpoint").get<bool>());
  EXPECT_FALSE(ext[0].at("endpoint").get<bool>());
  EXPECT_LE(ext[0].at("value").get<double>(), ext[1].at("value").get<double>());
}

TEST(Cli, ThermomajorizeExitCodes) {
  auto r = run_command("thermomajorize",
                       json::parse(R"({"system":"paper-qubit","p":"paper-qubit-rho","p_prime":"paper-qubit-rho"})"));
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_TRUE(r.files.count("lorenz_p.csv"));
  r = run_command("thermomajorize", json::parse(R"({"system":"paper-qubit","p":"gibbs","p_prime":"paper-qubit-rho"})"));
  EXPECT_EQ(r.exit_code, 2);
}

TEST(Cli, UnknownKeyIsSchemaViolation) {
  const auto r = run_command("free-energy", json::parse(R"({"system":"paper-qubit","state":"plus-state","temp":3})"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(r.report.at("error").at("code"), "schema_violation");
  EXPECT_TRUE(r.files.empty());
}

TEST(Cli, UnknownCommand) {
  const auto r = run_command("teleport", json::object());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(r.report.at("error").at("code"), "unknown_command");
}

TEST(Cli, CommonReportFields) {
  cgpo::cli::RunOptions opt;
  opt.seed = 7;
  opt.seed_given = true;
  const auto r = run_command("free-energy", json::parse(R"({"system":"paper-qubit","state":"plus-state"})"), opt);
  for (const char* k : {"command", "version", "config_hash", "seed", "max_dim", "tolerances", "exit_code"})
    EXPECT_TRUE(r.report.contains(k)) << k;
  EXPECT_EQ(r.report.at("version"), cgpo::kVersion);
  EXPECT_EQ(r.report.at("seed"), 7);
}

TEST(Cli, ConfigHashTracksContent) {
  const auto a = run_command("free-energy", json::parse(R"({"system":"paper-qubit","state":"plus-state"})"));
  const auto b = run_command("free-energy", json::parse(R"({"state":"plus-state","system":"paper-qubit"})"));
  const auto c = run_command("free-energy", json::parse(R"({"system":"paper-qubit","state":"gibbs"})"));
  EXPECT_EQ(a.report.at("config_hash"), b.report.at("config_hash"));
  EXPECT_NE(a.report.at("config_hash"), c.report.at("config_hash"));
}

TEST(Cli, DeterministicReports) {
  const auto cfg = json::parse(R"({"system":"paper-qubit","state":"plus-state","copies":[2,4],"shots":500,"seed":3})");
  const auto a = run_command("phase-est", cfg), b = run_command("phase-est", cfg);
  EXPECT_EQ(a.exit_code, 0);
  EXPECT_EQ(a.report.dump(), b.report.dump());
  EXPECT_EQ(a.files, b.files);
}

TEST(Cli, FeasibilityAttachesOracle) {
  const auto r = run_command("feasibility", json::parse(R"({"system":{"delta":1.0,"levels":[0,1,2],"beta":1.0},
      "rho_in":[0.2,0.3,0.5],"target":[0.9,0.05,0.05],"diagonal_only":true})"));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(r.report.at("outcome").at("oracle"), false);
}

TEST(Cli, CheckChannelRandomGp) {
  const auto r = run_command("check-channel",
                             json::parse(R"({"channel":{"random_gp":{"system":"paper-qubit","structure":"covariant"}},
      "seed":5})"));
  EXPECT_EQ(r.exit_code, 0) << r.report.dump();
}

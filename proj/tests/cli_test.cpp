// Copyright 2026 The OrCo Authors
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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "fixtures.hpp"
#include "orco/report.hpp"

using namespace orco;

namespace {

struct Run {
  int exit_code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(ORCO_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (const std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::filesystem::path scratch() {
  const auto dir = std::filesystem::temp_directory_path() / ("orco_cli_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& text) {
  const auto path = scratch() / name;
  std::ofstream(path) << text;
  return path.string();
}

std::string pair_catalog() {
  const auto [a, b] = orco::test::crossing_pair();
  return write_file("pair.tle", orco::test::three_line(a) + orco::test::three_line(b) +
                                    orco::test::three_line(orco::test::high_orbit()));
}

const std::string kWindow = "--start 2024-03-01T00:00:00Z --stop 2024-03-01T01:00:00Z";

}  // namespace

TEST(CliParse, ValidFile) {
  const auto [a, b] = orco::test::crossing_pair();
  const auto path = write_file("two.tle", orco::test::three_line(a) + orco::test::three_line(b));
  const auto r = run("parse " + path);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "2 records, 0 rejects\n");
}

TEST(CliParse, CorruptChecksumStrictAndReport) {
  const auto [a, b] = orco::test::crossing_pair();
  std::string line1 = a.line1_raw;
  line1.back() = line1.back() == '9' ? '0' : static_cast<char>(line1.back() + 1);
  const auto path = write_file("bad.tle", "A\n" + line1 + "\n" + a.line2_raw + "\n" + orco::test::three_line(b));
  EXPECT_EQ(run("parse " + path).exit_code, 0);
  const auto report = (scratch() / "rejects.json").string();
  const auto strict = run("parse --strict --reject-report " + report + " " + path);
  EXPECT_EQ(strict.exit_code, 1);
  EXPECT_EQ(strict.out, "1 records, 1 rejects\n");
  const Json j = parse_json(read_text_file(report));
  EXPECT_EQ(j["rejects"], 1);
  EXPECT_EQ(j["reject_list"][0]["code"], "ChecksumMismatch");
  EXPECT_EQ(j["reject_list"][0]["norad_id"], 90001);
}

TEST(CliParse, MissingFileIsIoError) { EXPECT_EQ(run("parse /nonexistent/none.tle").exit_code, 2); }

TEST(CliScreen, CrossingPairMatchesPipelineBytes) {
  const auto json = (scratch() / "screen.json").string();
  const auto r = run("screen --catalog " + pair_catalog() + " --ids 90001,90002 " + kWindow +
                     " --mc-samples 100000 --json " + json);
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out.substr(0, 14), "1 conjunction\n");

  const auto [a, b] = orco::test::crossing_pair();
  CatalogSnapshot cat;
  cat.records.emplace(a.norad_id, a);
  cat.records.emplace(b.norad_id, b);
  ScreeningRequest req;
  req.ids = {90001, 90002};
  req.screening.window_start = parse_iso8601("2024-03-01T00:00:00Z");
  req.screening.window_stop = parse_iso8601("2024-03-01T01:00:00Z");
  req.mc_samples = 100000;
  EXPECT_EQ(read_text_file(json), dump_json(to_json(run_screening(cat, req))));
  EXPECT_EQ(parse_json(read_text_file(json))["events"][0]["results"].size(), 3u);
}

TEST(CliScreen, SameSeedSameBytes) {
  const std::string args = "screen --catalog " + pair_catalog() + " --ids 90001,90002 " + kWindow +
                           " --seed 99 --mc-samples 50000 --json -";
  const auto first = run(args);
  const auto second = run(args);
  ASSERT_EQ(first.exit_code, 0);
  EXPECT_FALSE(first.out.empty());
  EXPECT_EQ(first.out, second.out);
}

TEST(CliScreen, DisjointOrbits) {
  const auto r = run("screen --catalog " + pair_catalog() + " --ids 90001,90003 " + kWindow);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, "0 conjunctions\n");
}

TEST(CliScreen, ConfigViolationsExitOne) {
  EXPECT_EQ(run("screen --catalog " + pair_catalog() +
                " --ids 90001,90002 --start 2024-03-02T00:00:00Z --stop 2024-03-01T00:00:00Z")
                .exit_code,
            1);
  EXPECT_EQ(run("screen --catalog " + pair_catalog() + " --ids 90001,90002 " + kWindow + " --step -5").exit_code, 1);
  EXPECT_EQ(run("screen --catalog " + pair_catalog() + " --ids 90001,90002 " + kWindow + " --method simpson").exit_code,
            1);
  EXPECT_EQ(run("screen --ids 90001,90002 " + kWindow).exit_code, 1);
  EXPECT_EQ(run("screen --catalog /nonexistent.tle --ids 90001,90002 " + kWindow).exit_code, 2);
}

TEST(CliScreen, ConfigFileDefaultsAndFlagOverride) {
  const auto cfg = write_file("svc.json", R"({"screening": {"method": "alfano", "hbr": 40}})");
  const auto r = run("screen --catalog " + pair_catalog() + " --ids 90001,90002 " + kWindow + " --config " + cfg +
                     " --hbr 30 --json -");
  ASSERT_EQ(r.exit_code, 0);
  const Json j = parse_json(r.out);
  EXPECT_EQ(j["request"]["config"]["method"], Json::array({"alfano"}));
  EXPECT_EQ(j["request"]["config"]["hbr"].get<double>(), 30.0);
}

TEST(CliPc, CenteredIsotropicClosedForm) {
  const auto r = run("pc --miss 0,0 --cov 1,0,1 --hbr 100 --method patera,alfano --json -");
  ASSERT_EQ(r.exit_code, 0);
  const Json j = parse_json(r.out);
  for (const auto& res : j["results"]) EXPECT_NEAR(res["pc"].get<double>(), -std::expm1(-0.005), 1e-8);
}

TEST(CliPc, OracleFixture) {
  const auto r = run("pc --miss 0.5,0.1 --cov 1,0,0.04 --hbr 50 --method all --json -");
  ASSERT_EQ(r.exit_code, 0);
  const Json j = parse_json(r.out);
  ASSERT_EQ(j["results"].size(), 3u);
  EXPECT_NEAR(j["results"][1]["pc"].get<double>(), 0.004838002353997551, 1e-8 * 0.004838002353997551);
  EXPECT_NEAR(j["results"][2]["pc"].get<double>(), 0.004838002353997551, 1e-8 * 0.004838002353997551);
}

TEST(CliPc, NegativeDefiniteExitsOne) {
  EXPECT_EQ(run("pc --miss 0,0 --cov -1,0,-1 --hbr 20").exit_code, 1);
  EXPECT_EQ(run("pc --miss 0,0 --cov 1,2,1 --hbr 20").exit_code, 1);
  EXPECT_EQ(run("pc --miss 0 --cov 1,0,1").exit_code, 1);
}

TEST(CliCompare, TwoRowPlatformTable) {
  const auto ref = write_file("ref.json", R"({"platform": "www.space-track.org", "tcpa": "2024-03-01T00:25:10Z",
                                             "pc": 0.0002382545})");
  const auto r = run("compare --catalog " + pair_catalog() + " --ids 90001,90002 " + kWindow + " --reference " + ref);
  ASSERT_EQ(r.exit_code, 0) << r.out;
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < r.out.size()) {
    const auto nl = r.out.find('\n', pos);
    lines.push_back(r.out.substr(pos, nl - pos));
    pos = nl + 1;
  }
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0].substr(0, 11), "| Platform ");
  EXPECT_NE(lines[0].find("| TCPA "), std::string::npos);
  EXPECT_NE(lines[0].find("| Collision Probability |"), std::string::npos);
  EXPECT_NE(lines[2].find("| orco "), std::string::npos);
  EXPECT_NE(lines[2].find("2024-03-01 00:23:45"), std::string::npos);
  EXPECT_NE(lines[3].find("www.space-track.org"), std::string::npos);
  EXPECT_NE(lines[3].find("2024-03-01 00:25:10"), std::string::npos);
  EXPECT_NE(lines[3].find("2.382545e-04"), std::string::npos);
}

TEST(Cli, UnknownFlagAndNoSubcommand) {
  EXPECT_EQ(run("parse --frobnicate x").exit_code, 1);
  EXPECT_EQ(run("").exit_code, 1);
  EXPECT_EQ(run("--help").exit_code, 0);
}

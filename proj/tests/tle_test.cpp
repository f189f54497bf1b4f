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

#include <random>

#include "orco/tle.hpp"
#include "test_util.hpp"

namespace orco {
namespace {

const std::string kIss1 = "1 25544U 98067A   08264.51782528 -.00002182  00000-0 -11606-4 0  2927";
const std::string kIss2 = "2 25544  51.6416 247.4627 0006703 130.5360 325.0288 15.72125391563537";

// Independent checksum oracle, written before the parser.
int oracle_checksum(const std::string& body) {
  int s = 0;
  for (char c : body) s += (c >= '0' && c <= '9') ? c - '0' : (c == '-' ? 1 : 0);
  return s % 10;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an orco::Error";
  return ErrorCode::NotFound;
}

TEST(Checksum, EmptySumIsZero) { EXPECT_EQ(checksum(std::string(68, ' ')), 0); }

TEST(Checksum, MinusCountsAsOne) { EXPECT_EQ(checksum(std::string(68, '-')), 8); }

TEST(Checksum, RejectsWrongLength) {
  EXPECT_EQ(code_of([] { checksum(std::string(67, ' ')); }), ErrorCode::LineLength);
}

TEST(Checksum, MatchesPublishedDigitsOnReferenceLines) {
  for (const auto& name : {"sgp4_verification.tle", "sgp4_random_leo.tle"}) {
    for (const auto& line : test::read_lines(test::data_path(name))) {
      ASSERT_EQ(line.size(), 69u);
      EXPECT_EQ(checksum(std::string_view(line).substr(0, 68)), line[68] - '0') << line;
      EXPECT_EQ(oracle_checksum(line.substr(0, 68)), line[68] - '0') << line;
    }
  }
}

TEST(ParseTle, DecodesFixedColumns) {
  const auto r = parse_tle("0 ISS (ZARYA)", kIss1, kIss2);
  EXPECT_EQ(r.norad_id, 25544);
  ASSERT_TRUE(r.name.has_value());
  EXPECT_EQ(*r.name, "ISS (ZARYA)");
  EXPECT_EQ(to_iso8601(r.epoch), "2008-09-20T12:25:40.104Z");
  EXPECT_DOUBLE_EQ(r.elements.eccentricity, 0.0006703);
  EXPECT_DOUBLE_EQ(r.elements.ndot, -0.00002182);
  EXPECT_DOUBLE_EQ(r.elements.nddot, 0.0);
  EXPECT_DOUBLE_EQ(r.elements.bstar, -0.11606e-4);
  EXPECT_DOUBLE_EQ(r.elements.inclination_deg, 51.6416);
  EXPECT_DOUBLE_EQ(r.elements.raan_deg, 247.4627);
  EXPECT_DOUBLE_EQ(r.elements.arg_perigee_deg, 130.5360);
  EXPECT_DOUBLE_EQ(r.elements.mean_anomaly_deg, 325.0288);
  EXPECT_DOUBLE_EQ(r.elements.mean_motion, 15.72125391);
  EXPECT_EQ(r.element_set_no, 292);
  EXPECT_EQ(r.rev_at_epoch, 56353);
  EXPECT_EQ(r.line1_raw, kIss1);
}

TEST(ParseTle, ShortLineIsLineLength) {
  EXPECT_EQ(code_of([] { parse_tle(std::nullopt, kIss1.substr(0, 68), kIss2); }), ErrorCode::LineLength);
}

TEST(ParseTle, CorruptedChecksumReportsBothDigits) {
  std::string l1 = kIss1.substr(0, 68);
  const int good = oracle_checksum(l1);
  l1.push_back(static_cast<char>('0' + (good + 1) % 10));
  try {
    parse_tle(std::nullopt, l1, kIss2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ChecksumMismatch);
    EXPECT_NE(e.detail().find("computed " + std::to_string(good)), std::string::npos) << e.what();
  }
}

TEST(ParseTle, IdMismatch) {
  std::string l2 = kIss2;
  l2.replace(2, 5, "25545");
  l2[68] = static_cast<char>('0' + oracle_checksum(l2.substr(0, 68)));
  EXPECT_EQ(code_of([&] { parse_tle(std::nullopt, kIss1, l2); }), ErrorCode::IdMismatch);
}

TEST(ParseTle, GarbageInValueColumnIsFieldSyntax) {
  std::string l2 = kIss2;
  l2[10] = 'X';  // inclination column
  l2[68] = static_cast<char>('0' + oracle_checksum(l2.substr(0, 68)));
  try {
    parse_tle(std::nullopt, kIss1, l2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FieldSyntax);
    EXPECT_NE(e.detail().find("cols 9-16"), std::string::npos) << e.what();
  }
}

TEST(ParseTle, YearPivot) {
  TleRecord r = parse_tle(std::nullopt, kIss1, kIss2);
  for (auto [year, yy] : {std::pair{1957, 57}, {1999, 99}, {2000, 0}, {2056, 56}}) {
    r.epoch = start_of_year(year) + std::chrono::hours(36);
    const auto [l1, l2] = format_tle(r);
    EXPECT_EQ(std::stoi(l1.substr(18, 2)), yy);
    EXPECT_EQ(parse_tle(std::nullopt, l1, l2).epoch, r.epoch) << l1;
  }
}

TEST(ParseTle, EccentricityOutOfRangeInclinationIsRejected) {
  std::string l2 = kIss2;
  l2.replace(8, 8, "181.0000");
  l2[68] = static_cast<char>('0' + oracle_checksum(l2.substr(0, 68)));
  EXPECT_EQ(code_of([&] { parse_tle(std::nullopt, kIss1, l2); }), ErrorCode::FieldSyntax);
}

TEST(FormatTle, CanonicalLinesRoundTripVerbatim) {
  const auto r = parse_tle(std::nullopt, kIss1, kIss2);
  const auto [l1, l2] = format_tle(r);
  EXPECT_EQ(l1, kIss1);
  EXPECT_EQ(l2, kIss2);
  EXPECT_EQ(parse_tle(std::nullopt, l1, l2), r);
}

TEST(FormatTle, ReferenceRecordsRoundTrip) {
  for (const auto& r : test::read_two_line_file(test::data_path("sgp4_verification.tle"))) {
    const auto [l1, l2] = format_tle(r);
    auto again = parse_tle(std::nullopt, l1, l2);
    EXPECT_EQ(again.elements, r.elements) << r.line1_raw;
    EXPECT_EQ(again.epoch, r.epoch);
    EXPECT_EQ(again.element_set_no, r.element_set_no);
    EXPECT_EQ(again.rev_at_epoch, r.rev_at_epoch);
  }
}

// Property: any in-range record survives format -> parse -> format unchanged.
TEST(FormatTle, RandomRecordsAreFixedPoints) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    MeanElements e;
    e.mean_motion = 0.5 + 16.0 * u(rng);
    e.eccentricity = 0.9999 * u(rng);
    e.inclination_deg = 180.0 * u(rng);
    e.raan_deg = 359.9999 * u(rng);
    e.arg_perigee_deg = 359.9999 * u(rng);
    e.mean_anomaly_deg = 359.9999 * u(rng);
    e.bstar = (u(rng) - 0.5) * 1e-3;
    e.ndot = (u(rng) - 0.5) * 1e-3;
    e.nddot = (u(rng) - 0.5) * 1e-6;
    const auto epoch = start_of_year(1960 + k % 90) + Nanoseconds(static_cast<std::int64_t>(u(rng) * 3e16));
    const auto r = make_tle(1 + k, epoch, e);
    const auto [l1, l2] = format_tle(r);
    EXPECT_EQ(l1, r.line1_raw);
    EXPECT_EQ(l2, r.line2_raw);
    EXPECT_EQ(parse_tle(std::nullopt, l1, l2), r);
  }
}

}  // namespace
}  // namespace orco

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

// orco: batch front end for parsing catalogs, screening, and direct pc queries.
// Exit codes: 0 ok, 1 domain error, 2 I/O or system error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "orco/catalog.hpp"
#include "orco/report.hpp"
#include "orco/service.hpp"

namespace {

using namespace orco;

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kIoError = 2;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw IoError("cannot write '" + path + "'");
}

/// Screening flags; each maps to the config key of the same name with '-' -> '_'.
struct ScreenOptions {
  std::string catalog;
  std::vector<int> ids;
  std::string start;
  std::string stop;
  std::string config_file;
  double step = 0, distance = 0, hbr = 0, tca_tolerance = 0, sieve_margin = 0, aespt_threshold = 0,
         horizon_days = 0;
  std::vector<std::string> method;
  std::string scheme;
  std::vector<double> sigma, sigma_velocity;
  std::uint64_t seed = 0, mc_samples = 0, sample_count = 0;
  CLI::App* app = nullptr;

  void add_to(CLI::App* sub) {
    app = sub;
    sub->add_option("--catalog", catalog, "TLE file (2- or 3-line sets)")->required();
    sub->add_option("--ids", ids, "Catalog numbers to screen")->delimiter(',')->required();
    sub->add_option("--start", start, "Window start, ISO-8601 UTC")->required();
    sub->add_option("--stop", stop, "Window stop, ISO-8601 UTC")->required();
    sub->add_option("--config", config_file, "Service config file; its \"screening\" section sets defaults");
    sub->add_option("--step", step, "Coarse grid step (s)");
    sub->add_option("--distance", distance, "Screening distance (km)");
    sub->add_option("--hbr", hbr, "Combined hard-body radius (m)");
    sub->add_option("--tca-tolerance", tca_tolerance, "TCA refinement tolerance (s)");
    sub->add_option("--sieve-margin", sieve_margin, "Altitude sieve margin (km)");
    sub->add_option("--method", method, "mc, patera, alfano or all")->delimiter(',');
    sub->add_option("--scheme", scheme, "Uncertainty propagation: mc, espt, aespt");
    sub->add_option("--sigma", sigma, "Position sigma r,s,w (km)")->delimiter(',')->expected(3);
    sub->add_option("--sigma-velocity", sigma_velocity, "Velocity sigma r,s,w (km/s)")->delimiter(',')->expected(3);
    sub->add_option("--sample-count", sample_count, "Uncertainty MC sample count");
    sub->add_option("--aespt-threshold", aespt_threshold, "AESPT nonlinearity threshold (km)");
    sub->add_option("--mc-samples", mc_samples, "Monte Carlo pc samples");
    sub->add_option("--seed", seed, "RNG seed");
    sub->add_option("--horizon-days", horizon_days, "Propagation horizon (days)");
  }

  [[nodiscard]] bool given(const char* flag) const { return app->count(flag) > 0; }

  [[nodiscard]] Json flag_config() const {
    Json c = Json::object();
    if (given("--step")) c["step"] = step;
    if (given("--distance")) c["distance"] = distance;
    if (given("--hbr")) c["hbr"] = hbr;
    if (given("--tca-tolerance")) c["tca_tolerance"] = tca_tolerance;
    if (given("--sieve-margin")) c["sieve_margin"] = sieve_margin;
    if (given("--method")) c["method"] = method;
    if (given("--scheme")) c["scheme"] = scheme;
    if (given("--sigma")) c["sigma"] = sigma;
    if (given("--sigma-velocity")) c["sigma_velocity"] = sigma_velocity;
    if (given("--sample-count")) c["sample_count"] = sample_count;
    if (given("--aespt-threshold")) c["aespt_threshold"] = aespt_threshold;
    if (given("--mc-samples")) c["mc_samples"] = mc_samples;
    if (given("--seed")) c["seed"] = seed;
    if (given("--horizon-days")) c["horizon_days"] = horizon_days;
    return c;
  }

  [[nodiscard]] ScreeningRequest request() const {
    ScreeningRequest r;
    if (!config_file.empty()) apply_config_json(ServiceConfig::load(config_file).screening_defaults, r);
    apply_config_json(flag_config(), r);
    r.ids = ids;
    r.screening.window_start = parse_iso8601(start);
    r.screening.window_stop = parse_iso8601(stop);
    return r;
  }

  [[nodiscard]] CatalogSnapshot load_catalog() const {
    auto load = load_catalog_file(catalog);
    if (!load.rejects.empty()) {
      std::cerr << "warning: " << load.rejects.size() << " element set(s) rejected in " << catalog << "\n";
    }
    return std::move(load.snapshot);
  }
};

std::string format_pc(double pc) { return dump_json(Json(pc), -1); }

/// "YYYY-MM-DD HH:MM:SS", rounded to the second.
std::string format_tcpa(Instant t) {
  const auto rounded = std::chrono::floor<std::chrono::seconds>(t + std::chrono::milliseconds(500));
  return to_iso8601(rounded).substr(0, 19).replace(10, 1, " ");
}

void print_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  auto line = [&](const std::vector<std::string>& row) {
    out << "|";
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string cell = i < row.size() ? row[i] : "";
      out << " " << cell << std::string(width[i] - cell.size(), ' ') << " |";
    }
    out << "\n";
  };
  line(rows.front());
  out << "|";
  for (const auto w : width) out << std::string(w + 2, '-') << "|";
  out << "\n";
  for (std::size_t r = 1; r < rows.size(); ++r) line(rows[r]);
}

int run_parse(const std::string& file, const std::string& reject_report, bool strict) {
  const auto load = load_catalog_file(file);
  std::cout << load.snapshot.records.size() << " records, " << load.rejects.size() << " rejects\n";
  for (const auto& r : load.rejects) {
    std::cerr << file << ":" << r.line << ": " << to_string(r.code) << ": " << r.message << "\n";
  }
  if (!reject_report.empty()) {
    Json list = Json::array();
    for (const auto& r : load.rejects) {
      list.push_back(Json{{"line", r.line},
                          {"norad_id", r.norad_id ? Json(*r.norad_id) : Json(nullptr)},
                          {"code", to_string(r.code)},
                          {"message", r.message}});
    }
    write_output(reject_report, dump_json(Json{{"file", file},
                                               {"records", load.snapshot.records.size()},
                                               {"rejects", load.rejects.size()},
                                               {"reject_list", std::move(list)}}));
  }
  return strict && !load.rejects.empty() ? kDomainError : kOk;
}

int run_screen(const ScreenOptions& opt, const std::string& json_path) {
  const auto request = opt.request();
  const auto catalog = opt.load_catalog();
  const auto report = run_screening(catalog, request);
  const std::string json = dump_json(to_json(report));
  if (!json_path.empty()) write_output(json_path, json);

  std::ostream& out = json_path == "-" ? std::cerr : std::cout;
  out << report.events.size() << " conjunction" << (report.events.size() == 1 ? "" : "s") << "\n";
  if (!report.events.empty()) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"tca", "pair", "miss km"};
    for (auto m : request.methods) header.push_back("pc " + std::string(to_string(m)));
    rows.push_back(header);
    for (const auto& e : report.events) {
      char miss[32];
      std::snprintf(miss, sizeof miss, "%.6f", e.event.miss_distance_km);
      std::vector<std::string> row{to_iso8601(e.event.tca),
                                   std::to_string(e.event.id_a) + "-" + std::to_string(e.event.id_b), miss};
      if (e.error) {
        row.push_back(std::string(to_string(e.error->code())) + ": " + e.error->detail());
      } else if (e.results.size() == 1 && e.results[0].diagnostics.time_resolved) {
        row.push_back(format_pc(e.results[0].pc) + " (3D mc)");
      } else {
        for (const auto& r : e.results) row.push_back(format_pc(r.pc));
      }
      rows.push_back(std::move(row));
    }
    print_table(out, rows);
  }
  for (const auto& f : report.failures) {
    std::cerr << "pair " << f.id_a << "-" << f.id_b << " skipped: " << f.error.what() << "\n";
  }
  return kOk;
}

int run_pc(const std::vector<double>& miss, const std::vector<double>& cov, double hbr,
           const std::vector<std::string>& methods, std::uint64_t samples, std::uint64_t seed,
           const std::string& json_path) {
  std::string joined;
  for (const auto& m : methods) joined += (joined.empty() ? "" : ",") + m;
  ProbabilityRequest req;
  req.miss_km = Vector2(miss[0], miss[1]);
  req.covariance_km2 << cov[0], cov[1], cov[1], cov[2];
  req.hard_body_radius_m = hbr;
  req.mc_samples = samples;
  req.rng_seed = seed;
  Json results = Json::array();
  std::vector<std::vector<std::string>> rows{{"method", "pc", "error_estimate", "diagnostics"}};
  for (const auto m : parse_method_list(joined)) {
    req.method = m;
    const auto r = compute_pc(req);
    Json j = to_json(r);
    rows.push_back({std::string(to_string(m)), format_pc(r.pc),
                    r.error_estimate ? format_pc(*r.error_estimate) : "-", dump_json(j["diagnostics"], -1)});
    results.push_back(std::move(j));
  }
  if (!json_path.empty()) write_output(json_path, dump_json(Json{{"results", std::move(results)}}));
  print_table(json_path == "-" ? std::cerr : std::cout, rows);
  return kOk;
}

/// Two-row platform comparison: this pipeline's highest-pc event of the pair
/// next to a reference {platform, tcpa, pc} document.
int run_compare(const ScreenOptions& opt, const std::string& reference_path, const std::string& platform,
                const std::string& method_name) {
  auto request = opt.request();
  const auto method = parse_probability_method(method_name);
  request.methods = {method};
  if (request.ids.size() != 2) throw Error(ErrorCode::InvalidArgument, "compare needs exactly two --ids");
  const Json ref = parse_json(read_text_file(reference_path));
  const auto* ref_platform = json_get::find(ref, "platform");
  const auto* ref_tcpa = json_get::find(ref, "tcpa");
  const auto* ref_pc = json_get::find(ref, "pc");
  if (!ref_platform || !ref_tcpa || !ref_pc) {
    throw Error(ErrorCode::InvalidArgument, "reference needs 'platform', 'tcpa' and 'pc'");
  }
  const auto report = run_screening(opt.load_catalog(), request);
  const EventReport* best = nullptr;
  for (const auto& e : report.events) {
    if (e.error || e.results.empty()) continue;
    if (!best || e.results[0].pc > best->results[0].pc) best = &e;
  }
  if (!best) throw Error(ErrorCode::NotFound, "no assessed conjunction in the window");
  print_table(std::cout, {{"Platform", "TCPA", "Collision Probability"},
                          {platform, format_tcpa(best->event.tca), format_pc(best->results[0].pc)},
                          {json_get::string(*ref_platform, "platform"),
                           format_tcpa(json_get::time(*ref_tcpa, "tcpa")),
                           format_pc(json_get::number(*ref_pc, "pc"))}});
  return kOk;
}

int run_serve(const std::string& config_file, const std::string& bind) {
  auto config = ServiceConfig::load(config_file.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_file));
  if (!bind.empty()) config.set_bind(bind);
  Service service(config);
  std::cerr << "orco serving on " << config.host << ":" << config.port << "\n";
  service.run();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orco: orbital conjunction screening and collision probability"};
  app.require_subcommand(1);

  std::string parse_file, reject_report;
  bool strict = false;
  auto* parse = app.add_subcommand("parse", "Parse a TLE catalog and report rejects");
  parse->add_option("file", parse_file, "TLE file")->required();
  parse->add_option("--reject-report", reject_report, "Write rejects as JSON to this path");
  parse->add_flag("--strict", strict, "Exit 1 if any element set is rejected");

  ScreenOptions screen_opt;
  std::string screen_json;
  auto* screen = app.add_subcommand("screen", "Screen objects for conjunctions and compute pc");
  screen_opt.add_to(screen);
  screen->add_option("--json", screen_json, "Write the JSON report here ('-' for stdout)");

  std::vector<double> miss, cov;
  double pc_hbr = 20.0;
  std::vector<std::string> pc_methods{"all"};
  std::uint64_t pc_samples = 1'000'000, pc_seed = 1;
  std::string pc_json;
  auto* pc = app.add_subcommand("pc", "Collision probability for one encounter-plane geometry");
  pc->add_option("--miss", miss, "Miss vector x,y (km)")->delimiter(',')->expected(2)->required();
  pc->add_option("--cov", cov, "Covariance sxx,sxy,syy (km^2)")->delimiter(',')->expected(3)->required();
  pc->add_option("--hbr", pc_hbr, "Combined hard-body radius (m)");
  pc->add_option("--method", pc_methods, "mc, patera, alfano or all")->delimiter(',');
  pc->add_option("--mc-samples", pc_samples, "Monte Carlo samples");
  pc->add_option("--seed", pc_seed, "RNG seed");
  pc->add_option("--json", pc_json, "Write results as JSON here ('-' for stdout)");

  ScreenOptions cmp_opt;
  std::string reference, platform = "orco", cmp_method = "patera";
  auto* compare = app.add_subcommand("compare", "Platform comparison table (TCPA, collision probability)");
  cmp_opt.add_to(compare);
  compare->add_option("--reference", reference, "JSON {platform, tcpa, pc} for the second row")->required();
  compare->add_option("--platform", platform, "Name of this platform in the first row");
  compare->add_option("--pc-method", cmp_method, "Method whose pc is reported");

  std::string serve_config, serve_bind;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--config", serve_config, "Service config file (JSON)");
  serve->add_option("--bind", serve_bind, "host:port (overrides config and ORCO_BIND)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kDomainError;
  }

  try {
    if (*parse) return run_parse(parse_file, reject_report, strict);
    if (*screen) return run_screen(screen_opt, screen_json);
    if (*pc) return run_pc(miss, cov, pc_hbr, pc_methods, pc_samples, pc_seed, pc_json);
    if (*compare) return run_compare(cmp_opt, reference, platform, cmp_method);
    if (*serve) return run_serve(serve_config, serve_bind);
  } catch (const Error& e) {
    std::cerr << "orco: " << e.what() << "\n";
    return e.code() == ErrorCode::IoFailure ? kIoError : kDomainError;
  } catch (const IoError& e) {
    std::cerr << "orco: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "orco: " << e.what() << "\n";
    return kIoError;
  }
  return kOk;
}

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

#pragma once

// JSON schema shared by `orco screen --json` and the service. Config keys match
// the CLI flags one-to-one ("sieve_margin" <-> --sieve-margin).

#include <string>
#include <vector>

#include "orco/json_io.hpp"
#include "orco/pipeline.hpp"

namespace orco {

inline Json to_json(const ProbabilityResult& r) {
  Json j;
  j["method"] = to_string(r.method);
  j["pc"] = r.pc;
  j["error_estimate"] = r.error_estimate ? Json(*r.error_estimate) : Json(nullptr);
  Json d = Json::object();
  const auto& g = r.diagnostics;
  if (g.hits) d["hits"] = *g.hits;
  if (g.samples) d["samples"] = *g.samples;
  if (g.nodes) d["nodes"] = *g.nodes;
  if (g.closure_residual) d["closure_residual"] = *g.closure_residual;
  if (g.time_resolved) d["time_resolved"] = true;
  if (!g.per_event.empty()) d["per_event"] = g.per_event;
  j["diagnostics"] = std::move(d);
  return j;
}

inline Json to_json(const StateVector& s) {
  return Json{{"position_km", to_json(s.position)}, {"velocity_km_s", to_json(s.velocity)}};
}

inline Json to_json(const EncounterPlane& p) {
  const auto e = ellipse_params(p.covariance_2d);
  return Json{{"miss_km", to_json(p.miss_vector_2d)},
              {"covariance_km2", to_json(p.covariance_2d)},
              {"ellipse", Json{{"eigenvalues_km2", to_json(e.eigenvalues_km2)}, {"angle_deg", e.angle_deg}}},
              {"e1", to_json(p.e1)},
              {"e2", to_json(p.e2)}};
}

inline Json config_to_json(const ScreeningRequest& r) {
  Json methods = Json::array();
  for (auto m : r.methods) methods.push_back(to_string(m));
  return Json{{"step", r.screening.coarse_step_s},
              {"distance", r.screening.screening_distance_km},
              {"hbr", r.screening.hard_body_radius_m},
              {"tca_tolerance", r.screening.tca_tolerance_s},
              {"sieve_margin", r.screening.sieve_margin_km},
              {"method", std::move(methods)},
              {"scheme", to_string(r.scheme)},
              {"sigma", to_json(r.uncertainty.sigma_rsw_position)},
              {"sigma_velocity", to_json(r.uncertainty.sigma_rsw_velocity)},
              {"sample_count", r.uncertainty.sample_count},
              {"aespt_threshold", r.uncertainty.aespt_nl_threshold_km},
              {"mc_samples", r.mc_samples},
              {"seed", r.uncertainty.rng_seed},
              {"horizon_days", r.propagator.horizon_days}};
}

/// Applies the keys present in `cfg`; unknown keys are rejected.
inline void apply_config_json(const Json& cfg, ScreeningRequest& r) {
  if (!cfg.is_object()) throw Error(ErrorCode::InvalidArgument, "'config' must be an object");
  for (const auto& [key, v] : cfg.items()) {
    if (v.is_null()) continue;
    if (key == "step") {
      r.screening.coarse_step_s = json_get::number(v, key);
    } else if (key == "distance") {
      r.screening.screening_distance_km = json_get::number(v, key);
    } else if (key == "hbr") {
      r.screening.hard_body_radius_m = json_get::number(v, key);
    } else if (key == "tca_tolerance") {
      r.screening.tca_tolerance_s = json_get::number(v, key);
    } else if (key == "sieve_margin") {
      r.screening.sieve_margin_km = json_get::number(v, key);
    } else if (key == "method") {
      if (v.is_string()) {
        r.methods = parse_method_list(v.get<std::string>());
      } else if (v.is_array()) {
        std::string joined;
        for (const auto& m : v) joined += (joined.empty() ? "" : ",") + json_get::string(m, key);
        r.methods = parse_method_list(joined);
      } else {
        throw Error(ErrorCode::InvalidArgument, "'method' must be a string or an array of strings");
      }
    } else if (key == "scheme") {
      r.scheme = parse_uncertainty_scheme(json_get::string(v, key));
    } else if (key == "sigma") {
      r.uncertainty.sigma_rsw_position = json_get::vec3(v, key);
    } else if (key == "sigma_velocity") {
      r.uncertainty.sigma_rsw_velocity = json_get::vec3(v, key);
    } else if (key == "sample_count") {
      r.uncertainty.sample_count = static_cast<int>(std::min<std::uint64_t>(json_get::count(v, key), 1u << 30));
    } else if (key == "aespt_threshold") {
      r.uncertainty.aespt_nl_threshold_km = json_get::number(v, key);
    } else if (key == "mc_samples") {
      r.mc_samples = json_get::count(v, key);
    } else if (key == "seed") {
      r.uncertainty.rng_seed = json_get::count(v, key);
    } else if (key == "horizon_days") {
      r.propagator.horizon_days = json_get::number(v, key);
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    }
  }
}

inline Json request_to_json(const ScreeningRequest& r) {
  return Json{{"ids", r.ids},
              {"window",
               Json{{"start", to_iso8601(r.screening.window_start)}, {"stop", to_iso8601(r.screening.window_stop)}}},
              {"config", config_to_json(r)}};
}

inline Json to_json(const EventReport& e) {
  Json j{{"id_a", e.event.id_a},
         {"id_b", e.event.id_b},
         {"tca", to_iso8601(e.event.tca)},
         {"miss_distance_km", e.event.miss_distance_km},
         {"relative_speed_km_s", e.event.relative_speed_km_s},
         {"state_a", to_json(e.event.state_a)},
         {"state_b", to_json(e.event.state_b)}};
  j["encounter_plane"] = e.plane ? to_json(*e.plane) : Json(nullptr);
  Json results = Json::array();
  for (const auto& r : e.results) results.push_back(to_json(r));
  j["results"] = std::move(results);
  if (e.error) j["error"] = error_envelope(*e.error)["error"];
  return j;
}

inline Json to_json(const ScreeningReport& report) {
  Json events = Json::array();
  for (const auto& e : report.events) events.push_back(to_json(e));
  Json failures = Json::array();
  for (const auto& f : report.failures) {
    failures.push_back(Json{{"id_a", f.id_a}, {"id_b", f.id_b}, {"error", error_envelope(f.error)["error"]}});
  }
  return Json{{"request", request_to_json(report.request)},
              {"pairs_screened", report.pairs_screened},
              {"events", std::move(events)},
              {"failed_pairs", std::move(failures)}};
}

}  // namespace orco

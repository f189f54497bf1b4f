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

// JSON HTTP service under /api/v1. Screenings run on a fixed worker pool fed
// by a FIFO queue; jobs and the active catalog persist in one store directory
// (jobs/<id>.json, catalog/catalog.tle + catalog/index.json), so a restarted
// service answers GETs with the same bytes.

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "orco/catalog.hpp"
#include "orco/json_io.hpp"
#include "orco/report.hpp"
#include "orco/space_track.hpp"

// After Eigen: <resolv.h> (via httplib) defines an _res macro.
#include <httplib.h>

namespace orco {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  ///< 0 picks a free port
  std::filesystem::path cache_root = "orco-cache";
  std::filesystem::path store_dir;  ///< empty: <cache_root>/store
  std::filesystem::path static_dir = "web";
  unsigned workers = 0;  ///< 0: hardware concurrency
  std::size_t queue_cap = 64;
  std::size_t max_objects_per_job = 500;
  std::size_t page_size = 100;
  SpaceTrackConfig space_track;
  Json screening_defaults = Json::object();  ///< same keys as a screening "config"

  [[nodiscard]] std::filesystem::path store() const { return store_dir.empty() ? cache_root / "store" : store_dir; }

  /// "host:port" or ":port".
  void set_bind(std::string_view bind) {
    const auto colon = bind.rfind(':');
    if (colon == std::string_view::npos) throw Error(ErrorCode::InvalidArgument, "bind must be host:port");
    if (colon > 0) host = std::string(bind.substr(0, colon));
    try {
      std::size_t used = 0;
      const std::string p(bind.substr(colon + 1));
      port = std::stoi(p, &used);
      if (used != p.size() || port < 0 || port > 65535) throw std::invalid_argument("port");
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad port in bind '" + std::string(bind) + "'");
    }
  }

  /// Reads the config file; ORCO_BIND and ORCO_CACHE override it.
  static ServiceConfig load(const std::optional<std::filesystem::path>& path) {
    ServiceConfig c;
    if (path) {
      const Json j = parse_json(read_text_file(*path));
      for (const auto& [key, v] : j.items()) {
        if (key == "bind") {
          c.set_bind(json_get::string(v, key));
        } else if (key == "cache_root") {
          c.cache_root = json_get::string(v, key);
        } else if (key == "store_dir") {
          c.store_dir = json_get::string(v, key);
        } else if (key == "static_dir") {
          c.static_dir = json_get::string(v, key);
        } else if (key == "workers") {
          c.workers = static_cast<unsigned>(json_get::count(v, key));
        } else if (key == "queue_cap") {
          c.queue_cap = json_get::count(v, key);
        } else if (key == "max_objects_per_job") {
          c.max_objects_per_job = json_get::count(v, key);
        } else if (key == "page_size") {
          c.page_size = json_get::count(v, key);
        } else if (key == "space_track") {
          for (const auto& [k, sv] : v.items()) {
            if (k == "base_url") c.space_track.base_url = json_get::string(sv, k);
            else if (k == "login_path") c.space_track.login_path = json_get::string(sv, k);
            else if (k == "default_query") c.space_track.default_query = json_get::string(sv, k);
            else if (k == "min_request_spacing_s") c.space_track.min_request_spacing_s = json_get::number(sv, k);
            else if (k == "timeout_s") c.space_track.timeout_s = json_get::number(sv, k);
            else throw Error(ErrorCode::InvalidArgument, "unknown space_track key '" + k + "'");
          }
        } else if (key == "screening") {
          ScreeningRequest probe;
          apply_config_json(v, probe);
          c.screening_defaults = v;
        } else {
          throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
        }
      }
    }
    if (const char* bind = std::getenv("ORCO_BIND"); bind && *bind) c.set_bind(bind);
    if (const char* cache = std::getenv("ORCO_CACHE"); cache && *cache) c.cache_root = cache;
    if (c.page_size == 0) throw Error(ErrorCode::InvalidArgument, "page_size must be positive");
    return c;
  }
};

enum class JobStatus { queued, running, done, failed };

constexpr std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::queued: return "queued";
    case JobStatus::running: return "running";
    case JobStatus::done: return "done";
    case JobStatus::failed: return "failed";
  }
  return "?";
}

inline JobStatus parse_job_status(std::string_view s) {
  if (s == "queued") return JobStatus::queued;
  if (s == "running") return JobStatus::running;
  if (s == "done") return JobStatus::done;
  if (s == "failed") return JobStatus::failed;
  throw Error(ErrorCode::InvalidArgument, "unknown job status '" + std::string(s) + "'");
}

struct ScreeningJob {
  std::string job_id;
  ScreeningRequest request;
  JobStatus status = JobStatus::queued;
  double progress = 0.0;
  std::optional<Json> result;
  std::optional<Json> error;
  std::shared_ptr<const CatalogSnapshot> catalog;  ///< snapshot at submission
  std::map<int, TleRecord> event_objects;           ///< records behind result events, for /whatif

  [[nodiscard]] Json to_json() const {
    Json objects = Json::object();
    for (const auto& [id, r] : event_objects) {
      objects[std::to_string(id)] = Json{{"name", r.name ? Json(*r.name) : Json(nullptr)},
                                         {"line1", r.line1_raw},
                                         {"line2", r.line2_raw}};
    }
    return Json{{"job_id", job_id},
                {"status", to_string(status)},
                {"progress", progress},
                {"request", request_to_json(request)},
                {"result", result ? *result : Json(nullptr)},
                {"error", error ? *error : Json(nullptr)},
                {"objects", std::move(objects)}};
  }
};

/// Single-directory persistence. Writes go through a temp file and rename.
class Store {
 public:
  explicit Store(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_ / "jobs", ec);
    if (!ec) std::filesystem::create_directories(root_ / "catalog", ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create store '" + root_.string() + "': " + ec.message());
  }

  void save_catalog(const std::string& raw, const CatalogLoad& load) {
    Json ids = Json::array();
    for (const auto& [id, r] : load.snapshot.records) ids.push_back(id);
    const Json index{{"source", to_string(load.snapshot.source)},
                     {"fetched_at", to_iso8601(load.snapshot.fetched_at)},
                     {"fetched_at_ns", load.snapshot.fetched_at.time_since_epoch().count()},
                     {"records", std::move(ids)},
                     {"rejects", load.rejects.size()}};
    write_atomic(root_ / "catalog" / "catalog.tle", raw);
    write_atomic(root_ / "catalog" / "index.json", dump_json(index));
  }

  [[nodiscard]] std::optional<CatalogLoad> load_catalog() const {
    const auto raw = root_ / "catalog" / "catalog.tle";
    const auto index_path = root_ / "catalog" / "index.json";
    if (!std::filesystem::is_regular_file(raw) || !std::filesystem::is_regular_file(index_path)) return std::nullopt;
    const Json index = parse_json(read_text_file(index_path));
    const auto source = index.at("source").get<std::string>() == "file" ? CatalogSource::file
                                                                         : CatalogSource::space_track;
    const Instant fetched{Nanoseconds(index.at("fetched_at_ns").get<std::int64_t>())};
    return parse_catalog_text(read_text_file(raw), source, fetched);
  }

  void save_job(const ScreeningJob& job) {
    write_atomic(root_ / "jobs" / (job.job_id + ".json"), dump_json(job.to_json()));
  }

  [[nodiscard]] std::vector<Json> load_jobs() const {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(root_ / "jobs")) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Json> out;
    for (const auto& f : files) out.push_back(parse_json(read_text_file(f)));
    return out;
  }

 private:
  static void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << content;
      if (!out) throw Error(ErrorCode::IoFailure, "cannot write '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot replace '" + path.string() + "': " + ec.message());
  }

  std::filesystem::path root_;
};

/// Response of a route: HTTP status plus JSON body.
struct Reply {
  int status = 200;
  Json body;
  std::optional<double> retry_after_s = std::nullopt;
};

/// Error raised by a route with an explicit HTTP status and envelope code.
struct HttpError : std::runtime_error {
  HttpError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status(status), code(std::move(code)) {}
  int status;
  std::string code;
};

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::IoFailure: return 500;
    case ErrorCode::AuthFailure: return 502;
    case ErrorCode::RateLimited: return 503;
    default: return 400;
  }
}

namespace service_detail {

inline std::string new_job_id() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}() ^ static_cast<std::uint64_t>(
                                                          std::chrono::steady_clock::now().time_since_epoch().count())};
  std::lock_guard lock(m);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

inline double query_number(const httplib::Params& params, const std::string& key, std::optional<double> fallback) {
  const auto it = params.find(key);
  if (it == params.end()) {
    if (fallback) return *fallback;
    throw Error(ErrorCode::InvalidArgument, "missing query parameter '" + key + "'");
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size() || !std::isfinite(v)) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "query parameter '" + key + "' must be a number");
  }
}

/// Query or JSON filter keys: {inc,ecc,mm}_{min,max} map to the matching
/// element ranges; alt_min bounds perigee and alt_max bounds apogee altitude.
template <typename Lookup>
OrbitalFilter filter_from(Lookup&& get) {
  OrbitalFilter f;
  auto range = [&](const char* lo_key, const char* hi_key) -> std::optional<Range> {
    const auto lo = get(lo_key);
    const auto hi = get(hi_key);
    if (!lo && !hi) return std::nullopt;
    Range r;
    if (lo) r.min = *lo;
    if (hi) r.max = *hi;
    if (!(r.min <= r.max)) {
      throw Error(ErrorCode::InvalidRange,
                  std::string(lo_key) + " " + std::to_string(r.min) + " > " + hi_key + " " + std::to_string(r.max));
    }
    return r;
  };
  f.inclination_deg = range("inc_min", "inc_max");
  f.eccentricity = range("ecc_min", "ecc_max");
  f.mean_motion = range("mm_min", "mm_max");
  if (const auto alt = range("alt_min", "alt_max")) {
    if (get("alt_min")) f.perigee_km = Range{alt->min, std::numeric_limits<double>::infinity()};
    if (get("alt_max")) f.apogee_km = Range{-std::numeric_limits<double>::infinity(), alt->max};
  }
  return f;
}

inline constexpr const char* kFilterKeys[] = {"inc_min", "inc_max", "ecc_min", "ecc_max",
                                              "mm_min",  "mm_max",  "alt_min", "alt_max"};

inline Json object_summary(const TleRecord& r) {
  return Json{{"norad_id", r.norad_id},
              {"name", r.name ? Json(*r.name) : Json(nullptr)},
              {"epoch", to_iso8601(r.epoch)},
              {"inclination_deg", r.elements.inclination_deg},
              {"eccentricity", r.elements.eccentricity},
              {"mean_motion", r.elements.mean_motion},
              {"perigee_km", perigee_altitude_km(r.elements)},
              {"apogee_km", apogee_altitude_km(r.elements)}};
}

inline Json load_summary(const CatalogLoad& load) {
  Json rejects = Json::array();
  for (const auto& r : load.rejects) {
    rejects.push_back(Json{{"line", r.line},
                           {"norad_id", r.norad_id ? Json(*r.norad_id) : Json(nullptr)},
                           {"code", to_string(r.code)},
                           {"message", r.message}});
  }
  return Json{{"records", load.snapshot.records.size()},
              {"rejects", load.rejects.size()},
              {"reject_list", std::move(rejects)},
              {"source", to_string(load.snapshot.source)},
              {"fetched_at", to_iso8601(load.snapshot.fetched_at)}};
}

inline Matrix2 covariance_2d_from(const Json& v) {
  Matrix2 c;
  if (v.is_array() && v.size() == 3) {
    c << json_get::number(v[0], "covariance_km2"), json_get::number(v[1], "covariance_km2"),
        json_get::number(v[1], "covariance_km2"), json_get::number(v[2], "covariance_km2");
  } else if (v.is_array() && v.size() == 2 && v[0].is_array() && v[0].size() == 2 && v[1].is_array() &&
             v[1].size() == 2) {
    c << json_get::number(v[0][0], "covariance_km2"), json_get::number(v[0][1], "covariance_km2"),
        json_get::number(v[1][0], "covariance_km2"), json_get::number(v[1][1], "covariance_km2");
    if (c(0, 1) != c(1, 0)) throw Error(ErrorCode::InvalidArgument, "covariance_km2 must be symmetric");
  } else {
    throw Error(ErrorCode::InvalidArgument, "covariance_km2 must be [sxx, sxy, syy] or a 2x2 array");
  }
  return c;
}

}  // namespace service_detail

class Service {
 public:
  explicit Service(ServiceConfig config) : config_(std::move(config)), store_(config_.store()) {
    if (auto load = store_.load_catalog()) {
      catalog_ = std::make_shared<const CatalogSnapshot>(std::move(load->snapshot));
    }
    for (const auto& doc : store_.load_jobs()) restore_job(doc);
    const unsigned n = config_.workers ? config_.workers : std::max(1u, std::thread::hardware_concurrency());
    for (unsigned i = 0; i < n; ++i) workers_.emplace_back([this] { worker_loop(); });
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ~Service() {
    stop();
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    queue_cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  [[nodiscard]] const ServiceConfig& config() const { return config_; }

  /// Binds and serves on a background thread; returns the bound port.
  int start() {
    install(server_);
    int port = config_.port;
    if (port == 0) {
      port = server_.bind_to_any_port(config_.host);
    } else if (!server_.bind_to_port(config_.host, port)) {
      port = -1;
    }
    if (port < 0) {
      throw Error(ErrorCode::IoFailure,
                  "cannot bind " + config_.host + ":" + std::to_string(config_.port));
    }
    listener_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port;
  }

  /// Blocks serving until stop() is called.
  void run() {
    install(server_);
    if (!server_.listen(config_.host, config_.port)) {
      throw Error(ErrorCode::IoFailure, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
    }
  }

  void stop() {
    if (server_.is_running()) server_.stop();
    if (listener_.joinable()) listener_.join();
  }

  void install(httplib::Server& s) {
    s.set_payload_max_length(64u << 20);
    s.Get("/api/v1/objects", [this](const httplib::Request& q, httplib::Response& r) {
      respond(r, [&] { return list_objects(q.params); });
    });
    s.Post("/api/v1/catalog", [this](const httplib::Request& q, httplib::Response& r) {
      respond(r, [&] { return load_catalog(q.body); });
    });
    s.Post("/api/v1/screenings", [this](const httplib::Request& q, httplib::Response& r) {
      respond(r, [&] { return submit(q.body); });
    });
    s.Get(R"(/api/v1/screenings/([^/]+))", [this](const httplib::Request& q, httplib::Response& r) {
      respond(r, [&] { return get_job(q.matches[1]); });
    });
    s.Post("/api/v1/whatif", [this](const httplib::Request& q, httplib::Response& r) {
      respond(r, [&] { return whatif(q.body); });
    });
    if (std::filesystem::is_directory(config_.static_dir)) s.set_mount_point("/", config_.static_dir.string());
    s.set_error_handler([](const httplib::Request& q, httplib::Response& r) {
      if (!r.body.empty()) return;
      if (r.status == 404) {
        r.set_content(dump_json(error_envelope("NotFound", "no route for " + q.method + " " + q.path)),
                      "application/json");
      }
    });
  }

  // Routes, callable without a socket.

  Reply list_objects(const httplib::Params& params) const {
    const auto cat = require_catalog();
    auto get = [&](const char* key) -> std::optional<double> {
      if (params.find(key) == params.end()) return std::nullopt;
      return service_detail::query_number(params, key, std::nullopt);
    };
    const auto filtered = filter_catalog(*cat, service_detail::filter_from(get));
    const double page = service_detail::query_number(params, "page", 1.0);
    const double size = service_detail::query_number(params, "page_size", static_cast<double>(config_.page_size));
    if (!(page >= 1.0 && page == std::floor(page))) throw Error(ErrorCode::InvalidArgument, "page must be >= 1");
    if (!(size >= 1.0 && size <= 1000.0 && size == std::floor(size))) {
      throw Error(ErrorCode::InvalidArgument, "page_size must be in [1, 1000]");
    }
    const auto first = static_cast<std::size_t>(page - 1.0) * static_cast<std::size_t>(size);
    Json items = Json::array();
    std::size_t i = 0;
    for (const auto& [id, r] : filtered.records) {
      if (i >= first && items.size() < static_cast<std::size_t>(size)) items.push_back(service_detail::object_summary(r));
      ++i;
    }
    return {200, Json{{"total", filtered.records.size()},
                      {"page", static_cast<std::uint64_t>(page)},
                      {"page_size", static_cast<std::uint64_t>(size)},
                      {"items", std::move(items)}}};
  }

  Reply load_catalog(const std::string& body) {
    const Json req = parse_json(body);
    std::string raw;
    CatalogLoad load;
    const Instant now = std::chrono::floor<Nanoseconds>(std::chrono::system_clock::now());
    if (const auto* path = json_get::find(req, "path")) {
      raw = read_text_file(json_get::string(*path, "path"));
      load = parse_catalog_text(raw, CatalogSource::file, now);
    } else if (const auto* text = json_get::find(req, "text")) {
      raw = json_get::string(*text, "text");
      load = parse_catalog_text(raw, CatalogSource::file, now);
    } else if (const auto* query = json_get::find(req, "spacetrack_query")) {
      const auto creds = credentials_from_env();
      if (!creds) throw Error(ErrorCode::AuthFailure, "ORCO_ST_USER / ORCO_ST_PASS are not set");
      SpaceTrackClient client(config_.space_track, *creds);
      const std::string q = query->is_string() ? query->get<std::string>() : config_.space_track.default_query;
      auto fetched = fetch_catalog(client, q, config_.cache_root, now);
      raw = read_text_file(fetched.cache_file);
      load = std::move(fetched.load);
    } else {
      throw Error(ErrorCode::InvalidArgument, "expected one of 'path', 'text', 'spacetrack_query'");
    }
    {
      std::lock_guard lock(catalog_mutex_);
      store_.save_catalog(raw, load);
      catalog_ = std::make_shared<const CatalogSnapshot>(load.snapshot);
    }
    return {200, service_detail::load_summary(load)};
  }

  Reply submit(const std::string& body) {
    const auto cat = require_catalog();
    const Json req = parse_json(body);
    ScreeningRequest request;
    apply_config_json(config_.screening_defaults, request);

    const auto* window = json_get::find(req, "window");
    if (!window) throw Error(ErrorCode::InvalidArgument, "'window' is required");
    const auto* start = json_get::find(*window, "start");
    const auto* stop = json_get::find(*window, "stop");
    if (!start || !stop) throw Error(ErrorCode::InvalidArgument, "'window' needs 'start' and 'stop'");
    request.screening.window_start = json_get::time(*start, "start");
    request.screening.window_stop = json_get::time(*stop, "stop");
    if (const auto* cfg = json_get::find(req, "config")) apply_config_json(*cfg, request);

    const auto* ids = json_get::find(req, "ids");
    const auto* filter = json_get::find(req, "filter");
    if ((ids == nullptr) == (filter == nullptr)) {
      throw Error(ErrorCode::InvalidArgument, "exactly one of 'ids' or 'filter' is required");
    }
    if (ids) {
      if (!ids->is_array()) throw Error(ErrorCode::InvalidArgument, "'ids' must be an array");
      for (const auto& v : *ids) {
        const auto id = json_get::count(v, "ids");
        if (!cat->records.count(static_cast<int>(id))) {
          throw Error(ErrorCode::InvalidArgument, "object " + std::to_string(id) + " is not in the catalog");
        }
        request.ids.push_back(static_cast<int>(id));
      }
    } else {
      for (const auto& [key, v] : filter->items()) {
        if (std::find(std::begin(service_detail::kFilterKeys), std::end(service_detail::kFilterKeys), key) ==
            std::end(service_detail::kFilterKeys)) {
          throw Error(ErrorCode::InvalidArgument, "unknown filter key '" + key + "'");
        }
      }
      auto get = [&](const char* key) -> std::optional<double> {
        const auto* v = json_get::find(*filter, key);
        return v ? std::optional(json_get::number(*v, key)) : std::nullopt;
      };
      for (const auto& [id, r] : filter_catalog(*cat, service_detail::filter_from(get)).records) request.ids.push_back(id);
    }
    std::sort(request.ids.begin(), request.ids.end());
    request.ids.erase(std::unique(request.ids.begin(), request.ids.end()), request.ids.end());
    if (request.ids.size() > config_.max_objects_per_job) {
      throw HttpError(413, "TooManyObjects",
                      std::to_string(request.ids.size()) + " objects exceed the per-job limit of " +
                          std::to_string(config_.max_objects_per_job));
    }
    request.validate();

    auto job = std::make_shared<ScreeningJob>();
    job->job_id = service_detail::new_job_id();
    job->request = std::move(request);
    job->catalog = cat;
    {
      std::lock_guard lock(mutex_);
      if (queue_.size() >= config_.queue_cap) {
        throw HttpError(429, "QueueFull", "job queue is full (" + std::to_string(config_.queue_cap) + ")");
      }
      jobs_[job->job_id] = job;
      store_.save_job(*job);
      queue_.push_back(job);
    }
    queue_cv_.notify_one();
    return {202, Json{{"job_id", job->job_id}}};
  }

  Reply get_job(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) throw Error(ErrorCode::NotFound, "no screening job '" + id + "'");
    return {200, it->second->to_json()};
  }

  /// Recomputes pc for a stored event or a raw (miss, covariance) geometry.
  /// Overrides: sigma, sigma_velocity, scheme, seed re-propagate the event's
  /// uncertainty; sigma_scale multiplies every sigma (covariance by k^2);
  /// hbr, method, mc_samples apply to the probability step.
  Reply whatif(const std::string& body) const {
    const Json req = parse_json(body);
    const Json overrides = json_get::find(req, "overrides") ? req.at("overrides") : Json::object();
    if (!overrides.is_object()) throw Error(ErrorCode::InvalidArgument, "'overrides' must be an object");

    Vector2 miss;
    Matrix2 cov;
    ScreeningRequest base;
    if (const auto* job_id = json_get::find(req, "job_id")) {
      const auto* index = json_get::find(req, "event_index");
      if (!index) throw Error(ErrorCode::InvalidArgument, "'event_index' is required with 'job_id'");
      const auto job = snapshot_job(json_get::string(*job_id, "job_id"));
      const auto k = json_get::count(*index, "event_index");
      if (job.status != JobStatus::done) {
        throw HttpError(409, "JobNotDone", "job " + job.job_id + " is " + std::string(to_string(job.status)));
      }
      const Json& events = job.result->at("events");
      if (k >= events.size()) {
        throw Error(ErrorCode::NotFound, "job " + job.job_id + " has no event " + std::to_string(k));
      }
      base = job.request;
      const bool repropagate = apply_uncertainty_overrides(overrides, base);
      const Json& ev = events[k];
      if (!repropagate && ev.at("encounter_plane").is_object()) {
        // Reuse the stored plane so an empty override reproduces the job's numbers exactly.
        const Json& plane = ev.at("encounter_plane");
        const Json& mk = plane.at("miss_km");
        miss = Vector2(mk[0].get<double>(), mk[1].get<double>());
        cov = service_detail::covariance_2d_from(plane.at("covariance_km2"));
      } else {
        const TleRecord& a = job.event_objects.at(ev.at("id_a").get<int>());
        const TleRecord& b = job.event_objects.at(ev.at("id_b").get<int>());
        const auto event = conjunction_detail::make_event(
            conjunction_detail::PairPropagator{Propagator(a, base.propagator), Propagator(b, base.propagator)},
            parse_iso8601(ev.at("tca").get<std::string>()));
        auto cov_at = [&](const TleRecord& r) {
          const auto d0 = initial_distribution(r, base.uncertainty, base.propagator);
          return propagate_uncertainty(base.scheme, d0, r, event.tca, base.uncertainty, base.propagator).covariance;
        };
        const auto plane = build_encounter_plane(event, cov_at(a), cov_at(b));
        miss = plane.miss_vector_2d;
        cov = plane.covariance_2d;
      }
    } else {
      const auto* m = json_get::find(req, "miss_km");
      const auto* c = json_get::find(req, "covariance_km2");
      if (!m || !c) throw Error(ErrorCode::InvalidArgument, "need 'job_id'+'event_index' or 'miss_km'+'covariance_km2'");
      if (!m->is_array() || m->size() != 2) throw Error(ErrorCode::InvalidArgument, "'miss_km' must be [x, y]");
      miss = Vector2(json_get::number((*m)[0], "miss_km"), json_get::number((*m)[1], "miss_km"));
      cov = service_detail::covariance_2d_from(*c);
      apply_config_json(config_.screening_defaults, base);
      apply_uncertainty_overrides(overrides, base);
    }
    if (const auto* k = json_get::find(overrides, "sigma_scale")) {
      const double s = json_get::number(*k, "sigma_scale");
      if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_scale must be positive");
      cov *= s * s;
    }
    Json probability = Json::object();
    for (const char* key : {"hbr", "method", "mc_samples"}) {
      if (const auto* v = json_get::find(overrides, key)) probability[key] = *v;
    }
    apply_config_json(probability, base);

    Json results = Json::array();
    for (const auto method : base.methods) {
      ProbabilityRequest p;
      p.miss_km = miss;
      p.covariance_km2 = cov;
      p.hard_body_radius_m = base.screening.hard_body_radius_m;
      p.method = method;
      p.mc_samples = base.mc_samples;
      p.rng_seed = base.uncertainty.rng_seed;
      results.push_back(to_json(compute_pc(p)));
    }
    const auto e = ellipse_params(cov);
    return {200, Json{{"miss_km", to_json(miss)},
                      {"covariance_km2", to_json(cov)},
                      {"ellipse", Json{{"eigenvalues_km2", to_json(e.eigenvalues_km2)}, {"angle_deg", e.angle_deg}}},
                      {"hard_body_radius_m", base.screening.hard_body_radius_m},
                      {"results", std::move(results)}}};
  }

  /// Blocks until no job is queued or running. For tests and batch use.
  void wait_idle() const {
    std::unique_lock lock(mutex_);
    idle_cv_.wait(lock, [this] { return queue_.empty() && busy_ == 0; });
  }

 private:
  /// Returns whether any uncertainty setting was overridden.
  static bool apply_uncertainty_overrides(const Json& overrides, ScreeningRequest& r) {
    Json u = Json::object();
    for (const auto& [key, v] : overrides.items()) {
      if (key == "sigma" || key == "sigma_velocity" || key == "scheme" || key == "seed" || key == "sample_count" ||
          key == "aespt_threshold") {
        u[key] = v;
      } else if (key != "sigma_scale" && key != "hbr" && key != "method" && key != "mc_samples") {
        throw Error(ErrorCode::InvalidArgument, "unknown override '" + key + "'");
      }
    }
    apply_config_json(u, r);
    r.uncertainty.validate();
    return !u.empty();
  }

  std::shared_ptr<const CatalogSnapshot> require_catalog() const {
    std::shared_ptr<const CatalogSnapshot> cat;
    {
      std::lock_guard lock(catalog_mutex_);
      cat = catalog_;
    }
    if (!cat) throw HttpError(409, "NoCatalogLoaded", "no catalog loaded; POST /api/v1/catalog first");
    return cat;
  }

  ScreeningJob snapshot_job(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) throw Error(ErrorCode::NotFound, "no screening job '" + id + "'");
    return *it->second;
  }

  void restore_job(const Json& doc) {
    auto job = std::make_shared<ScreeningJob>();
    job->job_id = doc.at("job_id").get<std::string>();
    job->status = parse_job_status(doc.at("status").get<std::string>());
    job->progress = doc.at("progress").get<double>();
    const Json& req = doc.at("request");
    job->request.ids = req.at("ids").get<std::vector<int>>();
    job->request.screening.window_start = parse_iso8601(req.at("window").at("start").get<std::string>());
    job->request.screening.window_stop = parse_iso8601(req.at("window").at("stop").get<std::string>());
    apply_config_json(req.at("config"), job->request);
    if (!doc.at("result").is_null()) job->result = doc.at("result");
    if (!doc.at("error").is_null()) job->error = doc.at("error");
    for (const auto& [id, o] : doc.at("objects").items()) {
      const auto& name = o.at("name");
      const auto rec = parse_tle(name.is_null() ? std::nullopt : std::optional<std::string_view>(name.get_ref<const std::string&>()),
                                 o.at("line1").get<std::string>(), o.at("line2").get<std::string>());
      job->event_objects.emplace(rec.norad_id, rec);
    }
    if (job->status == JobStatus::running) {
      job->status = JobStatus::failed;
      job->error = error_envelope("Interrupted", "service restarted while the job was running")["error"];
      store_.save_job(*job);
    } else if (job->status == JobStatus::queued) {
      job->catalog = catalog_;
      if (!job->catalog) {
        job->status = JobStatus::failed;
        job->error = error_envelope("NoCatalogLoaded", "no catalog available after restart")["error"];
        store_.save_job(*job);
      } else {
        queue_.push_back(job);
      }
    }
    jobs_[job->job_id] = job;
  }

  void worker_loop() {
    for (;;) {
      std::shared_ptr<ScreeningJob> job;
      ScreeningRequest request;
      {
        std::unique_lock lock(mutex_);
        queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (stopping_) return;
        job = queue_.front();
        queue_.pop_front();
        ++busy_;
        job->status = JobStatus::running;
        request = job->request;
        store_.save_job(*job);
      }
      std::optional<Json> result;
      std::optional<Json> error;
      std::map<int, TleRecord> objects;
      try {
        const auto report = run_screening(*job->catalog, request, [&](double f) {
          std::lock_guard lock(mutex_);
          job->progress = f;
        });
        for (const auto& e : report.events) {
          objects.emplace(e.event.id_a, job->catalog->records.at(e.event.id_a));
          objects.emplace(e.event.id_b, job->catalog->records.at(e.event.id_b));
        }
        result = to_json(report);
      } catch (const Error& e) {
        error = error_envelope(e)["error"];
      } catch (const std::exception& e) {
        error = error_envelope("Internal", e.what())["error"];
      }
      {
        std::lock_guard lock(mutex_);
        job->status = result ? JobStatus::done : JobStatus::failed;
        if (result) job->progress = 1.0;
        job->result = std::move(result);
        job->error = std::move(error);
        job->event_objects = std::move(objects);
        job->catalog.reset();
        try {
          store_.save_job(*job);
        } catch (const Error&) {
          // The in-memory state stays authoritative; a later restart loses this job.
        }
        --busy_;
      }
      idle_cv_.notify_all();
    }
  }

  template <typename Fn>
  static void respond(httplib::Response& res, Fn&& fn) {
    Reply reply;
    try {
      reply = fn();
    } catch (const HttpError& e) {
      reply = {e.status, error_envelope(e.code, e.what()), std::nullopt};
    } catch (const Error& e) {
      reply = {http_status(e.code()), error_envelope(e), e.retry_after_s()};
    } catch (const std::exception& e) {
      reply = {500, error_envelope("Internal", e.what()), std::nullopt};
    }
    std::string body;
    try {
      body = dump_json(reply.body);
    } catch (const Error& e) {
      reply.status = 500;
      body = dump_json(error_envelope(e));
    }
    res.status = reply.status;
    if (reply.retry_after_s) res.set_header("Retry-After", std::to_string(static_cast<int>(std::ceil(*reply.retry_after_s))));
    res.set_content(body, "application/json");
  }

  ServiceConfig config_;
  mutable Store store_;
  mutable std::mutex catalog_mutex_;
  std::shared_ptr<const CatalogSnapshot> catalog_;

  mutable std::mutex mutex_;
  std::condition_variable queue_cv_;
  mutable std::condition_variable idle_cv_;
  std::map<std::string, std::shared_ptr<ScreeningJob>> jobs_;
  std::deque<std::shared_ptr<ScreeningJob>> queue_;
  std::size_t busy_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> workers_;

  httplib::Server server_;
  std::thread listener_;
};

}  // namespace orco

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

// Optional space-track.org client. Requests are serialized (one in flight,
// minimum spacing between requests) and every fetched catalog is written
// verbatim to <cache_root>/<YYYY-MM-DD>/<query-hash>.tle before parsing.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "orco/catalog.hpp"
#include "orco/error.hpp"
#include "orco/time.hpp"

// After Eigen: <resolv.h> (via httplib) defines an _res macro.
#include <httplib.h>

namespace orco {

struct SpaceTrackCredentials {
  std::string user;
  std::string password;
};

/// Reads ORCO_ST_USER / ORCO_ST_PASS. Absent credentials mean file-only operation.
inline std::optional<SpaceTrackCredentials> credentials_from_env() {
  const char* user = std::getenv("ORCO_ST_USER");
  const char* pass = std::getenv("ORCO_ST_PASS");
  if (user == nullptr || pass == nullptr || *user == '\0') return std::nullopt;
  return SpaceTrackCredentials{user, pass};
}

struct SpaceTrackConfig {
  std::string base_url = "https://www.space-track.org";
  std::string login_path = "/ajaxauth/login";
  /// Default query: current GP elsets for objects with epochs in the last 30 days, 3le format.
  std::string default_query = "/basicspacedata/query/class/gp/EPOCH/%3Enow-30/orderby/NORAD_CAT_ID/format/3le";
  double min_request_spacing_s = 3.0;
  double timeout_s = 120.0;
};

/// 64-bit FNV-1a, rendered as 16 hex digits. Stable across platforms.
inline std::string query_hash(std::string_view query) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : query) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::filesystem::path cache_path(const std::filesystem::path& cache_root, Instant day, std::string_view query) {
  return cache_root / to_iso_date(day) / (query_hash(query) + ".tle");
}

class SpaceTrackClient {
 public:
  SpaceTrackClient(SpaceTrackConfig config, SpaceTrackCredentials credentials)
      : config_(std::move(config)), credentials_(std::move(credentials)) {}

  /// Logs in (once per client) and returns the raw response body of `query`.
  std::string fetch(const std::string& query) {
    std::lock_guard lock(mutex_);
    httplib::Client client(config_.base_url);
    const auto timeout = std::chrono::milliseconds(static_cast<long>(config_.timeout_s * 1000.0));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_follow_location(true);
    if (!cookie_) login(client);

    pace();
    httplib::Headers headers{{"Cookie", *cookie_}};
    auto res = client.Get(query, headers);
    if (!res) throw Error(ErrorCode::IoFailure, "space-track query failed: " + httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403) {
      cookie_.reset();
      throw Error(ErrorCode::AuthFailure, "space-track rejected the session (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429) throw rate_limited(*res);
    if (res->status != 200) {
      throw Error(ErrorCode::IoFailure, "space-track query returned HTTP " + std::to_string(res->status));
    }
    return res->body;
  }

  [[nodiscard]] const SpaceTrackConfig& config() const { return config_; }

 private:
  void login(httplib::Client& client) {
    pace();
    httplib::Params form{{"identity", credentials_.user}, {"password", credentials_.password}};
    auto res = client.Post(config_.login_path, form);
    if (!res) throw Error(ErrorCode::IoFailure, "space-track login failed: " + httplib::to_string(res.error()));
    if (res->status == 429) throw rate_limited(*res);
    if (res->status != 200 || res->body.find("\"Login\":\"Failed\"") != std::string::npos) {
      throw Error(ErrorCode::AuthFailure, "space-track login rejected (HTTP " + std::to_string(res->status) + ")");
    }
    std::string cookie;
    for (const auto& [key, value] : res->headers) {
      if (key == "Set-Cookie" || key == "set-cookie") {
        if (!cookie.empty()) cookie += "; ";
        cookie += value.substr(0, value.find(';'));
      }
    }
    if (cookie.empty()) throw Error(ErrorCode::AuthFailure, "space-track login returned no session cookie");
    cookie_ = cookie;
  }

  static Error rate_limited(const httplib::Response& res) {
    std::optional<double> retry;
    if (res.has_header("Retry-After")) {
      try {
        retry = std::stod(res.get_header_value("Retry-After"));
      } catch (const std::exception&) {
      }
    }
    return Error(ErrorCode::RateLimited, "space-track rate limit hit", retry);
  }

  void pace() {
    const auto now = std::chrono::steady_clock::now();
    const auto spacing = std::chrono::duration<double>(config_.min_request_spacing_s);
    if (last_request_ && now - *last_request_ < spacing) {
      std::this_thread::sleep_for(spacing - (now - *last_request_));
    }
    last_request_ = std::chrono::steady_clock::now();
  }

  SpaceTrackConfig config_;
  SpaceTrackCredentials credentials_;
  std::mutex mutex_;
  std::optional<std::string> cookie_;
  std::optional<std::chrono::steady_clock::time_point> last_request_;
};

struct CachedFetch {
  CatalogLoad load;
  std::filesystem::path cache_file;
  bool from_cache = false;
};

/// Returns today's cached copy of `query` if present, otherwise fetches, persists
/// the raw text, then parses it.
inline CachedFetch fetch_catalog(SpaceTrackClient& client, const std::string& query,
                                 const std::filesystem::path& cache_root, Instant now, bool force_refresh = false) {
  CachedFetch out;
  out.cache_file = cache_path(cache_root, now, query);
  std::string text;
  if (!force_refresh && std::filesystem::is_regular_file(out.cache_file)) {
    text = read_text_file(out.cache_file);
    out.from_cache = true;
  } else {
    text = client.fetch(query);
    std::error_code ec;
    std::filesystem::create_directories(out.cache_file.parent_path(), ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create cache directory: " + ec.message());
    std::ofstream file(out.cache_file, std::ios::binary | std::ios::trunc);
    file << text;
    if (!file) throw Error(ErrorCode::IoFailure, "cannot write cache file '" + out.cache_file.string() + "'");
  }
  out.load = parse_catalog_text(text, CatalogSource::space_track, now);
  return out;
}

}  // namespace orco

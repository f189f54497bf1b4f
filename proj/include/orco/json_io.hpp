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

// JSON documents are built and parsed with nlohmann::ordered_json; this writer
// replaces dump() so output bytes are canonical: insertion-ordered keys, floats
// in shortest round-trip scientific form, and no NaN/Inf ever written.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

#include <json.hpp>

#include "orco/error.hpp"
#include "orco/linalg.hpp"
#include "orco/sgp4.hpp"
#include "orco/time.hpp"

namespace orco {

using Json = nlohmann::ordered_json;

namespace json_detail {

inline void write_string(std::string& out, std::string_view s) {
  out += '"';
  for (const char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  out += '"';
}

inline void write_double(std::string& out, double v, const std::string& path) {
  if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite number at " + path);
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
  out.append(buf, res.ptr);
}

inline void newline(std::string& out, int indent, int depth) {
  if (indent < 0) return;
  out += '\n';
  out.append(static_cast<std::size_t>(indent * depth), ' ');
}

inline void write(std::string& out, const Json& j, int indent, int depth, const std::string& path) {
  switch (j.type()) {
    case Json::value_t::null: out += "null"; break;
    case Json::value_t::boolean: out += j.get<bool>() ? "true" : "false"; break;
    case Json::value_t::number_integer: out += std::to_string(j.get<std::int64_t>()); break;
    case Json::value_t::number_unsigned: out += std::to_string(j.get<std::uint64_t>()); break;
    case Json::value_t::number_float: write_double(out, j.get<double>(), path); break;
    case Json::value_t::string: write_string(out, j.get_ref<const std::string&>()); break;
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::none_of(j.begin(), j.end(), [](const Json& e) { return e.is_structured(); });
      out += '[';
      std::size_t i = 0;
      for (const auto& e : j) {
        if (i > 0) out += flat && indent >= 0 ? ", " : ",";
        if (!flat) newline(out, indent, depth + 1);
        write(out, e, indent, depth + 1, path + "[" + std::to_string(i) + "]");
        ++i;
      }
      if (!flat) newline(out, indent, depth);
      out += ']';
      break;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ',';
        first = false;
        newline(out, indent, depth + 1);
        write_string(out, key);
        out += indent >= 0 ? ": " : ":";
        write(out, value, indent, depth + 1, path + "." + key);
      }
      newline(out, indent, depth);
      out += '}';
      break;
    }
    case Json::value_t::binary:
    case Json::value_t::discarded:
      throw Error(ErrorCode::InvalidArgument, "unserializable value at " + path);
  }
}

}  // namespace json_detail

/// indent < 0 gives the compact form.
inline std::string dump_json(const Json& j, int indent = 2) {
  std::string out;
  json_detail::write(out, j, indent, 0, "$");
  if (indent >= 0) out += '\n';
  return out;
}

inline Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed JSON: ") + e.what());
  }
}

inline Json error_envelope(std::string_view code, std::string_view message) {
  return Json{{"error", Json{{"code", code}, {"message", message}}}};
}

inline Json error_envelope(const Error& e) { return error_envelope(to_string(e.code()), e.detail()); }

inline Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }
inline Json to_json(const Vector2& v) { return Json::array({v.x(), v.y()}); }
inline Json to_json(const Matrix2& m) {
  return Json::array({Json::array({m(0, 0), m(0, 1)}), Json::array({m(1, 0), m(1, 1)})});
}

/// Typed field access that reports the offending key as InvalidArgument.
namespace json_get {

inline const Json* find(const Json& obj, std::string_view key) {
  if (!obj.is_object()) throw Error(ErrorCode::InvalidArgument, "expected a JSON object");
  const auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

inline double number(const Json& v, std::string_view key) {
  if (!v.is_number()) throw Error(ErrorCode::InvalidArgument, "'" + std::string(key) + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw Error(ErrorCode::InvalidArgument, "'" + std::string(key) + "' must be finite");
  return d;
}

inline std::uint64_t count(const Json& v, std::string_view key) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw Error(ErrorCode::InvalidArgument, "'" + std::string(key) + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

inline const std::string& string(const Json& v, std::string_view key) {
  if (!v.is_string()) throw Error(ErrorCode::InvalidArgument, "'" + std::string(key) + "' must be a string");
  return v.get_ref<const std::string&>();
}

inline Instant time(const Json& v, std::string_view key) { return parse_iso8601(string(v, key)); }

inline Vec3 vec3(const Json& v, std::string_view key) {
  if (!v.is_array() || v.size() != 3) {
    throw Error(ErrorCode::InvalidArgument, "'" + std::string(key) + "' must be an array of 3 numbers");
  }
  return {number(v[0], key), number(v[1], key), number(v[2], key)};
}

}  // namespace json_get

}  // namespace orco

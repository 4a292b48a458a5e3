/*
 * Copyright 2026 The stgp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Text forms of a temporal kernel spec.
//
// key=value, one per line ('#' starts a comment):
//   family = te2exp
//   params.delta_t = 1.5
//   fixed.sigma_t = 5000
//
// or a single JSON object:
//   {"family": "te2exp", "params": {"delta_t": 1.5}, "fixed": {"sigma_t": 5000}}

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "stgp/error.hpp"
#include "stgp/kernels.hpp"

namespace stgp {

inline nlohmann::json to_json(const TemporalKernelSpec& s) {
  return {{"family", std::string(to_string(s.family))}, {"params", s.params}, {"fixed", s.fixed}};
}

namespace detail {

inline std::map<std::string, double> number_map(const nlohmann::json& j, const std::string& what) {
  if (!j.is_object()) throw ConfigError("kernel spec: '" + what + "' must be an object");
  std::map<std::string, double> out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw ConfigError("kernel spec: " + what + "." + k + " must be a number");
    out[k] = v.get<double>();
  }
  return out;
}

inline std::string strip(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1));
}

}  // namespace detail

inline TemporalKernelSpec kernel_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family") || !j["family"].is_string())
    throw ConfigError("kernel spec: expected an object with a string 'family'");
  for (const auto& [k, v] : j.items())
    if (k != "family" && k != "params" && k != "fixed") throw ConfigError("kernel spec: unknown key '" + k + "'");
  std::map<std::string, double> params, fixed;
  if (j.contains("params")) params = detail::number_map(j["params"], "params");
  if (j.contains("fixed")) fixed = detail::number_map(j["fixed"], "fixed");
  TemporalKernelSpec s(temporal_family_from_string(j["family"].get<std::string>()), params, fixed);
  const auto& names = free_parameter_names(s.family);
  for (const auto& [k, v] : s.params)
    if (std::find(names.begin(), names.end(), k) == names.end())
      throw ConfigError("kernel spec: '" + k + "' is not a parameter of " + std::string(to_string(s.family)));
  return s;
}

/// Parses either form; the JSON form is detected by a leading '{'.
inline TemporalKernelSpec parse_kernel_spec(std::string_view text) {
  const std::string body = detail::strip(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("kernel spec: ") + e.what());
    }
    return kernel_spec_from_json(j);
  }
  nlohmann::json j = nlohmann::json::object();
  std::istringstream in{std::string(text)};
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = detail::strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("kernel spec line " + std::to_string(no) + ": expected key = value");
    const std::string key = detail::strip(line.substr(0, eq)), val = detail::strip(line.substr(eq + 1));
    if (key == "family") {
      j["family"] = val;
      continue;
    }
    const auto dot = key.find('.');
    const std::string group = key.substr(0, dot);
    if (dot == std::string::npos || (group != "params" && group != "fixed"))
      throw ConfigError("kernel spec line " + std::to_string(no) + ": unknown key '" + key + "'");
    double v = 0.0;
    std::size_t used = 0;
    try {
      v = std::stod(val, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != val.size())
      throw ConfigError("kernel spec line " + std::to_string(no) + ": '" + val + "' is not a number");
    j[group][key.substr(dot + 1)] = v;
  }
  return kernel_spec_from_json(j);
}

inline TemporalKernelSpec load_kernel_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open kernel spec '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_kernel_spec(ss.str());
}

/// key=value form with 17 significant digits.
inline std::string format_kernel_spec(const TemporalKernelSpec& s) {
  std::string out = "family = " + std::string(to_string(s.family)) + "\n";
  char buf[64];
  for (const auto& [k, v] : s.params) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += "params." + k + " = " + buf + "\n";
  }
  for (const auto& [k, v] : s.fixed) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += "fixed." + k + " = " + buf + "\n";
  }
  return out;
}

}  // namespace stgp

// Copyright 2026 The ftbo Authors. All Rights Reserved.
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
// =============================================================================

// Line-delimited ask/tell protocol.
//
//   request                                             response
//   {"op":"suggest"}                                    {"action":"start"|"resume","config_id":N,"x":[..],"epochs":K}
//   {"op":"observe","config_id":N,"epoch":E,"loss":L}   {"status":"ok"}
//   anything that fails                                 {"status":"error","message":"..."}
//
// Numbers in responses are printed with 17 significant digits.

#pragma once

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ftbo/controller.hpp"

namespace ftbo {

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string action_response(const Action& a) {
  std::string out = "{\"action\":\"";
  out += to_string(a.kind);
  out += "\",\"config_id\":" + std::to_string(a.config_id) + ",\"x\":[";
  for (Eigen::Index d = 0; d < a.x.size(); ++d) {
    if (d > 0) out += ',';
    out += format_number(a.x(d));
  }
  out += "],\"epochs\":" + std::to_string(a.epochs) + "}";
  return out;
}

inline std::string ok_response() { return R"({"status":"ok"})"; }

inline std::string error_response(const std::string& message) {
  return R"({"status":"error","message":)" + nlohmann::json(message).dump() + "}";
}

/// Bounds file: {"dimensions": [{"name": "lr", "lower": -6, "upper": -1}, ...]}
inline Bounds parse_bounds(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    std::vector<Dimension> dims;
    for (const auto& d : doc.at("dimensions")) {
      dims.push_back({d.at("name").get<std::string>(), d.at("lower").get<double>(), d.at("upper").get<double>()});
    }
    return Bounds(std::move(dims));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid bounds file: ") + e.what());
  }
}

/// One ask/tell session. The state is persisted (when a path is given)
/// before a response is produced, and a failed request leaves it untouched.
class Session {
 public:
  explicit Session(OptState state, std::optional<std::filesystem::path> state_path = std::nullopt)
      : state_(std::move(state)), path_(std::move(state_path)) {}

  const OptState& state() const { return state_; }

  std::string handle(const std::string& line) {
    try {
      const auto req = nlohmann::json::parse(line);
      if (!req.is_object()) return error_response("request must be an object");
      const auto op = req.at("op").get<std::string>();
      OptState next = state_;
      std::string reply;
      if (op == "suggest") {
        reply = action_response(suggest(next));
      } else if (op == "observe") {
        const auto& loss = req.at("loss");
        if (!loss.is_number()) return error_response("loss must be a number");
        observe(next, req.at("config_id").get<ConfigId>(), req.at("epoch").get<Eigen::Index>(), loss.get<double>());
        reply = ok_response();
      } else {
        return error_response("unknown op '" + op + "'");
      }
      if (path_) write_state_file(next, *path_);
      state_ = std::move(next);
      return reply;
    } catch (const std::exception& e) {
      return error_response(e.what());
    }
  }

 private:
  OptState state_;
  std::optional<std::filesystem::path> path_;
};

}  // namespace ftbo

/* Copyright 2026 The tacmap Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <set>
#include <string>

#include "json.hpp"
#include "tacmap/error.hpp"

namespace tacmap {

// Reads optional fields from one JSON object and rejects keys nobody asked
// for. Usage: construct, Get() each known field, then Finish().
class JsonFields {
 public:
  JsonFields(const nlohmann::json& object, std::string section) : object_(object), section_(std::move(section)) {
    if (!object_.is_object()) throw ConfigError("config section '" + section_ + "' must be a JSON object");
  }

  template <typename T>
  void Get(const std::string& key, T& out) {
    seen_.insert(key);
    auto it = object_.find(key);
    if (it == object_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config field '" + section_ + "." + key + "' has the wrong type: " + e.what());
    }
  }

  void Finish() const {
    for (auto it = object_.begin(); it != object_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + section_ + "." + it.key() + "'");
    }
  }

 private:
  const nlohmann::json& object_;
  std::string section_;
  std::set<std::string> seen_;
};

}  // namespace tacmap

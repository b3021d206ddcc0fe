// Copyright (c) 2026 The fsbsed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FSBSED_SRC_CONFIG_JSON_H_
#define FSBSED_SRC_CONFIG_JSON_H_

#include <string>

#include "fsbsed/config.h"
#include "json.hpp"

namespace fsbsed::experiment {

nlohmann::json SettingsToJsonObject(const Settings& s);
void ApplyJson(Settings& s, const nlohmann::json& j, const std::string& source);

}  // namespace fsbsed::experiment

#endif  // FSBSED_SRC_CONFIG_JSON_H_

// Copyright 2026 The GenHMM Authors. All Rights Reserved.
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

#include <functional>
#include <string_view>

namespace genhmm {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3 };

using LogSink = std::function<void(LogLevel, std::string_view)>;

// Installs a process-wide sink. Passing an empty function silences logging
// (the default).
void set_log_sink(LogSink sink);

void log_message(LogLevel level, std::string_view message);

inline void log_warning(std::string_view message) {
  log_message(LogLevel::kWarning, message);
}
inline void log_info(std::string_view message) {
  log_message(LogLevel::kInfo, message);
}

}  // namespace genhmm

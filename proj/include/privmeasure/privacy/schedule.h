// Copyright 2026 The PrivMeasure Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRIVMEASURE_PRIVACY_SCHEDULE_H_
#define PRIVMEASURE_PRIVACY_SCHEDULE_H_

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"

namespace privmeasure::privacy {

enum class Protocol : uint8_t { kPrivCount = 0, kPsc };

std::string_view ProtocolName(Protocol protocol);
absl::StatusOr<Protocol> ParseProtocol(std::string_view name);

// A measurement round over the half-open simulated interval [start, end).
struct ScheduledRound {
  std::string round_id;
  Protocol protocol = Protocol::kPrivCount;
  std::set<std::string> statistics;
  int64_t start = 0;
  int64_t end = 0;

  bool operator==(const ScheduledRound&) const = default;
};

inline constexpr char kParallelProtocols[] = "parallel protocols";
inline constexpr char kGapTooShort[] = "gap < 24h";
inline constexpr char kInvalidInterval[] = "invalid interval";

struct ScheduleViolation {
  std::string kind;
  // Indices into the schedule; `second` equals `first` for single-round issues.
  size_t first = 0;
  size_t second = 0;
  std::string detail;
};

// Rounds of different protocols may never overlap, and rounds measuring
// different statistic sets must be at least `min_gap` apart.
std::vector<ScheduleViolation> ValidateSchedule(const std::vector<ScheduledRound>& schedule,
                                                int64_t min_gap = 86400);

nlohmann::ordered_json ScheduleToJson(const std::vector<ScheduledRound>& schedule);
absl::StatusOr<std::vector<ScheduledRound>> ScheduleFromJson(const nlohmann::json& j);
nlohmann::ordered_json ViolationsToJson(const std::vector<ScheduleViolation>& violations);

}  // namespace privmeasure::privacy

#endif  // PRIVMEASURE_PRIVACY_SCHEDULE_H_

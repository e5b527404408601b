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

#include "privmeasure/privacy/schedule.h"

#include <algorithm>

#include "absl/strings/str_cat.h"

namespace privmeasure::privacy {

std::string_view ProtocolName(Protocol protocol) {
  return protocol == Protocol::kPsc ? "psc" : "privcount";
}

absl::StatusOr<Protocol> ParseProtocol(std::string_view name) {
  if (name == "privcount") return Protocol::kPrivCount;
  if (name == "psc") return Protocol::kPsc;
  return absl::InvalidArgumentError(absl::StrCat("unknown protocol: ", std::string(name)));
}

std::vector<ScheduleViolation> ValidateSchedule(const std::vector<ScheduledRound>& schedule,
                                                int64_t min_gap) {
  std::vector<ScheduleViolation> out;
  for (size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i].end <= schedule[i].start) {
      out.push_back({kInvalidInterval, i, i,
                     absl::StrCat("round ", schedule[i].round_id, " ends before it starts")});
    }
  }
  for (size_t i = 0; i < schedule.size(); ++i) {
    for (size_t j = i + 1; j < schedule.size(); ++j) {
      const ScheduledRound& a = schedule[i];
      const ScheduledRound& b = schedule[j];
      // Negative when the intervals overlap.
      const int64_t gap = std::max(b.start - a.end, a.start - b.end);
      if (a.protocol != b.protocol && gap < 0) {
        out.push_back({kParallelProtocols, i, j,
                       absl::StrCat("rounds ", a.round_id, " (", std::string(ProtocolName(a.protocol)),
                                    ") and ", b.round_id, " (",
                                    std::string(ProtocolName(b.protocol)), ") overlap")});
      }
      if (a.statistics != b.statistics && gap < min_gap) {
        out.push_back({kGapTooShort, i, j,
                       absl::StrCat("rounds ", a.round_id, " and ", b.round_id,
                                    " measure different statistics ", gap, "s apart")});
      }
    }
  }
  return out;
}

nlohmann::ordered_json ScheduleToJson(const std::vector<ScheduledRound>& schedule) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const ScheduledRound& r : schedule) {
    arr.push_back({{"round_id", r.round_id},
                   {"protocol", std::string(ProtocolName(r.protocol))},
                   {"statistics", r.statistics},
                   {"start", r.start},
                   {"end", r.end}});
  }
  return arr;
}

absl::StatusOr<std::vector<ScheduledRound>> ScheduleFromJson(const nlohmann::json& j) {
  std::vector<ScheduledRound> out;
  try {
    for (const auto& r : j) {
      ScheduledRound round;
      round.round_id = r.at("round_id").get<std::string>();
      auto protocol = ParseProtocol(r.at("protocol").get<std::string>());
      if (!protocol.ok()) return protocol.status();
      round.protocol = *protocol;
      round.statistics = r.at("statistics").get<std::set<std::string>>();
      round.start = r.at("start").get<int64_t>();
      round.end = r.at("end").get<int64_t>();
      out.push_back(std::move(round));
    }
  } catch (const nlohmann::json::exception& ex) {
    return absl::InvalidArgumentError(absl::StrCat("malformed schedule: ", ex.what()));
  }
  return out;
}

nlohmann::ordered_json ViolationsToJson(const std::vector<ScheduleViolation>& violations) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const ScheduleViolation& v : violations) {
    arr.push_back({{"kind", v.kind}, {"first", v.first}, {"second", v.second}, {"detail", v.detail}});
  }
  return arr;
}

}  // namespace privmeasure::privacy

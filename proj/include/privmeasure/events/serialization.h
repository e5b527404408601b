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

#ifndef PRIVMEASURE_EVENTS_SERIALIZATION_H_
#define PRIVMEASURE_EVENTS_SERIALIZATION_H_

#include <istream>
#include <ostream>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"
#include "privmeasure/events/event.h"
#include "privmeasure/events/ground_truth.h"

namespace privmeasure::events {

// Field order is fixed: relay_id, time, seq, kind, then payload fields.
nlohmann::ordered_json EventToJson(const Event& event);
absl::StatusOr<Event> EventFromJson(const nlohmann::ordered_json& j);

// One event per line. The file carries no relay list, so relays without any
// events are known only through `known_relays`.
absl::Status WriteTraceJsonl(const Traces& traces, std::ostream& out);
absl::StatusOr<Traces> ReadTraceJsonl(std::istream& in,
                                      const std::vector<uint32_t>& known_relays = {});

nlohmann::ordered_json TruthToJson(const TruthSummary& truth);
absl::StatusOr<TruthSummary> TruthFromJson(const nlohmann::ordered_json& j);

nlohmann::ordered_json ConfigToJson(const GroundTruthConfig& config);
// Missing fields keep their defaults.
absl::StatusOr<GroundTruthConfig> ConfigFromJson(const nlohmann::json& j);

}  // namespace privmeasure::events

#endif  // PRIVMEASURE_EVENTS_SERIALIZATION_H_

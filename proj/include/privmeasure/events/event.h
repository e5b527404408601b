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

#ifndef PRIVMEASURE_EVENTS_EVENT_H_
#define PRIVMEASURE_EVENTS_EVENT_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "absl/status/statusor.h"

namespace privmeasure::events {

// Order matches the alternatives of EventPayload.
enum class EventKind : uint8_t {
  kEntryConnection = 0,
  kEntryCircuit,
  kEntryBytes,
  kExitStream,
  kDescriptorPublish,
  kDescriptorFetch,
  kRendezvousCircuitEnd,
  kRendezvousCells,
};
inline constexpr size_t kNumEventKinds = 8;

std::string_view EventKindName(EventKind kind);
absl::StatusOr<EventKind> ParseEventKind(std::string_view name);

// A client TCP connection arriving at a guard.
struct EntryConnection {
  uint32_t client_ip = 0;
  std::string country_code;
  uint32_t as_number = 0;
  bool operator==(const EntryConnection&) const = default;
};

struct EntryCircuit {
  uint32_t client_ip = 0;
  std::string country_code;
  bool operator==(const EntryCircuit&) const = default;
};

struct EntryBytes {
  uint64_t bytes = 0;
  std::string country_code;
  bool operator==(const EntryBytes&) const = default;
};

enum class TargetType : uint8_t { kHostname = 0, kIpv4, kIpv6 };
std::string_view TargetTypeName(TargetType type);

struct ExitStream {
  // First stream on its circuit.
  bool is_initial = false;
  TargetType target_type = TargetType::kHostname;
  std::string target;
  uint16_t port = 0;
  uint64_t bytes = 0;
  bool operator==(const ExitStream&) const = default;
};

struct DescriptorPublish {
  std::string onion_address;
  bool operator==(const DescriptorPublish&) const = default;
};

struct DescriptorFetch {
  std::string onion_address;
  // False when the descriptor was not in the HSDir cache.
  bool hit = false;
  bool operator==(const DescriptorFetch&) const = default;
};

enum class RendezvousOutcome : uint8_t { kSucceeded = 0, kConnClosed, kExpired };
inline constexpr size_t kNumRendezvousOutcomes = 3;
std::string_view RendezvousOutcomeName(RendezvousOutcome outcome);

struct RendezvousCircuitEnd {
  RendezvousOutcome outcome = RendezvousOutcome::kExpired;
  uint64_t cells = 0;
  bool operator==(const RendezvousCircuitEnd&) const = default;
};

struct RendezvousCells {
  uint64_t cells = 0;
  bool operator==(const RendezvousCells&) const = default;
};

using EventPayload =
    std::variant<EntryConnection, EntryCircuit, EntryBytes, ExitStream,
                 DescriptorPublish, DescriptorFetch, RendezvousCircuitEnd,
                 RendezvousCells>;

struct Event {
  uint32_t relay_id = 0;
  // Seconds since the start of the trace.
  int64_t simulated_time = 0;
  // Monotonic generation order; breaks ties between equal timestamps.
  uint64_t sequence = 0;
  EventPayload payload;

  EventKind kind() const { return static_cast<EventKind>(payload.index()); }
  bool operator==(const Event&) const = default;
};

// Strict ordering used for per-relay streams: time, then sequence.
inline bool EventTimeOrder(const Event& a, const Event& b) {
  if (a.simulated_time != b.simulated_time) return a.simulated_time < b.simulated_time;
  return a.sequence < b.sequence;
}

}  // namespace privmeasure::events

#endif  // PRIVMEASURE_EVENTS_EVENT_H_

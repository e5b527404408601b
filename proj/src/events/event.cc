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

#include "privmeasure/events/event.h"

#include <array>
#include <string>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace privmeasure::events {
namespace {

constexpr std::array<std::string_view, kNumEventKinds> kKindNames = {
    "EntryConnection",  "EntryCircuit",    "EntryBytes",
    "ExitStream",       "DescriptorPublish", "DescriptorFetch",
    "RendezvousCircuitEnd", "RendezvousCells",
};

}  // namespace

std::string_view EventKindName(EventKind kind) {
  const auto i = static_cast<size_t>(kind);
  return i < kKindNames.size() ? kKindNames[i] : "Unknown";
}

absl::StatusOr<EventKind> ParseEventKind(std::string_view name) {
  for (size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<EventKind>(i);
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown event kind: ", std::string(name)));
}

std::string_view TargetTypeName(TargetType type) {
  switch (type) {
    case TargetType::kHostname:
      return "hostname";
    case TargetType::kIpv4:
      return "ipv4";
    case TargetType::kIpv6:
      return "ipv6";
  }
  return "unknown";
}

std::string_view RendezvousOutcomeName(RendezvousOutcome outcome) {
  switch (outcome) {
    case RendezvousOutcome::kSucceeded:
      return "succeeded";
    case RendezvousOutcome::kConnClosed:
      return "conn_closed";
    case RendezvousOutcome::kExpired:
      return "expired";
  }
  return "unknown";
}

}  // namespace privmeasure::events

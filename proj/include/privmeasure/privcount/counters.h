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

#ifndef PRIVMEASURE_PRIVCOUNT_COUNTERS_H_
#define PRIVMEASURE_PRIVCOUNT_COUNTERS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "privmeasure/events/event.h"
#include "privmeasure/matchers/matchers.h"
#include "privmeasure/privacy/privacy.h"

namespace privmeasure::privcount {

// 2^61 - 1, a Mersenne prime.
inline constexpr uint64_t kDefaultModulus = (uint64_t{1} << 61) - 1;

struct Increment {
  size_t bin = 0;
  uint64_t amount = 1;
};

// Maps an event of the family's kind to at most one bin.
using Classifier = std::function<std::optional<Increment>(const events::Event&)>;

// A histogram of counters over one event kind. One bounded user action moves
// at most one bin, so the family is one statistic for budgeting.
struct CounterFamily {
  std::string family_id;
  events::EventKind kind = events::EventKind::kExitStream;
  std::vector<std::string> counter_ids;
  std::optional<privacy::Action> action;
  privacy::SensitivityUnit unit = privacy::SensitivityUnit::kNative;
  Classifier classify;
};

struct CounterSpec {
  std::string counter_id;
  std::string family_id;
  events::EventKind kind = events::EventKind::kExitStream;
  std::optional<privacy::Action> action;
  privacy::SensitivityUnit unit = privacy::SensitivityUnit::kNative;
  uint64_t modulus = kDefaultModulus;
};

// Counter ids must be unique across families and every family needs a
// classifier and at least one bin.
absl::Status ValidateFamilies(const std::vector<CounterFamily>& families);

std::vector<CounterSpec> CounterSpecs(const std::vector<CounterFamily>& families,
                                      uint64_t modulus = kDefaultModulus);

// One NoiseSpec per counter. The round budget is split equally across
// families; every bin of a family shares its family's sensitivity.
absl::StatusOr<std::map<std::string, privacy::NoiseSpec>> BuildNoiseSpecs(
    const std::vector<CounterFamily>& families, const privacy::PrivacyConfig& config,
    uint32_t days = 1);

bool IsWebPort(uint16_t port);
// First stream of a circuit with a hostname target on a web port.
bool IsPrimaryDomainStream(const events::ExitStream& s);

// Exit stream taxonomy: total; initial/subsequent; initial by target type;
// initial hostname by web/non-web port.
std::vector<CounterFamily> ExitStreamFamilies();
CounterFamily ExitBytesFamily();

// entry/connections, entry/circuits, entry/bytes.
std::vector<CounterFamily> EntryFamilies();
// Per-country histogram for an entry event kind. Unlisted countries land in
// "<prefix>/other".
CounterFamily CountryHistogram(events::EventKind kind, const std::vector<std::string>& countries);

// hsdir/uploads, hsdir/fetches, hsdir/fetches/{hit,miss}.
std::vector<CounterFamily> HsdirFamilies();

// rendezvous/circuits, rendezvous/circuits/<outcome>, rendezvous/cells.
std::vector<CounterFamily> RendezvousFamilies();

// Primary domains by rank bucket, plus "unlisted".
CounterFamily DomainRankFamily(std::shared_ptr<const matchers::RankBuckets> buckets);
// Primary domains matching one domain set.
CounterFamily DomainSetFamily(std::shared_ptr<const matchers::DomainSet> set);
// Primary domains by TLD rule, plus "other".
CounterFamily TldFamily(std::shared_ptr<const matchers::TldRules> rules);

}  // namespace privmeasure::privcount

#endif  // PRIVMEASURE_PRIVCOUNT_COUNTERS_H_

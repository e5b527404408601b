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

#include "privmeasure/privcount/counters.h"

#include <set>
#include <unordered_map>

#include "absl/strings/str_cat.h"
#include "privmeasure/common/status_macros.h"

namespace privmeasure::privcount {
namespace {

using events::Event;
using events::EventKind;
using privacy::Action;

template <typename T>
const T& As(const Event& e) {
  return std::get<T>(e.payload);
}

CounterFamily Single(std::string id, EventKind kind, Action action,
                     std::function<std::optional<uint64_t>(const Event&)> amount,
                     privacy::SensitivityUnit unit = privacy::SensitivityUnit::kNative) {
  CounterFamily f;
  f.family_id = id;
  f.kind = kind;
  f.counter_ids = {std::move(id)};
  f.action = action;
  f.unit = unit;
  f.classify = [amount = std::move(amount)](const Event& e) -> std::optional<Increment> {
    auto a = amount(e);
    if (!a) return std::nullopt;
    return Increment{0, *a};
  };
  return f;
}

std::optional<uint64_t> One(const Event&) { return 1; }

// Shared by the primary-domain families: hostname of a primary stream.
const std::string* PrimaryHost(const Event& e) {
  const auto& s = As<events::ExitStream>(e);
  return IsPrimaryDomainStream(s) ? &s.target : nullptr;
}

}  // namespace

absl::Status ValidateFamilies(const std::vector<CounterFamily>& families) {
  std::set<std::string> ids, family_ids;
  for (const CounterFamily& f : families) {
    if (!family_ids.insert(f.family_id).second) {
      return absl::InvalidArgumentError(absl::StrCat("duplicate family id ", f.family_id));
    }
    if (f.counter_ids.empty()) {
      return absl::InvalidArgumentError(absl::StrCat("family ", f.family_id, " has no bins"));
    }
    if (!f.classify) {
      return absl::InvalidArgumentError(absl::StrCat("family ", f.family_id, " has no classifier"));
    }
    for (const std::string& id : f.counter_ids) {
      if (!ids.insert(id).second) {
        return absl::InvalidArgumentError(absl::StrCat("duplicate counter id ", id));
      }
    }
  }
  return absl::OkStatus();
}

std::vector<CounterSpec> CounterSpecs(const std::vector<CounterFamily>& families,
                                      uint64_t modulus) {
  std::vector<CounterSpec> specs;
  for (const CounterFamily& f : families) {
    for (const std::string& id : f.counter_ids) {
      specs.push_back(CounterSpec{id, f.family_id, f.kind, f.action, f.unit, modulus});
    }
  }
  return specs;
}

absl::StatusOr<std::map<std::string, privacy::NoiseSpec>> BuildNoiseSpecs(
    const std::vector<CounterFamily>& families, const privacy::PrivacyConfig& config,
    uint32_t days) {
  RETURN_IF_ERROR(ValidateFamilies(families));
  std::vector<std::string> stats;
  for (const CounterFamily& f : families) stats.push_back(f.family_id);
  ASSIGN_OR_RETURN(auto shares, privacy::AllocatePrivacyBudget(stats, config.params));
  std::map<std::string, privacy::NoiseSpec> out;
  for (size_t i = 0; i < families.size(); ++i) {
    const CounterFamily& f = families[i];
    privacy::CounterDeclaration decl{f.family_id, f.action, false, f.unit, days};
    ASSIGN_OR_RETURN(const double delta, privacy::SensitivityForCounter(decl, config.bounds));
    for (const std::string& id : f.counter_ids) {
      ASSIGN_OR_RETURN(out[id], privacy::MakeNoiseSpec(id, delta, shares[i]));
    }
  }
  return out;
}

bool IsWebPort(uint16_t port) { return port == 80 || port == 443; }

bool IsPrimaryDomainStream(const events::ExitStream& s) {
  return s.is_initial && s.target_type == events::TargetType::kHostname && IsWebPort(s.port);
}

std::vector<CounterFamily> ExitStreamFamilies() {
  std::vector<CounterFamily> out;
  out.push_back(Single("streams/total", EventKind::kExitStream, Action::kDomainsConnected, One));

  CounterFamily position;
  position.family_id = "streams/position";
  position.kind = EventKind::kExitStream;
  position.counter_ids = {"streams/initial", "streams/subsequent"};
  position.action = Action::kDomainsConnected;
  position.classify = [](const Event& e) -> std::optional<Increment> {
    return Increment{As<events::ExitStream>(e).is_initial ? 0u : 1u, 1};
  };
  out.push_back(std::move(position));

  CounterFamily target;
  target.family_id = "streams/initial/target";
  target.kind = EventKind::kExitStream;
  target.counter_ids = {"streams/initial/hostname", "streams/initial/ipv4",
                        "streams/initial/ipv6"};
  target.action = Action::kDomainsConnected;
  target.classify = [](const Event& e) -> std::optional<Increment> {
    const auto& s = As<events::ExitStream>(e);
    if (!s.is_initial) return std::nullopt;
    return Increment{static_cast<size_t>(s.target_type), 1};
  };
  out.push_back(std::move(target));

  CounterFamily port;
  port.family_id = "streams/initial/hostname/port";
  port.kind = EventKind::kExitStream;
  port.counter_ids = {"streams/initial/hostname/web", "streams/initial/hostname/nonweb"};
  port.action = Action::kDomainsConnected;
  port.classify = [](const Event& e) -> std::optional<Increment> {
    const auto& s = As<events::ExitStream>(e);
    if (!s.is_initial || s.target_type != events::TargetType::kHostname) return std::nullopt;
    return Increment{IsWebPort(s.port) ? 0u : 1u, 1};
  };
  out.push_back(std::move(port));
  return out;
}

CounterFamily ExitBytesFamily() {
  return Single("exit/bytes", EventKind::kExitStream, Action::kExitDataBytes,
                [](const Event& e) -> std::optional<uint64_t> {
                  return As<events::ExitStream>(e).bytes;
                });
}

std::vector<CounterFamily> EntryFamilies() {
  return {
      Single("entry/connections", EventKind::kEntryConnection, Action::kTcpConnections, One),
      Single("entry/circuits", EventKind::kEntryCircuit, Action::kEntryCircuits, One),
      Single("entry/bytes", EventKind::kEntryBytes, Action::kEntryDataBytes,
             [](const Event& e) -> std::optional<uint64_t> {
               return As<events::EntryBytes>(e).bytes;
             }),
  };
}

CounterFamily CountryHistogram(EventKind kind, const std::vector<std::string>& countries) {
  CounterFamily f;
  f.kind = kind;
  std::string prefix;
  switch (kind) {
    case EventKind::kEntryConnection:
      prefix = "entry/connections/country";
      f.action = Action::kTcpConnections;
      break;
    case EventKind::kEntryCircuit:
      prefix = "entry/circuits/country";
      f.action = Action::kEntryCircuits;
      break;
    default:
      prefix = "entry/bytes/country";
      f.kind = EventKind::kEntryBytes;
      f.action = Action::kEntryDataBytes;
      break;
  }
  f.family_id = prefix;
  auto index = std::make_shared<std::unordered_map<std::string, size_t>>();
  for (const std::string& cc : countries) {
    if (index->emplace(cc, f.counter_ids.size()).second) {
      f.counter_ids.push_back(absl::StrCat(prefix, "/", cc));
    }
  }
  const size_t other = f.counter_ids.size();
  f.counter_ids.push_back(absl::StrCat(prefix, "/other"));
  f.classify = [index, other, kind = f.kind](const Event& e) -> std::optional<Increment> {
    const std::string* cc = nullptr;
    uint64_t amount = 1;
    if (kind == EventKind::kEntryConnection) {
      cc = &As<events::EntryConnection>(e).country_code;
    } else if (kind == EventKind::kEntryCircuit) {
      cc = &As<events::EntryCircuit>(e).country_code;
    } else {
      cc = &As<events::EntryBytes>(e).country_code;
      amount = As<events::EntryBytes>(e).bytes;
    }
    auto it = index->find(*cc);
    return Increment{it == index->end() ? other : it->second, amount};
  };
  return f;
}

std::vector<CounterFamily> HsdirFamilies() {
  std::vector<CounterFamily> out;
  out.push_back(
      Single("hsdir/uploads", EventKind::kDescriptorPublish, Action::kDescriptorUploads, One));
  out.push_back(
      Single("hsdir/fetches", EventKind::kDescriptorFetch, Action::kDescriptorFetches, One));
  CounterFamily outcome;
  outcome.family_id = "hsdir/fetches/outcome";
  outcome.kind = EventKind::kDescriptorFetch;
  outcome.counter_ids = {"hsdir/fetches/hit", "hsdir/fetches/miss"};
  outcome.action = Action::kDescriptorFetches;
  outcome.classify = [](const Event& e) -> std::optional<Increment> {
    return Increment{As<events::DescriptorFetch>(e).hit ? 0u : 1u, 1};
  };
  out.push_back(std::move(outcome));
  return out;
}

std::vector<CounterFamily> RendezvousFamilies() {
  std::vector<CounterFamily> out;
  // Each spliced rendezvous ends two circuits at the RP and is counted twice.
  out.push_back(Single("rendezvous/circuits", EventKind::kRendezvousCircuitEnd,
                       Action::kRendezvousConnections, One));
  CounterFamily outcome;
  outcome.family_id = "rendezvous/circuits/outcome";
  outcome.kind = EventKind::kRendezvousCircuitEnd;
  for (size_t i = 0; i < events::kNumRendezvousOutcomes; ++i) {
    outcome.counter_ids.push_back(absl::StrCat(
        "rendezvous/circuits/",
        std::string(events::RendezvousOutcomeName(static_cast<events::RendezvousOutcome>(i)))));
  }
  outcome.action = Action::kRendezvousConnections;
  outcome.classify = [](const Event& e) -> std::optional<Increment> {
    return Increment{static_cast<size_t>(As<events::RendezvousCircuitEnd>(e).outcome), 1};
  };
  out.push_back(std::move(outcome));
  out.push_back(Single(
      "rendezvous/cells", EventKind::kRendezvousCells, Action::kRendezvousDataBytes,
      [](const Event& e) -> std::optional<uint64_t> { return As<events::RendezvousCells>(e).cells; },
      privacy::SensitivityUnit::kCells));
  return out;
}

CounterFamily DomainRankFamily(std::shared_ptr<const matchers::RankBuckets> buckets) {
  CounterFamily f;
  f.family_id = "exit/primary/rank";
  f.kind = EventKind::kExitStream;
  f.action = Action::kDomainsConnected;
  for (int b = 0; b <= buckets->dedicated_bucket(); ++b) {
    f.counter_ids.push_back(absl::StrCat("exit/primary/rank/", buckets->BucketName(b)));
  }
  const size_t unlisted = f.counter_ids.size();
  f.counter_ids.push_back("exit/primary/rank/unlisted");
  f.classify = [buckets, unlisted](const Event& e) -> std::optional<Increment> {
    const std::string* host = PrimaryHost(e);
    if (host == nullptr) return std::nullopt;
    auto b = buckets->Bucket(*host);
    return Increment{b ? static_cast<size_t>(*b) : unlisted, 1};
  };
  return f;
}

CounterFamily DomainSetFamily(std::shared_ptr<const matchers::DomainSet> set) {
  CounterFamily f;
  f.family_id = absl::StrCat("exit/primary/set/", set->set_id());
  f.kind = EventKind::kExitStream;
  f.action = Action::kDomainsConnected;
  f.counter_ids = {f.family_id};
  f.classify = [set](const Event& e) -> std::optional<Increment> {
    const std::string* host = PrimaryHost(e);
    if (host == nullptr || !set->Matches(*host)) return std::nullopt;
    return Increment{0, 1};
  };
  return f;
}

CounterFamily TldFamily(std::shared_ptr<const matchers::TldRules> rules) {
  CounterFamily f;
  f.family_id = "exit/primary/tld";
  f.kind = EventKind::kExitStream;
  f.action = Action::kDomainsConnected;
  auto index = std::make_shared<std::unordered_map<std::string, size_t>>();
  for (const std::string& r : rules->rules()) {
    if (index->emplace(r, f.counter_ids.size()).second) {
      f.counter_ids.push_back(absl::StrCat("exit/primary/tld/", r));
    }
  }
  const size_t other = f.counter_ids.size();
  f.counter_ids.push_back(absl::StrCat("exit/primary/tld/", matchers::kOtherTld));
  f.classify = [rules, index, other](const Event& e) -> std::optional<Increment> {
    const std::string* host = PrimaryHost(e);
    if (host == nullptr) return std::nullopt;
    auto it = index->find(rules->Match(*host));
    return Increment{it == index->end() ? other : it->second, 1};
  };
  return f;
}

}  // namespace privmeasure::privcount

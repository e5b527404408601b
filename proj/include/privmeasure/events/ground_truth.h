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

#ifndef PRIVMEASURE_EVENTS_GROUND_TRUTH_H_
#define PRIVMEASURE_EVENTS_GROUND_TRUTH_H_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "privmeasure/events/event.h"

namespace privmeasure::events {

struct RelaySpec {
  uint32_t id = 0;
  std::string nickname;
  bool guard = false;
  bool exit = false;
  bool hsdir = false;
  bool rendezvous = false;
  // Consensus weight fractions for each role, in [0, 1].
  double guard_weight = 0.0;
  double exit_weight = 0.0;
  double hsdir_weight = 0.0;
  double rendezvous_weight = 0.0;
  // Only instrumented relays emit events into the trace. Activity at the
  // remaining relays still counts toward network-wide truth.
  bool instrumented = true;
};

struct ClientBehavior {
  double mean_connections_per_guard = 1.5;
  double mean_circuits_per_connection = 6.0;
  double mean_bytes_per_circuit = 200000.0;
  // Exit circuits (= initial streams) per selective client per day.
  double mean_visits_per_client = 4.0;
  double mean_subsequent_streams = 3.0;
  double mean_stream_bytes = 150000.0;
  double ipv4_initial_fraction = 0.01;
  double ipv6_initial_fraction = 0.002;
  // Among hostname initial streams, share that targets port 80 or 443.
  double web_port_fraction = 0.97;
};

struct TldShare {
  std::string tld;
  double share = 0.0;
};

struct DomainPopularity {
  // Zipf exponent of primary-domain popularity.
  double alpha = 1.0;
  uint32_t universe_size = 1000;
  std::vector<TldShare> tld_mix = {{"com", 0.55}, {"org", 0.15}, {"net", 0.1},
                                   {"ru", 0.06},  {"de", 0.06},  {"co.uk", 0.08}};
};

struct OnionUniverse {
  uint32_t addresses = 0;
  double published_fraction = 0.8;
  // Fraction of published addresses that clients fetch.
  double fetched_fraction = 0.5;
  uint32_t replicas = 2;
  uint32_t hsdirs_per_replica = 3;
  double mean_uploads_per_hsdir = 4.0;
  double mean_fetches_per_fetched_address = 3.0;
};

struct FailureRates {
  // Probability that a descriptor fetch targets a descriptor the HSDir lacks.
  double descriptor_fetch_failure = 0.9;
  double rendezvous_succeeded = 0.1;
  double rendezvous_conn_closed = 0.05;
  // Remaining rendezvous attempts expire.
};

struct RendezvousActivity {
  uint64_t attempts_per_day = 0;
  double mean_cells_per_active_circuit = 1500.0;
};

struct GroundTruthConfig {
  uint64_t n_clients = 0;
  uint32_t guards_per_selective_client = 3;
  uint64_t n_promiscuous_clients = 0;
  std::vector<RelaySpec> relays;
  ClientBehavior behavior;
  DomainPopularity domains;
  OnionUniverse onions;
  FailureRates failures;
  RendezvousActivity rendezvous;
  uint32_t num_days = 1;
  // Fraction of the selective population replaced by new clients each day.
  double daily_client_turnover = 0.0;
  int64_t epoch_length = 86400;
  uint64_t rng_seed = 1;
};

absl::Status ValidateConfig(const GroundTruthConfig& config);

// Well-known truth keys.
namespace truth_keys {
inline constexpr char kStreamsTotal[] = "streams/total";
inline constexpr char kStreamsInitial[] = "streams/initial";
inline constexpr char kStreamsSubsequent[] = "streams/subsequent";
inline constexpr char kStreamsInitialIpv4[] = "streams/initial/ipv4";
inline constexpr char kStreamsInitialIpv6[] = "streams/initial/ipv6";
inline constexpr char kStreamsInitialHostname[] = "streams/initial/hostname";
inline constexpr char kStreamsInitialHostnameWeb[] = "streams/initial/hostname/web";
inline constexpr char kStreamsInitialHostnameNonWeb[] = "streams/initial/hostname/nonweb";
inline constexpr char kExitBytes[] = "exit/bytes";
inline constexpr char kEntryConnections[] = "entry/connections";
inline constexpr char kEntryCircuits[] = "entry/circuits";
inline constexpr char kEntryBytes[] = "entry/bytes";
inline constexpr char kUniqueClientIps[] = "unique/client_ips";
inline constexpr char kUniqueCountries[] = "unique/countries";
inline constexpr char kUniqueAses[] = "unique/ases";
inline constexpr char kUniqueSlds[] = "unique/slds";
inline constexpr char kUniqueOnionsPublished[] = "unique/onions_published";
inline constexpr char kUniqueOnionsFetched[] = "unique/onions_fetched";
inline constexpr char kHsdirUploads[] = "hsdir/uploads";
inline constexpr char kHsdirFetches[] = "hsdir/fetches";
inline constexpr char kHsdirFetchesHit[] = "hsdir/fetches/hit";
inline constexpr char kHsdirFetchesMiss[] = "hsdir/fetches/miss";
inline constexpr char kRendCircuits[] = "rendezvous/circuits";
inline constexpr char kRendSucceeded[] = "rendezvous/circuits/succeeded";
inline constexpr char kRendConnClosed[] = "rendezvous/circuits/conn_closed";
inline constexpr char kRendExpired[] = "rendezvous/circuits/expired";
inline constexpr char kRendCells[] = "rendezvous/cells";
inline constexpr char kDailyClientArrivals[] = "clients/daily_arrivals";
}  // namespace truth_keys

struct RoleFractions {
  double guard = 0.0;
  double exit = 0.0;
  double hsdir = 0.0;
  double rendezvous = 0.0;
  bool operator==(const RoleFractions&) const = default;
};

using KindCounts = std::array<uint64_t, kNumEventKinds>;

struct TruthSummary {
  // Network-wide totals, keyed by truth_keys.
  std::map<std::string, double> totals;
  // Primary-domain visits (initial hostname streams on a web port) per
  // domain index, across the whole network.
  std::vector<uint64_t> primary_visits_by_domain;
  // Network-wide entry activity per client country.
  std::map<std::string, uint64_t> connections_by_country;
  std::map<std::string, uint64_t> circuits_by_country;
  std::map<std::string, uint64_t> bytes_by_country;
  // Counts of events actually emitted into the trace.
  KindCounts emitted_by_kind{};
  std::map<uint32_t, KindCounts> emitted_by_relay;
  // Per-relay share of each role's weight.
  std::map<uint32_t, RoleFractions> relay_fractions;

  bool operator==(const TruthSummary&) const = default;
};

class Traces {
 public:
  Traces() = default;
  Traces(std::vector<uint32_t> relay_ids, std::vector<Event> events);

  // Every event in generation (sequence) order.
  const std::vector<Event>& events() const { return events_; }
  const std::vector<uint32_t>& relay_ids() const { return relay_ids_; }

  bool HasRelay(uint32_t relay_id) const;

  // Events observed at one relay, ordered by simulated time with sequence
  // number as the tie-break.
  absl::StatusOr<std::vector<Event>> EventsForRelay(uint32_t relay_id) const;

 private:
  std::vector<uint32_t> relay_ids_;
  std::vector<Event> events_;
};

struct GroundTruth {
  Traces traces;
  TruthSummary truth;
};

absl::StatusOr<GroundTruth> GenerateGroundTruth(const GroundTruthConfig& config);

// Synthetic naming helpers shared with the measurement side.
uint32_t ClientIp(uint64_t client_index);
uint64_t PromiscuousClientIndex(uint64_t j);
std::string DomainHostname(uint32_t domain_index, const DomainPopularity& domains);
std::string DomainRegistrableName(uint32_t domain_index, const DomainPopularity& domains);
std::string OnionAddress(uint64_t address_index);

}  // namespace privmeasure::events

#endif  // PRIVMEASURE_EVENTS_GROUND_TRUTH_H_

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

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "privmeasure/events/ground_truth.h"
#include "privmeasure/events/serialization.h"
#include "privmeasure/events/zipf.h"

namespace privmeasure::events {
namespace {

namespace tk = truth_keys;
using ::testing::HasSubstr;

RelaySpec Guard(uint32_t id, double w) {
  RelaySpec r;
  r.id = id;
  r.guard = true;
  r.guard_weight = w;
  return r;
}

GroundTruthConfig SmallNetwork() {
  GroundTruthConfig c;
  c.n_clients = 300;
  c.n_promiscuous_clients = 5;
  c.relays = {Guard(1, 0.5), Guard(2, 0.3), Guard(3, 0.2)};
  RelaySpec exit;
  exit.id = 10;
  exit.exit = true;
  exit.exit_weight = 1.0;
  exit.hsdir = true;
  exit.hsdir_weight = 0.5;
  exit.rendezvous = true;
  exit.rendezvous_weight = 0.5;
  RelaySpec hsdir;
  hsdir.id = 11;
  hsdir.hsdir = true;
  hsdir.hsdir_weight = 0.5;
  hsdir.rendezvous = true;
  hsdir.rendezvous_weight = 0.5;
  c.relays.push_back(exit);
  c.relays.push_back(hsdir);
  c.onions.addresses = 40;
  c.rendezvous.attempts_per_day = 50;
  c.domains.universe_size = 200;
  c.rng_seed = 99;
  return c;
}

std::set<uint32_t> ClientIpsAt(const std::vector<Event>& events) {
  std::set<uint32_t> ips;
  for (const Event& e : events) {
    if (const auto* c = std::get_if<EntryConnection>(&e.payload)) ips.insert(c->client_ip);
  }
  return ips;
}

TEST(GroundTruthTest, ZeroClientsGiveEmptyTraces) {
  GroundTruthConfig c;
  c.relays = {Guard(1, 1.0)};
  auto gt = GenerateGroundTruth(c);
  ASSERT_TRUE(gt.ok()) << gt.status();
  EXPECT_TRUE(gt->traces.events().empty());
  for (const auto& [key, v] : gt->truth.totals) EXPECT_EQ(v, 0.0) << key;
  EXPECT_FALSE(gt->truth.totals.empty());
}

TEST(GroundTruthTest, GuardsPerClientClampedToGuardCount) {
  GroundTruthConfig c;
  c.n_clients = 500;
  c.guards_per_selective_client = 3;
  c.relays = {Guard(1, 0.5), Guard(2, 0.5)};
  auto gt = GenerateGroundTruth(c);
  ASSERT_TRUE(gt.ok()) << gt.status();
  for (uint32_t id : {1u, 2u}) {
    auto events = gt->traces.EventsForRelay(id);
    ASSERT_TRUE(events.ok());
    EXPECT_EQ(ClientIpsAt(*events).size(), 500u);
  }
  EXPECT_EQ(gt->truth.totals.at(tk::kUniqueClientIps), 500.0);
}

TEST(GroundTruthTest, FullWeightExitSeesEveryPrimaryDomain) {
  GroundTruthConfig c;
  c.n_clients = 10000;
  c.relays = {Guard(1, 1.0)};
  c.relays[0].instrumented = false;
  RelaySpec exit;
  exit.id = 2;
  exit.exit = true;
  exit.exit_weight = 1.0;
  c.relays.push_back(exit);
  c.domains.alpha = 1.0;
  c.domains.universe_size = 1000;
  auto gt = GenerateGroundTruth(c);
  ASSERT_TRUE(gt.ok()) << gt.status();
  auto events = gt->traces.EventsForRelay(2);
  ASSERT_TRUE(events.ok());
  std::set<std::string> observed;
  for (const Event& e : *events) {
    const auto& s = std::get<ExitStream>(e.payload);
    if (s.is_initial && s.target_type == TargetType::kHostname && (s.port == 80 || s.port == 443)) {
      observed.insert(s.target);
    }
  }
  EXPECT_EQ(static_cast<double>(observed.size()), gt->truth.totals.at(tk::kUniqueSlds));
  EXPECT_GT(observed.size(), 500u);
}

TEST(GroundTruthTest, RelayWithoutRolesHasEmptyStream) {
  GroundTruthConfig c = SmallNetwork();
  RelaySpec idle;
  idle.id = 77;
  c.relays.push_back(idle);
  auto gt = GenerateGroundTruth(c);
  ASSERT_TRUE(gt.ok());
  auto events = gt->traces.EventsForRelay(77);
  ASSERT_TRUE(events.ok());
  EXPECT_TRUE(events->empty());
}

TEST(GroundTruthTest, SingleRelayStreamEqualsFullTrace) {
  GroundTruthConfig c;
  c.n_clients = 200;
  RelaySpec all = Guard(5, 1.0);
  all.exit = true;
  all.exit_weight = 1.0;
  c.relays = {all};
  auto gt = GenerateGroundTruth(c);
  ASSERT_TRUE(gt.ok());
  auto events = gt->traces.EventsForRelay(5);
  ASSERT_TRUE(events.ok());
  std::vector<Event> expected = gt->traces.events();
  std::sort(expected.begin(), expected.end(), EventTimeOrder);
  EXPECT_EQ(*events, expected);
}

TEST(GroundTruthTest, StreamsPartitionTheTrace) {
  GroundTruthConfig c;
  c.n_clients = 400;
  c.guards_per_selective_client = 1;
  c.relays = {Guard(1, 0.6), Guard(2, 0.4)};
  auto gt = GenerateGroundTruth(c);
  ASSERT_TRUE(gt.ok());
  auto a = gt->traces.EventsForRelay(1);
  auto b = gt->traces.EventsForRelay(2);
  ASSERT_TRUE(a.ok() && b.ok());
  std::set<uint32_t> ia = ClientIpsAt(*a), ib = ClientIpsAt(*b);
  std::vector<uint32_t> both;
  std::set_intersection(ia.begin(), ia.end(), ib.begin(), ib.end(), std::back_inserter(both));
  EXPECT_TRUE(both.empty());
  std::set<uint64_t> seqs;
  for (const Event& e : *a) seqs.insert(e.sequence);
  for (const Event& e : *b) seqs.insert(e.sequence);
  EXPECT_EQ(seqs.size(), gt->traces.events().size());
  EXPECT_EQ(a->size() + b->size(), gt->traces.events().size());
}

TEST(GroundTruthTest, StreamIsTimeOrderedWithSequenceTieBreak) {
  auto gt = GenerateGroundTruth(SmallNetwork());
  ASSERT_TRUE(gt.ok());
  for (uint32_t id : gt->traces.relay_ids()) {
    auto events = gt->traces.EventsForRelay(id);
    ASSERT_TRUE(events.ok());
    EXPECT_TRUE(std::is_sorted(events->begin(), events->end(), EventTimeOrder));
    for (const Event& e : *events) {
      EXPECT_GE(e.simulated_time, 0);
      EXPECT_LT(e.simulated_time, 86400);
    }
  }
}

TEST(GroundTruthTest, UnknownRelayIsAnError) {
  auto gt = GenerateGroundTruth(SmallNetwork());
  ASSERT_TRUE(gt.ok());
  EXPECT_EQ(gt->traces.EventsForRelay(12345).status().code(), absl::StatusCode::kNotFound);
}

TEST(GroundTruthTest, DeterministicForFixedSeed) {
  const GroundTruthConfig c = SmallNetwork();
  auto a = GenerateGroundTruth(c);
  auto b = GenerateGroundTruth(c);
  ASSERT_TRUE(a.ok() && b.ok());
  std::ostringstream ta, tb;
  ASSERT_TRUE(WriteTraceJsonl(a->traces, ta).ok());
  ASSERT_TRUE(WriteTraceJsonl(b->traces, tb).ok());
  EXPECT_EQ(ta.str(), tb.str());
  EXPECT_EQ(TruthToJson(a->truth).dump(), TruthToJson(b->truth).dump());

  GroundTruthConfig other = c;
  other.rng_seed = c.rng_seed + 1;
  auto d = GenerateGroundTruth(other);
  ASSERT_TRUE(d.ok());
  std::ostringstream td;
  ASSERT_TRUE(WriteTraceJsonl(d->traces, td).ok());
  EXPECT_NE(ta.str(), td.str());
}

TEST(GroundTruthTest, PerRelayCountsConserveTraceTotals) {
  auto gt = GenerateGroundTruth(SmallNetwork());
  ASSERT_TRUE(gt.ok());
  KindCounts from_trace{}, from_relays{};
  for (const Event& e : gt->traces.events()) ++from_trace[static_cast<size_t>(e.kind())];
  for (uint32_t id : gt->traces.relay_ids()) {
    auto events = gt->traces.EventsForRelay(id);
    ASSERT_TRUE(events.ok());
    KindCounts local{};
    for (const Event& e : *events) ++local[static_cast<size_t>(e.kind())];
    EXPECT_EQ(local, gt->truth.emitted_by_relay.at(id));
    for (size_t k = 0; k < kNumEventKinds; ++k) from_relays[k] += local[k];
  }
  EXPECT_EQ(from_trace, gt->truth.emitted_by_kind);
  EXPECT_EQ(from_relays, gt->truth.emitted_by_kind);
}

TEST(GroundTruthTest, FullyInstrumentedTruthMatchesTrace) {
  auto gt = GenerateGroundTruth(SmallNetwork());
  ASSERT_TRUE(gt.ok());
  const auto& t = gt->truth.totals;
  const auto& k = gt->truth.emitted_by_kind;
  EXPECT_EQ(t.at(tk::kEntryConnections), k[static_cast<size_t>(EventKind::kEntryConnection)]);
  EXPECT_EQ(t.at(tk::kEntryCircuits), k[static_cast<size_t>(EventKind::kEntryCircuit)]);
  EXPECT_EQ(t.at(tk::kStreamsTotal), k[static_cast<size_t>(EventKind::kExitStream)]);
  EXPECT_EQ(t.at(tk::kHsdirUploads), k[static_cast<size_t>(EventKind::kDescriptorPublish)]);
  EXPECT_EQ(t.at(tk::kHsdirFetches), k[static_cast<size_t>(EventKind::kDescriptorFetch)]);
  EXPECT_EQ(t.at(tk::kRendCircuits), k[static_cast<size_t>(EventKind::kRendezvousCircuitEnd)]);
  EXPECT_EQ(t.at(tk::kUniqueClientIps), 305.0);
  EXPECT_EQ(t.at(tk::kStreamsTotal), t.at(tk::kStreamsInitial) + t.at(tk::kStreamsSubsequent));
  EXPECT_EQ(t.at(tk::kStreamsInitial), t.at(tk::kStreamsInitialIpv4) +
                                           t.at(tk::kStreamsInitialIpv6) +
                                           t.at(tk::kStreamsInitialHostname));
  EXPECT_EQ(t.at(tk::kRendCircuits),
            t.at(tk::kRendSucceeded) + t.at(tk::kRendConnClosed) + t.at(tk::kRendExpired));
  EXPECT_EQ(static_cast<uint64_t>(t.at(tk::kRendSucceeded)) % 2, 0u);
  EXPECT_EQ(t.at(tk::kUniqueOnionsPublished), 32.0);
  EXPECT_EQ(t.at(tk::kUniqueOnionsFetched), 16.0);

  uint64_t bytes = 0;
  std::set<std::string> published;
  for (const Event& e : gt->traces.events()) {
    if (const auto* b = std::get_if<EntryBytes>(&e.payload)) bytes += b->bytes;
    if (const auto* p = std::get_if<DescriptorPublish>(&e.payload)) published.insert(p->onion_address);
  }
  EXPECT_EQ(t.at(tk::kEntryBytes), static_cast<double>(bytes));
  EXPECT_EQ(published.size(), 32u);
  for (const auto& [id, f] : gt->truth.relay_fractions) {
    for (double v : {f.guard, f.exit, f.hsdir, f.rendezvous}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(GroundTruthTest, GuardAssignmentsFollowWeights) {
  GroundTruthConfig c;
  c.n_clients = 100000;
  c.guards_per_selective_client = 1;
  c.behavior.mean_circuits_per_connection = 0;
  c.behavior.mean_connections_per_guard = 1;
  c.relays = {Guard(1, 0.5), Guard(2, 0.3), Guard(3, 0.2)};
  auto gt = GenerateGroundTruth(c);
  ASSERT_TRUE(gt.ok());
  for (const auto& [id, w] : std::map<uint32_t, double>{{1, 0.5}, {2, 0.3}, {3, 0.2}}) {
    const double share =
        static_cast<double>(gt->truth.emitted_by_relay.at(id)[0]) / static_cast<double>(c.n_clients);
    EXPECT_NEAR(share, w, 0.02) << "guard " << id;
  }
}

TEST(GroundTruthTest, PromiscuousClientsVisitEveryGuard) {
  GroundTruthConfig c;
  c.n_clients = 50;
  c.n_promiscuous_clients = 20;
  for (uint32_t i = 0; i < 8; ++i) c.relays.push_back(Guard(i + 1, 0.125));
  auto gt = GenerateGroundTruth(c);
  ASSERT_TRUE(gt.ok());
  for (uint32_t id = 1; id <= 8; ++id) {
    auto events = gt->traces.EventsForRelay(id);
    ASSERT_TRUE(events.ok());
    const std::set<uint32_t> ips = ClientIpsAt(*events);
    for (uint64_t j = 0; j < 20; ++j) {
      EXPECT_TRUE(ips.count(ClientIp(PromiscuousClientIndex(j)))) << "guard " << id;
    }
  }
}

TEST(GroundTruthTest, ChurnAddsDailyArrivals) {
  GroundTruthConfig c;
  c.n_clients = 1000;
  c.num_days = 4;
  c.daily_client_turnover = 0.1;
  c.relays = {Guard(1, 1.0)};
  auto gt = GenerateGroundTruth(c);
  ASSERT_TRUE(gt.ok());
  EXPECT_EQ(gt->truth.totals.at(tk::kUniqueClientIps), 1300.0);
  EXPECT_EQ(gt->truth.totals.at(tk::kDailyClientArrivals), 100.0);
  std::vector<std::set<uint32_t>> per_day(4);
  for (const Event& e : gt->traces.events()) {
    if (const auto* conn = std::get_if<EntryConnection>(&e.payload)) {
      per_day[e.simulated_time / 86400].insert(conn->client_ip);
    }
  }
  for (const auto& day : per_day) EXPECT_EQ(day.size(), 1000u);
}

TEST(GroundTruthTest, InvalidConfigsNameTheViolatedBound) {
  GroundTruthConfig c;
  c.relays = {Guard(1, 0.7), Guard(2, 0.6)};
  auto gt = GenerateGroundTruth(c);
  EXPECT_EQ(gt.status().code(), absl::StatusCode::kInvalidArgument);
  EXPECT_THAT(gt.status().message(), HasSubstr("guard weight fractions sum"));

  GroundTruthConfig alpha;
  alpha.domains.alpha = 0.0;
  EXPECT_THAT(GenerateGroundTruth(alpha).status().message(), HasSubstr("alpha"));

  GroundTruthConfig prob;
  prob.failures.descriptor_fetch_failure = 1.5;
  EXPECT_THAT(GenerateGroundTruth(prob).status().message(), HasSubstr("descriptor_fetch_failure"));

  GroundTruthConfig dup;
  dup.relays = {Guard(1, 0.1), Guard(1, 0.1)};
  EXPECT_THAT(GenerateGroundTruth(dup).status().message(), HasSubstr("duplicate"));
}

TEST(SerializationTest, TraceRoundTrips) {
  auto gt = GenerateGroundTruth(SmallNetwork());
  ASSERT_TRUE(gt.ok());
  std::ostringstream out;
  ASSERT_TRUE(WriteTraceJsonl(gt->traces, out).ok());
  std::istringstream in(out.str());
  auto back = ReadTraceJsonl(in, gt->traces.relay_ids());
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(back->events(), gt->traces.events());
  EXPECT_EQ(back->relay_ids(), gt->traces.relay_ids());
}

TEST(SerializationTest, TraceLinesHaveFixedFieldOrder) {
  Event e;
  e.relay_id = 3;
  e.simulated_time = 17;
  e.sequence = 4;
  e.payload = DescriptorFetch{"abcdefghijklmnop", false};
  EXPECT_EQ(EventToJson(e).dump(),
            R"({"relay_id":3,"time":17,"seq":4,"kind":"DescriptorFetch","onion":"abcdefghijklmnop","hit":false})");
}

TEST(SerializationTest, MalformedTraceLineIsRejected) {
  std::istringstream in("{\"relay_id\":1}\n");
  EXPECT_FALSE(ReadTraceJsonl(in).ok());
  std::istringstream garbage("not json\n");
  EXPECT_FALSE(ReadTraceJsonl(garbage).ok());
}

TEST(SerializationTest, TruthAndConfigRoundTrip) {
  const GroundTruthConfig c = SmallNetwork();
  auto gt = GenerateGroundTruth(c);
  ASSERT_TRUE(gt.ok());
  auto truth = TruthFromJson(TruthToJson(gt->truth));
  ASSERT_TRUE(truth.ok()) << truth.status();
  EXPECT_EQ(*truth, gt->truth);

  auto config = ConfigFromJson(nlohmann::json::parse(ConfigToJson(c).dump()));
  ASSERT_TRUE(config.ok()) << config.status();
  EXPECT_EQ(ConfigToJson(*config).dump(), ConfigToJson(c).dump());
}

TEST(ZipfSamplerTest, ProbabilitiesFollowPowerLaw) {
  ZipfSampler z(100, 1.0);
  double total = 0.0;
  for (uint32_t i = 0; i < 100; ++i) total += z.Probability(i);
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(z.Probability(0) / z.Probability(9), 10.0, 1e-9);
  EXPECT_EQ(z.Sample(0.0), 0u);
  EXPECT_EQ(z.Sample(0.999999999), 99u);
}

TEST(NamingTest, SyntheticNamesAreStable) {
  DomainPopularity d;
  EXPECT_EQ(DomainHostname(7, d), "www." + DomainRegistrableName(7, d));
  EXPECT_THAT(DomainRegistrableName(7, d), ::testing::StartsWith("d7."));
  EXPECT_EQ(OnionAddress(5).size(), 16u);
  EXPECT_NE(OnionAddress(5), OnionAddress(6));
  EXPECT_NE(ClientIp(0), ClientIp(1));
}

}  // namespace
}  // namespace privmeasure::events

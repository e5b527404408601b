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

#include <cmath>
#include <map>
#include <random>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "privmeasure/events/ground_truth.h"
#include "privmeasure/privcount/counters.h"
#include "privmeasure/privcount/protocol.h"

namespace privmeasure::privcount {
namespace {

using events::Event;
using events::ExitStream;
using events::TargetType;

constexpr uint64_t kQ = kDefaultModulus;

std::shared_ptr<const std::vector<CounterFamily>> Families(std::vector<CounterFamily> f) {
  return std::make_shared<const std::vector<CounterFamily>>(std::move(f));
}

std::map<std::string, privacy::NoiseSpec> ZeroNoise(const std::vector<CounterFamily>& families) {
  std::map<std::string, privacy::NoiseSpec> out;
  for (const CounterSpec& s : CounterSpecs(families)) {
    privacy::NoiseSpec n;
    n.counter_id = s.counter_id;
    out[s.counter_id] = n;
  }
  return out;
}

Event Stream(bool initial, TargetType type, uint16_t port, uint64_t bytes = 10) {
  return Event{1, 5, 0, ExitStream{initial, type, "www.example.com", port, bytes}};
}

// Replays the frozen noise draw independently of the protocol code.
int64_t ReplayNoise(uint64_t root, const std::string& round, uint32_t dc, const std::string& counter,
                    double sigma) {
  if (sigma == 0) return 0;
  Rng rng(NoiseSeed(root, round, dc, counter));
  std::normal_distribution<double> n(0.0, sigma);
  return std::llround(n(rng));
}

TEST(ModArithTest, Basics) {
  EXPECT_EQ(AddMod(kQ - 1, 2, kQ), 1u);
  EXPECT_EQ(SubMod(1, 2, kQ), kQ - 1);
  EXPECT_EQ(ToResidue(-1, kQ), kQ - 1);
  EXPECT_EQ(LiftSigned(kQ - 1, kQ), -1);
  EXPECT_EQ(LiftSigned(kQ / 2, kQ), static_cast<int64_t>(kQ / 2));
  EXPECT_EQ(LiftSigned(kQ / 2 + 1, kQ), -static_cast<int64_t>(kQ / 2));
  EXPECT_EQ(LiftSigned(ToResidue(-123456789, kQ), kQ), -123456789);
}

TEST(DcInitTest, NoNoiseSingleShareKeeper) {
  const auto fam = Families({ExitBytesFamily()});
  DataCollector::Options opt;
  auto init = DataCollector::InitRound(opt, fam, ZeroNoise(*fam), {0});
  ASSERT_TRUE(init.ok()) << init.status();
  ASSERT_EQ(init->second.size(), 1u);
  EXPECT_EQ(*init->first.Value("exit/bytes"), init->second[0].share);
}

TEST(DcInitTest, NoNoiseSharesAdd) {
  const auto fam = Families({ExitBytesFamily()});
  auto init = DataCollector::InitRound({}, fam, ZeroNoise(*fam), {0, 1});
  ASSERT_TRUE(init.ok());
  EXPECT_EQ(*init->first.Value("exit/bytes"),
            AddMod(init->second[0].share, init->second[1].share, kQ));
}

TEST(DcInitTest, Errors) {
  const auto fam = Families({ExitBytesFamily()});
  EXPECT_FALSE(DataCollector::InitRound({}, fam, ZeroNoise(*fam), {}).ok());
  EXPECT_FALSE(DataCollector::InitRound({}, fam, {}, {0}).ok());
}

TEST(DcObserveTest, HostnameWebStreamWalksTaxonomyChain) {
  const auto fam = Families(ExitStreamFamilies());
  auto init = DataCollector::InitRound({}, fam, ZeroNoise(*fam), {0});
  ASSERT_TRUE(init.ok());
  DataCollector& dc = init->first;
  std::map<std::string, uint64_t> before;
  for (const CounterSpec& s : CounterSpecs(*fam)) before[s.counter_id] = *dc.Value(s.counter_id);
  ASSERT_TRUE(dc.Observe(Stream(true, TargetType::kHostname, 443)).ok());
  std::set<std::string> moved;
  for (const auto& [id, v] : before) {
    if (*dc.Value(id) != v) moved.insert(id);
  }
  EXPECT_THAT(moved, ::testing::UnorderedElementsAre("streams/total", "streams/initial",
                                                     "streams/initial/hostname",
                                                     "streams/initial/hostname/web"));
}

TEST(DcObserveTest, Ipv4StreamOnlyMovesInitialAndIpv4) {
  const auto fam = Families(ExitStreamFamilies());
  auto init = DataCollector::InitRound({}, fam, ZeroNoise(*fam), {0});
  DataCollector& dc = init->first;
  std::map<std::string, uint64_t> before;
  for (const CounterSpec& s : CounterSpecs(*fam)) before[s.counter_id] = *dc.Value(s.counter_id);
  ASSERT_TRUE(dc.Observe(Stream(true, TargetType::kIpv4, 443)).ok());
  std::set<std::string> moved;
  for (const auto& [id, v] : before) {
    if (*dc.Value(id) != v) moved.insert(id);
  }
  EXPECT_THAT(moved, ::testing::UnorderedElementsAre("streams/total", "streams/initial",
                                                     "streams/initial/ipv4"));
}

TEST(DcObserveTest, ByteCounterAddsBytesAndWindowIsEnforced) {
  const auto fam = Families(EntryFamilies());
  auto init = DataCollector::InitRound({}, fam, ZeroNoise(*fam), {0});
  DataCollector& dc = init->first;
  const uint64_t before = *dc.Value("entry/bytes");
  ASSERT_TRUE(dc.Observe(Event{1, 10, 0, events::EntryBytes{777, "AA"}}).ok());
  EXPECT_EQ(*dc.Value("entry/bytes"), AddMod(before, 777, kQ));
  EXPECT_EQ(dc.Observe(Event{1, 86400, 1, events::EntryBytes{1, "AA"}}).code(),
            absl::StatusCode::kOutOfRange);
  EXPECT_EQ(dc.Observe(Event{1, -1, 1, events::EntryBytes{1, "AA"}}).code(),
            absl::StatusCode::kOutOfRange);
}

TEST(ShareKeeperTest, SumsAndIncompleteness) {
  ShareKeeper one("r", 0, kQ, {7}, {"c"});
  ASSERT_TRUE(one.Receive({"r", 7, 0, "c", 42}).ok());
  EXPECT_EQ(one.SumShares()[0].value, 42u);

  ShareKeeper two("r", 0, kQ, {1, 2}, {"c"});
  ASSERT_TRUE(two.Receive({"r", 1, 0, "c", kQ - 1}).ok());
  EXPECT_TRUE(two.SumShares()[0].incomplete);
  ASSERT_TRUE(two.Receive({"r", 2, 0, "c", 5}).ok());
  EXPECT_FALSE(two.SumShares()[0].incomplete);
  EXPECT_EQ(two.SumShares()[0].value, 4u);
  EXPECT_FALSE(two.Receive({"r", 2, 0, "c", 5}).ok());
  EXPECT_FALSE(two.Receive({"x", 3, 0, "c", 5}).ok());
  EXPECT_FALSE(two.Receive({"r", 1, 0, "d", 5}).ok());
}

// Builds a round over a hand-made trace split across DCs.
struct Manual {
  std::vector<CounterFamily> families;
  RoundConfig config;
  std::map<uint32_t, std::vector<Event>> events;
};

Manual FiveStreamsPerDc() {
  Manual m;
  m.families = {ExitBytesFamily(), ExitStreamFamilies()[0]};
  m.config.families = Families(m.families);
  m.config.noise = ZeroNoise(m.families);
  m.config.dc_ids = {0, 1};
  for (uint32_t dc : {0u, 1u}) {
    for (int i = 0; i < 5; ++i) m.events[dc].push_back(Stream(i == 0, TargetType::kHostname, 443, 3));
  }
  return m;
}

std::map<std::string, CounterResult> ByCounter(const RoundOutput& out) {
  std::map<std::string, CounterResult> m;
  for (const CounterResult& r : out.results) m[r.counter_id] = r;
  return m;
}

TEST(TallyTest, NoEventsNoNoiseIsZero) {
  Manual m = FiveStreamsPerDc();
  m.events.clear();
  InMemoryTransport t;
  auto out = RunRound(m.config, m.events, t);
  ASSERT_TRUE(out.ok()) << out.status();
  for (const CounterResult& r : out->results) {
    EXPECT_TRUE(r.complete);
    EXPECT_EQ(r.noisy_total, 0);
  }
}

TEST(TallyTest, TwoDcsFiveEventsEach) {
  Manual m = FiveStreamsPerDc();
  InMemoryTransport t;
  auto out = RunRound(m.config, m.events, t);
  ASSERT_TRUE(out.ok());
  auto r = ByCounter(*out);
  EXPECT_EQ(r["streams/total"].noisy_total, 10);
  EXPECT_EQ(r["exit/bytes"].noisy_total, 30);
}

TEST(TallyTest, DropoutMarksIncomplete) {
  for (int mode = 0; mode < 3; ++mode) {
    Manual m = FiveStreamsPerDc();
    if (mode == 0) m.config.dc_fail_before_init = {1};
    if (mode == 1) m.config.dc_fail_before_report = {1};
    if (mode == 2) m.config.sk_fail = {2};
    InMemoryTransport t;
    auto out = RunRound(m.config, m.events, t);
    ASSERT_TRUE(out.ok()) << out.status();
    for (const CounterResult& r : out->results) {
      EXPECT_FALSE(r.complete) << mode;
      EXPECT_FALSE(r.missing.empty());
      EXPECT_FALSE(CounterResultToJson(r).contains("noisy_total"));
    }
  }
}

TEST(TallyTest, RejectsForeignAndUnreducedValues) {
  TallyServer ts("r", 101, {0}, {0}, {{"c", 0.0}});
  EXPECT_FALSE(ts.Receive({"r", "dc:0", "c", 101, false}).ok());
  EXPECT_FALSE(ts.Receive({"r", "dc:9", "c", 1, false}).ok());
  EXPECT_FALSE(ts.Receive({"q", "dc:0", "c", 1, false}).ok());
  EXPECT_FALSE(ts.Receive({"r", "dc:0", "zz", 1, false}).ok());
  EXPECT_TRUE(ts.Receive({"r", "dc:0", "c", 1, false}).ok());
  EXPECT_FALSE(ts.Receive({"r", "dc:0", "c", 1, false}).ok());
}

TEST(TallyTest, SeededNoiseReplaysExactlyWithoutEvents) {
  std::vector<CounterFamily> fams = EntryFamilies();
  RoundConfig c;
  c.round_id = "noise-replay";
  c.root_seed = 99;
  c.families = Families(fams);
  c.dc_ids = {0, 1, 2, 3};
  auto noise = BuildNoiseSpecs(fams, privacy::PrivacyConfig{});
  ASSERT_TRUE(noise.ok());
  c.noise = *noise;
  InMemoryTransport t;
  auto out = RunRound(c, {}, t);
  ASSERT_TRUE(out.ok());
  for (const CounterResult& r : out->results) {
    int64_t expected = 0;
    for (uint32_t dc : c.dc_ids) {
      expected += ReplayNoise(99, c.round_id, dc, r.counter_id, c.noise[r.counter_id].sigma / 2.0);
    }
    EXPECT_EQ(r.noisy_total, expected) << r.counter_id;
    EXPECT_NE(expected, 0);
  }
}

TEST(BlindingTest, MissingShareKeeperOffsetsByItsShareSum) {
  Manual m = FiveStreamsPerDc();
  const std::vector<uint32_t> sks = {0, 1, 2};
  std::vector<DataCollector> dcs;
  std::vector<ShareKeeper> keepers;
  for (uint32_t s : sks) keepers.emplace_back("round", s, kQ, m.config.dc_ids, std::vector<std::string>{"streams/total", "exit/bytes"});
  for (uint32_t d : m.config.dc_ids) {
    DataCollector::Options o;
    o.round_id = "round";
    o.dc_id = d;
    auto init = DataCollector::InitRound(o, m.config.families, m.config.noise, sks);
    ASSERT_TRUE(init.ok());
    for (const ShareMessage& s : init->second) ASSERT_TRUE(keepers[s.sk_id].Receive(s).ok());
    for (const Event& e : m.events[d]) ASSERT_TRUE(init->first.Observe(e).ok());
    dcs.push_back(std::move(init->first));
  }
  // A TS that only knows SKs 0 and 1 reconstructs truth + SK 2's share sum.
  TallyServer partial("round", kQ, m.config.dc_ids, {0, 1}, {{"streams/total", 0.0}});
  for (const DataCollector& dc : dcs) {
    for (const ValueMessage& v : dc.Report()) {
      if (v.counter_id == "streams/total") ASSERT_TRUE(partial.Receive(v).ok());
    }
  }
  uint64_t missing_sum = 0;
  for (size_t k = 0; k < 2; ++k) {
    for (const ValueMessage& v : keepers[k].SumShares()) {
      if (v.counter_id == "streams/total") ASSERT_TRUE(partial.Receive(v).ok());
    }
  }
  for (const ValueMessage& v : keepers[2].SumShares()) {
    if (v.counter_id == "streams/total") missing_sum = v.value;
  }
  const CounterResult r = partial.Aggregate()[0];
  ASSERT_TRUE(r.complete);
  EXPECT_EQ(ToResidue(r.noisy_total, kQ), AddMod(10, missing_sum, kQ));
}

TEST(ObliviousStateTest, ResidueUniformAcrossShareSeeds) {
  constexpr uint64_t q = 101;
  const auto fam = Families({ExitBytesFamily()});
  std::vector<int> hist(q);
  constexpr int kDraws = 10000;
  for (int seed = 0; seed < kDraws; ++seed) {
    DataCollector::Options o;
    o.modulus = q;
    o.root_seed = seed;
    auto init = DataCollector::InitRound(o, fam, ZeroNoise(*fam), {0});
    ++hist[*init->first.Value("exit/bytes")];
  }
  const double expected = kDraws / static_cast<double>(q);
  double chi2 = 0;
  for (int h : hist) chi2 += (h - expected) * (h - expected) / expected;
  // 100 degrees of freedom; 99.9th percentile is about 149.4.
  EXPECT_LT(chi2, 149.4);
}

TEST(MessageJsonTest, RoundTrip) {
  const ShareMessage s{"r1", 3, 2, "entry/bytes", kQ - 5};
  auto s2 = ShareMessageFromJson(nlohmann::json::parse(ShareMessageToJson(s).dump()));
  ASSERT_TRUE(s2.ok());
  EXPECT_EQ(s2->share, kQ - 5);
  EXPECT_EQ(s2->counter_id, "entry/bytes");
  const ValueMessage v{"r1", "sk:1", "c", 9, true};
  auto v2 = ValueMessageFromJson(nlohmann::json::parse(ValueMessageToJson(v).dump()));
  EXPECT_TRUE(v2->incomplete);
  EXPECT_EQ(v2->sender, "sk:1");
  EXPECT_FALSE(ValueMessageFromJson(nlohmann::json::parse(R"({"round_id":"r"})")).ok());
}

TEST(NoiseSpecTest, SensitivityPerFamily) {
  std::vector<CounterFamily> fams = ExitStreamFamilies();
  for (auto& f : EntryFamilies()) fams.push_back(f);
  for (auto& f : RendezvousFamilies()) fams.push_back(f);
  auto specs = BuildNoiseSpecs(fams, privacy::PrivacyConfig{});
  ASSERT_TRUE(specs.ok());
  EXPECT_EQ((*specs)["streams/initial/hostname/web"].sensitivity, 20);
  EXPECT_EQ((*specs)["entry/circuits"].sensitivity, 651);
  EXPECT_EQ((*specs)["entry/connections"].sensitivity, 12);
  EXPECT_EQ((*specs)["rendezvous/cells"].sensitivity, std::ceil(400e6 / 498));
  EXPECT_NEAR((*specs)["streams/total"].epsilon_share, 0.3 / fams.size(), 1e-15);
  std::vector<CounterFamily> dup = {ExitBytesFamily(), ExitBytesFamily()};
  EXPECT_FALSE(BuildNoiseSpecs(dup, privacy::PrivacyConfig{}).ok());
}

TEST(MatcherFamiliesTest, PrimaryDomainsRouteToOneBin) {
  auto buckets = matchers::RankBuckets::Create({{1, "example.com"}, {50, "other.org"}});
  ASSERT_TRUE(buckets.ok());
  auto rank = DomainRankFamily(std::make_shared<matchers::RankBuckets>(*buckets));
  auto tld = TldFamily(std::make_shared<matchers::TldRules>(*matchers::TldRules::Parse("*.com\n*.org\n")));
  auto set = DomainSetFamily(std::make_shared<matchers::DomainSet>(
      *matchers::DomainSet::Create("ex", matchers::MatchMode::kSuffixWildcard, {"example.com"})));
  const Event primary = Stream(true, TargetType::kHostname, 443);
  EXPECT_EQ(rank.counter_ids[rank.classify(primary)->bin], "exit/primary/rank/rank0");
  EXPECT_EQ(tld.counter_ids[tld.classify(primary)->bin], "exit/primary/tld/com");
  EXPECT_TRUE(set.classify(primary).has_value());
  const Event nonweb = Stream(true, TargetType::kHostname, 22);
  EXPECT_FALSE(rank.classify(nonweb).has_value());
  EXPECT_FALSE(tld.classify(Stream(false, TargetType::kHostname, 443)).has_value());
}

events::GroundTruthConfig FullNetwork(uint64_t seed) {
  events::GroundTruthConfig c;
  c.n_clients = 40;
  c.n_promiscuous_clients = 2;
  c.rng_seed = seed;
  c.onions.addresses = 10;
  c.rendezvous.attempts_per_day = 20;
  c.rendezvous.mean_cells_per_active_circuit = 50;
  for (uint32_t id = 1; id <= 16; ++id) {
    events::RelaySpec r;
    r.id = id;
    r.guard = r.exit = r.hsdir = r.rendezvous = true;
    r.guard_weight = r.exit_weight = r.hsdir_weight = r.rendezvous_weight = 1.0 / 16;
    c.relays.push_back(r);
  }
  return c;
}

// Share cancellation against the generator's truth, which is tallied
// independently of the counter classifiers.
TEST(ShareCancellationTest, TotalMinusTruthEqualsReplayedNoise) {
  std::vector<CounterFamily> fams = ExitStreamFamilies();
  fams.push_back(ExitBytesFamily());
  for (auto& f : EntryFamilies()) fams.push_back(f);
  for (auto& f : HsdirFamilies()) fams.push_back(f);
  for (auto& f : RendezvousFamilies()) fams.push_back(f);
  auto noise = BuildNoiseSpecs(fams, privacy::PrivacyConfig{});
  ASSERT_TRUE(noise.ok());
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    auto gt = events::GenerateGroundTruth(FullNetwork(seed));
    ASSERT_TRUE(gt.ok());
    RoundConfig c;
    c.round_id = "r" + std::to_string(seed);
    c.root_seed = seed * 7;
    c.families = Families(fams);
    c.noise = *noise;
    std::map<uint32_t, std::vector<Event>> by_dc;
    for (uint32_t id = 1; id <= 16; ++id) {
      c.dc_ids.push_back(id);
      by_dc[id] = *gt->traces.EventsForRelay(id);
    }
    InMemoryTransport t;
    auto out = RunRound(c, by_dc, t);
    ASSERT_TRUE(out.ok()) << out.status();
    for (const CounterResult& r : out->results) {
      ASSERT_TRUE(gt->truth.totals.contains(r.counter_id)) << r.counter_id;
      int64_t noise_sum = 0;
      for (uint32_t dc : c.dc_ids) {
        noise_sum += ReplayNoise(c.root_seed, c.round_id, dc, r.counter_id, c.noise[r.counter_id].sigma / 4.0);
      }
      const auto truth = static_cast<int64_t>(gt->truth.totals.at(r.counter_id));
      EXPECT_EQ(r.noisy_total - truth, noise_sum) << r.counter_id << " seed " << seed;
    }
  }
}

TEST(RoutingTest, AtMostOneBinPerFamilyOnGeneratedTraces) {
  auto gt = events::GenerateGroundTruth(FullNetwork(3));
  ASSERT_TRUE(gt.ok());
  std::vector<CounterFamily> fams = ExitStreamFamilies();
  for (auto& f : HsdirFamilies()) fams.push_back(f);
  for (auto& f : RendezvousFamilies()) fams.push_back(f);
  fams.push_back(CountryHistogram(events::EventKind::kEntryConnection, {"AA", "AB"}));
  for (const Event& e : gt->traces.events()) {
    for (const CounterFamily& f : fams) {
      if (f.kind != e.kind()) continue;
      auto inc = f.classify(e);
      if (inc) EXPECT_LT(inc->bin, f.counter_ids.size());
    }
  }
}

}  // namespace
}  // namespace privmeasure::privcount

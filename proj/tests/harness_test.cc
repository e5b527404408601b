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

#include "privmeasure/harness/harness.h"

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <random>

#include "privmeasure/harness/deployment.h"
#include "privmeasure/privacy/schedule.h"

namespace privmeasure::harness {
namespace {

using privacy::Protocol;
using privacy::ScheduledRound;
using ::testing::ElementsAre;
namespace tk = events::truth_keys;

constexpr int64_t kDay = 86400;

// 8 relays with every role and equal weight; the first `instrumented` emit
// events.
DeploymentConfig SmallDeployment(uint64_t n_clients = 300, uint32_t instrumented = 8) {
  DeploymentConfig c;
  c.data_dir = PRIVMEASURE_DATA_DIR;
  c.privcount.num_dcs = 4;
  c.psc.num_dcs = 4;
  c.psc.group = psc::GroupKind::kSimulationZq;
  c.psc.log2_bins = 14;
  c.root_seed = 11;
  c.mc.trials = 40;
  events::GroundTruthConfig& n = c.network;
  n.n_clients = n_clients;
  n.n_promiscuous_clients = 3;
  n.domains.universe_size = 400;
  n.onions.addresses = 60;
  n.rendezvous.attempts_per_day = 300;
  n.rendezvous.mean_cells_per_active_circuit = 40;
  n.rng_seed = 5;
  for (uint32_t id = 1; id <= 8; ++id) {
    events::RelaySpec r;
    r.id = id;
    r.guard = r.exit = r.hsdir = r.rendezvous = true;
    r.guard_weight = r.exit_weight = r.hsdir_weight = r.rendezvous_weight = 1.0 / 8;
    r.instrumented = id <= instrumented;
    n.relays.push_back(r);
  }
  return c;
}

ScheduledRound Round(std::string id, Protocol p, std::set<std::string> stats, int64_t start,
                     int64_t end) {
  return ScheduledRound{std::move(id), p, std::move(stats), start, end};
}

const StatisticReport* Find(const RoundReport& r, std::string_view name) {
  for (const auto& s : r.statistics) {
    if (s.statistic == name) return &s;
  }
  return nullptr;
}

TEST(DeploymentTest, DefaultsMatchTheReferenceTopology) {
  DeploymentConfig c;
  EXPECT_EQ(c.privcount.num_sks, 3u);
  EXPECT_EQ(c.privcount.num_dcs, 16u);
  EXPECT_EQ(c.psc.num_cps, 3u);
  EXPECT_EQ(c.psc.num_dcs, 16u);
  EXPECT_EQ(c.transport, "in-memory");
}

TEST(DeploymentTest, RejectsBadPartyCountsAndTransports) {
  DeploymentConfig c = SmallDeployment();
  ASSERT_TRUE(ValidateDeployment(c).ok());
  c.privcount.num_sks = 0;
  EXPECT_FALSE(ValidateDeployment(c).ok());
  c = SmallDeployment();
  c.psc.num_cps = 0;
  EXPECT_FALSE(ValidateDeployment(c).ok());
  c = SmallDeployment();
  c.transport = "tcp";
  EXPECT_FALSE(ValidateDeployment(c).ok());
  c = SmallDeployment();
  c.faults.sk = {3};
  EXPECT_FALSE(ValidateDeployment(c).ok());
}

TEST(DeploymentTest, EveryMeasuredRelayNeedsADc) {
  DeploymentConfig c = SmallDeployment();
  auto rr = RelayDcMap(c, 3);
  ASSERT_TRUE(rr.ok());
  EXPECT_EQ(rr->size(), 8u);
  EXPECT_EQ(rr->at(1), 0u);
  EXPECT_EQ(rr->at(4), 0u);
  EXPECT_EQ(rr->at(8), 1u);

  for (uint32_t id = 1; id <= 7; ++id) c.relay_to_dc[id] = 0;
  EXPECT_FALSE(RelayDcMap(c, 4).ok());
  c.relay_to_dc[8] = 9;
  EXPECT_FALSE(RelayDcMap(c, 4).ok());
  c.relay_to_dc[8] = 3;
  EXPECT_TRUE(RelayDcMap(c, 4).ok());

  c = SmallDeployment(300, 4);
  c.round_relays["r"] = {7};
  EXPECT_FALSE(ValidateDeployment(c).ok());
}

TEST(DeploymentTest, JsonRoundTrip) {
  DeploymentConfig c = SmallDeployment();
  c.relay_to_dc = {{1, 0}, {2, 1}, {3, 2}, {4, 3}, {5, 0}, {6, 1}, {7, 2}, {8, 3}};
  c.round_relays["a"] = {1, 2};
  c.faults.cp = {1};
  c.schedule = {Round("a", Protocol::kPsc, {"unique_client_ips"}, 0, kDay)};
  const auto j = DeploymentToJson(c);
  auto back = DeploymentFromJson(nlohmann::json::parse(j.dump()));
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(DeploymentToJson(*back).dump(), j.dump());
  EXPECT_EQ(back->psc.group, psc::GroupKind::kSimulationZq);
  EXPECT_EQ(back->schedule, c.schedule);

  EXPECT_FALSE(DeploymentFromJson(nlohmann::json::parse(R"({"psc": {"group": "p256"}})")).ok());
  EXPECT_FALSE(DeploymentFromJson(nlohmann::json::parse("[1]")).ok());
}

TEST(CatalogTest, NamesAreUniqueAndResolvable) {
  std::set<std::string> names;
  for (const auto& s : Catalog()) {
    EXPECT_TRUE(names.insert(s.name).second) << s.name;
    if (s.protocol == Protocol::kPrivCount) {
      EXPECT_TRUE(FamiliesFor(s, SmallDeployment()).ok()) << s.name;
    } else {
      EXPECT_TRUE(PscStatisticFor(s, SmallDeployment()).ok()) << s.name;
    }
  }
  EXPECT_FALSE(FindStatistic("nope").ok());
}

TEST(CampaignTest, EmptyScheduleGivesEmptyReport) {
  auto r = RunCampaign(SmallDeployment(), {});
  ASSERT_TRUE(r.ok());
  EXPECT_TRUE(r->rounds.empty());
  EXPECT_TRUE(r->analyses.empty());
  EXPECT_EQ(r->with_truth, 0u);
  EXPECT_TRUE(r->schedule_audit["accepted"].get<bool>());
}

TEST(CampaignTest, RefusesParallelProtocols) {
  const std::vector<ScheduledRound> s = {
      Round("pc", Protocol::kPrivCount, {"exit_bytes"}, 0, kDay),
      Round("psc", Protocol::kPsc, {"unique_client_ips"}, kDay / 2, kDay + kDay / 2)};
  auto r = RunCampaign(SmallDeployment(), s);
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(absl::IsFailedPrecondition(r.status()));
}

TEST(CampaignTest, MixedProtocolsRunInStartOrderWithoutOverlap) {
  const std::vector<ScheduledRound> s = {
      Round("psc", Protocol::kPsc, {"unique_client_ips"}, 2 * kDay, 3 * kDay),
      Round("pc", Protocol::kPrivCount, {"exit_bytes"}, 0, kDay),
      Round("pc2", Protocol::kPrivCount, {"entry_activity"}, 4 * kDay, 5 * kDay)};
  auto r = RunCampaign(SmallDeployment(), s);
  ASSERT_TRUE(r.ok()) << r.status();
  ASSERT_EQ(r->rounds.size(), 3u);
  EXPECT_EQ(r->rounds[0].round.round_id, "pc");
  EXPECT_EQ(r->rounds[1].round.round_id, "psc");
  EXPECT_EQ(r->rounds[2].round.round_id, "pc2");
  for (size_t i = 1; i < r->rounds.size(); ++i) {
    EXPECT_GE(r->rounds[i].round.start, r->rounds[i - 1].round.end);
  }
  EXPECT_GT(r->with_truth, 0u);
}

TEST(RoundTest, StreamTaxonomyBreakdown) {
  DeploymentConfig c = SmallDeployment(1500);
  c.privacy.params.epsilon = 1e4;  // negligible noise
  const auto round = Round("streams", Protocol::kPrivCount, {"exit_streams"}, 0, kDay);
  auto trace = GenerateRoundTrace(c, round);
  ASSERT_TRUE(trace.ok());
  auto r = RunRound(c, round, *trace, true);
  ASSERT_TRUE(r.ok()) << r.status();
  std::vector<std::string> ids;
  for (const auto& s : r->statistics) ids.push_back(s.statistic);
  EXPECT_THAT(ids, ElementsAre("streams/total", "streams/initial", "streams/subsequent",
                               "streams/initial/hostname", "streams/initial/ipv4",
                               "streams/initial/ipv6", "streams/initial/hostname/web",
                               "streams/initial/hostname/nonweb"));
  auto v = [&](std::string_view id) { return *Find(*r, id)->local_truth; };
  auto t = [&](std::string_view id) { return *Find(*r, id)->truth; };
  for (auto get : {std::function<double(std::string_view)>(v), std::function<double(std::string_view)>(t)}) {
    EXPECT_EQ(get("streams/total"), get("streams/initial") + get("streams/subsequent"));
    EXPECT_EQ(get("streams/initial"), get("streams/initial/hostname") + get("streams/initial/ipv4") +
                                          get("streams/initial/ipv6"));
    EXPECT_EQ(get("streams/initial/hostname"),
              get("streams/initial/hostname/web") + get("streams/initial/hostname/nonweb"));
  }
  // Every relay is measured, so local and network views coincide.
  for (const auto& s : r->statistics) {
    EXPECT_DOUBLE_EQ(s.fraction, 1.0);
    EXPECT_EQ(*s.local_truth, *s.truth) << s.statistic;
    ASSERT_TRUE(s.local.has_value());
    EXPECT_NEAR(s.local->point, *s.local_truth, 2.0) << s.statistic;
    EXPECT_TRUE(s.covered.value_or(false)) << s.statistic;
    EXPECT_EQ(s.noise["counter_id"], s.statistic);
  }
}

TEST(RoundTest, RendezvousOutcomeSharesSumToOne) {
  DeploymentConfig c = SmallDeployment();
  c.privacy.params.epsilon = 1e4;
  const auto round = Round("rend", Protocol::kPrivCount, {"rendezvous_activity"}, 0, kDay);
  auto trace = GenerateRoundTrace(c, round);
  ASSERT_TRUE(trace.ok());
  auto r = RunRound(c, round, *trace, true);
  ASSERT_TRUE(r.ok()) << r.status();
  for (bool network : {false, true}) {
    auto get = [&](std::string_view id) {
      const auto* s = Find(*r, id);
      return network ? *s->truth : *s->local_truth;
    };
    const double total = get(tk::kRendCircuits);
    ASSERT_GT(total, 0.0);
    const double shares = get(tk::kRendSucceeded) / total + get(tk::kRendConnClosed) / total +
                          get(tk::kRendExpired) / total;
    EXPECT_NEAR(shares, 1.0, 1e-12);
    // A spliced rendezvous is two circuits at the RP.
    EXPECT_EQ(std::fmod(get(tk::kRendSucceeded), 2.0), 0.0);
  }
}

TEST(RoundTest, PscClientIpsReportCoverage) {
  DeploymentConfig c = SmallDeployment(2000, 4);
  const auto round = Round("ips", Protocol::kPsc, {"unique_client_ips"}, 0, kDay);
  auto trace = GenerateRoundTrace(c, round);
  ASSERT_TRUE(trace.ok());
  auto r = RunRound(c, round, *trace, true);
  ASSERT_TRUE(r.ok()) << r.status();
  ASSERT_EQ(r->statistics.size(), 1u);
  const StatisticReport& s = r->statistics[0];
  EXPECT_EQ(s.statistic, "unique_client_ips");
  EXPECT_TRUE(s.complete);
  EXPECT_NEAR(s.fraction, 0.5, 1e-12);
  ASSERT_TRUE(s.local && s.network && s.truth && s.covered);
  EXPECT_EQ(*s.truth, 2003.0);
  EXPECT_EQ(*s.covered, s.network->Contains(*s.truth));
  EXPECT_TRUE(s.local->Contains(*s.local_truth));
  EXPECT_EQ(s.noise["group"], "zq-sim");
}

TEST(RoundTest, PscDcDropoutShrinksTheFraction) {
  DeploymentConfig c = SmallDeployment(500);
  c.faults.psc_dc = {1};
  const auto round = Round("ips", Protocol::kPsc, {"unique_client_ips"}, 0, kDay);
  auto trace = GenerateRoundTrace(c, round);
  ASSERT_TRUE(trace.ok());
  auto r = RunRound(c, round, *trace, true);
  ASSERT_TRUE(r.ok()) << r.status();
  const StatisticReport& s = r->statistics[0];
  EXPECT_TRUE(s.complete);
  EXPECT_NEAR(s.fraction, 0.75, 1e-12);
  EXPECT_EQ(s.noise["missing_dcs"], nlohmann::ordered_json({1}));
}

TEST(RoundTest, LostCpOrDcLeavesResultsIncomplete) {
  DeploymentConfig c = SmallDeployment();
  c.faults.cp = {2};
  const auto psc_round = Round("ips", Protocol::kPsc, {"unique_client_ips"}, 0, kDay);
  auto trace = GenerateRoundTrace(c, psc_round);
  ASSERT_TRUE(trace.ok());
  auto r = RunRound(c, psc_round, *trace, true);
  ASSERT_TRUE(r.ok()) << r.status();
  EXPECT_FALSE(r->statistics[0].complete);
  EXPECT_FALSE(r->statistics[0].local.has_value());
  EXPECT_FALSE(r->notes.empty());

  c = SmallDeployment();
  c.faults.privcount_dc_before_report = {0};
  const auto pc_round = Round("bytes", Protocol::kPrivCount, {"exit_bytes"}, 0, kDay);
  r = RunRound(c, pc_round, *trace, true);
  ASSERT_TRUE(r.ok()) << r.status();
  for (const auto& s : r->statistics) {
    EXPECT_FALSE(s.complete);
    EXPECT_FALSE(s.network.has_value());
    EXPECT_FALSE(s.covered.has_value());
  }
}

TEST(RoundTest, RejectsStatisticsOfTheOtherProtocol) {
  DeploymentConfig c = SmallDeployment();
  const auto round = Round("x", Protocol::kPsc, {"exit_bytes"}, 0, kDay);
  auto trace = GenerateRoundTrace(c, round);
  ASSERT_TRUE(trace.ok());
  EXPECT_FALSE(RunRound(c, round, *trace, true).ok());
}

TEST(RoundTest, SharedTraceScoresOnlyWholeWindowRounds) {
  DeploymentConfig c = SmallDeployment();
  c.network.num_days = 2;
  auto gt = events::GenerateGroundTruth(c.network);
  ASSERT_TRUE(gt.ok());
  const std::vector<ScheduledRound> s = {
      Round("half", Protocol::kPrivCount, {"exit_bytes"}, 0, kDay),
      Round("whole", Protocol::kPrivCount, {"exit_bytes"}, 0, 2 * kDay)};
  // Same statistic set, so the overlap is allowed.
  auto r = RunCampaign(c, s, &*gt);
  ASSERT_TRUE(r.ok()) << r.status();
  ASSERT_EQ(r->rounds.size(), 2u);
  EXPECT_FALSE(r->rounds[0].statistics[0].truth.has_value());
  EXPECT_TRUE(r->rounds[1].statistics[0].truth.has_value());
  EXPECT_EQ(*r->rounds[1].statistics[0].truth, *r->rounds[1].statistics[0].local_truth);
  EXPECT_LT(*r->rounds[0].statistics[0].local_truth, *r->rounds[1].statistics[0].local_truth);
}

TEST(CampaignTest, UniqueDomainAnalysisUsesWebStreamCount) {
  DeploymentConfig c = SmallDeployment(2000, 4);
  c.privacy.params.epsilon = 50;
  const std::vector<ScheduledRound> s = {
      Round("web", Protocol::kPrivCount, {"exit_streams"}, 0, kDay),
      Round("slds", Protocol::kPsc, {"unique_slds"}, 2 * kDay, 3 * kDay)};
  auto r = RunCampaign(c, s);
  ASSERT_TRUE(r.ok()) << r.status();
  ASSERT_EQ(r->analyses.size(), 1u);
  const AnalysisReport& a = r->analyses[0];
  EXPECT_EQ(a.name, "unique_domains");
  EXPECT_EQ(a.estimate.scope, inference::Scope::kNetwork);
  ASSERT_TRUE(a.truth.has_value());
  EXPECT_EQ(*a.covered, a.estimate.Contains(*a.truth));
  EXPECT_EQ(a.details["visits_round"], "web");
}

TEST(CampaignTest, ReportsAreByteReproducible) {
  DeploymentConfig c = SmallDeployment();
  const std::vector<ScheduledRound> s = {
      Round("a", Protocol::kPrivCount, {"exit_streams", "entry_countries"}, 0, kDay),
      Round("b", Protocol::kPsc, {"unique_countries"}, 2 * kDay, 3 * kDay)};
  auto r1 = RunCampaign(c, s);
  auto r2 = RunCampaign(c, s);
  ASSERT_TRUE(r1.ok() && r2.ok());
  EXPECT_EQ(RunReportToJson(*r1).dump(), RunReportToJson(*r2).dump());
  c.root_seed = 12;
  auto r3 = RunCampaign(c, s);
  ASSERT_TRUE(r3.ok());
  EXPECT_NE(RunReportToJson(*r1).dump(), RunReportToJson(*r3).dump());
}

TEST(CampaignTest, CoveredMatchesTruthInNetworkCi) {
  DeploymentConfig c = SmallDeployment(800, 6);
  c.privacy.params.epsilon = 3;
  const std::vector<ScheduledRound> s = {
      Round("a", Protocol::kPrivCount,
            {"exit_streams", "exit_bytes", "entry_activity", "entry_countries", "hsdir_activity",
             "rendezvous_activity", "exit_domain_tlds", "exit_domain_ranks"},
            0, kDay),
      Round("b", Protocol::kPsc, {"unique_onions_published", "unique_onions_fetched", "unique_ases"},
            2 * kDay, 3 * kDay)};
  auto r = RunCampaign(c, s);
  ASSERT_TRUE(r.ok()) << r.status();
  uint64_t scored = 0;
  for (const auto& rr : r->rounds) {
    for (const auto& st : rr.statistics) {
      EXPECT_TRUE(st.truth.has_value()) << st.statistic;
      if (!st.covered) continue;
      ++scored;
      EXPECT_EQ(*st.covered, st.network->Contains(*st.truth)) << st.statistic;
    }
  }
  EXPECT_EQ(scored, r->with_truth);
  // 95% intervals; a few misses are expected, many are not.
  EXPECT_GE(static_cast<double>(r->covered), 0.8 * static_cast<double>(r->with_truth));
  const auto j = RunReportToJson(*r);
  EXPECT_EQ(j["summary"]["with_truth"], r->with_truth);
}

// Random small schedules: the campaign runs exactly when validation passes.
TEST(CampaignTest, AcceptedIffScheduleValidates) {
  DeploymentConfig c = SmallDeployment(20);
  c.network.onions.addresses = 0;
  c.network.rendezvous.attempts_per_day = 0;
  std::mt19937_64 rng(99);
  const std::vector<std::pair<Protocol, std::string>> options = {
      {Protocol::kPrivCount, "exit_bytes"},
      {Protocol::kPrivCount, "entry_activity"},
      {Protocol::kPsc, "unique_countries"}};
  int accepted = 0;
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<ScheduledRound> s;
    const int n = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < n; ++i) {
      const auto& [p, stat] = options[rng() % options.size()];
      const int64_t start = static_cast<int64_t>(rng() % 8) * (kDay / 2);
      const int64_t len = kDay * (1 + static_cast<int64_t>(rng() % 2));
      s.push_back(Round("r" + std::to_string(i), p, {stat}, start, start + len));
    }
    const bool valid = privacy::ValidateSchedule(s).empty();
    auto r = RunCampaign(c, s);
    EXPECT_EQ(r.ok(), valid) << trial << ": " << r.status();
    if (r.ok()) {
      ++accepted;
      EXPECT_EQ(r->rounds.size(), s.size());
    }
  }
  EXPECT_GT(accepted, 5);
  EXPECT_LT(accepted, 55);
}

}  // namespace
}  // namespace privmeasure::harness

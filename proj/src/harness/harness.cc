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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absl/strings/str_cat.h"
#include "privmeasure/common/random.h"
#include "privmeasure/common/status_macros.h"
#include "privmeasure/events/geo.h"
#include "privmeasure/privcount/protocol.h"
#include "privmeasure/psc/psc.h"

#ifndef PRIVMEASURE_DEFAULT_DATA_DIR
#define PRIVMEASURE_DEFAULT_DATA_DIR "data"
#endif

namespace privmeasure::harness {
namespace {

using events::Event;
using events::EventKind;
using inference::Estimate;
using nlohmann::ordered_json;
using privacy::Protocol;
namespace tk = events::truth_keys;

constexpr char kWebStreams[] = "streams/initial/hostname/web";

std::string DataPath(const DeploymentConfig& config, std::string_view file) {
  const std::string dir = config.data_dir.empty() ? PRIVMEASURE_DEFAULT_DATA_DIR : config.data_dir;
  return absl::StrCat(dir, "/", std::string(file));
}

uint32_t RoundDays(const privacy::ScheduledRound& round, const privacy::PrivacyParams& params) {
  const int64_t len = round.end - round.start;
  const int64_t w = params.adjacency_window;
  return static_cast<uint32_t>(std::max<int64_t>(1, (len + w - 1) / w));
}

double RoleWeight(const events::RoleFractions& f, Role role) {
  switch (role) {
    case Role::kGuard:
      return f.guard;
    case Role::kExit:
      return f.exit;
    case Role::kHsdir:
      return f.hsdir;
    case Role::kRendezvous:
      return f.rendezvous;
  }
  return 0.0;
}

events::RoleFractions SumFractions(const events::TruthSummary& truth,
                                   const std::set<uint32_t>& relays) {
  events::RoleFractions sum;
  for (uint32_t id : relays) {
    auto it = truth.relay_fractions.find(id);
    if (it == truth.relay_fractions.end()) continue;
    sum.guard += it->second.guard;
    sum.exit += it->second.exit;
    sum.hsdir += it->second.hsdir;
    sum.rendezvous += it->second.rendezvous;
  }
  // Rounding can push a full network a hair above 1.
  auto clamp = [](double& v) { v = std::min(v, 1.0); };
  clamp(sum.guard);
  clamp(sum.exit);
  clamp(sum.hsdir);
  clamp(sum.rendezvous);
  return sum;
}

std::set<uint32_t> MeasuredRelays(const DeploymentConfig& config, const std::string& round_id) {
  auto it = config.round_relays.find(round_id);
  if (it != config.round_relays.end()) return it->second;
  std::set<uint32_t> all;
  for (const auto& r : config.network.relays) {
    if (r.instrumented) all.insert(r.id);
  }
  return all;
}

// In-window events of the measured relays, grouped by DC in relay-id order.
absl::StatusOr<std::map<uint32_t, std::vector<Event>>> EventsByDc(
    const events::Traces& traces, const std::set<uint32_t>& relays,
    const std::map<uint32_t, uint32_t>& relay_dc, const privacy::ScheduledRound& round,
    uint64_t* dropped) {
  std::map<uint32_t, std::vector<Event>> out;
  for (uint32_t id : relays) {
    if (!traces.HasRelay(id)) continue;
    ASSIGN_OR_RETURN(std::vector<Event> evs, traces.EventsForRelay(id));
    auto& dst = out[relay_dc.at(id)];
    for (Event& e : evs) {
      if (e.simulated_time < round.start || e.simulated_time >= round.end) {
        ++*dropped;
        continue;
      }
      dst.push_back(std::move(e));
    }
  }
  return out;
}

// Country histogram truth comes from the per-country maps; "other" is the
// remainder of the total.
std::optional<double> CountryTruth(const std::string& counter, const events::TruthSummary& truth) {
  struct Source {
    const char* prefix;
    const std::map<std::string, uint64_t>* by_country;
  };
  const Source sources[] = {
      {"entry/connections/country/", &truth.connections_by_country},
      {"entry/circuits/country/", &truth.circuits_by_country},
      {"entry/bytes/country/", &truth.bytes_by_country},
  };
  for (const Source& s : sources) {
    const std::string_view prefix = s.prefix;
    if (counter.compare(0, prefix.size(), prefix) != 0) continue;
    const std::string cc = counter.substr(prefix.size());
    if (cc != "other") {
      auto it = s.by_country->find(cc);
      return it == s.by_country->end() ? 0.0 : static_cast<double>(it->second);
    }
    return std::nullopt;
  }
  return std::nullopt;
}

// Network truth for every counter of the families.
std::map<std::string, double> CounterTruth(const std::vector<privcount::CounterFamily>& families,
                                           const events::TruthSummary& truth,
                                           const events::DomainPopularity& domains) {
  std::map<std::string, double> out;
  for (const auto& f : families) {
    const bool domain_family = f.family_id.rfind("exit/primary/", 0) == 0;
    if (domain_family) {
      std::vector<double> bins(f.counter_ids.size(), 0.0);
      for (size_t i = 0; i < truth.primary_visits_by_domain.size(); ++i) {
        const uint64_t visits = truth.primary_visits_by_domain[i];
        if (visits == 0) continue;
        Event e;
        e.payload = events::ExitStream{true, events::TargetType::kHostname,
                                       events::DomainHostname(static_cast<uint32_t>(i), domains),
                                       443, 0};
        if (auto inc = f.classify(e)) bins[inc->bin] += static_cast<double>(visits * inc->amount);
      }
      for (size_t b = 0; b < bins.size(); ++b) out[f.counter_ids[b]] = bins[b];
      continue;
    }
    double listed = 0.0;
    for (const std::string& id : f.counter_ids) {
      if (auto it = truth.totals.find(id); it != truth.totals.end()) {
        out[id] = it->second;
      } else if (auto c = CountryTruth(id, truth)) {
        out[id] = *c;
        listed += *c;
      }
    }
    // The country histogram's remainder bin.
    for (const char* total : {tk::kEntryConnections, tk::kEntryCircuits, tk::kEntryBytes}) {
      const std::string other = absl::StrCat(total, "/country/other");
      if (std::find(f.counter_ids.begin(), f.counter_ids.end(), other) != f.counter_ids.end()) {
        auto it = truth.totals.find(total);
        if (it != truth.totals.end()) out[other] = it->second - listed;
      }
    }
  }
  return out;
}

void Score(StatisticReport& r) {
  if (r.truth && r.network) r.covered = r.network->Contains(*r.truth);
}

absl::Status RunPrivCountRound(const DeploymentConfig& config, const privacy::ScheduledRound& round,
                               const std::vector<StatisticDef>& stats,
                               const events::GroundTruth& trace, bool truth_applies,
                               const std::set<uint32_t>& relays, RoundReport& report) {
  ASSIGN_OR_RETURN(const auto relay_dc, RelayDcMap(config, config.privcount.num_dcs));
  auto families = std::make_shared<std::vector<privcount::CounterFamily>>();
  std::map<std::string, Role> role_of_counter;
  std::vector<std::string> counter_order;
  for (const StatisticDef& s : stats) {
    ASSIGN_OR_RETURN(auto fams, FamiliesFor(s, config));
    for (auto& f : fams) {
      for (const auto& id : f.counter_ids) {
        role_of_counter[id] = s.role;
        counter_order.push_back(id);
      }
      families->push_back(std::move(f));
    }
  }
  RETURN_IF_ERROR(privcount::ValidateFamilies(*families));
  const uint32_t days = RoundDays(round, config.privacy.params);
  ASSIGN_OR_RETURN(auto noise, privcount::BuildNoiseSpecs(*families, config.privacy, days));

  uint64_t dropped = 0;
  ASSIGN_OR_RETURN(auto by_dc, EventsByDc(trace.traces, relays, relay_dc, round, &dropped));
  if (dropped > 0) report.notes.push_back(absl::StrCat(dropped, " events outside the round window"));

  // Exact local values, straight from the trace.
  std::map<std::string, double> local_truth;
  for (const auto& f : *families) {
    for (const auto& id : f.counter_ids) local_truth[id] = 0.0;
  }
  for (const auto& [dc, evs] : by_dc) {
    for (const Event& e : evs) {
      for (const auto& f : *families) {
        if (e.kind() != f.kind) continue;
        if (auto inc = f.classify(e)) local_truth[f.counter_ids[inc->bin]] += inc->amount;
      }
    }
  }

  privcount::RoundConfig rc;
  rc.round_id = round.round_id;
  rc.root_seed = DeriveSeed(config.root_seed, {HashLabel("privcount"), HashLabel(round.round_id)});
  rc.window_start = round.start;
  rc.window_end = round.end;
  for (uint32_t d = 0; d < config.privcount.num_dcs; ++d) rc.dc_ids.push_back(d);
  rc.num_sks = config.privcount.num_sks;
  rc.families = families;
  rc.noise = noise;
  rc.dc_fail_before_init = config.faults.privcount_dc_before_init;
  rc.dc_fail_before_report = config.faults.privcount_dc_before_report;
  rc.sk_fail = config.faults.sk;
  privcount::InMemoryTransport transport;
  ASSIGN_OR_RETURN(const privcount::RoundOutput out, privcount::RunRound(rc, by_dc, transport));
  report.messages += out.messages;

  std::map<std::string, double> truth;
  if (truth_applies) {
    truth = CounterTruth(*families, trace.truth, config.network.domains);
  }
  std::map<std::string, const privcount::CounterResult*> results;
  for (const auto& r : out.results) results[r.counter_id] = &r;
  for (const std::string& id : counter_order) {
    StatisticReport s;
    s.round_id = round.round_id;
    s.statistic = id;
    s.protocol = Protocol::kPrivCount;
    s.fraction = RoleWeight(report.fractions, role_of_counter[id]);
    s.noise = privacy::NoiseSpecToJson(noise.at(id));
    s.local_truth = local_truth[id];
    if (auto it = truth.find(id); it != truth.end()) s.truth = it->second;
    const auto* r = results.at(id);
    s.complete = r->complete;
    if (r->complete) {
      ASSIGN_OR_RETURN(s.local, inference::NormalCi(static_cast<double>(r->noisy_total), r->sigma));
      if (s.fraction > 0.0) {
        ASSIGN_OR_RETURN(s.network, inference::ExtrapolateByFraction(*s.local, s.fraction));
      }
    }
    Score(s);
    report.statistics.push_back(std::move(s));
  }
  return absl::OkStatus();
}

// Network rule for one PSC statistic.
absl::StatusOr<Estimate> PscNetwork(const std::string& name, const Estimate& local, double p,
                                    const events::GroundTruthConfig& network) {
  if (name == "unique_countries") {
    return inference::RangeBound(local, p, static_cast<double>(events::GeoTable::kNumCountries));
  }
  if (name == "unique_ases") {
    return inference::RangeBound(local, p, static_cast<double>(events::GeoTable::kNumAses));
  }
  if (name == "unique_onions_published") {
    // Each descriptor sits on replicas x hsdirs_per_replica HSDirs, so the
    // chance that some measured HSDir holds it exceeds the weight.
    const double placements =
        static_cast<double>(network.onions.replicas) * network.onions.hsdirs_per_replica;
    const double seen = 1.0 - std::pow(1.0 - p, placements);
    return inference::HsdirExtrapolate(local, p, seen / p);
  }
  return inference::RangeBound(local, p);
}

absl::Status RunPscStatistics(const DeploymentConfig& config, const privacy::ScheduledRound& round,
                              const std::vector<StatisticDef>& stats,
                              const events::GroundTruth& trace, bool truth_applies,
                              const std::set<uint32_t>& relays, RoundReport& report) {
  ASSIGN_OR_RETURN(const auto relay_dc, RelayDcMap(config, config.psc.num_dcs));
  std::vector<std::string> names;
  for (const auto& s : stats) names.push_back(s.name);
  ASSIGN_OR_RETURN(const auto shares, privacy::AllocatePrivacyBudget(names, config.privacy.params));
  const uint32_t days = RoundDays(round, config.privacy.params);

  uint64_t dropped = 0;
  ASSIGN_OR_RETURN(const auto by_dc, EventsByDc(trace.traces, relays, relay_dc, round, &dropped));
  if (dropped > 0) report.notes.push_back(absl::StrCat(dropped, " events outside the round window"));

  // Relays whose DC dropped out contribute nothing.
  std::set<uint32_t> live;
  for (uint32_t id : relays) {
    if (!config.faults.psc_dc.count(relay_dc.at(id))) live.insert(id);
  }
  const events::RoleFractions live_fractions = SumFractions(trace.truth, live);

  for (size_t k = 0; k < stats.size(); ++k) {
    const StatisticDef& def = stats[k];
    ASSIGN_OR_RETURN(const PscStatistic ps, PscStatisticFor(def, config));
    std::map<uint32_t, std::vector<std::string>> items;
    std::set<std::string> local_items;
    for (uint32_t d = 0; d < config.psc.num_dcs; ++d) items[d];
    for (const auto& [dc, evs] : by_dc) {
      std::set<std::string> seen;
      for (const Event& e : evs) {
        if (auto item = ps.extract(e)) seen.insert(std::move(*item));
      }
      if (!config.faults.psc_dc.count(dc)) local_items.insert(seen.begin(), seen.end());
      items[dc].assign(seen.begin(), seen.end());
    }

    const double sensitivity = config.privacy.bounds.Bound(ps.action, days);
    ASSIGN_OR_RETURN(const psc::NoiseBinParams noise,
                     psc::MakeNoiseBinParams(sensitivity, shares[k], config.psc.num_cps));
    psc::PscRoundConfig pc;
    pc.round_id = absl::StrCat(round.round_id, "/", def.name);
    pc.group = config.psc.group;
    pc.log2_bins = config.psc.log2_bins;
    pc.num_cps = config.psc.num_cps;
    for (uint32_t d = 0; d < config.psc.num_dcs; ++d) pc.dc_ids.push_back(d);
    pc.root_seed = DeriveSeed(config.root_seed,
                              {HashLabel("psc"), HashLabel(round.round_id), HashLabel(def.name)});
    pc.noise = noise;
    pc.dc_fail = config.faults.psc_dc;
    pc.cp_fail = config.faults.cp;

    StatisticReport s;
    s.round_id = round.round_id;
    s.statistic = def.name;
    s.protocol = Protocol::kPsc;
    s.fraction = RoleWeight(live_fractions, def.role);
    s.noise = psc::NoiseBinParamsToJson(noise);
    s.noise["statistic"] = def.name;
    s.noise["group"] = std::string(psc::GroupKindName(pc.group));
    s.noise["log2_bins"] = pc.log2_bins;
    s.local_truth = static_cast<double>(local_items.size());
    if (truth_applies) {
      auto it = trace.truth.totals.find(ps.truth_key);
      if (it != trace.truth.totals.end()) s.truth = it->second;
    }
    absl::StatusOr<psc::PscRoundOutput> out = psc::RunPscRound(pc, items);
    if (!out.ok()) {
      // A lost CP key share leaves nothing to decrypt.
      if (!absl::IsFailedPrecondition(out.status())) return out.status();
      report.notes.push_back(absl::StrCat(def.name, ": ", out.status().message()));
      report.statistics.push_back(std::move(s));
      continue;
    }
    s.complete = true;
    s.noise["raw_count"] = out->raw_count;
    s.noise["frame_bytes"] = out->frame_bytes;
    if (!out->missing_dcs.empty()) s.noise["missing_dcs"] = out->missing_dcs;
    report.messages += config.psc.num_dcs + config.psc.num_cps;
    ASSIGN_OR_RETURN(s.local, psc::PscEstimate(out->raw_count, out->bins, noise));
    if (s.fraction > 0.0) {
      ASSIGN_OR_RETURN(s.network, PscNetwork(def.name, *s.local, s.fraction, config.network));
    }
    Score(s);
    report.statistics.push_back(std::move(s));
  }
  return absl::OkStatus();
}

}  // namespace

std::string_view RoleName(Role role) {
  switch (role) {
    case Role::kGuard:
      return "guard";
    case Role::kExit:
      return "exit";
    case Role::kHsdir:
      return "hsdir";
    case Role::kRendezvous:
      return "rendezvous";
  }
  return "unknown";
}

const std::vector<StatisticDef>& Catalog() {
  static const auto* catalog = new std::vector<StatisticDef>{
      {"exit_streams", Protocol::kPrivCount, Role::kExit, "exit stream taxonomy"},
      {"exit_bytes", Protocol::kPrivCount, Role::kExit, "exit stream bytes"},
      {"exit_domain_ranks", Protocol::kPrivCount, Role::kExit, "primary domains by list rank"},
      {"exit_domain_tlds", Protocol::kPrivCount, Role::kExit, "primary domains by TLD"},
      {"entry_activity", Protocol::kPrivCount, Role::kGuard, "client connections, circuits, bytes"},
      {"entry_countries", Protocol::kPrivCount, Role::kGuard, "client connections by country"},
      {"hsdir_activity", Protocol::kPrivCount, Role::kHsdir, "descriptor uploads and fetches"},
      {"rendezvous_activity", Protocol::kPrivCount, Role::kRendezvous,
       "rendezvous circuit outcomes and cells"},
      {"unique_client_ips", Protocol::kPsc, Role::kGuard, "distinct client IPv4 addresses"},
      {"unique_countries", Protocol::kPsc, Role::kGuard, "distinct client countries"},
      {"unique_ases", Protocol::kPsc, Role::kGuard, "distinct client autonomous systems"},
      {"unique_slds", Protocol::kPsc, Role::kExit, "distinct primary-domain SLDs"},
      {"unique_onions_published", Protocol::kPsc, Role::kHsdir, "distinct onions published"},
      {"unique_onions_fetched", Protocol::kPsc, Role::kHsdir, "distinct onions fetched"},
  };
  return *catalog;
}

absl::StatusOr<StatisticDef> FindStatistic(std::string_view name) {
  for (const auto& s : Catalog()) {
    if (s.name == name) return s;
  }
  return absl::NotFoundError(absl::StrCat("unknown statistic '", std::string(name), "'"));
}

absl::StatusOr<std::vector<privcount::CounterFamily>> FamiliesFor(const StatisticDef& stat,
                                                                  const DeploymentConfig& config) {
  if (stat.protocol != Protocol::kPrivCount) {
    return absl::InvalidArgumentError(absl::StrCat(stat.name, " is not a PrivCount statistic"));
  }
  if (stat.name == "exit_streams") return privcount::ExitStreamFamilies();
  if (stat.name == "exit_bytes") return std::vector{privcount::ExitBytesFamily()};
  if (stat.name == "entry_activity") return privcount::EntryFamilies();
  if (stat.name == "entry_countries") {
    return std::vector{privcount::CountryHistogram(EventKind::kEntryConnection, config.countries)};
  }
  if (stat.name == "hsdir_activity") return privcount::HsdirFamilies();
  if (stat.name == "rendezvous_activity") return privcount::RendezvousFamilies();
  if (stat.name == "exit_domain_ranks") {
    ASSIGN_OR_RETURN(const auto ranked, matchers::LoadRankedList(DataPath(config, "ranked_sites.csv")));
    ASSIGN_OR_RETURN(auto buckets, matchers::RankBuckets::Create(ranked));
    return std::vector{privcount::DomainRankFamily(
        std::make_shared<const matchers::RankBuckets>(std::move(buckets)))};
  }
  if (stat.name == "exit_domain_tlds") {
    ASSIGN_OR_RETURN(auto rules, matchers::TldRules::LoadFile(DataPath(config, "tld_rules.txt")));
    return std::vector{
        privcount::TldFamily(std::make_shared<const matchers::TldRules>(std::move(rules)))};
  }
  return absl::NotFoundError(absl::StrCat("no counters for ", stat.name));
}

absl::StatusOr<PscStatistic> PscStatisticFor(const StatisticDef& stat,
                                             const DeploymentConfig& config) {
  using privacy::Action;
  if (stat.protocol != Protocol::kPsc) {
    return absl::InvalidArgumentError(absl::StrCat(stat.name, " is not a PSC statistic"));
  }
  auto entry = [](auto encode) -> ItemExtractor {
    return [encode](const Event& e) -> std::optional<std::string> {
      if (e.kind() != EventKind::kEntryConnection) return std::nullopt;
      return encode(std::get<events::EntryConnection>(e.payload));
    };
  };
  if (stat.name == "unique_client_ips") {
    return PscStatistic{tk::kUniqueClientIps, Action::kNewIps,
                        entry([](const events::EntryConnection& c) { return psc::EncodeIpv4Item(c.client_ip); })};
  }
  if (stat.name == "unique_countries") {
    return PscStatistic{tk::kUniqueCountries, Action::kNewIps,
                        entry([](const events::EntryConnection& c) { return psc::EncodeTextItem(c.country_code); })};
  }
  if (stat.name == "unique_ases") {
    return PscStatistic{tk::kUniqueAses, Action::kNewIps,
                        entry([](const events::EntryConnection& c) { return psc::EncodeAsItem(c.as_number); })};
  }
  if (stat.name == "unique_slds") {
    ASSIGN_OR_RETURN(auto list, matchers::SuffixList::LoadFile(DataPath(config, "public_suffix_list.dat")));
    auto psl = std::make_shared<const matchers::SuffixList>(std::move(list));
    return PscStatistic{tk::kUniqueSlds, Action::kDomainsConnected,
                        [psl](const Event& e) -> std::optional<std::string> {
                          if (e.kind() != EventKind::kExitStream) return std::nullopt;
                          const auto& s = std::get<events::ExitStream>(e.payload);
                          if (!privcount::IsPrimaryDomainStream(s)) return std::nullopt;
                          auto host = matchers::NormalizeHostname(s.target);
                          if (!host.ok()) return std::nullopt;
                          auto sld = matchers::SldOf(*host, *psl);
                          if (!sld.ok()) return std::nullopt;
                          return psc::EncodeTextItem(*sld);
                        }};
  }
  if (stat.name == "unique_onions_published") {
    return PscStatistic{tk::kUniqueOnionsPublished, Action::kNewOnionAddresses,
                        [](const Event& e) -> std::optional<std::string> {
                          if (e.kind() != EventKind::kDescriptorPublish) return std::nullopt;
                          return psc::EncodeTextItem(
                              std::get<events::DescriptorPublish>(e.payload).onion_address);
                        }};
  }
  if (stat.name == "unique_onions_fetched") {
    return PscStatistic{tk::kUniqueOnionsFetched, Action::kDescriptorFetches,
                        [](const Event& e) -> std::optional<std::string> {
                          if (e.kind() != EventKind::kDescriptorFetch) return std::nullopt;
                          const auto& f = std::get<events::DescriptorFetch>(e.payload);
                          if (!f.hit) return std::nullopt;
                          return psc::EncodeTextItem(f.onion_address);
                        }};
  }
  return absl::NotFoundError(absl::StrCat("no PSC items for ", stat.name));
}

absl::StatusOr<RoundReport> RunRound(const DeploymentConfig& config,
                                     const privacy::ScheduledRound& round,
                                     const events::GroundTruth& trace, bool truth_applies) {
  if (round.end <= round.start) {
    return absl::InvalidArgumentError(absl::StrCat("round ", round.round_id, " has an empty window"));
  }
  std::vector<StatisticDef> stats;
  for (const std::string& name : round.statistics) {
    ASSIGN_OR_RETURN(StatisticDef def, FindStatistic(name));
    if (def.protocol != round.protocol) {
      return absl::InvalidArgumentError(
          absl::StrCat(name, " cannot run in a ", std::string(privacy::ProtocolName(round.protocol)),
                       " round"));
    }
    stats.push_back(std::move(def));
  }
  // Catalog order keeps reports stable regardless of how rounds list names.
  std::sort(stats.begin(), stats.end(), [](const StatisticDef& a, const StatisticDef& b) {
    const auto& c = Catalog();
    auto pos = [&](const std::string& n) {
      return std::find_if(c.begin(), c.end(), [&](const StatisticDef& d) { return d.name == n; });
    };
    return pos(a.name) < pos(b.name);
  });

  RoundReport report;
  report.round = round;
  const std::set<uint32_t> relays = MeasuredRelays(config, round.round_id);
  report.fractions = SumFractions(trace.truth, relays);
  if (stats.empty()) return report;
  if (round.protocol == Protocol::kPrivCount) {
    RETURN_IF_ERROR(RunPrivCountRound(config, round, stats, trace, truth_applies, relays, report));
  } else {
    RETURN_IF_ERROR(RunPscStatistics(config, round, stats, trace, truth_applies, relays, report));
  }
  return report;
}

absl::StatusOr<events::GroundTruth> GenerateRoundTrace(const DeploymentConfig& config,
                                                       const privacy::ScheduledRound& round) {
  events::GroundTruthConfig net = config.network;
  const int64_t len = round.end - round.start;
  if (len <= 0) return absl::InvalidArgumentError("round window is empty");
  net.num_days = static_cast<uint32_t>((len + net.epoch_length - 1) / net.epoch_length);
  net.rng_seed = DeriveSeed(config.network.rng_seed, {HashLabel("round"), HashLabel(round.round_id)});
  ASSIGN_OR_RETURN(events::GroundTruth gt, events::GenerateGroundTruth(net));
  if (round.start == 0) return gt;
  std::vector<Event> shifted = gt.traces.events();
  for (Event& e : shifted) e.simulated_time += round.start;
  gt.traces = events::Traces(gt.traces.relay_ids(), std::move(shifted));
  return gt;
}

absl::StatusOr<RunReport> RunCampaign(const DeploymentConfig& config,
                                      const std::vector<privacy::ScheduledRound>& schedule,
                                      const events::GroundTruth* shared) {
  RunReport report;
  const auto violations = privacy::ValidateSchedule(schedule);
  report.schedule_audit = {{"rounds", schedule.size()},
                           {"accepted", violations.empty()},
                           {"violations", privacy::ViolationsToJson(violations)}};
  if (!violations.empty()) {
    return absl::FailedPreconditionError(
        absl::StrCat("schedule rejected: ", violations.size(), " violation(s), first: ",
                     violations.front().kind, " (", violations.front().detail, ")"));
  }
  std::set<std::string> ids;
  for (const auto& r : schedule) {
    if (!ids.insert(r.round_id).second) {
      return absl::InvalidArgumentError(absl::StrCat("duplicate round id ", r.round_id));
    }
  }
  if (schedule.empty()) return report;
  RETURN_IF_ERROR(ValidateDeployment(config));

  std::vector<size_t> order(schedule.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return schedule[a].start < schedule[b].start; });

  const int64_t shared_end =
      static_cast<int64_t>(config.network.num_days) * config.network.epoch_length;
  for (size_t i : order) {
    const auto& round = schedule[i];
    if (shared != nullptr) {
      // Truth totals span the whole trace, so they only score a round that
      // covers it exactly.
      const bool whole = round.start == 0 && round.end == shared_end;
      ASSIGN_OR_RETURN(RoundReport rr, RunRound(config, round, *shared, whole));
      report.rounds.push_back(std::move(rr));
    } else {
      ASSIGN_OR_RETURN(const events::GroundTruth trace, GenerateRoundTrace(config, round));
      const bool whole = (round.end - round.start) % config.network.epoch_length == 0;
      ASSIGN_OR_RETURN(RoundReport rr, RunRound(config, round, trace, whole));
      report.rounds.push_back(std::move(rr));
    }
  }
  for (const auto& rr : report.rounds) {
    for (const auto& s : rr.statistics) {
      if (!s.covered) continue;
      ++report.with_truth;
      if (*s.covered) ++report.covered;
    }
  }
  absl::StatusOr<AnalysisReport> domains = AnalyzeUniqueDomains(report, config);
  if (domains.ok()) {
    report.analyses.push_back(*std::move(domains));
  } else if (!absl::IsNotFound(domains.status())) {
    return domains.status();
  }
  return report;
}

absl::StatusOr<AnalysisReport> AnalyzeUniqueDomains(const RunReport& report,
                                                    const DeploymentConfig& config) {
  const StatisticReport* slds = nullptr;
  const StatisticReport* web = nullptr;
  for (const auto& rr : report.rounds) {
    for (const auto& s : rr.statistics) {
      if (!slds && s.statistic == "unique_slds" && s.local && s.fraction > 0.0) slds = &s;
      if (!web && s.statistic == kWebStreams && s.network) web = &s;
    }
  }
  if (!slds || !web) {
    return absl::NotFoundError("needs a unique_slds PSC result and a web-stream PrivCount result");
  }
  const Estimate& local = *slds->local;
  const double p = slds->fraction;
  ASSIGN_OR_RETURN(const Estimate range, inference::RangeBound(local, p));
  // Universe sizes from the smallest plausible up to well past x/p: a large
  // universe can still produce few distinct visits.
  const double lo = std::max(1.0, local.lo);
  const double hi = std::max(lo * config.mc.population_ratio, 4.0 * range.hi);
  const std::vector<double> populations =
      inference::GeometricGrid(lo, hi, config.mc.population_ratio);
  std::vector<double> visits;
  for (double v : {web->network->lo, web->network->point, web->network->hi}) {
    v = std::max(1.0, std::round(v));
    if (std::find(visits.begin(), visits.end(), v) == visits.end()) visits.push_back(v);
  }
  const auto grid = inference::PowerLawGrid(config.mc.alphas, populations, visits);
  inference::McOptions options;
  options.trials = config.mc.trials;
  options.seed = DeriveSeed(config.root_seed, {HashLabel("mc"), HashLabel(slds->round_id)});
  ASSIGN_OR_RETURN(const inference::McResult mc,
                   inference::McUniqueExtrapolate(local, p, grid, options));

  AnalysisReport a;
  a.name = "unique_domains";
  a.estimate = mc.estimate;
  a.truth = slds->truth;
  if (a.truth) a.covered = a.estimate.Contains(*a.truth);
  a.details = {{"psc_round", slds->round_id},
               {"visits_round", web->round_id},
               {"fraction", p},
               {"visits", visits},
               {"grid_points", grid.size()},
               {"fell_back", mc.fell_back},
               {"audit", inference::McAuditToJson(mc)}};
  return a;
}

ordered_json StatisticReportToJson(const StatisticReport& r) {
  auto opt = [](const std::optional<double>& v) -> ordered_json {
    return v ? ordered_json(*v) : ordered_json(nullptr);
  };
  ordered_json j;
  j["round_id"] = r.round_id;
  j["statistic"] = r.statistic;
  j["protocol"] = std::string(privacy::ProtocolName(r.protocol));
  j["complete"] = r.complete;
  j["fraction"] = r.fraction;
  j["local"] = r.local ? inference::EstimateToJson(*r.local) : ordered_json(nullptr);
  j["network"] = r.network ? inference::EstimateToJson(*r.network) : ordered_json(nullptr);
  j["local_truth"] = opt(r.local_truth);
  j["truth"] = opt(r.truth);
  j["covered"] = r.covered ? ordered_json(*r.covered) : ordered_json(nullptr);
  j["noise"] = r.noise;
  return j;
}

ordered_json RunReportToJson(const RunReport& report) {
  ordered_json rounds = ordered_json::array();
  for (const auto& rr : report.rounds) {
    ordered_json r;
    r["round_id"] = rr.round.round_id;
    r["protocol"] = std::string(privacy::ProtocolName(rr.round.protocol));
    r["start"] = rr.round.start;
    r["end"] = rr.round.end;
    r["statistics_requested"] = rr.round.statistics;
    r["fractions"] = {{"guard", rr.fractions.guard},
                      {"exit", rr.fractions.exit},
                      {"hsdir", rr.fractions.hsdir},
                      {"rendezvous", rr.fractions.rendezvous}};
    r["messages"] = rr.messages;
    r["notes"] = rr.notes;
    ordered_json stats = ordered_json::array();
    for (const auto& s : rr.statistics) stats.push_back(StatisticReportToJson(s));
    r["statistics"] = stats;
    rounds.push_back(r);
  }
  ordered_json analyses = ordered_json::array();
  for (const auto& a : report.analyses) {
    ordered_json j;
    j["name"] = a.name;
    j["estimate"] = inference::EstimateToJson(a.estimate);
    j["truth"] = a.truth ? ordered_json(*a.truth) : ordered_json(nullptr);
    j["covered"] = a.covered ? ordered_json(*a.covered) : ordered_json(nullptr);
    j["details"] = a.details;
    analyses.push_back(j);
  }
  ordered_json j;
  j["schedule_audit"] = report.schedule_audit;
  j["rounds"] = rounds;
  j["analyses"] = analyses;
  j["summary"] = {{"with_truth", report.with_truth},
                  {"covered", report.covered},
                  {"coverage", report.with_truth == 0
                                   ? ordered_json(nullptr)
                                   : ordered_json(static_cast<double>(report.covered) /
                                                  static_cast<double>(report.with_truth))}};
  return j;
}

}  // namespace privmeasure::harness

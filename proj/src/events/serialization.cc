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

#include "privmeasure/events/serialization.h"

#include <algorithm>
#include <set>
#include <string>

#include "absl/strings/str_cat.h"
#include "privmeasure/common/status_macros.h"

namespace privmeasure::events {
namespace {

using ojson = nlohmann::ordered_json;

template <typename T, typename J>
void GetIfPresent(const J& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).template get<T>();
}

constexpr const char* kKindCountsKey = "emitted_by_kind";

ojson KindCountsToJson(const KindCounts& c) {
  ojson j = ojson::object();
  for (size_t k = 0; k < kNumEventKinds; ++k) {
    j[std::string(EventKindName(static_cast<EventKind>(k)))] = c[k];
  }
  return j;
}

absl::StatusOr<KindCounts> KindCountsFromJson(const ojson& j) {
  KindCounts c{};
  for (const auto& [name, v] : j.items()) {
    ASSIGN_OR_RETURN(EventKind kind, ParseEventKind(name));
    c[static_cast<size_t>(kind)] = v.get<uint64_t>();
  }
  return c;
}

}  // namespace

ojson EventToJson(const Event& event) {
  ojson j;
  j["relay_id"] = event.relay_id;
  j["time"] = event.simulated_time;
  j["seq"] = event.sequence;
  j["kind"] = std::string(EventKindName(event.kind()));
  std::visit(
      [&j](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, EntryConnection>) {
          j["client_ip"] = p.client_ip;
          j["country"] = p.country_code;
          j["as"] = p.as_number;
        } else if constexpr (std::is_same_v<T, EntryCircuit>) {
          j["client_ip"] = p.client_ip;
          j["country"] = p.country_code;
        } else if constexpr (std::is_same_v<T, EntryBytes>) {
          j["bytes"] = p.bytes;
          j["country"] = p.country_code;
        } else if constexpr (std::is_same_v<T, ExitStream>) {
          j["initial"] = p.is_initial;
          j["target_type"] = std::string(TargetTypeName(p.target_type));
          j["target"] = p.target;
          j["port"] = p.port;
          j["bytes"] = p.bytes;
        } else if constexpr (std::is_same_v<T, DescriptorPublish>) {
          j["onion"] = p.onion_address;
        } else if constexpr (std::is_same_v<T, DescriptorFetch>) {
          j["onion"] = p.onion_address;
          j["hit"] = p.hit;
        } else if constexpr (std::is_same_v<T, RendezvousCircuitEnd>) {
          j["outcome"] = std::string(RendezvousOutcomeName(p.outcome));
          j["cells"] = p.cells;
        } else if constexpr (std::is_same_v<T, RendezvousCells>) {
          j["cells"] = p.cells;
        }
      },
      event.payload);
  return j;
}

absl::StatusOr<Event> EventFromJson(const ojson& j) {
  try {
    Event e;
    e.relay_id = j.at("relay_id").get<uint32_t>();
    e.simulated_time = j.at("time").get<int64_t>();
    e.sequence = j.at("seq").get<uint64_t>();
    ASSIGN_OR_RETURN(EventKind kind, ParseEventKind(j.at("kind").get<std::string>()));
    switch (kind) {
      case EventKind::kEntryConnection:
        e.payload = EntryConnection{j.at("client_ip").get<uint32_t>(),
                                    j.at("country").get<std::string>(), j.at("as").get<uint32_t>()};
        break;
      case EventKind::kEntryCircuit:
        e.payload = EntryCircuit{j.at("client_ip").get<uint32_t>(), j.at("country").get<std::string>()};
        break;
      case EventKind::kEntryBytes:
        e.payload = EntryBytes{j.at("bytes").get<uint64_t>(), j.at("country").get<std::string>()};
        break;
      case EventKind::kExitStream: {
        ExitStream s;
        s.is_initial = j.at("initial").get<bool>();
        const std::string type = j.at("target_type").get<std::string>();
        if (type == "hostname") {
          s.target_type = TargetType::kHostname;
        } else if (type == "ipv4") {
          s.target_type = TargetType::kIpv4;
        } else if (type == "ipv6") {
          s.target_type = TargetType::kIpv6;
        } else {
          return absl::InvalidArgumentError(absl::StrCat("bad target_type: ", type));
        }
        s.target = j.at("target").get<std::string>();
        s.port = j.at("port").get<uint16_t>();
        s.bytes = j.at("bytes").get<uint64_t>();
        e.payload = std::move(s);
        break;
      }
      case EventKind::kDescriptorPublish:
        e.payload = DescriptorPublish{j.at("onion").get<std::string>()};
        break;
      case EventKind::kDescriptorFetch:
        e.payload = DescriptorFetch{j.at("onion").get<std::string>(), j.at("hit").get<bool>()};
        break;
      case EventKind::kRendezvousCircuitEnd: {
        const std::string outcome = j.at("outcome").get<std::string>();
        RendezvousCircuitEnd r;
        bool found = false;
        for (size_t i = 0; i < kNumRendezvousOutcomes; ++i) {
          if (RendezvousOutcomeName(static_cast<RendezvousOutcome>(i)) == outcome) {
            r.outcome = static_cast<RendezvousOutcome>(i);
            found = true;
          }
        }
        if (!found) return absl::InvalidArgumentError(absl::StrCat("bad outcome: ", outcome));
        r.cells = j.at("cells").get<uint64_t>();
        e.payload = r;
        break;
      }
      case EventKind::kRendezvousCells:
        e.payload = RendezvousCells{j.at("cells").get<uint64_t>()};
        break;
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    return absl::InvalidArgumentError(absl::StrCat("malformed event: ", ex.what()));
  }
}

absl::Status WriteTraceJsonl(const Traces& traces, std::ostream& out) {
  for (const Event& e : traces.events()) out << EventToJson(e).dump() << '\n';
  if (!out) return absl::InternalError("trace write failed");
  return absl::OkStatus();
}

absl::StatusOr<Traces> ReadTraceJsonl(std::istream& in, const std::vector<uint32_t>& known_relays) {
  std::vector<Event> events;
  std::set<uint32_t> ids(known_relays.begin(), known_relays.end());
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ojson j = ojson::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      return absl::InvalidArgumentError(absl::StrCat("line ", line_no, ": invalid JSON"));
    }
    ASSIGN_OR_RETURN(Event e, EventFromJson(j));
    ids.insert(e.relay_id);
    events.push_back(std::move(e));
  }
  return Traces(std::vector<uint32_t>(ids.begin(), ids.end()), std::move(events));
}

ojson TruthToJson(const TruthSummary& truth) {
  ojson j;
  j["totals"] = truth.totals;
  j["primary_visits_by_domain"] = truth.primary_visits_by_domain;
  j["connections_by_country"] = truth.connections_by_country;
  j["circuits_by_country"] = truth.circuits_by_country;
  j["bytes_by_country"] = truth.bytes_by_country;
  j[kKindCountsKey] = KindCountsToJson(truth.emitted_by_kind);
  ojson per_relay = ojson::object();
  for (const auto& [id, counts] : truth.emitted_by_relay) {
    per_relay[std::to_string(id)] = KindCountsToJson(counts);
  }
  j["emitted_by_relay"] = std::move(per_relay);
  ojson fractions = ojson::object();
  for (const auto& [id, f] : truth.relay_fractions) {
    fractions[std::to_string(id)] = {{"guard", f.guard}, {"exit", f.exit},
                                     {"hsdir", f.hsdir}, {"rendezvous", f.rendezvous}};
  }
  j["relay_fractions"] = std::move(fractions);
  return j;
}

absl::StatusOr<TruthSummary> TruthFromJson(const ojson& j) {
  try {
    TruthSummary t;
    t.totals = j.at("totals").get<std::map<std::string, double>>();
    t.primary_visits_by_domain = j.at("primary_visits_by_domain").get<std::vector<uint64_t>>();
    t.connections_by_country = j.at("connections_by_country").get<std::map<std::string, uint64_t>>();
    t.circuits_by_country = j.at("circuits_by_country").get<std::map<std::string, uint64_t>>();
    t.bytes_by_country = j.at("bytes_by_country").get<std::map<std::string, uint64_t>>();
    ASSIGN_OR_RETURN(t.emitted_by_kind, KindCountsFromJson(j.at(kKindCountsKey)));
    for (const auto& [id, counts] : j.at("emitted_by_relay").items()) {
      ASSIGN_OR_RETURN(t.emitted_by_relay[static_cast<uint32_t>(std::stoul(id))],
                       KindCountsFromJson(counts));
    }
    for (const auto& [id, f] : j.at("relay_fractions").items()) {
      t.relay_fractions[static_cast<uint32_t>(std::stoul(id))] =
          RoleFractions{f.at("guard").get<double>(), f.at("exit").get<double>(),
                        f.at("hsdir").get<double>(), f.at("rendezvous").get<double>()};
    }
    return t;
  } catch (const std::exception& ex) {
    return absl::InvalidArgumentError(absl::StrCat("malformed truth summary: ", ex.what()));
  }
}

ojson ConfigToJson(const GroundTruthConfig& c) {
  ojson j;
  j["n_clients"] = c.n_clients;
  j["guards_per_selective_client"] = c.guards_per_selective_client;
  j["n_promiscuous_clients"] = c.n_promiscuous_clients;
  ojson relays = ojson::array();
  for (const RelaySpec& r : c.relays) {
    relays.push_back({{"id", r.id},
                      {"nickname", r.nickname},
                      {"guard", r.guard},
                      {"exit", r.exit},
                      {"hsdir", r.hsdir},
                      {"rendezvous", r.rendezvous},
                      {"guard_weight", r.guard_weight},
                      {"exit_weight", r.exit_weight},
                      {"hsdir_weight", r.hsdir_weight},
                      {"rendezvous_weight", r.rendezvous_weight},
                      {"instrumented", r.instrumented}});
  }
  j["relays"] = std::move(relays);
  const ClientBehavior& b = c.behavior;
  j["behavior"] = {{"mean_connections_per_guard", b.mean_connections_per_guard},
                   {"mean_circuits_per_connection", b.mean_circuits_per_connection},
                   {"mean_bytes_per_circuit", b.mean_bytes_per_circuit},
                   {"mean_visits_per_client", b.mean_visits_per_client},
                   {"mean_subsequent_streams", b.mean_subsequent_streams},
                   {"mean_stream_bytes", b.mean_stream_bytes},
                   {"ipv4_initial_fraction", b.ipv4_initial_fraction},
                   {"ipv6_initial_fraction", b.ipv6_initial_fraction},
                   {"web_port_fraction", b.web_port_fraction}};
  ojson tlds = ojson::array();
  for (const TldShare& t : c.domains.tld_mix) tlds.push_back({{"tld", t.tld}, {"share", t.share}});
  j["domains"] = {{"alpha", c.domains.alpha},
                  {"universe_size", c.domains.universe_size},
                  {"tld_mix", std::move(tlds)}};
  const OnionUniverse& o = c.onions;
  j["onions"] = {{"addresses", o.addresses},
                 {"published_fraction", o.published_fraction},
                 {"fetched_fraction", o.fetched_fraction},
                 {"replicas", o.replicas},
                 {"hsdirs_per_replica", o.hsdirs_per_replica},
                 {"mean_uploads_per_hsdir", o.mean_uploads_per_hsdir},
                 {"mean_fetches_per_fetched_address", o.mean_fetches_per_fetched_address}};
  j["failures"] = {{"descriptor_fetch_failure", c.failures.descriptor_fetch_failure},
                   {"rendezvous_succeeded", c.failures.rendezvous_succeeded},
                   {"rendezvous_conn_closed", c.failures.rendezvous_conn_closed}};
  j["rendezvous"] = {{"attempts_per_day", c.rendezvous.attempts_per_day},
                     {"mean_cells_per_active_circuit", c.rendezvous.mean_cells_per_active_circuit}};
  j["num_days"] = c.num_days;
  j["daily_client_turnover"] = c.daily_client_turnover;
  j["epoch_length"] = c.epoch_length;
  j["rng_seed"] = c.rng_seed;
  return j;
}

absl::StatusOr<GroundTruthConfig> ConfigFromJson(const nlohmann::json& j) {
  try {
    GroundTruthConfig c;
    GetIfPresent(j, "n_clients", c.n_clients);
    GetIfPresent(j, "guards_per_selective_client", c.guards_per_selective_client);
    GetIfPresent(j, "n_promiscuous_clients", c.n_promiscuous_clients);
    if (j.contains("relays")) {
      for (const auto& r : j.at("relays")) {
        RelaySpec s;
        GetIfPresent(r, "id", s.id);
        GetIfPresent(r, "nickname", s.nickname);
        GetIfPresent(r, "guard", s.guard);
        GetIfPresent(r, "exit", s.exit);
        GetIfPresent(r, "hsdir", s.hsdir);
        GetIfPresent(r, "rendezvous", s.rendezvous);
        GetIfPresent(r, "guard_weight", s.guard_weight);
        GetIfPresent(r, "exit_weight", s.exit_weight);
        GetIfPresent(r, "hsdir_weight", s.hsdir_weight);
        GetIfPresent(r, "rendezvous_weight", s.rendezvous_weight);
        GetIfPresent(r, "instrumented", s.instrumented);
        c.relays.push_back(std::move(s));
      }
    }
    if (j.contains("behavior")) {
      const auto& b = j.at("behavior");
      ClientBehavior& o = c.behavior;
      GetIfPresent(b, "mean_connections_per_guard", o.mean_connections_per_guard);
      GetIfPresent(b, "mean_circuits_per_connection", o.mean_circuits_per_connection);
      GetIfPresent(b, "mean_bytes_per_circuit", o.mean_bytes_per_circuit);
      GetIfPresent(b, "mean_visits_per_client", o.mean_visits_per_client);
      GetIfPresent(b, "mean_subsequent_streams", o.mean_subsequent_streams);
      GetIfPresent(b, "mean_stream_bytes", o.mean_stream_bytes);
      GetIfPresent(b, "ipv4_initial_fraction", o.ipv4_initial_fraction);
      GetIfPresent(b, "ipv6_initial_fraction", o.ipv6_initial_fraction);
      GetIfPresent(b, "web_port_fraction", o.web_port_fraction);
    }
    if (j.contains("domains")) {
      const auto& d = j.at("domains");
      GetIfPresent(d, "alpha", c.domains.alpha);
      GetIfPresent(d, "universe_size", c.domains.universe_size);
      if (d.contains("tld_mix")) {
        c.domains.tld_mix.clear();
        for (const auto& t : d.at("tld_mix")) {
          c.domains.tld_mix.push_back({t.at("tld").get<std::string>(), t.at("share").get<double>()});
        }
      }
    }
    if (j.contains("onions")) {
      const auto& o = j.at("onions");
      GetIfPresent(o, "addresses", c.onions.addresses);
      GetIfPresent(o, "published_fraction", c.onions.published_fraction);
      GetIfPresent(o, "fetched_fraction", c.onions.fetched_fraction);
      GetIfPresent(o, "replicas", c.onions.replicas);
      GetIfPresent(o, "hsdirs_per_replica", c.onions.hsdirs_per_replica);
      GetIfPresent(o, "mean_uploads_per_hsdir", c.onions.mean_uploads_per_hsdir);
      GetIfPresent(o, "mean_fetches_per_fetched_address", c.onions.mean_fetches_per_fetched_address);
    }
    if (j.contains("failures")) {
      const auto& f = j.at("failures");
      GetIfPresent(f, "descriptor_fetch_failure", c.failures.descriptor_fetch_failure);
      GetIfPresent(f, "rendezvous_succeeded", c.failures.rendezvous_succeeded);
      GetIfPresent(f, "rendezvous_conn_closed", c.failures.rendezvous_conn_closed);
    }
    if (j.contains("rendezvous")) {
      const auto& r = j.at("rendezvous");
      GetIfPresent(r, "attempts_per_day", c.rendezvous.attempts_per_day);
      GetIfPresent(r, "mean_cells_per_active_circuit", c.rendezvous.mean_cells_per_active_circuit);
    }
    GetIfPresent(j, "num_days", c.num_days);
    GetIfPresent(j, "daily_client_turnover", c.daily_client_turnover);
    GetIfPresent(j, "epoch_length", c.epoch_length);
    GetIfPresent(j, "rng_seed", c.rng_seed);
    return c;
  } catch (const nlohmann::json::exception& ex) {
    return absl::InvalidArgumentError(absl::StrCat("malformed ground-truth config: ", ex.what()));
  }
}

}  // namespace privmeasure::events

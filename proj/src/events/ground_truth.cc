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

#include "privmeasure/events/ground_truth.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "privmeasure/common/random.h"
#include "privmeasure/common/status_macros.h"
#include "privmeasure/events/geo.h"
#include "privmeasure/events/zipf.h"

namespace privmeasure::events {
namespace {

namespace tk = truth_keys;

constexpr double kWeightSlack = 1e-9;
constexpr uint64_t kPromiscuousBase = uint64_t{1} << 31;
constexpr uint64_t kUnpublishedOnionBase = uint64_t{1} << 40;
constexpr std::array<uint16_t, 4> kNonWebPorts = {22, 5222, 6667, 8333};

absl::Status CheckProbability(absl::string_view name, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat(name, " must be in [0, 1], got ", p));
  }
  return absl::OkStatus();
}

absl::Status CheckNonNegative(absl::string_view name, double v) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    return absl::InvalidArgumentError(absl::StrCat(name, " must be >= 0, got ", v));
  }
  return absl::OkStatus();
}

// Weighted draws over a fixed set of relays by cumulative table lookup.
class WeightedPicker {
 public:
  WeightedPicker() = default;
  WeightedPicker(std::vector<size_t> members, const std::vector<double>& weights)
      : members_(std::move(members)) {
    double acc = 0.0;
    for (size_t i = 0; i < members_.size(); ++i) {
      acc += weights[i];
      cdf_.push_back(acc);
    }
    total_ = acc;
  }

  bool empty() const { return members_.empty(); }
  size_t size() const { return members_.size(); }

  // Index into members().
  size_t Draw(Rng& rng) const {
    const double u = UniformUnit(rng) * total_;
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    return static_cast<size_t>(it - cdf_.begin());
  }

  // k distinct members, each successive draw proportional to weight among
  // those not yet chosen (rejection of repeats).
  std::vector<size_t> DrawDistinct(Rng& rng, size_t k) const {
    k = std::min(k, members_.size());
    std::vector<size_t> out;
    out.reserve(k);
    while (out.size() < k) {
      const size_t i = Draw(rng);
      if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
    }
    return out;
  }

  size_t member(size_t i) const { return members_[i]; }

 private:
  std::vector<size_t> members_;
  std::vector<double> cdf_;
  double total_ = 0.0;
};

uint64_t Poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<uint64_t>(mean)(rng);
}

uint64_t ExponentialBytes(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  return static_cast<uint64_t>(std::llround(std::exponential_distribution<double>(1.0 / mean)(rng)));
}

uint64_t GammaBytes(Rng& rng, uint64_t shape, double mean) {
  if (shape == 0 || mean <= 0.0) return 0;
  std::gamma_distribution<double> dist(static_cast<double>(shape), mean);
  return static_cast<uint64_t>(std::llround(dist(rng)));
}

std::string Ipv4String(uint32_t ip) {
  return absl::StrFormat("%d.%d.%d.%d", ip >> 24, (ip >> 16) & 0xff, (ip >> 8) & 0xff, ip & 0xff);
}

std::string Ipv6String(uint64_t hi) {
  return absl::StrFormat("2001:db8:%x:%x::%x", (hi >> 48) & 0xffff, (hi >> 32) & 0xffff,
                         hi & 0xffffffff);
}

class Generator {
 public:
  explicit Generator(const GroundTruthConfig& config)
      : config_(config), rng_(config.rng_seed), zipf_(config.domains.universe_size,
                                                      config.domains.alpha) {}

  GroundTruth Run();

 private:
  void BuildPickers();
  int64_t TimeIn(uint32_t day) {
    return static_cast<int64_t>(day) * config_.epoch_length +
           static_cast<int64_t>(UniformUnit(rng_) * static_cast<double>(config_.epoch_length));
  }
  void Emit(size_t relay, int64_t time, EventPayload payload);
  // Keys are the truth_keys constants, so pointer identity is stable.
  void Add(const char* key, double v) { acc_[key] += v; }

  void EntryContact(size_t relay, uint32_t day, uint32_t ip, const GeoRecord& geo);
  void SelectiveClients();
  void PromiscuousClients();
  void ExitVisits(uint32_t day, uint64_t visits);
  void Onions();
  void Rendezvous();

  const GroundTruthConfig& config_;
  Rng rng_;
  ZipfSampler zipf_;
  WeightedPicker guards_, exits_, hsdirs_, rends_;
  std::vector<Event> events_;
  uint64_t sequence_ = 0;
  TruthSummary truth_;
  std::unordered_map<const char*, double> acc_;
  std::unordered_set<uint32_t> client_ips_;
  std::set<std::string> countries_;
  std::unordered_set<uint32_t> ases_;
};

void Generator::BuildPickers() {
  const auto& relays = config_.relays;
  auto build = [&](auto flag, auto weight) {
    std::vector<size_t> members;
    std::vector<double> weights;
    for (size_t i = 0; i < relays.size(); ++i) {
      if (relays[i].*flag && relays[i].*weight > 0.0) {
        members.push_back(i);
        weights.push_back(relays[i].*weight);
      }
    }
    return WeightedPicker(std::move(members), weights);
  };
  guards_ = build(&RelaySpec::guard, &RelaySpec::guard_weight);
  exits_ = build(&RelaySpec::exit, &RelaySpec::exit_weight);
  hsdirs_ = build(&RelaySpec::hsdir, &RelaySpec::hsdir_weight);
  rends_ = build(&RelaySpec::rendezvous, &RelaySpec::rendezvous_weight);
}

void Generator::Emit(size_t relay, int64_t time, EventPayload payload) {
  const RelaySpec& spec = config_.relays[relay];
  if (!spec.instrumented) return;
  Event e;
  e.relay_id = spec.id;
  e.simulated_time = time;
  e.sequence = sequence_++;
  e.payload = std::move(payload);
  const auto k = static_cast<size_t>(e.kind());
  ++truth_.emitted_by_kind[k];
  ++truth_.emitted_by_relay[spec.id][k];
  events_.push_back(std::move(e));
}

void Generator::EntryContact(size_t relay, uint32_t day, uint32_t ip, const GeoRecord& geo) {
  const ClientBehavior& b = config_.behavior;
  const uint64_t connections = 1 + Poisson(rng_, std::max(0.0, b.mean_connections_per_guard - 1.0));
  for (uint64_t c = 0; c < connections; ++c) {
    Emit(relay, TimeIn(day), EntryConnection{ip, geo.country_code, geo.as_number});
    const uint64_t circuits = Poisson(rng_, b.mean_circuits_per_connection);
    for (uint64_t k = 0; k < circuits; ++k) {
      Emit(relay, TimeIn(day), EntryCircuit{ip, geo.country_code});
    }
    const uint64_t bytes = GammaBytes(rng_, circuits, b.mean_bytes_per_circuit);
    if (bytes > 0) Emit(relay, TimeIn(day), EntryBytes{bytes, geo.country_code});
    Add(tk::kEntryCircuits, static_cast<double>(circuits));
    Add(tk::kEntryBytes, static_cast<double>(bytes));
    truth_.circuits_by_country[geo.country_code] += circuits;
    truth_.bytes_by_country[geo.country_code] += bytes;
  }
  Add(tk::kEntryConnections, static_cast<double>(connections));
  truth_.connections_by_country[geo.country_code] += connections;
}

void Generator::SelectiveClients() {
  const uint64_t n = config_.n_clients;
  if (n == 0) return;
  const uint64_t turnover = static_cast<uint64_t>(
      std::llround(config_.daily_client_turnover * static_cast<double>(n)));
  const uint32_t days = config_.num_days;
  const uint64_t population = n + turnover * (days - 1);
  const GeoTable& geo_table = GeoTable::Default();
  for (uint64_t i = 0; i < population; ++i) {
    // Client i is active on the days whose window [d*r, d*r + n) holds it.
    uint32_t first_day = 0;
    uint32_t last_day = days - 1;
    if (turnover > 0) {
      first_day = i < n ? 0 : static_cast<uint32_t>((i - n) / turnover + 1);
      last_day = std::min<uint64_t>(days - 1, i / turnover);
    }
    const uint32_t ip = ClientIp(i);
    const GeoRecord geo = geo_table.Lookup(ip);
    std::vector<size_t> chosen = guards_.DrawDistinct(rng_, config_.guards_per_selective_client);
    if (!chosen.empty()) {
      client_ips_.insert(ip);
      countries_.insert(geo.country_code);
      ases_.insert(geo.as_number);
    }
    for (uint32_t day = first_day; day <= last_day; ++day) {
      for (size_t g : chosen) EntryContact(guards_.member(g), day, ip, geo);
      if (!exits_.empty()) ExitVisits(day, Poisson(rng_, config_.behavior.mean_visits_per_client));
    }
  }
}

void Generator::PromiscuousClients() {
  if (guards_.empty()) return;
  const GeoTable& geo_table = GeoTable::Default();
  for (uint64_t j = 0; j < config_.n_promiscuous_clients; ++j) {
    const uint32_t ip = ClientIp(PromiscuousClientIndex(j));
    const GeoRecord geo = geo_table.Lookup(ip);
    client_ips_.insert(ip);
    countries_.insert(geo.country_code);
    ases_.insert(geo.as_number);
    for (uint32_t day = 0; day < config_.num_days; ++day) {
      for (size_t g = 0; g < guards_.size(); ++g) EntryContact(guards_.member(g), day, ip, geo);
    }
  }
}

void Generator::ExitVisits(uint32_t day, uint64_t visits) {
  const ClientBehavior& b = config_.behavior;
  for (uint64_t v = 0; v < visits; ++v) {
    const size_t relay = exits_.member(exits_.Draw(rng_));
    ExitStream initial;
    initial.is_initial = true;
    const double u = UniformUnit(rng_);
    uint32_t domain = 0;
    if (u < b.ipv4_initial_fraction) {
      initial.target_type = TargetType::kIpv4;
      initial.target = Ipv4String(static_cast<uint32_t>(rng_()));
      initial.port = 443;
      Add(tk::kStreamsInitialIpv4, 1);
    } else if (u < b.ipv4_initial_fraction + b.ipv6_initial_fraction) {
      initial.target_type = TargetType::kIpv6;
      initial.target = Ipv6String(rng_());
      initial.port = 443;
      Add(tk::kStreamsInitialIpv6, 1);
    } else {
      domain = zipf_.Sample(UniformUnit(rng_));
      initial.target_type = TargetType::kHostname;
      initial.target = DomainHostname(domain, config_.domains);
      Add(tk::kStreamsInitialHostname, 1);
      if (UniformUnit(rng_) < b.web_port_fraction) {
        initial.port = UniformUnit(rng_) < 0.8 ? 443 : 80;
        Add(tk::kStreamsInitialHostnameWeb, 1);
        ++truth_.primary_visits_by_domain[domain];
      } else {
        initial.port = kNonWebPorts[rng_() % kNonWebPorts.size()];
        Add(tk::kStreamsInitialHostnameNonWeb, 1);
      }
    }
    initial.bytes = ExponentialBytes(rng_, b.mean_stream_bytes);
    Add(tk::kStreamsInitial, 1);
    Add(tk::kStreamsTotal, 1);
    Add(tk::kExitBytes, static_cast<double>(initial.bytes));
    const int64_t t = TimeIn(day);
    const uint64_t subsequent = Poisson(rng_, b.mean_subsequent_streams);
    ExitStream follow = initial;
    follow.is_initial = false;
    Emit(relay, t, std::move(initial));
    for (uint64_t s = 0; s < subsequent; ++s) {
      follow.bytes = ExponentialBytes(rng_, b.mean_stream_bytes);
      Add(tk::kStreamsSubsequent, 1);
      Add(tk::kStreamsTotal, 1);
      Add(tk::kExitBytes, static_cast<double>(follow.bytes));
      Emit(relay, t, follow);
    }
  }
}

void Generator::Onions() {
  const OnionUniverse& o = config_.onions;
  if (o.addresses == 0 || hsdirs_.empty()) return;
  const auto published = static_cast<uint64_t>(
      std::llround(o.published_fraction * static_cast<double>(o.addresses)));
  const auto fetched = static_cast<uint64_t>(
      std::llround(o.fetched_fraction * static_cast<double>(published)));
  // Responsible HSDirs per address and replica, fixed for the whole trace.
  std::vector<std::vector<std::vector<size_t>>> placement(published);
  for (uint64_t a = 0; a < published; ++a) {
    placement[a].resize(o.replicas);
    for (uint32_t r = 0; r < o.replicas; ++r) {
      placement[a][r] = hsdirs_.DrawDistinct(rng_, o.hsdirs_per_replica);
    }
  }
  const double fail = config_.failures.descriptor_fetch_failure;
  for (uint32_t day = 0; day < config_.num_days; ++day) {
    for (uint64_t a = 0; a < published; ++a) {
      const std::string addr = OnionAddress(a);
      for (const auto& replica : placement[a]) {
        for (size_t h : replica) {
          const uint64_t uploads = 1 + Poisson(rng_, std::max(0.0, o.mean_uploads_per_hsdir - 1.0));
          for (uint64_t u = 0; u < uploads; ++u) {
            Emit(hsdirs_.member(h), TimeIn(day), DescriptorPublish{addr});
          }
          Add(tk::kHsdirUploads, static_cast<double>(uploads));
        }
      }
    }
    uint64_t hits = 0;
    for (uint64_t a = 0; a < fetched; ++a) {
      const std::string addr = OnionAddress(a);
      const uint64_t n =
          1 + Poisson(rng_, std::max(0.0, o.mean_fetches_per_fetched_address - 1.0));
      for (uint64_t f = 0; f < n; ++f) {
        const auto& replica = placement[a][rng_() % placement[a].size()];
        const size_t h = replica[rng_() % replica.size()];
        Emit(hsdirs_.member(h), TimeIn(day), DescriptorFetch{addr, true});
      }
      hits += n;
    }
    const uint64_t misses =
        fail < 1.0 ? Poisson(rng_, static_cast<double>(hits) * fail / (1.0 - fail)) : 0;
    for (uint64_t m = 0; m < misses; ++m) {
      const size_t h = hsdirs_.member(hsdirs_.Draw(rng_));
      const uint64_t idx = kUnpublishedOnionBase + (rng_() & (kUnpublishedOnionBase - 1));
      Emit(h, TimeIn(day), DescriptorFetch{OnionAddress(idx), false});
    }
    Add(tk::kHsdirFetches, static_cast<double>(hits + misses));
    Add(tk::kHsdirFetchesHit, static_cast<double>(hits));
    Add(tk::kHsdirFetchesMiss, static_cast<double>(misses));
  }
  Add(tk::kUniqueOnionsPublished, static_cast<double>(published));
  Add(tk::kUniqueOnionsFetched, static_cast<double>(fetched));
}

void Generator::Rendezvous() {
  const RendezvousActivity& r = config_.rendezvous;
  if (r.attempts_per_day == 0 || rends_.empty()) return;
  const FailureRates& f = config_.failures;
  const double mean_cells = std::max(1.0, r.mean_cells_per_active_circuit);
  std::geometric_distribution<uint64_t> cells_dist(1.0 / mean_cells);
  for (uint32_t day = 0; day < config_.num_days; ++day) {
    for (uint64_t a = 0; a < r.attempts_per_day; ++a) {
      const size_t relay = rends_.member(rends_.Draw(rng_));
      const int64_t t = TimeIn(day);
      const double u = UniformUnit(rng_);
      if (u < f.rendezvous_succeeded) {
        // Client and service circuits are spliced at the RP: two circuits.
        for (int side = 0; side < 2; ++side) {
          const uint64_t cells = 1 + cells_dist(rng_);
          Emit(relay, t, RendezvousCells{cells});
          Emit(relay, t, RendezvousCircuitEnd{RendezvousOutcome::kSucceeded, cells});
          Add(tk::kRendCells, static_cast<double>(cells));
        }
        Add(tk::kRendSucceeded, 2);
        Add(tk::kRendCircuits, 2);
      } else if (u < f.rendezvous_succeeded + f.rendezvous_conn_closed) {
        Emit(relay, t, RendezvousCircuitEnd{RendezvousOutcome::kConnClosed, 0});
        Add(tk::kRendConnClosed, 1);
        Add(tk::kRendCircuits, 1);
      } else {
        Emit(relay, t, RendezvousCircuitEnd{RendezvousOutcome::kExpired, 0});
        Add(tk::kRendExpired, 1);
        Add(tk::kRendCircuits, 1);
      }
    }
  }
}

GroundTruth Generator::Run() {
  for (const char* key :
       {tk::kStreamsTotal, tk::kStreamsInitial, tk::kStreamsSubsequent, tk::kStreamsInitialIpv4,
        tk::kStreamsInitialIpv6, tk::kStreamsInitialHostname, tk::kStreamsInitialHostnameWeb,
        tk::kStreamsInitialHostnameNonWeb, tk::kExitBytes, tk::kEntryConnections,
        tk::kEntryCircuits, tk::kEntryBytes, tk::kUniqueClientIps, tk::kUniqueCountries,
        tk::kUniqueAses, tk::kUniqueSlds, tk::kUniqueOnionsPublished, tk::kUniqueOnionsFetched,
        tk::kHsdirUploads, tk::kHsdirFetches, tk::kHsdirFetchesHit, tk::kHsdirFetchesMiss,
        tk::kRendCircuits, tk::kRendSucceeded, tk::kRendConnClosed, tk::kRendExpired,
        tk::kRendCells, tk::kDailyClientArrivals}) {
    truth_.totals[key] = 0.0;
  }
  truth_.primary_visits_by_domain.assign(config_.domains.universe_size, 0);
  for (const RelaySpec& r : config_.relays) {
    truth_.emitted_by_relay[r.id] = KindCounts{};
    truth_.relay_fractions[r.id] = RoleFractions{r.guard ? r.guard_weight : 0.0,
                                                 r.exit ? r.exit_weight : 0.0,
                                                 r.hsdir ? r.hsdir_weight : 0.0,
                                                 r.rendezvous ? r.rendezvous_weight : 0.0};
  }
  BuildPickers();

  SelectiveClients();
  PromiscuousClients();
  Onions();
  Rendezvous();

  for (const auto& [key, v] : acc_) truth_.totals[key] += v;
  truth_.totals[tk::kUniqueClientIps] = static_cast<double>(client_ips_.size());
  truth_.totals[tk::kUniqueCountries] = static_cast<double>(countries_.size());
  truth_.totals[tk::kUniqueAses] = static_cast<double>(ases_.size());
  truth_.totals[tk::kUniqueSlds] = static_cast<double>(std::count_if(
      truth_.primary_visits_by_domain.begin(), truth_.primary_visits_by_domain.end(),
      [](uint64_t v) { return v > 0; }));
  if (config_.n_clients > 0 && !guards_.empty()) {
    truth_.totals[tk::kDailyClientArrivals] =
        std::round(config_.daily_client_turnover * static_cast<double>(config_.n_clients));
  }

  std::vector<uint32_t> ids;
  ids.reserve(config_.relays.size());
  for (const RelaySpec& r : config_.relays) ids.push_back(r.id);
  return GroundTruth{Traces(std::move(ids), std::move(events_)), std::move(truth_)};
}

}  // namespace

absl::Status ValidateConfig(const GroundTruthConfig& config) {
  std::set<uint32_t> ids;
  double sums[4] = {0, 0, 0, 0};
  for (const RelaySpec& r : config.relays) {
    if (!ids.insert(r.id).second) {
      return absl::InvalidArgumentError(absl::StrCat("duplicate relay id ", r.id));
    }
    const std::pair<bool, double> roles[4] = {{r.guard, r.guard_weight},
                                              {r.exit, r.exit_weight},
                                              {r.hsdir, r.hsdir_weight},
                                              {r.rendezvous, r.rendezvous_weight}};
    for (int k = 0; k < 4; ++k) {
      const std::string name = absl::StrCat("relay ", r.id, " weight");
      RETURN_IF_ERROR(CheckProbability(name, roles[k].second));
      if (!roles[k].first && roles[k].second > 0.0) {
        return absl::InvalidArgumentError(
            absl::StrCat("relay ", r.id, " has a role weight without the role flag"));
      }
      sums[k] += roles[k].second;
    }
  }
  const char* role_names[4] = {"guard", "exit", "hsdir", "rendezvous"};
  for (int k = 0; k < 4; ++k) {
    if (sums[k] > 1.0 + kWeightSlack) {
      return absl::InvalidArgumentError(
          absl::StrCat(role_names[k], " weight fractions sum to ", sums[k], " > 1"));
    }
  }
  if (config.n_clients > 0 && config.guards_per_selective_client == 0) {
    return absl::InvalidArgumentError("guards_per_selective_client must be >= 1");
  }
  if (!(config.domains.alpha > 0.0) || !std::isfinite(config.domains.alpha)) {
    return absl::InvalidArgumentError(
        absl::StrCat("domain popularity alpha must be > 0, got ", config.domains.alpha));
  }
  if (config.domains.universe_size == 0) {
    return absl::InvalidArgumentError("domain universe size must be >= 1");
  }
  if (config.domains.tld_mix.empty()) {
    return absl::InvalidArgumentError("tld_mix must not be empty");
  }
  double tld_total = 0.0;
  for (const TldShare& t : config.domains.tld_mix) {
    RETURN_IF_ERROR(CheckNonNegative(absl::StrCat("tld share ", t.tld), t.share));
    if (t.tld.empty()) return absl::InvalidArgumentError("empty tld in tld_mix");
    tld_total += t.share;
  }
  if (tld_total <= 0.0) return absl::InvalidArgumentError("tld_mix shares sum to zero");

  const ClientBehavior& b = config.behavior;
  RETURN_IF_ERROR(CheckNonNegative("mean_connections_per_guard", b.mean_connections_per_guard));
  RETURN_IF_ERROR(CheckNonNegative("mean_circuits_per_connection", b.mean_circuits_per_connection));
  RETURN_IF_ERROR(CheckNonNegative("mean_bytes_per_circuit", b.mean_bytes_per_circuit));
  RETURN_IF_ERROR(CheckNonNegative("mean_visits_per_client", b.mean_visits_per_client));
  RETURN_IF_ERROR(CheckNonNegative("mean_subsequent_streams", b.mean_subsequent_streams));
  RETURN_IF_ERROR(CheckNonNegative("mean_stream_bytes", b.mean_stream_bytes));
  RETURN_IF_ERROR(CheckProbability("ipv4_initial_fraction", b.ipv4_initial_fraction));
  RETURN_IF_ERROR(CheckProbability("ipv6_initial_fraction", b.ipv6_initial_fraction));
  RETURN_IF_ERROR(CheckProbability("ipv4 + ipv6 initial fraction",
                               b.ipv4_initial_fraction + b.ipv6_initial_fraction));
  RETURN_IF_ERROR(CheckProbability("web_port_fraction", b.web_port_fraction));

  const OnionUniverse& o = config.onions;
  RETURN_IF_ERROR(CheckProbability("published_fraction", o.published_fraction));
  RETURN_IF_ERROR(CheckProbability("fetched_fraction", o.fetched_fraction));
  RETURN_IF_ERROR(CheckNonNegative("mean_uploads_per_hsdir", o.mean_uploads_per_hsdir));
  RETURN_IF_ERROR(CheckNonNegative("mean_fetches_per_fetched_address",
                               o.mean_fetches_per_fetched_address));
  if (o.addresses > 0 && (o.replicas == 0 || o.hsdirs_per_replica == 0)) {
    return absl::InvalidArgumentError("replicas and hsdirs_per_replica must be >= 1");
  }

  const FailureRates& f = config.failures;
  RETURN_IF_ERROR(CheckProbability("descriptor_fetch_failure", f.descriptor_fetch_failure));
  RETURN_IF_ERROR(CheckProbability("rendezvous_succeeded", f.rendezvous_succeeded));
  RETURN_IF_ERROR(CheckProbability("rendezvous_conn_closed", f.rendezvous_conn_closed));
  RETURN_IF_ERROR(CheckProbability("rendezvous outcome total",
                               f.rendezvous_succeeded + f.rendezvous_conn_closed));
  RETURN_IF_ERROR(CheckNonNegative("mean_cells_per_active_circuit",
                               config.rendezvous.mean_cells_per_active_circuit));

  if (config.num_days == 0) return absl::InvalidArgumentError("num_days must be >= 1");
  RETURN_IF_ERROR(CheckProbability("daily_client_turnover", config.daily_client_turnover));
  if (config.epoch_length <= 0) {
    return absl::InvalidArgumentError("epoch_length must be > 0");
  }
  if (config.n_clients + config.daily_client_turnover * config.n_clients * config.num_days >=
      static_cast<double>(kPromiscuousBase)) {
    return absl::InvalidArgumentError("client population exceeds the synthetic address space");
  }
  if (config.n_promiscuous_clients >= kPromiscuousBase) {
    return absl::InvalidArgumentError("too many promiscuous clients");
  }
  return absl::OkStatus();
}

Traces::Traces(std::vector<uint32_t> relay_ids, std::vector<Event> events)
    : relay_ids_(std::move(relay_ids)), events_(std::move(events)) {}

bool Traces::HasRelay(uint32_t relay_id) const {
  return std::find(relay_ids_.begin(), relay_ids_.end(), relay_id) != relay_ids_.end();
}

absl::StatusOr<std::vector<Event>> Traces::EventsForRelay(uint32_t relay_id) const {
  if (!HasRelay(relay_id)) {
    return absl::NotFoundError(absl::StrCat("unknown relay id ", relay_id));
  }
  std::vector<Event> out;
  for (const Event& e : events_) {
    if (e.relay_id == relay_id) out.push_back(e);
  }
  std::sort(out.begin(), out.end(), EventTimeOrder);
  return out;
}

absl::StatusOr<GroundTruth> GenerateGroundTruth(const GroundTruthConfig& config) {
  RETURN_IF_ERROR(ValidateConfig(config));
  return Generator(config).Run();
}

uint32_t ClientIp(uint64_t client_index) {
  // Multiplication by an odd constant is a bijection on 32-bit words.
  return static_cast<uint32_t>(client_index * 0x9E3779B1u + 0x7F4A7C15u);
}

uint64_t PromiscuousClientIndex(uint64_t j) { return kPromiscuousBase + j; }

std::string DomainRegistrableName(uint32_t domain_index, const DomainPopularity& domains) {
  double total = 0.0;
  for (const TldShare& t : domains.tld_mix) total += t.share;
  const double u = static_cast<double>(SplitMix64(domain_index ^ HashLabel("tld")) >> 11) *
                   0x1.0p-53 * total;
  double acc = 0.0;
  const std::string* tld = &domains.tld_mix.back().tld;
  for (const TldShare& t : domains.tld_mix) {
    acc += t.share;
    if (u < acc) {
      tld = &t.tld;
      break;
    }
  }
  return absl::StrCat("d", domain_index, ".", *tld);
}

std::string DomainHostname(uint32_t domain_index, const DomainPopularity& domains) {
  return absl::StrCat("www.", DomainRegistrableName(domain_index, domains));
}

std::string OnionAddress(uint64_t address_index) {
  static constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz234567";
  // 80 pseudorandom bits, 5 per character.
  const uint64_t hi = SplitMix64(address_index ^ HashLabel("onion/hi"));
  const uint64_t lo = SplitMix64(address_index ^ HashLabel("onion/lo"));
  std::string out(16, 'a');
  for (int i = 0; i < 12; ++i) out[i] = kAlphabet[(hi >> (5 * i)) & 31];
  for (int i = 12; i < 16; ++i) out[i] = kAlphabet[(lo >> (5 * (i - 12))) & 31];
  return out;
}

}  // namespace privmeasure::events

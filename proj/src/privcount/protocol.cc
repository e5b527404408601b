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

#include "privmeasure/privcount/protocol.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "absl/strings/str_cat.h"
#include "privmeasure/common/status_macros.h"

namespace privmeasure::privcount {
namespace {

template <typename T>
absl::StatusOr<T> Parse(std::string_view what, const std::function<T()>& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& ex) {
    return absl::InvalidArgumentError(absl::StrCat("malformed ", std::string(what), ": ", ex.what()));
  }
}

}  // namespace

uint64_t AddMod(uint64_t a, uint64_t b, uint64_t q) {
  const uint64_t s = a + b;  // both < q <= 2^63, no overflow
  return s >= q ? s - q : s;
}

uint64_t SubMod(uint64_t a, uint64_t b, uint64_t q) { return a >= b ? a - b : a + (q - b); }

uint64_t ToResidue(int64_t v, uint64_t q) {
  const auto sq = static_cast<int64_t>(q);
  int64_t r = v % sq;
  if (r < 0) r += sq;
  return static_cast<uint64_t>(r);
}

int64_t LiftSigned(uint64_t r, uint64_t q) {
  return r > q / 2 ? -static_cast<int64_t>(q - r) : static_cast<int64_t>(r);
}

uint64_t UniformResidue(Rng& rng, uint64_t q) {
  // Rejection on the smallest power-of-two mask covering q.
  uint64_t mask = q - 1;
  for (int s = 1; s < 64; s <<= 1) mask |= mask >> s;
  for (;;) {
    const uint64_t v = rng() & mask;
    if (v < q) return v;
  }
}

uint64_t NoiseSeed(uint64_t root_seed, std::string_view round_id, uint32_t dc_id,
                   std::string_view counter_id) {
  return DeriveSeed(root_seed,
                    {HashLabel("privcount/noise"), HashLabel(round_id), dc_id, HashLabel(counter_id)});
}

uint64_t ShareSeed(uint64_t root_seed, std::string_view round_id, uint32_t dc_id) {
  return DeriveSeed(root_seed, {HashLabel("privcount/shares"), HashLabel(round_id), dc_id});
}

int64_t DrawRoundedNoise(uint64_t seed, double sigma) {
  if (!(sigma > 0.0)) return 0;
  Rng rng(seed);
  return std::llround(std::normal_distribution<double>(0.0, sigma)(rng));
}

std::string DcName(uint32_t dc_id) { return absl::StrCat("dc:", dc_id); }
std::string SkName(uint32_t sk_id) { return absl::StrCat("sk:", sk_id); }

nlohmann::ordered_json ShareMessageToJson(const ShareMessage& m) {
  return {{"round_id", m.round_id}, {"dc_id", m.dc_id},   {"sk_id", m.sk_id},
          {"counter_id", m.counter_id}, {"share", m.share}};
}

absl::StatusOr<ShareMessage> ShareMessageFromJson(const nlohmann::json& j) {
  return Parse<ShareMessage>("share message", [&] {
    return ShareMessage{j.at("round_id").get<std::string>(), j.at("dc_id").get<uint32_t>(),
                        j.at("sk_id").get<uint32_t>(), j.at("counter_id").get<std::string>(),
                        j.at("share").get<uint64_t>()};
  });
}

nlohmann::ordered_json ValueMessageToJson(const ValueMessage& m) {
  nlohmann::ordered_json j = {{"round_id", m.round_id},
                              {"sender", m.sender},
                              {"counter_id", m.counter_id},
                              {"value", m.value}};
  if (m.incomplete) j["incomplete"] = true;
  return j;
}

absl::StatusOr<ValueMessage> ValueMessageFromJson(const nlohmann::json& j) {
  return Parse<ValueMessage>("value message", [&] {
    return ValueMessage{j.at("round_id").get<std::string>(), j.at("sender").get<std::string>(),
                        j.at("counter_id").get<std::string>(), j.at("value").get<uint64_t>(),
                        j.value("incomplete", false)};
  });
}

absl::StatusOr<std::pair<DataCollector, std::vector<ShareMessage>>> DataCollector::InitRound(
    const Options& options, std::shared_ptr<const std::vector<CounterFamily>> families,
    const std::map<std::string, privacy::NoiseSpec>& noise, const std::vector<uint32_t>& sk_ids) {
  if (sk_ids.empty()) return absl::InvalidArgumentError("a round needs at least one share keeper");
  if (families == nullptr) return absl::InvalidArgumentError("no counter families");
  RETURN_IF_ERROR(ValidateFamilies(*families));
  if (options.modulus < 3) return absl::InvalidArgumentError("modulus too small");
  if (!(options.noise_variance_share >= 0.0 && options.noise_variance_share <= 1.0)) {
    return absl::InvalidArgumentError("noise variance share must be in [0, 1]");
  }
  DataCollector dc;
  dc.options_ = options;
  dc.families_ = std::move(families);
  std::vector<ShareMessage> shares;
  Rng share_rng(ShareSeed(options.root_seed, options.round_id, options.dc_id));
  const double scale = std::sqrt(options.noise_variance_share);
  for (const CounterFamily& f : *dc.families_) {
    std::vector<uint64_t> bins;
    for (const std::string& id : f.counter_ids) {
      auto it = noise.find(id);
      if (it == noise.end()) {
        return absl::InvalidArgumentError(absl::StrCat("missing noise spec for counter ", id));
      }
      const int64_t draw = DrawRoundedNoise(
          NoiseSeed(options.root_seed, options.round_id, options.dc_id, id), it->second.sigma * scale);
      uint64_t value = ToResidue(draw, options.modulus);
      for (uint32_t sk : sk_ids) {
        const uint64_t s = UniformResidue(share_rng, options.modulus);
        value = AddMod(value, s, options.modulus);
        shares.push_back(ShareMessage{options.round_id, options.dc_id, sk, id, s});
      }
      bins.push_back(value);
    }
    dc.values_.push_back(std::move(bins));
  }
  return std::pair{std::move(dc), std::move(shares)};
}

absl::Status DataCollector::Observe(const events::Event& event) {
  if (event.simulated_time < options_.window_start || event.simulated_time >= options_.window_end) {
    return absl::OutOfRangeError(absl::StrCat("event at t=", event.simulated_time,
                                              " outside round window [", options_.window_start,
                                              ", ", options_.window_end, ")"));
  }
  const uint64_t q = options_.modulus;
  for (size_t i = 0; i < families_->size(); ++i) {
    const CounterFamily& f = (*families_)[i];
    if (f.kind != event.kind()) continue;
    const std::optional<Increment> inc = f.classify(event);
    if (!inc) continue;
    if (inc->bin >= values_[i].size()) {
      return absl::InternalError(absl::StrCat("family ", f.family_id, " routed to bin ", inc->bin));
    }
    values_[i][inc->bin] = AddMod(values_[i][inc->bin], inc->amount % q, q);
  }
  return absl::OkStatus();
}

std::vector<ValueMessage> DataCollector::Report() const {
  std::vector<ValueMessage> out;
  for (size_t i = 0; i < families_->size(); ++i) {
    const CounterFamily& f = (*families_)[i];
    for (size_t b = 0; b < f.counter_ids.size(); ++b) {
      out.push_back(ValueMessage{options_.round_id, DcName(options_.dc_id), f.counter_ids[b],
                                 values_[i][b], false});
    }
  }
  return out;
}

absl::StatusOr<uint64_t> DataCollector::Value(std::string_view counter_id) const {
  for (size_t i = 0; i < families_->size(); ++i) {
    const auto& ids = (*families_)[i].counter_ids;
    for (size_t b = 0; b < ids.size(); ++b) {
      if (ids[b] == counter_id) return values_[i][b];
    }
  }
  return absl::NotFoundError(absl::StrCat("unknown counter ", std::string(counter_id)));
}

ShareKeeper::ShareKeeper(std::string round_id, uint32_t sk_id, uint64_t modulus,
                         std::vector<uint32_t> expected_dcs, std::vector<std::string> counter_ids)
    : round_id_(std::move(round_id)),
      sk_id_(sk_id),
      modulus_(modulus),
      expected_dcs_(expected_dcs.begin(), expected_dcs.end()) {
  for (std::string& id : counter_ids) shares_[std::move(id)];
}

absl::Status ShareKeeper::Receive(const ShareMessage& m) {
  if (m.round_id != round_id_) {
    return absl::FailedPreconditionError(absl::StrCat("share for round ", m.round_id));
  }
  if (m.sk_id != sk_id_) return absl::InvalidArgumentError("share addressed to another SK");
  if (!expected_dcs_.contains(m.dc_id)) {
    return absl::InvalidArgumentError(absl::StrCat("share from unknown DC ", m.dc_id));
  }
  auto it = shares_.find(m.counter_id);
  if (it == shares_.end()) {
    return absl::InvalidArgumentError(absl::StrCat("share for unknown counter ", m.counter_id));
  }
  if (m.share >= modulus_) return absl::InvalidArgumentError("share not reduced: modulus mismatch");
  if (!it->second.emplace(m.dc_id, m.share).second) {
    return absl::AlreadyExistsError(
        absl::StrCat("duplicate share from DC ", m.dc_id, " for ", m.counter_id));
  }
  return absl::OkStatus();
}

std::vector<ValueMessage> ShareKeeper::SumShares() const {
  std::vector<ValueMessage> out;
  for (const auto& [counter, by_dc] : shares_) {
    ValueMessage m{round_id_, SkName(sk_id_), counter, 0, by_dc.size() != expected_dcs_.size()};
    for (const auto& [dc, s] : by_dc) m.value = AddMod(m.value, s, modulus_);
    out.push_back(std::move(m));
  }
  return out;
}

nlohmann::ordered_json CounterResultToJson(const CounterResult& r) {
  nlohmann::ordered_json j;
  j["counter_id"] = r.counter_id;
  j["complete"] = r.complete;
  if (r.complete) {
    j["noisy_total"] = r.noisy_total;
    j["sigma"] = r.sigma;
    const double half = 1.96 * r.sigma;
    j["ci95"] = {static_cast<double>(r.noisy_total) - half, static_cast<double>(r.noisy_total) + half};
  } else {
    j["missing"] = r.missing;
  }
  return j;
}

TallyServer::TallyServer(std::string round_id, uint64_t modulus, std::vector<uint32_t> dc_ids,
                         std::vector<uint32_t> sk_ids, std::map<std::string, double> sigma)
    : round_id_(std::move(round_id)), modulus_(modulus), sigma_(std::move(sigma)) {
  for (uint32_t d : dc_ids) parties_.push_back(DcName(d));
  for (uint32_t s : sk_ids) {
    parties_.push_back(SkName(s));
    sk_names_.insert(SkName(s));
  }
}

absl::Status TallyServer::Receive(const ValueMessage& m) {
  if (m.round_id != round_id_) {
    return absl::FailedPreconditionError(absl::StrCat("value for round ", m.round_id));
  }
  if (std::find(parties_.begin(), parties_.end(), m.sender) == parties_.end()) {
    return absl::InvalidArgumentError(absl::StrCat("unknown sender ", m.sender));
  }
  if (!sigma_.contains(m.counter_id)) {
    return absl::InvalidArgumentError(absl::StrCat("unknown counter ", m.counter_id));
  }
  if (m.value >= modulus_) return absl::InvalidArgumentError("value not reduced: modulus mismatch");
  if (!received_[m.counter_id].emplace(m.sender, m).second) {
    return absl::AlreadyExistsError(absl::StrCat("duplicate value from ", m.sender));
  }
  return absl::OkStatus();
}

std::vector<CounterResult> TallyServer::Aggregate() const {
  std::vector<CounterResult> out;
  for (const auto& [counter, sigma] : sigma_) {
    CounterResult r;
    r.counter_id = counter;
    r.sigma = sigma;
    auto it = received_.find(counter);
    uint64_t total = 0;
    for (const std::string& party : parties_) {
      const ValueMessage* m = nullptr;
      if (it != received_.end()) {
        auto p = it->second.find(party);
        if (p != it->second.end()) m = &p->second;
      }
      if (m == nullptr || m->incomplete) {
        r.missing.push_back(party);
        continue;
      }
      total = sk_names_.contains(party) ? SubMod(total, m->value, modulus_)
                                        : AddMod(total, m->value, modulus_);
    }
    r.complete = r.missing.empty();
    if (r.complete) r.noisy_total = LiftSigned(total, modulus_);
    out.push_back(std::move(r));
  }
  return out;
}

absl::Status InMemoryTransport::Send(const std::string& to, std::string payload) {
  queues_[to].push_back(std::move(payload));
  ++sent_;
  return absl::OkStatus();
}

std::vector<std::string> InMemoryTransport::Drain(const std::string& to) {
  std::vector<std::string> out;
  auto it = queues_.find(to);
  if (it == queues_.end()) return out;
  out.assign(std::make_move_iterator(it->second.begin()), std::make_move_iterator(it->second.end()));
  it->second.clear();
  return out;
}

absl::StatusOr<RoundOutput> RunRound(const RoundConfig& config,
                                     const std::map<uint32_t, std::vector<events::Event>>& events_by_dc,
                                     Transport& transport) {
  if (config.dc_ids.empty()) return absl::InvalidArgumentError("a round needs at least one DC");
  if (config.num_sks == 0) return absl::InvalidArgumentError("a round needs at least one SK");
  if (config.families == nullptr) return absl::InvalidArgumentError("no counter families");
  std::vector<uint32_t> sk_ids(config.num_sks);
  for (uint32_t i = 0; i < config.num_sks; ++i) sk_ids[i] = i;
  std::vector<std::string> counter_ids;
  std::map<std::string, double> sigma;
  for (const CounterSpec& s : CounterSpecs(*config.families, config.modulus)) {
    counter_ids.push_back(s.counter_id);
    auto it = config.noise.find(s.counter_id);
    sigma[s.counter_id] = it == config.noise.end() ? 0.0 : it->second.sigma;
  }

  // Init: DCs blind their counters and ship shares.
  std::vector<DataCollector> dcs;
  for (uint32_t d : config.dc_ids) {
    if (config.dc_fail_before_init.contains(d)) continue;
    DataCollector::Options opt;
    opt.round_id = config.round_id;
    opt.dc_id = d;
    opt.modulus = config.modulus;
    opt.root_seed = config.root_seed;
    opt.window_start = config.window_start;
    opt.window_end = config.window_end;
    opt.noise_variance_share = 1.0 / static_cast<double>(config.dc_ids.size());
    ASSIGN_OR_RETURN(auto init, DataCollector::InitRound(opt, config.families, config.noise, sk_ids));
    for (const ShareMessage& m : init.second) {
      RETURN_IF_ERROR(transport.Send(SkName(m.sk_id), ShareMessageToJson(m).dump()));
    }
    dcs.push_back(std::move(init.first));
  }
  std::vector<ShareKeeper> sks;
  for (uint32_t s : sk_ids) {
    ShareKeeper sk(config.round_id, s, config.modulus, config.dc_ids, counter_ids);
    for (const std::string& raw : transport.Drain(SkName(s))) {
      ASSIGN_OR_RETURN(const ShareMessage m, ShareMessageFromJson(nlohmann::json::parse(raw)));
      RETURN_IF_ERROR(sk.Receive(m));
    }
    sks.push_back(std::move(sk));
  }

  // Collection.
  for (DataCollector& dc : dcs) {
    auto it = events_by_dc.find(dc.dc_id());
    if (it == events_by_dc.end()) continue;
    for (const events::Event& e : it->second) RETURN_IF_ERROR(dc.Observe(e));
  }

  // Tally.
  for (const DataCollector& dc : dcs) {
    if (config.dc_fail_before_report.contains(dc.dc_id())) continue;
    for (const ValueMessage& m : dc.Report()) {
      RETURN_IF_ERROR(transport.Send(kTallyServerName, ValueMessageToJson(m).dump()));
    }
  }
  for (const ShareKeeper& sk : sks) {
    if (config.sk_fail.contains(sk.sk_id())) continue;
    for (const ValueMessage& m : sk.SumShares()) {
      RETURN_IF_ERROR(transport.Send(kTallyServerName, ValueMessageToJson(m).dump()));
    }
  }
  TallyServer ts(config.round_id, config.modulus, config.dc_ids, sk_ids, sigma);
  RoundOutput out;
  for (const std::string& raw : transport.Drain(kTallyServerName)) {
    ASSIGN_OR_RETURN(const ValueMessage m, ValueMessageFromJson(nlohmann::json::parse(raw)));
    RETURN_IF_ERROR(ts.Receive(m));
    ++out.messages;
  }
  out.results = ts.Aggregate();
  return out;
}

}  // namespace privmeasure::privcount

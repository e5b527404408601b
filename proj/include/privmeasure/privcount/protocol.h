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

#ifndef PRIVMEASURE_PRIVCOUNT_PROTOCOL_H_
#define PRIVMEASURE_PRIVCOUNT_PROTOCOL_H_

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"
#include "privmeasure/common/random.h"
#include "privmeasure/events/event.h"
#include "privmeasure/privacy/privacy.h"
#include "privmeasure/privcount/counters.h"

namespace privmeasure::privcount {

// Residue arithmetic; operands must already be reduced.
uint64_t AddMod(uint64_t a, uint64_t b, uint64_t q);
uint64_t SubMod(uint64_t a, uint64_t b, uint64_t q);
uint64_t ToResidue(int64_t v, uint64_t q);
// Representative in (-q/2, q/2].
int64_t LiftSigned(uint64_t r, uint64_t q);
uint64_t UniformResidue(Rng& rng, uint64_t q);

// Seed of the DC's frozen noise draw for one counter.
uint64_t NoiseSeed(uint64_t root_seed, std::string_view round_id, uint32_t dc_id,
                   std::string_view counter_id);
// Seed of the DC's share stream for a round.
uint64_t ShareSeed(uint64_t root_seed, std::string_view round_id, uint32_t dc_id);

// round(N(0, sigma^2)) from a fresh generator seeded with `seed`.
int64_t DrawRoundedNoise(uint64_t seed, double sigma);

std::string DcName(uint32_t dc_id);
std::string SkName(uint32_t sk_id);
inline constexpr char kTallyServerName[] = "ts";

// DC -> SK at round start.
struct ShareMessage {
  std::string round_id;
  uint32_t dc_id = 0;
  uint32_t sk_id = 0;
  std::string counter_id;
  uint64_t share = 0;
};
nlohmann::ordered_json ShareMessageToJson(const ShareMessage& m);
absl::StatusOr<ShareMessage> ShareMessageFromJson(const nlohmann::json& j);

// DC -> TS blinded counter, or SK -> TS share sum.
struct ValueMessage {
  std::string round_id;
  // "dc:<id>" or "sk:<id>".
  std::string sender;
  std::string counter_id;
  uint64_t value = 0;
  // SK only: a DC never delivered its share for this counter.
  bool incomplete = false;
};
nlohmann::ordered_json ValueMessageToJson(const ValueMessage& m);
absl::StatusOr<ValueMessage> ValueMessageFromJson(const nlohmann::json& j);

class DataCollector {
 public:
  struct Options {
    std::string round_id;
    uint32_t dc_id = 0;
    uint64_t modulus = kDefaultModulus;
    uint64_t root_seed = 1;
    // Events must fall in [window_start, window_end).
    int64_t window_start = 0;
    int64_t window_end = 86400;
    // This DC's share of each counter's noise variance (1 / number of DCs).
    double noise_variance_share = 1.0;
  };

  // Draws and freezes noise, blinds every counter with one share per SK and
  // hands the shares back for transmission. The DC keeps only the residues.
  static absl::StatusOr<std::pair<DataCollector, std::vector<ShareMessage>>> InitRound(
      const Options& options, std::shared_ptr<const std::vector<CounterFamily>> families,
      const std::map<std::string, privacy::NoiseSpec>& noise, const std::vector<uint32_t>& sk_ids);

  // Increments every counter whose family accepts the event.
  absl::Status Observe(const events::Event& event);

  std::vector<ValueMessage> Report() const;

  // The blinded residue of one counter.
  absl::StatusOr<uint64_t> Value(std::string_view counter_id) const;
  uint32_t dc_id() const { return options_.dc_id; }

 private:
  DataCollector() = default;

  Options options_;
  std::shared_ptr<const std::vector<CounterFamily>> families_;
  // values_[family][bin]
  std::vector<std::vector<uint64_t>> values_;
};

class ShareKeeper {
 public:
  ShareKeeper(std::string round_id, uint32_t sk_id, uint64_t modulus,
              std::vector<uint32_t> expected_dcs, std::vector<std::string> counter_ids);

  absl::Status Receive(const ShareMessage& m);

  // Sum of received shares per counter; a counter missing any expected DC is
  // flagged incomplete.
  std::vector<ValueMessage> SumShares() const;

  uint32_t sk_id() const { return sk_id_; }

 private:
  std::string round_id_;
  uint32_t sk_id_;
  uint64_t modulus_;
  std::set<uint32_t> expected_dcs_;
  std::map<std::string, std::map<uint32_t, uint64_t>> shares_;
};

struct CounterResult {
  std::string counter_id;
  bool complete = false;
  // Signed noisy total; meaningful only when complete.
  int64_t noisy_total = 0;
  double sigma = 0.0;
  std::vector<std::string> missing;
};

nlohmann::ordered_json CounterResultToJson(const CounterResult& r);

class TallyServer {
 public:
  // `sigma` per counter is the total noise standard deviation across DCs.
  TallyServer(std::string round_id, uint64_t modulus, std::vector<uint32_t> dc_ids,
              std::vector<uint32_t> sk_ids, std::map<std::string, double> sigma);

  absl::Status Receive(const ValueMessage& m);

  // Total = sum of DC values - sum of SK share sums (mod q), lifted to a
  // signed integer. Counters missing any party are incomplete.
  std::vector<CounterResult> Aggregate() const;

 private:
  std::string round_id_;
  uint64_t modulus_;
  std::vector<std::string> parties_;
  std::set<std::string> sk_names_;
  std::map<std::string, double> sigma_;
  // counter -> party -> value
  std::map<std::string, std::map<std::string, ValueMessage>> received_;
};

// Message channel between logical parties.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual absl::Status Send(const std::string& to, std::string payload) = 0;
  // Removes and returns every queued message for `to`, in send order.
  virtual std::vector<std::string> Drain(const std::string& to) = 0;
};

class InMemoryTransport : public Transport {
 public:
  absl::Status Send(const std::string& to, std::string payload) override;
  std::vector<std::string> Drain(const std::string& to) override;
  uint64_t messages_sent() const { return sent_; }

 private:
  std::map<std::string, std::deque<std::string>> queues_;
  uint64_t sent_ = 0;
};

struct RoundConfig {
  std::string round_id = "round";
  uint64_t modulus = kDefaultModulus;
  uint64_t root_seed = 1;
  int64_t window_start = 0;
  int64_t window_end = 86400;
  std::vector<uint32_t> dc_ids;
  uint32_t num_sks = 3;
  std::shared_ptr<const std::vector<CounterFamily>> families;
  std::map<std::string, privacy::NoiseSpec> noise;
  // Fault injection.
  std::set<uint32_t> dc_fail_before_init;
  std::set<uint32_t> dc_fail_before_report;
  std::set<uint32_t> sk_fail;
};

struct RoundOutput {
  std::vector<CounterResult> results;
  uint64_t messages = 0;
};

// Drives init, observation, share summing and tally over `transport`.
absl::StatusOr<RoundOutput> RunRound(const RoundConfig& config,
                                     const std::map<uint32_t, std::vector<events::Event>>& events_by_dc,
                                     Transport& transport);

}  // namespace privmeasure::privcount

#endif  // PRIVMEASURE_PRIVCOUNT_PROTOCOL_H_

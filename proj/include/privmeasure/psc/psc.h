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

#ifndef PRIVMEASURE_PSC_PSC_H_
#define PRIVMEASURE_PSC_PSC_H_

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"
#include "privmeasure/inference/inference.h"
#include "privmeasure/privacy/privacy.h"
#include "privmeasure/psc/elgamal.h"
#include "privmeasure/psc/group.h"

namespace privmeasure::psc {

inline constexpr uint32_t kDefaultLog2Bins = 18;

// ---- noise bins ----

struct NoiseBinParams {
  // Noise bins appended by each CP; each is non-zero with probability 1/2.
  uint64_t n_noise = 0;
  uint32_t num_cps = 1;
  double sensitivity = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;

  uint64_t total() const { return n_noise * num_cps; }
  double expected_noise() const { return static_cast<double>(total()) / 2.0; }
};

// Hockey-stick divergence between Bin(n, 1/2) and the same shifted by
// `sensitivity`, at e^epsilon: the smallest delta the noise achieves.
double BinomialNoiseDelta(uint64_t n, double sensitivity, double epsilon);

// Smallest n with BinomialNoiseDelta(n) <= delta.
absl::StatusOr<uint64_t> CalibrateNoiseBins(double sensitivity, double epsilon, double delta);

// Every CP appends the full calibrated count, so the guarantee survives as
// long as one CP is honest.
absl::StatusOr<NoiseBinParams> MakeNoiseBinParams(double sensitivity,
                                                  const privacy::BudgetShare& share,
                                                  uint32_t num_cps);

nlohmann::ordered_json NoiseBinParamsToJson(const NoiseBinParams& p);

// ---- items and bins ----

// Keyed SipHash-2-4 truncated to log2(b) bits. The key is shared by all DCs
// of a round.
class BinHasher {
 public:
  BinHasher(const std::array<uint8_t, 16>& key, uint32_t log2_bins);
  static BinHasher Random(CryptoRng& rng, uint32_t log2_bins);

  uint64_t Index(std::string_view item) const;
  uint32_t log2_bins() const { return log2_bins_; }
  uint64_t bins() const { return uint64_t{1} << log2_bins_; }

 private:
  std::array<uint8_t, 16> key_;
  uint32_t log2_bins_;
};

absl::Status ValidateLog2Bins(uint32_t log2_bins);

// Fixed item encodings.
std::string EncodeIpv4Item(uint32_t ip);
std::string EncodeAsItem(uint32_t as_number);
// Lowercased; countries, SLDs and onion addresses.
std::string EncodeTextItem(std::string_view text);

template <class G>
class BinVector {
 public:
  // b encryptions of zero.
  static absl::StatusOr<BinVector> Create(uint32_t log2_bins, const PublicKey<G>& pk,
                                          CryptoRng& rng) {
    if (absl::Status s = ValidateLog2Bins(log2_bins); !s.ok()) return s;
    BinVector v;
    v.log2_bins_ = log2_bins;
    v.bins_.reserve(uint64_t{1} << log2_bins);
    for (uint64_t i = 0; i < (uint64_t{1} << log2_bins); ++i) v.bins_.push_back(pk.EncryptZero(rng));
    return v;
  }

  // Marks H(item) with a fresh random non-zero plaintext.
  void Observe(const BinHasher& hasher, std::string_view item, const PublicKey<G>& pk,
               CryptoRng& rng) {
    bins_[hasher.Index(item)] = pk.EncryptNonZero(rng);
  }

  uint32_t log2_bins() const { return log2_bins_; }
  uint64_t size() const { return bins_.size(); }
  const std::vector<Ciphertext<G>>& bins() const { return bins_; }

 private:
  uint32_t log2_bins_ = 0;
  std::vector<Ciphertext<G>> bins_;
};

// ---- CP pipeline ----

// Folds one DC vector into the column-wise homomorphic sum. An empty
// accumulator adopts the vector.
template <class G>
absl::Status AccumulateDcVector(std::vector<Ciphertext<G>>& acc, const std::vector<Ciphertext<G>>& v) {
  if (acc.empty()) {
    acc = v;
    return absl::OkStatus();
  }
  if (acc.size() != v.size()) {
    return absl::InvalidArgumentError("DC vectors disagree on the bin count");
  }
  for (size_t i = 0; i < acc.size(); ++i) acc[i] = AddCiphertexts<G>(acc[i], v[i]);
  return absl::OkStatus();
}

// Appends n_noise bins, each non-zero with probability 1/2. Returns how many
// were non-zero (known only to this CP).
template <class G>
uint64_t CpAddNoise(std::vector<Ciphertext<G>>& bins, uint64_t n_noise, const PublicKey<G>& pk,
                    CryptoRng& rng) {
  uint64_t flipped = 0;
  bins.reserve(bins.size() + n_noise);
  uint64_t coins = 0;
  for (uint64_t i = 0; i < n_noise; ++i) {
    if (i % 64 == 0) coins = rng();
    const bool nonzero = (coins >> (i % 64)) & 1;
    flipped += nonzero;
    bins.push_back(nonzero ? pk.EncryptNonZero(rng) : pk.EncryptZero(rng));
  }
  return flipped;
}

template <class G>
void CpShuffleRerandomize(std::vector<Ciphertext<G>>& bins, const PublicKey<G>& pk, CryptoRng& rng) {
  std::shuffle(bins.begin(), bins.end(), rng);
  for (auto& ct : bins) ct = pk.Rerandomize(ct, rng);
}

template <class G>
void CpPartialDecrypt(std::vector<Ciphertext<G>>& bins, const typename G::Scalar& share) {
  for (auto& ct : bins) ct = PartialDecrypt<G>(ct, share);
}

// Applies every CP share in order and counts non-zero plaintexts.
template <class G>
absl::StatusOr<uint64_t> JointDecryptCount(std::vector<Ciphertext<G>> bins,
                                           const std::vector<std::optional<typename G::Scalar>>& shares) {
  if (shares.empty()) return absl::FailedPreconditionError("no key shares");
  for (size_t i = 0; i < shares.size(); ++i) {
    if (!shares[i]) return absl::FailedPreconditionError("missing key share for cp:" + std::to_string(i));
  }
  for (const auto& s : shares) CpPartialDecrypt<G>(bins, *s);
  return static_cast<uint64_t>(std::count_if(bins.begin(), bins.end(), DecryptedIsNonZero<G>));
}

// ---- frames ----

// One frame: u32 big-endian payload length, then "PSCM", version, group id,
// two reserved bytes, u32 big-endian ciphertext count and the encoded
// (c1, c2) pairs.
inline constexpr uint8_t kFrameVersion = 1;

template <class G>
std::string EncodeFrame(const std::vector<Ciphertext<G>>& bins);

template <class G>
absl::StatusOr<std::vector<Ciphertext<G>>> DecodeFrame(std::string_view frame);

std::string ToBase64(std::string_view bytes);
absl::StatusOr<std::string> FromBase64(std::string_view text);

// ---- rounds ----

struct PscRoundConfig {
  std::string round_id = "psc";
  GroupKind group = GroupKind::kRistretto255;
  uint32_t log2_bins = kDefaultLog2Bins;
  uint32_t num_cps = 3;
  std::vector<uint32_t> dc_ids;
  uint64_t root_seed = 1;
  NoiseBinParams noise;
  // Test-only; needs a build with PRIVMEASURE_KEY_ESCROW.
  bool escrow = false;
  // Keep base64 copies of every hand-off frame.
  bool keep_transcript = false;
  std::set<uint32_t> dc_fail;
  std::set<uint32_t> cp_fail;
};

// Filled only for escrowed rounds.
struct EscrowAudit {
  uint64_t occupied_bins = 0;
  uint64_t noise_nonzero = 0;
};

struct PscRoundOutput {
  uint64_t raw_count = 0;
  uint64_t bins = 0;
  uint64_t n_noise_total = 0;
  std::vector<uint32_t> missing_dcs;
  uint64_t frame_bytes = 0;
  std::optional<EscrowAudit> escrow;
  nlohmann::ordered_json transcript;
};

// DCs fill vectors from their items, the CPs combine, add noise, shuffle and
// rerandomize in sequence, then jointly decrypt. Hand-offs between CPs go
// through encoded frames.
absl::StatusOr<PscRoundOutput> RunPscRound(
    const PscRoundConfig& config, const std::map<uint32_t, std::vector<std::string>>& items_by_dc);

// Cardinality estimate from the raw count, using the exact occupancy CI.
absl::StatusOr<inference::Estimate> PscEstimate(uint64_t raw_count, uint64_t bins,
                                                const NoiseBinParams& noise);

}  // namespace privmeasure::psc

#endif  // PRIVMEASURE_PSC_PSC_H_

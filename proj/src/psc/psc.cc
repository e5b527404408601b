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

#include "privmeasure/psc/psc.h"

#include <sodium.h>

#include <cctype>
#include <cmath>
#include <cstring>
#include <map>
#include <tuple>

#include "absl/strings/str_cat.h"
#include "absl/synchronization/mutex.h"
#include "privmeasure/common/random.h"
#include "privmeasure/common/status_macros.h"

namespace privmeasure::psc {

namespace {

double LogHalfBinomialPmf(uint64_t n, int64_t k) {
  const double dn = static_cast<double>(n);
  const double dk = static_cast<double>(k);
  return std::lgamma(dn + 1) - std::lgamma(dk + 1) - std::lgamma(dn - dk + 1) - dn * M_LN2;
}

void PutU32(std::string& out, uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t GetU32(const uint8_t* p) {
  return (uint32_t{p[0]} << 24) | (uint32_t{p[1]} << 16) | (uint32_t{p[2]} << 8) | p[3];
}

constexpr char kMagic[4] = {'P', 'S', 'C', 'M'};
constexpr size_t kHeaderBytes = 12;

}  // namespace

double BinomialNoiseDelta(uint64_t n, double sensitivity, double epsilon) {
  const auto shift = static_cast<int64_t>(std::ceil(sensitivity));
  if (shift <= 0) return 0.0;
  // Sum over k of max(0, P[B = k] - e^eps P[B = k - shift]). The likelihood
  // ratio falls with k, so only a lower tail contributes.
  double delta = 0.0;
  for (int64_t k = 0; k <= static_cast<int64_t>(n); ++k) {
    const double lp = LogHalfBinomialPmf(n, k);
    if (k < shift) {
      delta += std::exp(lp);
      continue;
    }
    const double log_ratio = lp - LogHalfBinomialPmf(n, k - shift);
    if (log_ratio <= epsilon) break;
    delta += std::exp(lp) * -std::expm1(epsilon - log_ratio);
  }
  return delta;
}

static absl::StatusOr<uint64_t> SearchNoiseBins(double sensitivity, double epsilon, double delta);

absl::StatusOr<uint64_t> CalibrateNoiseBins(double sensitivity, double epsilon, double delta) {
  if (!(sensitivity >= 0) || !(epsilon > 0) || !(delta > 0 && delta < 1)) {
    return absl::InvalidArgumentError("noise calibration needs sensitivity >= 0, epsilon > 0, 0 < delta < 1");
  }
  // The search costs tens of millions of lgamma calls; campaigns repeat the
  // same few parameter triples.
  static absl::Mutex mu(absl::kConstInit);
  static auto* cache = new std::map<std::tuple<double, double, double>, uint64_t>();
  const auto key = std::make_tuple(sensitivity, epsilon, delta);
  {
    absl::MutexLock lock(&mu);
    if (auto it = cache->find(key); it != cache->end()) return it->second;
  }
  ASSIGN_OR_RETURN(const uint64_t n, SearchNoiseBins(sensitivity, epsilon, delta));
  absl::MutexLock lock(&mu);
  cache->emplace(key, n);
  return n;
}

static absl::StatusOr<uint64_t> SearchNoiseBins(double sensitivity, double epsilon, double delta) {
  if (BinomialNoiseDelta(0, sensitivity, epsilon) <= delta) return 0;
  uint64_t hi = 1;
  while (BinomialNoiseDelta(hi, sensitivity, epsilon) > delta) {
    if (hi > (uint64_t{1} << 36)) return absl::OutOfRangeError("noise bin count diverges");
    hi *= 2;
  }
  uint64_t lo = hi / 2;  // delta(lo) > target, or lo = 0
  while (hi - lo > 1) {
    const uint64_t mid = lo + (hi - lo) / 2;
    if (BinomialNoiseDelta(mid, sensitivity, epsilon) <= delta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

absl::StatusOr<NoiseBinParams> MakeNoiseBinParams(double sensitivity,
                                                  const privacy::BudgetShare& share,
                                                  uint32_t num_cps) {
  if (num_cps == 0) return absl::InvalidArgumentError("at least one CP is required");
  NoiseBinParams p;
  ASSIGN_OR_RETURN(p.n_noise, CalibrateNoiseBins(sensitivity, share.epsilon, share.delta));
  p.num_cps = num_cps;
  p.sensitivity = sensitivity;
  p.epsilon = share.epsilon;
  p.delta = share.delta;
  return p;
}

nlohmann::ordered_json NoiseBinParamsToJson(const NoiseBinParams& p) {
  nlohmann::ordered_json j;
  j["n_noise_per_cp"] = p.n_noise;
  j["num_cps"] = p.num_cps;
  j["n_noise_total"] = p.total();
  j["expected_noise"] = p.expected_noise();
  j["sensitivity"] = p.sensitivity;
  j["epsilon"] = p.epsilon;
  j["delta"] = p.delta;
  return j;
}

absl::Status ValidateLog2Bins(uint32_t log2_bins) {
  if (log2_bins > 24) return absl::InvalidArgumentError("at most 2^24 bins are supported");
  return absl::OkStatus();
}

BinHasher::BinHasher(const std::array<uint8_t, 16>& key, uint32_t log2_bins)
    : key_(key), log2_bins_(log2_bins) {
  static_assert(crypto_shorthash_KEYBYTES == 16);
  EnsureSodium();
}

BinHasher BinHasher::Random(CryptoRng& rng, uint32_t log2_bins) {
  std::array<uint8_t, 16> key;
  rng.Fill(key.data(), key.size());
  return BinHasher(key, log2_bins);
}

uint64_t BinHasher::Index(std::string_view item) const {
  unsigned char out[crypto_shorthash_BYTES];
  crypto_shorthash(out, reinterpret_cast<const unsigned char*>(item.data()), item.size(), key_.data());
  uint64_t h = 0;
  for (int i = 7; i >= 0; --i) h = (h << 8) | out[i];
  return h & (bins() - 1);
}

std::string EncodeIpv4Item(uint32_t ip) {
  std::string s;
  PutU32(s, ip);
  return s;
}

std::string EncodeAsItem(uint32_t as_number) { return EncodeIpv4Item(as_number); }

std::string EncodeTextItem(std::string_view text) {
  std::string s(text);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

template <class G>
std::string EncodeFrame(const std::vector<Ciphertext<G>>& bins) {
  const size_t payload = kHeaderBytes + bins.size() * 2 * G::kEncodedSize;
  std::string out;
  out.reserve(4 + payload);
  PutU32(out, static_cast<uint32_t>(payload));
  out.append(kMagic, 4);
  out.push_back(static_cast<char>(kFrameVersion));
  out.push_back(static_cast<char>(G::kKind));
  out.append(2, '\0');
  PutU32(out, static_cast<uint32_t>(bins.size()));
  const size_t start = out.size();
  out.resize(start + bins.size() * 2 * G::kEncodedSize);
  auto* p = reinterpret_cast<uint8_t*>(out.data() + start);
  for (const auto& ct : bins) {
    G::Encode(ct.c1, p);
    G::Encode(ct.c2, p + G::kEncodedSize);
    p += 2 * G::kEncodedSize;
  }
  return out;
}

template <class G>
absl::StatusOr<std::vector<Ciphertext<G>>> DecodeFrame(std::string_view frame) {
  const auto* p = reinterpret_cast<const uint8_t*>(frame.data());
  if (frame.size() < 4 + kHeaderBytes) return absl::InvalidArgumentError("frame too short");
  if (GetU32(p) != frame.size() - 4) return absl::InvalidArgumentError("frame length mismatch");
  p += 4;
  if (std::memcmp(p, kMagic, 4) != 0) return absl::InvalidArgumentError("bad frame magic");
  if (p[4] != kFrameVersion) return absl::InvalidArgumentError(absl::StrCat("unsupported frame version ", p[4]));
  if (p[5] != static_cast<uint8_t>(G::kKind)) return absl::InvalidArgumentError("frame group mismatch");
  const uint32_t count = GetU32(p + 8);
  if (uint64_t{count} * 2 * G::kEncodedSize + kHeaderBytes != frame.size() - 4) {
    return absl::InvalidArgumentError("frame count does not match its length");
  }
  p += kHeaderBytes;
  std::vector<Ciphertext<G>> bins;
  bins.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    auto c1 = G::Decode(p);
    auto c2 = G::Decode(p + G::kEncodedSize);
    if (!c1.ok() || !c2.ok()) {
      return absl::InvalidArgumentError(absl::StrCat("malformed ciphertext at index ", i));
    }
    bins.push_back({*c1, *c2});
    p += 2 * G::kEncodedSize;
  }
  return bins;
}

template std::string EncodeFrame<Ristretto255>(const std::vector<Ciphertext<Ristretto255>>&);
template std::string EncodeFrame<Schnorr64>(const std::vector<Ciphertext<Schnorr64>>&);
template absl::StatusOr<std::vector<Ciphertext<Ristretto255>>> DecodeFrame<Ristretto255>(std::string_view);
template absl::StatusOr<std::vector<Ciphertext<Schnorr64>>> DecodeFrame<Schnorr64>(std::string_view);
template std::string EncodeFrame<SimulationZq>(const std::vector<Ciphertext<SimulationZq>>&);
template absl::StatusOr<std::vector<Ciphertext<SimulationZq>>> DecodeFrame<SimulationZq>(std::string_view);

std::string ToBase64(std::string_view bytes) {
  EnsureSodium();
  const size_t len = sodium_base64_ENCODED_LEN(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  std::string out(len, '\0');
  sodium_bin2base64(out.data(), len, reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(),
                    sodium_base64_VARIANT_ORIGINAL);
  out.resize(len - 1);  // drop the terminator
  return out;
}

absl::StatusOr<std::string> FromBase64(std::string_view text) {
  EnsureSodium();
  std::string out(text.size() / 4 * 3 + 3, '\0');
  size_t len = 0;
  if (sodium_base642bin(reinterpret_cast<unsigned char*>(out.data()), out.size(), text.data(), text.size(),
                        nullptr, &len, nullptr, sodium_base64_VARIANT_ORIGINAL) != 0) {
    return absl::InvalidArgumentError("invalid base64");
  }
  out.resize(len);
  return out;
}

namespace {

template <class G>
class RoundRunner {
 public:
  RoundRunner(const PscRoundConfig& config, PscRoundOutput& out) : config_(config), out_(out) {}

  // Encodes, records and decodes one hand-off, as the receiving party would.
  absl::StatusOr<std::vector<Ciphertext<G>>> HandOff(const std::vector<Ciphertext<G>>& bins,
                                                     const std::string& from, const std::string& to) {
    const std::string frame = EncodeFrame<G>(bins);
    out_.frame_bytes += frame.size();
    if (config_.keep_transcript) {
      out_.transcript["frames"].push_back(
          {{"from", from}, {"to", to}, {"bytes", frame.size()}, {"base64", ToBase64(frame)}});
    }
    return DecodeFrame<G>(frame);
  }

  absl::Status Run(const std::map<uint32_t, std::vector<std::string>>& items_by_dc) {
    const uint64_t round_tag = HashLabel(config_.round_id);
    CryptoRng key_rng(DeriveSeed(config_.root_seed, {HashLabel("psc/keys"), round_tag}), "psc/keys");
    ASSIGN_OR_RETURN(KeyMaterial<G> keys, GenerateKeys<G>(config_.num_cps, config_.escrow, key_rng));
    const PublicKey<G> pk(keys.combined);
    CryptoRng hash_rng(DeriveSeed(config_.root_seed, {HashLabel("psc/hash"), round_tag}), "psc/hash");
    const BinHasher hasher = BinHasher::Random(hash_rng, config_.log2_bins);

    out_.bins = hasher.bins();
    out_.n_noise_total = config_.noise.n_noise * config_.num_cps;
    if (config_.keep_transcript) {
      out_.transcript["round_id"] = config_.round_id;
      out_.transcript["group"] = std::string(GroupKindName(G::kKind));
      out_.transcript["frames"] = nlohmann::ordered_json::array();
    }

    std::vector<Ciphertext<G>> acc;
    for (uint32_t dc : config_.dc_ids) {
      if (config_.dc_fail.contains(dc)) {
        out_.missing_dcs.push_back(dc);
        continue;
      }
      CryptoRng rng(DeriveSeed(config_.root_seed, {HashLabel("psc/dc"), round_tag, dc}), "psc/dc");
      ASSIGN_OR_RETURN(BinVector<G> v, BinVector<G>::Create(config_.log2_bins, pk, rng));
      if (auto it = items_by_dc.find(dc); it != items_by_dc.end()) {
        for (const std::string& item : it->second) v.Observe(hasher, item, pk, rng);
      }
      ASSIGN_OR_RETURN(auto received, HandOff(v.bins(), absl::StrCat("dc:", dc), "cp:0"));
      RETURN_IF_ERROR(AccumulateDcVector<G>(acc, received));
    }
    if (acc.empty()) return absl::FailedPreconditionError("no DC delivered a bin vector");

    std::optional<EscrowAudit> audit;
    if (config_.escrow) {
      audit.emplace();
      for (const auto& ct : acc) {
        ASSIGN_OR_RETURN(bool nonzero, EscrowIsNonZero<G>(keys, ct));
        audit->occupied_bins += nonzero;
      }
    }

    for (uint32_t cp = 0; cp < config_.num_cps; ++cp) {
      CryptoRng rng(DeriveSeed(config_.root_seed, {HashLabel("psc/cp"), round_tag, cp}), "psc/cp");
      const uint64_t flipped = CpAddNoise<G>(acc, config_.noise.n_noise, pk, rng);
      if (audit) audit->noise_nonzero += flipped;
      CpShuffleRerandomize<G>(acc, pk, rng);
      const std::string next = cp + 1 < config_.num_cps ? absl::StrCat("cp:", cp + 1) : "cp:0/decrypt";
      ASSIGN_OR_RETURN(acc, HandOff(acc, absl::StrCat("cp:", cp), next));
    }

    std::vector<std::optional<typename G::Scalar>> shares;
    for (uint32_t cp = 0; cp < config_.num_cps; ++cp) {
      if (config_.cp_fail.contains(cp)) {
        shares.emplace_back();
      } else {
        shares.emplace_back(keys.shares[cp]);
      }
    }
    ASSIGN_OR_RETURN(out_.raw_count, JointDecryptCount<G>(std::move(acc), shares));
    out_.escrow = audit;
    return absl::OkStatus();
  }

 private:
  const PscRoundConfig& config_;
  PscRoundOutput& out_;
};

}  // namespace

absl::StatusOr<PscRoundOutput> RunPscRound(
    const PscRoundConfig& config, const std::map<uint32_t, std::vector<std::string>>& items_by_dc) {
  EnsureSodium();
  if (config.num_cps == 0) return absl::InvalidArgumentError("at least one CP is required");
  if (config.dc_ids.empty()) return absl::InvalidArgumentError("at least one DC is required");
  RETURN_IF_ERROR(ValidateLog2Bins(config.log2_bins));
  for (uint32_t cp : config.cp_fail) {
    if (cp < config.num_cps) {
      return absl::FailedPreconditionError(absl::StrCat("missing key share for cp:", cp));
    }
  }
  PscRoundOutput out;
  switch (config.group) {
    case GroupKind::kRistretto255:
      RETURN_IF_ERROR(RoundRunner<Ristretto255>(config, out).Run(items_by_dc));
      break;
    case GroupKind::kSchnorr64:
      RETURN_IF_ERROR(RoundRunner<Schnorr64>(config, out).Run(items_by_dc));
      break;
    case GroupKind::kSimulationZq:
      RETURN_IF_ERROR(RoundRunner<SimulationZq>(config, out).Run(items_by_dc));
      break;
  }
  return out;
}

absl::StatusOr<inference::Estimate> PscEstimate(uint64_t raw_count, uint64_t bins,
                                                const NoiseBinParams& noise) {
  return inference::PscExactCi(raw_count, bins, noise.total());
}

}  // namespace privmeasure::psc

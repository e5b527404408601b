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
#include <set>
#include <string>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "privmeasure/common/random.h"
#include "privmeasure/psc/elgamal.h"
#include "privmeasure/psc/group.h"
#include "privmeasure/psc/psc.h"

namespace privmeasure::psc {
namespace {

template <class G>
class GroupTest : public ::testing::Test {};
using Groups = ::testing::Types<Ristretto255, Schnorr64, SimulationZq>;
TYPED_TEST_SUITE(GroupTest, Groups);

TYPED_TEST(GroupTest, ExponentLaws) {
  using G = TypeParam;
  CryptoRng rng(1);
  for (int i = 0; i < 5; ++i) {
    const auto a = G::RandomScalar(rng);
    const auto b = G::RandomScalar(rng);
    EXPECT_EQ(G::Op(G::ExpG(a), G::ExpG(b)), G::ExpG(G::AddScalars(a, b)));
    EXPECT_TRUE(G::IsIdentity(G::Op(G::ExpG(a), G::ExpG(G::NegateScalar(a)))));
    const auto x = G::ExpG(a);
    EXPECT_TRUE(G::IsIdentity(G::Op(G::Exp(x, b), G::Exp(x, G::NegateScalar(b)))));
    EXPECT_EQ(G::Op(x, G::Identity()), x);
    const typename G::FixedBase table(x);
    EXPECT_EQ(table.Exp(b), G::Exp(x, b));
  }
}

TYPED_TEST(GroupTest, EncodeDecodeRoundTrip) {
  using G = TypeParam;
  CryptoRng rng(2);
  std::vector<uint8_t> buf(G::kEncodedSize);
  for (int i = 0; i < 5; ++i) {
    const auto e = G::ExpG(G::RandomScalar(rng));
    G::Encode(e, buf.data());
    auto d = G::Decode(buf.data());
    ASSERT_TRUE(d.ok());
    EXPECT_EQ(*d, e);
  }
  G::Encode(G::Identity(), buf.data());
  ASSERT_TRUE(G::Decode(buf.data()).ok());
  EXPECT_TRUE(G::IsIdentity(*G::Decode(buf.data())));
  std::fill(buf.begin(), buf.end(), 0xff);
  EXPECT_FALSE(G::Decode(buf.data()).ok());
}

TEST(Schnorr64Test, SubgroupStructure) {
  using G = Schnorr64;
  const auto g = G::FromInteger(4);
  EXPECT_TRUE(G::IsIdentity(G::Exp(g, G::kQ)));
  EXPECT_FALSE(G::IsIdentity(G::Exp(g, 2)));
  EXPECT_EQ(G::ToInteger(G::ExpG(3)), 64u);
  EXPECT_EQ(G::ToInteger(G::FromInteger(123456789)), 123456789u);
  // p = 3 mod 4, so -1 is a non-residue and lies outside the subgroup.
  uint8_t buf[8];
  const uint64_t minus_one = G::kP - 1;
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<uint8_t>(minus_one >> (56 - 8 * i));
  EXPECT_FALSE(G::Decode(buf).ok());
}

TEST(SimulationZqTest, MersenneProducts) {
  using G = SimulationZq;
  EXPECT_EQ(G::Exp(G::kQ - 1, G::kQ - 1), 1u);
  EXPECT_EQ(G::Exp(uint64_t{1} << 60, 4), 2u);
  uint8_t buf[8];
  G::Encode(G::kQ - 1, buf);
  EXPECT_EQ(*G::Decode(buf), G::kQ - 1);
  std::fill(buf, buf + 8, 0xff);
  EXPECT_FALSE(G::Decode(buf).ok());
  EXPECT_EQ(*ParseGroupKind("zq-sim"), GroupKind::kSimulationZq);
  EXPECT_EQ(GroupKindName(GroupKind::kSchnorr64), "schnorr64");
  EXPECT_FALSE(ParseGroupKind("p256").ok());
}

TEST(CryptoRngTest, DeterministicAndLabelled) {
  CryptoRng a(5), b(5), c(5, "other");
  const uint64_t x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
}

template <class G>
class ElGamalTest : public ::testing::Test {};
TYPED_TEST_SUITE(ElGamalTest, Groups);

TYPED_TEST(ElGamalTest, ZeroNonZeroAndHomomorphism) {
  using G = TypeParam;
  CryptoRng rng(3);
  auto keys = GenerateKeys<G>(3, true, rng);
  ASSERT_TRUE(keys.ok()) << keys.status();
  const PublicKey<G> pk(keys->combined);
  const auto zero = pk.EncryptZero(rng);
  const auto one = pk.EncryptNonZero(rng);
  EXPECT_FALSE(*EscrowIsNonZero<G>(*keys, zero));
  EXPECT_TRUE(*EscrowIsNonZero<G>(*keys, one));
  EXPECT_FALSE(*EscrowIsNonZero<G>(*keys, AddCiphertexts<G>(zero, pk.EncryptZero(rng))));
  EXPECT_TRUE(*EscrowIsNonZero<G>(*keys, AddCiphertexts<G>(zero, one)));

  const auto re = pk.Rerandomize(one, rng);
  EXPECT_NE(re, one);
  EXPECT_TRUE(*EscrowIsNonZero<G>(*keys, re));
  EXPECT_FALSE(*EscrowIsNonZero<G>(*keys, pk.Rerandomize(zero, rng)));

  auto ct = one;
  for (const auto& s : keys->shares) ct = PartialDecrypt<G>(ct, s);
  EXPECT_TRUE(DecryptedIsNonZero<G>(ct));
}

TEST(EscrowTest, RefusedWithoutFlag) {
  EXPECT_TRUE(KeyEscrowCompiledIn());
  CryptoRng rng(4);
  auto keys = GenerateKeys<Schnorr64>(2, false, rng);
  ASSERT_TRUE(keys.ok());
  const PublicKey<Schnorr64> pk(keys->combined);
  EXPECT_EQ(EscrowIsNonZero<Schnorr64>(*keys, pk.EncryptZero(rng)).status().code(),
            absl::StatusCode::kFailedPrecondition);
  EXPECT_FALSE(GenerateKeys<Schnorr64>(0, false, rng).ok());
}

using S = Schnorr64;

struct Fixture {
  explicit Fixture(uint64_t seed, uint32_t cps = 3) : rng(seed), keys(*GenerateKeys<S>(cps, true, rng)), pk(keys.combined) {}
  CryptoRng rng;
  KeyMaterial<S> keys;
  PublicKey<S> pk;

  std::set<size_t> Occupied(const std::vector<Ciphertext<S>>& bins) {
    std::set<size_t> out;
    for (size_t i = 0; i < bins.size(); ++i) {
      if (*EscrowIsNonZero<S>(keys, bins[i])) out.insert(i);
    }
    return out;
  }
};

TEST(BinVectorTest, InitializedBinsAreZero) {
  Fixture f(10);
  auto v = BinVector<S>::Create(6, f.pk, f.rng);
  ASSERT_TRUE(v.ok());
  EXPECT_EQ(v->size(), 64u);
  EXPECT_TRUE(f.Occupied(v->bins()).empty());
  EXPECT_FALSE(BinVector<S>::Create(25, f.pk, f.rng).ok());
}

TEST(BinVectorTest, ObserveIsIdempotentAndMarksHashedBin) {
  Fixture f(11);
  const BinHasher h = BinHasher::Random(f.rng, 8);
  auto v = *BinVector<S>::Create(8, f.pk, f.rng);
  v.Observe(h, "x", f.pk, f.rng);
  const auto once = f.Occupied(v.bins());
  v.Observe(h, "x", f.pk, f.rng);
  EXPECT_EQ(f.Occupied(v.bins()), once);
  EXPECT_EQ(once, std::set<size_t>{h.Index("x")});
  std::string y = "y";
  while (h.Index(y) == h.Index("x")) y += "y";
  v.Observe(h, y, f.pk, f.rng);
  EXPECT_EQ(f.Occupied(v.bins()).size(), 2u);
}

TEST(BinHasherTest, ExpectedOccupancySixteenBinsEightItems) {
  // 16 (1 - (15/16)^8) over random hash keys.
  const double expected = 16.0 * (1.0 - std::pow(15.0 / 16.0, 8));
  CryptoRng rng(12);
  constexpr int kTrials = 20000;
  double sum = 0;
  for (int t = 0; t < kTrials; ++t) {
    const BinHasher h = BinHasher::Random(rng, 4);
    std::set<uint64_t> occ;
    for (int i = 0; i < 8; ++i) occ.insert(h.Index("item" + std::to_string(i)));
    sum += occ.size();
  }
  // Occupancy variance here is below 1, so the SE is under 0.007.
  EXPECT_NEAR(sum / kTrials, expected, 0.03);
  EXPECT_NEAR(expected, 6.45, 0.01);
}

TEST(BinHasherTest, KeyedAndInRange) {
  const BinHasher a({1}, 10), b({2}, 10);
  int same = 0;
  for (int i = 0; i < 100; ++i) {
    const std::string item = std::to_string(i);
    EXPECT_LT(a.Index(item), 1024u);
    same += a.Index(item) == b.Index(item);
  }
  EXPECT_LT(same, 5);
}

TEST(ItemEncodingTest, FixedWidthAndLowercase) {
  EXPECT_EQ(EncodeIpv4Item(0x0a000001), std::string("\x0a\x00\x00\x01", 4));
  EXPECT_EQ(EncodeAsItem(7).size(), 4u);
  EXPECT_EQ(EncodeTextItem("Example.COM"), "example.com");
}

TEST(CpTest, NoiseBinsAppendAndAccount) {
  Fixture f(13);
  std::vector<Ciphertext<S>> bins = (*BinVector<S>::Create(4, f.pk, f.rng)).bins();
  const auto before = bins;
  EXPECT_EQ(CpAddNoise<S>(bins, 0, f.pk, f.rng), 0u);
  EXPECT_EQ(bins, before);
  const uint64_t flipped = CpAddNoise<S>(bins, 1000, f.pk, f.rng);
  EXPECT_EQ(bins.size(), 1016u);
  EXPECT_EQ(f.Occupied(bins).size(), flipped);
  // Bin(1000, 1/2): sd 15.8.
  EXPECT_NEAR(static_cast<double>(flipped), 500.0, 5 * 15.9);
}

TEST(CpTest, NoiseMeanIsHalf) {
  Fixture f(14);
  double sum = 0;
  constexpr int kRuns = 400;
  for (int i = 0; i < kRuns; ++i) {
    std::vector<Ciphertext<S>> bins;
    sum += CpAddNoise<S>(bins, 1000, f.pk, f.rng);
  }
  EXPECT_NEAR(sum / kRuns, 500.0, 3 * 15.81 / std::sqrt(kRuns));
}

TEST(CpTest, ShufflePreservesPlaintextMultiset) {
  Fixture f(15);
  const BinHasher h = BinHasher::Random(f.rng, 6);
  auto v = *BinVector<S>::Create(6, f.pk, f.rng);
  for (int i = 0; i < 20; ++i) v.Observe(h, std::to_string(i), f.pk, f.rng);
  std::vector<Ciphertext<S>> bins = v.bins();
  const size_t occupied = f.Occupied(bins).size();
  CpShuffleRerandomize<S>(bins, f.pk, f.rng);
  EXPECT_EQ(f.Occupied(bins).size(), occupied);
  EXPECT_EQ(bins.size(), 64u);
}

TEST(CpTest, RerandomizeOnlyChangesEveryCiphertext) {
  Fixture f(16);
  auto v = *BinVector<S>::Create(5, f.pk, f.rng);
  std::vector<Ciphertext<S>> bins = v.bins();
  for (auto& ct : bins) ct = f.pk.Rerandomize(ct, f.rng);
  for (size_t i = 0; i < bins.size(); ++i) {
    EXPECT_NE(bins[i], v.bins()[i]);
    EXPECT_FALSE(*EscrowIsNonZero<S>(f.keys, bins[i]));
  }
}

// With one CP only rerandomizing and the other shuffling, the marked bin's
// final position is still uniform.
TEST(CpTest, ComposedShuffleUniformIfEitherIs) {
  Fixture f(17, 2);
  constexpr int kBins = 4;
  constexpr int kTrials = 2000;
  for (int honest = 0; honest < 2; ++honest) {
    std::vector<int> hist(kBins);
    for (int t = 0; t < kTrials; ++t) {
      std::vector<Ciphertext<S>> bins;
      bins.push_back(f.pk.EncryptNonZero(f.rng));
      for (int i = 1; i < kBins; ++i) bins.push_back(f.pk.EncryptZero(f.rng));
      for (int cp = 0; cp < 2; ++cp) {
        if (cp == honest) {
          CpShuffleRerandomize<S>(bins, f.pk, f.rng);
        } else {
          for (auto& ct : bins) ct = f.pk.Rerandomize(ct, f.rng);
        }
      }
      const auto occ = f.Occupied(bins);
      ASSERT_EQ(occ.size(), 1u);
      ++hist[*occ.begin()];
    }
    double chi2 = 0;
    for (int c : hist) chi2 += (c - kTrials / 4.0) * (c - kTrials / 4.0) / (kTrials / 4.0);
    // 3 degrees of freedom; 99.9th percentile 16.27.
    EXPECT_LT(chi2, 16.27) << honest;
  }
}

TEST(CpTest, JointDecryptCount) {
  Fixture f(18);
  std::vector<std::optional<S::Scalar>> shares(f.keys.shares.begin(), f.keys.shares.end());
  auto v = *BinVector<S>::Create(6, f.pk, f.rng);
  EXPECT_EQ(*JointDecryptCount<S>(v.bins(), shares), 0u);
  const BinHasher h = BinHasher::Random(f.rng, 6);
  std::set<uint64_t> idx;
  for (int i = 0; i < 10; ++i) {
    v.Observe(h, std::to_string(i), f.pk, f.rng);
    idx.insert(h.Index(std::to_string(i)));
  }
  EXPECT_EQ(*JointDecryptCount<S>(v.bins(), shares), idx.size());
  std::vector<Ciphertext<S>> noisy = v.bins();
  const uint64_t flipped = CpAddNoise<S>(noisy, 100, f.pk, f.rng);
  EXPECT_EQ(*JointDecryptCount<S>(noisy, shares), idx.size() + flipped);
  shares[1].reset();
  EXPECT_EQ(JointDecryptCount<S>(v.bins(), shares).status().code(), absl::StatusCode::kFailedPrecondition);
}

TEST(CpTest, AccumulateRejectsMismatchedWidths) {
  Fixture f(19);
  std::vector<Ciphertext<S>> acc;
  ASSERT_TRUE(AccumulateDcVector<S>(acc, (*BinVector<S>::Create(4, f.pk, f.rng)).bins()).ok());
  EXPECT_FALSE(AccumulateDcVector<S>(acc, (*BinVector<S>::Create(5, f.pk, f.rng)).bins()).ok());
}

template <class G>
class FrameTest : public ::testing::Test {};
TYPED_TEST_SUITE(FrameTest, Groups);

TYPED_TEST(FrameTest, RoundTripAndRejects) {
  using G = TypeParam;
  CryptoRng rng(20);
  auto keys = *GenerateKeys<G>(1, false, rng);
  const PublicKey<G> pk(keys.combined);
  std::vector<Ciphertext<G>> bins = {pk.EncryptZero(rng), pk.EncryptNonZero(rng), pk.EncryptZero(rng)};
  const std::string frame = EncodeFrame<G>(bins);
  EXPECT_EQ(frame.size(), 4 + 12 + 3 * 2 * G::kEncodedSize);
  auto back = DecodeFrame<G>(frame);
  ASSERT_TRUE(back.ok()) << back.status();
  EXPECT_EQ(*back, bins);

  EXPECT_FALSE(DecodeFrame<G>(frame.substr(0, frame.size() - 1)).ok());
  std::string bad = frame;
  bad[4] = 'X';
  EXPECT_FALSE(DecodeFrame<G>(bad).ok());
  bad = frame;
  bad[8] = 9;  // version
  EXPECT_FALSE(DecodeFrame<G>(bad).ok());
  bad = frame;
  for (size_t i = 16; i < 16 + G::kEncodedSize; ++i) bad[i] = '\xff';
  EXPECT_FALSE(DecodeFrame<G>(bad).ok());
  EXPECT_FALSE(DecodeFrame<G>("").ok());

  auto b64 = FromBase64(ToBase64(frame));
  ASSERT_TRUE(b64.ok());
  EXPECT_EQ(*b64, frame);
  EXPECT_FALSE(FromBase64("@@@").ok());
}

TEST(FrameTest, GroupTagChecked) {
  CryptoRng rng(21);
  auto keys = *GenerateKeys<S>(1, false, rng);
  const PublicKey<S> pk(keys.combined);
  const std::string frame = EncodeFrame<S>({pk.EncryptZero(rng)});
  EXPECT_FALSE(DecodeFrame<Ristretto255>(frame).ok());
}

// Direct hockey-stick sum over the full support, as an oracle.
double BruteHockeyStick(int n, int shift, double eps) {
  std::vector<double> pmf(n + 1);
  for (int k = 0; k <= n; ++k) {
    pmf[k] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  }
  double d = 0;
  for (int k = 0; k <= n + shift; ++k) {
    const double p = k <= n ? pmf[k] : 0.0;
    const double q = (k - shift >= 0 && k - shift <= n) ? pmf[k - shift] : 0.0;
    d += std::max(0.0, p - std::exp(eps) * q);
  }
  return d;
}

TEST(NoiseCalibrationTest, DeltaMatchesBruteForce) {
  for (int n : {1, 10, 100, 1000}) {
    for (int shift : {1, 4}) {
      const double expected = BruteHockeyStick(n, shift, 0.3);
      EXPECT_NEAR(BinomialNoiseDelta(n, shift, 0.3), expected, 1e-12 + 1e-9 * expected) << n << " " << shift;
    }
  }
}

TEST(NoiseCalibrationTest, MinimalCount) {
  auto n = CalibrateNoiseBins(4, 0.3, 1e-11);
  ASSERT_TRUE(n.ok());
  EXPECT_LE(BinomialNoiseDelta(*n, 4, 0.3), 1e-11);
  EXPECT_GT(BinomialNoiseDelta(*n - 1, 4, 0.3), 1e-11);
  // Comparable to the classical Gaussian: sd sqrt(n)/2 near 4 * 23.83.
  EXPECT_GT(std::sqrt(*n) / 2, 50);
  EXPECT_LT(std::sqrt(*n) / 2, 4 * 23.83);
  EXPECT_EQ(*CalibrateNoiseBins(0, 0.3, 1e-11), 0u);
  EXPECT_FALSE(CalibrateNoiseBins(4, 0, 1e-11).ok());
  EXPECT_FALSE(CalibrateNoiseBins(4, 0.3, 0).ok());
  auto p = MakeNoiseBinParams(4, {"unique/client_ips", 0.3, 1e-11}, 3);
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(p->total(), 3 * *n);
  EXPECT_DOUBLE_EQ(p->expected_noise(), 1.5 * *n);
  EXPECT_EQ(NoiseBinParamsToJson(*p)["n_noise_total"], 3 * *n);
}

TEST(NoiseCalibrationTest, LargerSensitivityNeedsMoreBins) {
  EXPECT_LT(*CalibrateNoiseBins(1, 0.3, 1e-6), *CalibrateNoiseBins(4, 0.3, 1e-6));
  EXPECT_LT(*CalibrateNoiseBins(4, 0.3, 1e-6), *CalibrateNoiseBins(4, 0.3, 1e-11));
}

PscRoundConfig SmallRound(GroupKind g, uint32_t log2_bins, uint64_t seed) {
  PscRoundConfig c;
  c.group = g;
  c.log2_bins = log2_bins;
  c.dc_ids = {1, 2};
  c.num_cps = 2;
  c.root_seed = seed;
  c.escrow = true;
  return c;
}

TEST(RoundTest, UnionOfTwoDcs) {
  for (GroupKind g : {GroupKind::kSchnorr64, GroupKind::kRistretto255, GroupKind::kSimulationZq}) {
    PscRoundConfig c = SmallRound(g, 8, 1);
    std::map<uint32_t, std::vector<std::string>> items = {{1, {"a", "b"}}, {2, {"b", "c"}}};
    auto out = RunPscRound(c, items);
    ASSERT_TRUE(out.ok()) << out.status();
    ASSERT_TRUE(out->escrow.has_value());
    ASSERT_EQ(out->escrow->occupied_bins, 3u) << "hash collision under this seed";
    EXPECT_EQ(out->raw_count, 3u);
    EXPECT_EQ(out->bins, 256u);
  }
}

TEST(RoundTest, RawEqualsOccupiedPlusFlippedNoise) {
  PscRoundConfig c = SmallRound(GroupKind::kSchnorr64, 10, 2);
  c.noise.n_noise = 50;
  c.noise.num_cps = 2;
  std::map<uint32_t, std::vector<std::string>> items;
  for (int i = 0; i < 100; ++i) items[1 + i % 2].push_back("item" + std::to_string(i));
  auto out = RunPscRound(c, items);
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out->n_noise_total, 100u);
  EXPECT_EQ(out->raw_count, out->escrow->occupied_bins + out->escrow->noise_nonzero);
  auto again = RunPscRound(c, items);
  EXPECT_EQ(again->raw_count, out->raw_count);
}

TEST(RoundTest, FailuresAndValidation) {
  PscRoundConfig c = SmallRound(GroupKind::kSchnorr64, 6, 3);
  c.dc_fail = {2};
  auto out = RunPscRound(c, {{1, {"a"}}, {2, {"b"}}});
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out->raw_count, 1u);
  EXPECT_THAT(out->missing_dcs, ::testing::ElementsAre(2));
  c.dc_fail = {1, 2};
  EXPECT_FALSE(RunPscRound(c, {}).ok());
  c.dc_fail.clear();
  c.cp_fail = {1};
  EXPECT_EQ(RunPscRound(c, {}).status().code(), absl::StatusCode::kFailedPrecondition);
  c.cp_fail.clear();
  c.num_cps = 0;
  EXPECT_FALSE(RunPscRound(c, {}).ok());
}

TEST(RoundTest, TranscriptFramesDecode) {
  PscRoundConfig c = SmallRound(GroupKind::kSchnorr64, 4, 4);
  c.keep_transcript = true;
  auto out = RunPscRound(c, {{1, {"a"}}});
  ASSERT_TRUE(out.ok());
  const auto& frames = out->transcript["frames"];
  ASSERT_EQ(frames.size(), 4u);  // 2 DCs + 2 CPs
  for (const auto& f : frames) {
    auto bytes = FromBase64(f["base64"].get<std::string>());
    ASSERT_TRUE(bytes.ok());
    EXPECT_TRUE(DecodeFrame<Schnorr64>(*bytes).ok());
  }
  EXPECT_EQ(out->transcript["group"], "schnorr64");
}

TEST(RoundTest, UnionSemanticsOnRandomInstances) {
  Rng rng(77);
  for (int inst = 0; inst < 60; ++inst) {
    PscRoundConfig c = SmallRound(GroupKind::kSchnorr64, 3 + rng() % 6, 1000 + inst);
    std::map<uint32_t, std::vector<std::string>> items;
    std::set<std::string> all;
    const int n = static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      const std::string item = "i" + std::to_string(rng() % 50);
      items[1 + rng() % 2].push_back(item);
      all.insert(item);
    }
    auto out = RunPscRound(c, items);
    ASSERT_TRUE(out.ok());
    EXPECT_EQ(out->raw_count, out->escrow->occupied_bins);
    EXPECT_LE(out->raw_count, all.size());
  }
}

TEST(RoundTest, AddingAnItemNeverDecreasesRaw) {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    PscRoundConfig c = SmallRound(GroupKind::kSchnorr64, 5, seed);
    std::map<uint32_t, std::vector<std::string>> items;
    uint64_t prev = 0;
    for (int i = 0; i < 12; ++i) {
      items[1 + i % 2].push_back("x" + std::to_string(i * 7 + seed));
      auto out = RunPscRound(c, items);
      ASSERT_TRUE(out.ok());
      EXPECT_GE(out->raw_count, prev);
      prev = out->raw_count;
    }
  }
}

TEST(EstimateTest, NoiseOnlyCentresOnZero) {
  NoiseBinParams noise;
  noise.n_noise = 1000;
  noise.num_cps = 3;
  auto e = PscEstimate(1500, uint64_t{1} << 18, noise);
  ASSERT_TRUE(e.ok());
  EXPECT_NEAR(e->point, 0.0, 1.0);
  EXPECT_TRUE(e->Contains(0));
  EXPECT_FALSE(PscEstimate((uint64_t{1} << 18) + 3001, uint64_t{1} << 18, noise).ok());
}

TEST(EstimateTest, NoNoiseNoCollisionsIsExact) {
  auto e = PscEstimate(3, uint64_t{1} << 18, NoiseBinParams{});
  ASSERT_TRUE(e.ok());
  EXPECT_NEAR(e->point, 3.0, 1e-4);
  EXPECT_TRUE(e->Contains(3));
}

TEST(EstimateTest, UniqueIpFixtureContainsPoint) {
  // No bin count or noise configuration is published for this figure, so
  // only CI-contains-point is checked under the default configuration.
  auto noise = MakeNoiseBinParams(4, {"unique/client_ips", 0.3, 1e-11}, 3);
  ASSERT_TRUE(noise.ok());
  const uint64_t b = uint64_t{1} << 20;
  const double n = 313213;
  const double occupied = b * -std::expm1(n * std::log1p(-1.0 / b));
  const auto raw = static_cast<uint64_t>(std::llround(occupied + noise->expected_noise()));
  auto e = PscEstimate(raw, b, *noise);
  ASSERT_TRUE(e.ok());
  EXPECT_TRUE(e->Contains(n));
  EXPECT_NEAR(e->point, n, 2.0);
}

}  // namespace
}  // namespace privmeasure::psc

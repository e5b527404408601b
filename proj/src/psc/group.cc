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

#include "privmeasure/psc/group.h"

#include <sodium.h>

#include <bit>
#include <cstdlib>
#include <cstring>
#include <string>

#include "absl/strings/str_cat.h"

namespace privmeasure::psc {

std::string_view GroupKindName(GroupKind kind) {
  switch (kind) {
    case GroupKind::kRistretto255:
      return "ristretto255";
    case GroupKind::kSchnorr64:
      return "schnorr64";
    case GroupKind::kSimulationZq:
      return "zq-sim";
  }
  return "unknown";
}

absl::StatusOr<GroupKind> ParseGroupKind(std::string_view name) {
  if (name == "ristretto255") return GroupKind::kRistretto255;
  if (name == "schnorr64") return GroupKind::kSchnorr64;
  if (name == "zq-sim") return GroupKind::kSimulationZq;
  return absl::InvalidArgumentError(absl::StrCat("unknown group '", std::string(name), "'"));
}

void EnsureSodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) std::abort();
}

CryptoRng::CryptoRng(uint64_t seed, std::string_view label) {
  EnsureSodium();
  std::string input(label);
  for (int i = 0; i < 8; ++i) input.push_back(static_cast<char>((seed >> (8 * i)) & 0xff));
  crypto_generichash(key_.data(), key_.size(), reinterpret_cast<const unsigned char*>(input.data()),
                     input.size(), nullptr, 0);
}

void CryptoRng::Refill() {
  unsigned char nonce[crypto_stream_chacha20_NONCEBYTES] = {};
  for (size_t i = 0; i < sizeof(nonce); ++i) nonce[i] = static_cast<unsigned char>(nonce_ >> (8 * i));
  ++nonce_;
  crypto_stream_chacha20(buffer_.data(), buffer_.size(), nonce, key_.data());
  pos_ = 0;
}

CryptoRng::result_type CryptoRng::operator()() {
  uint64_t v;
  Fill(reinterpret_cast<uint8_t*>(&v), sizeof(v));
  return v;
}

void CryptoRng::Fill(uint8_t* out, size_t n) {
  while (n > 0) {
    if (pos_ == buffer_.size()) Refill();
    const size_t take = std::min(n, buffer_.size() - pos_);
    std::memcpy(out, buffer_.data() + pos_, take);
    pos_ += take;
    out += take;
    n -= take;
  }
}

// ---- ristretto255 ----

bool Ristretto255::IsIdentity(const Element& e) { return sodium_is_zero(e.data(), e.size()) == 1; }

Ristretto255::Element Ristretto255::Op(const Element& a, const Element& b) {
  if (IsIdentity(a)) return b;
  if (IsIdentity(b)) return a;
  Element out;
  if (crypto_core_ristretto255_add(out.data(), a.data(), b.data()) != 0) return Identity();
  return out;
}

Ristretto255::Element Ristretto255::ExpG(const Scalar& s) {
  Element out;
  // Fails only when the result is the identity (s = 0).
  if (crypto_scalarmult_ristretto255_base(out.data(), s.data()) != 0) return Identity();
  return out;
}

Ristretto255::Element Ristretto255::Exp(const Element& base, const Scalar& s) {
  if (IsIdentity(base)) return Identity();
  Element out;
  if (crypto_scalarmult_ristretto255(out.data(), s.data(), base.data()) != 0) return Identity();
  return out;
}

Ristretto255::Scalar Ristretto255::RandomScalar(CryptoRng& rng) {
  unsigned char wide[crypto_core_ristretto255_NONREDUCEDSCALARBYTES];
  rng.Fill(wide, sizeof(wide));
  Scalar s;
  crypto_core_ristretto255_scalar_reduce(s.data(), wide);
  return s;
}

Ristretto255::Scalar Ristretto255::RandomNonZeroScalar(CryptoRng& rng) {
  for (;;) {
    Scalar s = RandomScalar(rng);
    if (sodium_is_zero(s.data(), s.size()) == 0) return s;
  }
}

Ristretto255::Scalar Ristretto255::AddScalars(const Scalar& a, const Scalar& b) {
  Scalar s;
  crypto_core_ristretto255_scalar_add(s.data(), a.data(), b.data());
  return s;
}

Ristretto255::Scalar Ristretto255::NegateScalar(const Scalar& s) {
  Scalar out;
  crypto_core_ristretto255_scalar_negate(out.data(), s.data());
  return out;
}

void Ristretto255::Encode(const Element& e, uint8_t* out) { std::memcpy(out, e.data(), e.size()); }

absl::StatusOr<Ristretto255::Element> Ristretto255::Decode(const uint8_t* in) {
  Element e;
  std::memcpy(e.data(), in, e.size());
  if (IsIdentity(e)) return e;
  if (crypto_core_ristretto255_is_valid_point(e.data()) != 1) {
    return absl::InvalidArgumentError("invalid ristretto255 encoding");
  }
  return e;
}

// ---- Schnorr64 ----

namespace {

using u128 = unsigned __int128;
constexpr uint64_t kP = Schnorr64::kP;

constexpr uint64_t NegInverse64(uint64_t p) {
  uint64_t inv = p;
  for (int i = 0; i < 6; ++i) inv *= 2 - p * inv;
  return ~inv + 1;
}
constexpr uint64_t kNPrime = NegInverse64(kP);
constexpr uint64_t kR = static_cast<uint64_t>((u128{1} << 64) % kP);
constexpr uint64_t kR2 = static_cast<uint64_t>((u128{kR} * kR) % kP);
static_assert(static_cast<uint64_t>(kP * kNPrime) == ~uint64_t{0});

inline uint64_t MontMul(uint64_t a, uint64_t b) {
  const u128 t = u128{a} * b;
  const uint64_t m = static_cast<uint64_t>(t) * kNPrime;
  uint64_t u = static_cast<uint64_t>((t + u128{m} * kP) >> 64);
  return u >= kP ? u - kP : u;
}

uint64_t MontPow(uint64_t base, uint64_t e) {
  uint64_t table[16];
  table[0] = kR;
  for (int i = 1; i < 16; ++i) table[i] = MontMul(table[i - 1], base);
  uint64_t r = kR;
  for (int shift = 60; shift >= 0; shift -= 4) {
    r = MontMul(r, r);
    r = MontMul(r, r);
    r = MontMul(r, r);
    r = MontMul(r, r);
    r = MontMul(r, table[(e >> shift) & 15]);
  }
  return r;
}

const Schnorr64::FixedBase& GeneratorTable() {
  static const Schnorr64::FixedBase table(Schnorr64::FromInteger(4));
  return table;
}

}  // namespace

Schnorr64::Element Schnorr64::Identity() { return kR; }

Schnorr64::Element Schnorr64::FromInteger(uint64_t x) { return MontMul(x % kP, kR2); }

uint64_t Schnorr64::ToInteger(const Element& e) { return MontMul(e, 1); }

Schnorr64::Element Schnorr64::Op(const Element& a, const Element& b) { return MontMul(a, b); }

Schnorr64::Element Schnorr64::ExpG(const Scalar& s) { return GeneratorTable().Exp(s); }

Schnorr64::Element Schnorr64::Exp(const Element& base, const Scalar& s) { return MontPow(base, s); }

Schnorr64::Scalar Schnorr64::RandomScalar(CryptoRng& rng) {
  constexpr uint64_t kMask = (uint64_t{1} << 61) - 1;
  for (;;) {
    const uint64_t v = rng() & kMask;
    if (v < kQ) return v;
  }
}

Schnorr64::Scalar Schnorr64::RandomNonZeroScalar(CryptoRng& rng) {
  for (;;) {
    const uint64_t v = RandomScalar(rng);
    if (v != 0) return v;
  }
}

Schnorr64::Scalar Schnorr64::AddScalars(const Scalar& a, const Scalar& b) {
  const uint64_t s = a + b;
  return s >= kQ ? s - kQ : s;
}

Schnorr64::Scalar Schnorr64::NegateScalar(const Scalar& s) { return s == 0 ? 0 : kQ - s; }

void Schnorr64::Encode(const Element& e, uint8_t* out) {
  const uint64_t x = ToInteger(e);
  for (int i = 0; i < 8; ++i) out[i] = static_cast<uint8_t>(x >> (56 - 8 * i));
}

absl::StatusOr<Schnorr64::Element> Schnorr64::Decode(const uint8_t* in) {
  uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x = (x << 8) | in[i];
  if (x == 0 || x >= kP) return absl::InvalidArgumentError("schnorr64 element out of range");
  const Element e = FromInteger(x);
  // Subgroup membership: Euler's criterion.
  if (MontPow(e, kQ) != kR) return absl::InvalidArgumentError("schnorr64 element not in subgroup");
  return e;
}

Schnorr64::FixedBase::FixedBase(const Element& base) : base_(base), table_(8 * 256) {
  uint64_t window_base = base;
  for (int w = 0; w < 8; ++w) {
    uint64_t* row = &table_[w * 256];
    row[0] = kR;
    for (int d = 1; d < 256; ++d) row[d] = MontMul(row[d - 1], window_base);
    window_base = MontMul(row[255], window_base);
  }
}

Schnorr64::Element Schnorr64::FixedBase::Exp(const Scalar& s) const {
  uint64_t r = kR;
  for (int w = 0; w < 8; ++w) {
    const unsigned byte = (s >> (8 * w)) & 0xff;
    if (byte != 0) r = MontMul(r, table_[w * 256 + byte]);
  }
  return r;
}

// ---- SimulationZq ----

SimulationZq::Element SimulationZq::Exp(const Element& base, const Scalar& s) {
  const u128 t = u128{base} * s;
  // Mersenne reduction.
  uint64_t r = (static_cast<uint64_t>(t) & kQ) + static_cast<uint64_t>(t >> 61);
  r = (r & kQ) + (r >> 61);
  return r >= kQ ? r - kQ : r;
}

SimulationZq::Scalar SimulationZq::RandomScalar(CryptoRng& rng) {
  for (;;) {
    const uint64_t v = rng() & kQ;
    if (v < kQ) return v;
  }
}

SimulationZq::Scalar SimulationZq::RandomNonZeroScalar(CryptoRng& rng) {
  for (;;) {
    const uint64_t v = RandomScalar(rng);
    if (v != 0) return v;
  }
}

void SimulationZq::Encode(const Element& e, uint8_t* out) {
  const uint64_t be = std::endian::native == std::endian::little ? __builtin_bswap64(e) : e;
  std::memcpy(out, &be, 8);
}

absl::StatusOr<SimulationZq::Element> SimulationZq::Decode(const uint8_t* in) {
  uint64_t x;
  std::memcpy(&x, in, 8);
  if (std::endian::native == std::endian::little) x = __builtin_bswap64(x);
  if (x >= kQ) return absl::InvalidArgumentError("zq-sim element out of range");
  return x;
}

}  // namespace privmeasure::psc

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

#ifndef PRIVMEASURE_PSC_GROUP_H_
#define PRIVMEASURE_PSC_GROUP_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace privmeasure::psc {

enum class GroupKind : uint8_t { kRistretto255 = 1, kSchnorr64 = 2, kSimulationZq = 3 };

std::string_view GroupKindName(GroupKind kind);
absl::StatusOr<GroupKind> ParseGroupKind(std::string_view name);

// Calls sodium_init once; aborts if libsodium cannot initialize.
void EnsureSodium();

// Deterministic ChaCha20 keystream keyed from a 64-bit seed and a label.
// Satisfies UniformRandomBitGenerator.
class CryptoRng {
 public:
  using result_type = uint64_t;
  explicit CryptoRng(uint64_t seed, std::string_view label = "psc");

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<uint64_t>::max(); }
  result_type operator()();
  void Fill(uint8_t* out, size_t n);

 private:
  void Refill();

  std::array<uint8_t, 32> key_{};
  uint64_t nonce_ = 0;
  std::array<uint8_t, 4096> buffer_{};
  size_t pos_ = 4096;
};

// Prime-order group backends. Each exposes the same static interface:
//   Element, Scalar, kKind, kEncodedSize, Identity, IsIdentity, Op, ExpG, Exp,
//   RandomScalar, RandomNonZeroScalar, AddScalars, NegateScalar, Encode,
//   Decode and a FixedBase helper for repeated powers of one element.
// Operations are written multiplicatively; ristretto255 maps them to point
// addition and scalar multiplication.

struct Ristretto255 {
  using Element = std::array<uint8_t, 32>;
  using Scalar = std::array<uint8_t, 32>;
  static constexpr GroupKind kKind = GroupKind::kRistretto255;
  static constexpr size_t kEncodedSize = 32;

  static Element Identity() { return Element{}; }
  static bool IsIdentity(const Element& e);
  static Element Op(const Element& a, const Element& b);
  static Element ExpG(const Scalar& s);
  static Element Exp(const Element& base, const Scalar& s);
  static Scalar RandomScalar(CryptoRng& rng);
  static Scalar RandomNonZeroScalar(CryptoRng& rng);
  static Scalar AddScalars(const Scalar& a, const Scalar& b);
  static Scalar NegateScalar(const Scalar& s);
  static void Encode(const Element& e, uint8_t* out);
  static absl::StatusOr<Element> Decode(const uint8_t* in);

  class FixedBase {
   public:
    explicit FixedBase(const Element& base) : base_(base) {}
    Element Exp(const Scalar& s) const { return Ristretto255::Exp(base_, s); }
    const Element& base() const { return base_; }

   private:
    Element base_;
  };
};

// Quadratic-residue subgroup of Z_p^* for the 62-bit safe prime
// p = 4611686018427377339, q = (p - 1) / 2, generator 4. Far too small to be
// secure; it exists so statistical suites can run millions of operations.
struct Schnorr64 {
  // Montgomery form of a residue mod p.
  using Element = uint64_t;
  // Exponent in [0, q).
  using Scalar = uint64_t;
  static constexpr GroupKind kKind = GroupKind::kSchnorr64;
  static constexpr size_t kEncodedSize = 8;
  static constexpr uint64_t kP = 4611686018427377339ULL;
  static constexpr uint64_t kQ = (kP - 1) / 2;

  static Element Identity();
  static bool IsIdentity(const Element& e) { return e == Identity(); }
  static Element Op(const Element& a, const Element& b);
  static Element ExpG(const Scalar& s);
  static Element Exp(const Element& base, const Scalar& s);
  static Scalar RandomScalar(CryptoRng& rng);
  static Scalar RandomNonZeroScalar(CryptoRng& rng);
  static Scalar AddScalars(const Scalar& a, const Scalar& b);
  static Scalar NegateScalar(const Scalar& s);
  static void Encode(const Element& e, uint8_t* out);
  static absl::StatusOr<Element> Decode(const uint8_t* in);

  // Conversions between plain residues and Montgomery form.
  static Element FromInteger(uint64_t x);
  static uint64_t ToInteger(const Element& e);

  // 8-bit windowed table: one exponentiation costs at most 8 multiplications.
  class FixedBase {
   public:
    explicit FixedBase(const Element& base);
    Element Exp(const Scalar& s) const;
    const Element& base() const { return base_; }

   private:
    Element base_;
    std::vector<uint64_t> table_;  // 8 windows x 256 entries
  };
};

// The additive group Z_q, q = 2^61 - 1, generator 1. Discrete logs are
// trivial, so it offers no secrecy at all; it keeps the protocol's algebra
// and message flow for large statistical campaigns.
struct SimulationZq {
  using Element = uint64_t;
  using Scalar = uint64_t;
  static constexpr GroupKind kKind = GroupKind::kSimulationZq;
  static constexpr size_t kEncodedSize = 8;
  static constexpr uint64_t kQ = (uint64_t{1} << 61) - 1;

  static Element Identity() { return 0; }
  static bool IsIdentity(const Element& e) { return e == 0; }
  static Element Op(const Element& a, const Element& b) {
    const uint64_t s = a + b;
    return s >= kQ ? s - kQ : s;
  }
  static Element ExpG(const Scalar& s) { return s; }
  static Element Exp(const Element& base, const Scalar& s);
  static Scalar RandomScalar(CryptoRng& rng);
  static Scalar RandomNonZeroScalar(CryptoRng& rng);
  static Scalar AddScalars(const Scalar& a, const Scalar& b) { return Op(a, b); }
  static Scalar NegateScalar(const Scalar& s) { return s == 0 ? 0 : kQ - s; }
  static void Encode(const Element& e, uint8_t* out);
  static absl::StatusOr<Element> Decode(const uint8_t* in);

  class FixedBase {
   public:
    explicit FixedBase(const Element& base) : base_(base) {}
    Element Exp(const Scalar& s) const { return SimulationZq::Exp(base_, s); }
    const Element& base() const { return base_; }

   private:
    Element base_;
  };
};

}  // namespace privmeasure::psc

#endif  // PRIVMEASURE_PSC_GROUP_H_

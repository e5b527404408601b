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

#ifndef PRIVMEASURE_PSC_ELGAMAL_H_
#define PRIVMEASURE_PSC_ELGAMAL_H_

#include <cstdint>
#include <vector>

#include "absl/status/statusor.h"
#include "privmeasure/psc/group.h"

namespace privmeasure::psc {

// Exponential ElGamal: (g^r, g^m h^r). Only zero vs non-zero m matters, so a
// non-zero plaintext is a fresh random exponent and no discrete log is ever
// taken.
template <class G>
struct Ciphertext {
  typename G::Element c1;
  typename G::Element c2;
  bool operator==(const Ciphertext&) const = default;
};

template <class G>
Ciphertext<G> AddCiphertexts(const Ciphertext<G>& a, const Ciphertext<G>& b) {
  return {G::Op(a.c1, b.c1), G::Op(a.c2, b.c2)};
}

template <class G>
class PublicKey {
 public:
  using Element = typename G::Element;
  explicit PublicKey(const Element& h) : table_(h) {}

  const Element& h() const { return table_.base(); }

  Ciphertext<G> EncryptZero(CryptoRng& rng) const {
    const auto r = G::RandomScalar(rng);
    return {G::ExpG(r), table_.Exp(r)};
  }

  Ciphertext<G> EncryptNonZero(CryptoRng& rng) const {
    const auto r = G::RandomScalar(rng);
    const auto m = G::RandomNonZeroScalar(rng);
    return {G::ExpG(r), G::Op(G::ExpG(m), table_.Exp(r))};
  }

  // Same plaintext, fresh randomness.
  Ciphertext<G> Rerandomize(const Ciphertext<G>& ct, CryptoRng& rng) const {
    const auto s = G::RandomScalar(rng);
    return {G::Op(ct.c1, G::ExpG(s)), G::Op(ct.c2, table_.Exp(s))};
  }

 private:
  typename G::FixedBase table_;
};

// Strips one key share: c2 <- c2 / c1^x.
template <class G>
Ciphertext<G> PartialDecrypt(const Ciphertext<G>& ct, const typename G::Scalar& share) {
  return {ct.c1, G::Op(ct.c2, G::Exp(ct.c1, G::NegateScalar(share)))};
}

// True once every share has been stripped and the plaintext is non-zero.
template <class G>
bool DecryptedIsNonZero(const Ciphertext<G>& ct) {
  return !G::IsIdentity(ct.c2);
}

// True when this binary was built with PRIVMEASURE_KEY_ESCROW. Release
// builds return false and refuse escrowed key material.
bool KeyEscrowCompiledIn();

// Per-round CP key material. The combined key is the product of the CP
// contributions g^x_i.
template <class G>
struct KeyMaterial {
  std::vector<typename G::Scalar> shares;
  std::vector<typename G::Element> contributions;
  typename G::Element combined = G::Identity();
  bool escrow = false;
};

template <class G>
absl::StatusOr<KeyMaterial<G>> GenerateKeys(uint32_t num_cps, bool escrow, CryptoRng& rng) {
  if (num_cps == 0) return absl::InvalidArgumentError("at least one CP is required");
  if (escrow && !KeyEscrowCompiledIn()) {
    return absl::FailedPreconditionError("key escrow is disabled in this build");
  }
  KeyMaterial<G> keys;
  keys.escrow = escrow;
  for (uint32_t i = 0; i < num_cps; ++i) {
    keys.shares.push_back(G::RandomNonZeroScalar(rng));
    keys.contributions.push_back(G::ExpG(keys.shares.back()));
    keys.combined = G::Op(keys.combined, keys.contributions.back());
  }
  return keys;
}

// Test-only full decryption with every share at once.
template <class G>
absl::StatusOr<bool> EscrowIsNonZero(const KeyMaterial<G>& keys, const Ciphertext<G>& ct) {
  if (!keys.escrow) return absl::FailedPreconditionError("key material has no escrow");
  Ciphertext<G> out = ct;
  for (const auto& s : keys.shares) out = PartialDecrypt<G>(out, s);
  return DecryptedIsNonZero<G>(out);
}

}  // namespace privmeasure::psc

#endif  // PRIVMEASURE_PSC_ELGAMAL_H_

//
// Copyright 2026 The prlink Authors
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
//
#ifndef PRLINK_PAILLIER_H_
#define PRLINK_PAILLIER_H_

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <vector>

#include "prlink/common.h"

namespace prlink {

inline constexpr int kMinKeyBits = 512;

// Paillier with g = n + 1.
struct PublicKey {
  mpz_class n;
  mpz_class n2;
  int bits = 0;
};

struct Ciphertext {
  mpz_class c;
};

class KeyPair {
 public:
  // Throws kWeakKey when bits < min_bits. Randomness comes from rng, so keys
  // are reproducible from a seed; use a fresh seed per deployment.
  static KeyPair Generate(int bits, Rng& rng, int min_bits = kMinKeyBits);

  const PublicKey& pub() const { return pub_; }
  // Decrypts to the representative in [0, n).
  mpz_class Decrypt(const Ciphertext& ct) const;

 private:
  PublicKey pub_;
  mpz_class p_, q_, p2_, q2_;
  mpz_class hp_, hq_;  // CRT decryption constants
  mpz_class q_inv_p_;
};

// Reduces m mod n; negative values wrap.
Ciphertext Encrypt(const PublicKey& pk, const mpz_class& m, Rng& rng);
// g^m with unit randomness; only for values that are re-randomized later.
Ciphertext EncryptDeterministic(const PublicKey& pk, const mpz_class& m);
Ciphertext Rerandomize(const PublicKey& pk, const Ciphertext& ct, Rng& rng);

// E(a) ⊕ E(b) = E(a + b).
Ciphertext Add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b);
// E(a) ⊗ k = E(k * a); negative k is taken mod n, through the inverse when
// that is the shorter exponent.
Ciphertext ScalarMul(const PublicKey& pk, const Ciphertext& a, int64_t k);
Ciphertext ScalarMul(const PublicKey& pk, const Ciphertext& a,
                     const mpz_class& k);
Ciphertext Negate(const PublicKey& pk, const Ciphertext& a);

// Uniform in [0, 2^bits).
mpz_class RandomBits(Rng& rng, int bits);
// Uniform in [0, bound).
mpz_class RandomBelow(Rng& rng, const mpz_class& bound);

// Magnitude as big-endian bytes.
std::vector<uint8_t> ToBigEndian(const mpz_class& v);
mpz_class FromBigEndian(std::span<const uint8_t> bytes);

}  // namespace prlink

#endif  // PRLINK_PAILLIER_H_

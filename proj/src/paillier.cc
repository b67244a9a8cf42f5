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
#include "prlink/paillier.h"

#include <string>

namespace prlink {
namespace {

mpz_class PowMod(const mpz_class& base, const mpz_class& exp,
                 const mpz_class& mod) {
  mpz_class out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return out;
}

mpz_class Invert(const mpz_class& a, const mpz_class& mod) {
  mpz_class out;
  if (mpz_invert(out.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0) {
    throw Error(ErrorCode::kInvalidParams, "value not invertible");
  }
  return out;
}

mpz_class RandomPrime(Rng& rng, int bits) {
  mpz_class x = RandomBits(rng, bits);
  mpz_setbit(x.get_mpz_t(), bits - 1);
  mpz_setbit(x.get_mpz_t(), bits - 2);
  mpz_class p;
  mpz_nextprime(p.get_mpz_t(), x.get_mpz_t());
  return p;
}

// L(x) = (x - 1) / d.
mpz_class L(const mpz_class& x, const mpz_class& d) { return (x - 1) / d; }

}  // namespace

mpz_class RandomBits(Rng& rng, int bits) {
  const int words = (bits + 63) / 64;
  std::vector<uint64_t> buf(words);
  for (uint64_t& w : buf) w = rng();
  mpz_class x;
  mpz_import(x.get_mpz_t(), buf.size(), -1, sizeof(uint64_t), 0, 0, buf.data());
  mpz_fdiv_r_2exp(x.get_mpz_t(), x.get_mpz_t(), bits);
  return x;
}

mpz_class RandomBelow(Rng& rng, const mpz_class& bound) {
  const int bits = static_cast<int>(mpz_sizeinbase(bound.get_mpz_t(), 2));
  mpz_class x;
  do {
    x = RandomBits(rng, bits);
  } while (x >= bound);
  return x;
}

KeyPair KeyPair::Generate(int bits, Rng& rng, int min_bits) {
  if (bits < min_bits) {
    throw Error(ErrorCode::kWeakKey, "modulus of " + std::to_string(bits) +
                                         " bits is below " +
                                         std::to_string(min_bits));
  }
  if (bits % 2 != 0 || bits < 16) {
    throw Error(ErrorCode::kInvalidParams, "modulus bits must be even");
  }
  KeyPair kp;
  while (true) {
    kp.p_ = RandomPrime(rng, bits / 2);
    kp.q_ = RandomPrime(rng, bits / 2);
    if (kp.p_ == kp.q_) continue;
    kp.pub_.n = kp.p_ * kp.q_;
    if (static_cast<int>(mpz_sizeinbase(kp.pub_.n.get_mpz_t(), 2)) != bits) {
      continue;
    }
    mpz_class g;
    const mpz_class phi = (kp.p_ - 1) * (kp.q_ - 1);
    mpz_gcd(g.get_mpz_t(), kp.pub_.n.get_mpz_t(), phi.get_mpz_t());
    if (g == 1) break;
  }
  if (kp.p_ > kp.q_) std::swap(kp.p_, kp.q_);
  kp.pub_.n2 = kp.pub_.n * kp.pub_.n;
  kp.pub_.bits = bits;
  kp.p2_ = kp.p_ * kp.p_;
  kp.q2_ = kp.q_ * kp.q_;
  const mpz_class g = kp.pub_.n + 1;
  kp.hp_ = Invert(L(PowMod(g, kp.p_ - 1, kp.p2_), kp.p_), kp.p_);
  kp.hq_ = Invert(L(PowMod(g, kp.q_ - 1, kp.q2_), kp.q_), kp.q_);
  kp.q_inv_p_ = Invert(kp.q_, kp.p_);
  return kp;
}

mpz_class KeyPair::Decrypt(const Ciphertext& ct) const {
  const mpz_class mp = L(PowMod(ct.c, p_ - 1, p2_), p_) * hp_ % p_;
  const mpz_class mq = L(PowMod(ct.c, q_ - 1, q2_), q_) * hq_ % q_;
  mpz_class h = (mp - mq) * q_inv_p_ % p_;
  if (h < 0) h += p_;
  return mq + h * q_;
}

Ciphertext EncryptDeterministic(const PublicKey& pk, const mpz_class& m) {
  mpz_class r = m % pk.n;
  if (r < 0) r += pk.n;
  return Ciphertext{(1 + r * pk.n) % pk.n2};
}

Ciphertext Rerandomize(const PublicKey& pk, const Ciphertext& ct, Rng& rng) {
  mpz_class r;
  do {
    r = RandomBelow(rng, pk.n);
  } while (r == 0);
  return Ciphertext{ct.c * PowMod(r, pk.n, pk.n2) % pk.n2};
}

Ciphertext Encrypt(const PublicKey& pk, const mpz_class& m, Rng& rng) {
  return Rerandomize(pk, EncryptDeterministic(pk, m), rng);
}

Ciphertext Add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  return Ciphertext{a.c * b.c % pk.n2};
}

Ciphertext Negate(const PublicKey& pk, const Ciphertext& a) {
  return Ciphertext{Invert(a.c, pk.n2)};
}

Ciphertext ScalarMul(const PublicKey& pk, const Ciphertext& a, int64_t k) {
  if (k == 0) return Ciphertext{1};
  if (k == 1) return a;
  if (k < 0) {
    // Small negative scalars are cheaper through the inverse.
    const Ciphertext inv = Negate(pk, a);
    const uint64_t mag =
        k == INT64_MIN ? uint64_t{1} << 63 : static_cast<uint64_t>(-k);
    mpz_class e;
    mpz_import(e.get_mpz_t(), 1, -1, sizeof(mag), 0, 0, &mag);
    return Ciphertext{PowMod(inv.c, e, pk.n2)};
  }
  return Ciphertext{
      PowMod(a.c, mpz_class(static_cast<unsigned long>(k)), pk.n2)};
}

Ciphertext ScalarMul(const PublicKey& pk, const Ciphertext& a,
                     const mpz_class& k) {
  mpz_class e = k % pk.n;
  if (e < 0) {
    const mpz_class mag = -e;
    if (mag < e + pk.n) return Ciphertext{PowMod(Negate(pk, a).c, mag, pk.n2)};
    e += pk.n;
  }
  return Ciphertext{PowMod(a.c, e, pk.n2)};
}

std::vector<uint8_t> ToBigEndian(const mpz_class& v) {
  const size_t size = (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
  std::vector<uint8_t> out(size);
  size_t written = 0;
  if (v != 0) {
    mpz_export(out.data(), &written, 1, 1, 1, 0, v.get_mpz_t());
  }
  out.resize(written);
  return out;
}

mpz_class FromBigEndian(std::span<const uint8_t> bytes) {
  mpz_class v;
  if (!bytes.empty()) {
    mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  }
  return v;
}

}  // namespace prlink

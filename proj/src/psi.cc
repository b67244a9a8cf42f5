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
#include "prlink/psi.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

namespace prlink {
namespace {

uint64_t Mix(uint64_t h, uint64_t v) { return SplitMix64(h ^ v); }

constexpr uint64_t kBucketSalt = 0x5851f42d4c957f2dULL;

mpz_class FromU64(uint64_t v) {
  mpz_class out;
  mpz_import(out.get_mpz_t(), 1, -1, sizeof(v), 0, 0, &v);
  return out;
}

uint64_t Binomial(uint64_t n, uint64_t k) {
  uint64_t r = 1;
  for (uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Lattice points (dx, dy) with dx^2 + dy^2 <= t^2.
uint64_t DiskPoints(int64_t t) {
  uint64_t count = 0;
  for (int64_t dx = -t; dx <= t; ++dx) {
    const int64_t rem = t * t - dx * dx;
    int64_t h = static_cast<int64_t>(std::sqrt(static_cast<double>(rem)));
    while (h * h > rem) --h;
    while ((h + 1) * (h + 1) <= rem) ++h;
    count += static_cast<uint64_t>(2 * h + 1);
  }
  return count;
}

void EnumerateFlips(const BitVector& v, int start, int left,
                    std::vector<BitVector>& out) {
  out.push_back(v);
  if (left == 0) return;
  for (int i = start; i < v.length; ++i) {
    BitVector w = v;
    w.bits ^= uint64_t{1} << i;
    EnumerateFlips(w, i + 1, left - 1, out);
  }
}

}  // namespace

uint64_t PayloadKey(const Payload& p) {
  return std::visit(
      [](const auto& v) -> uint64_t {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, GridPoint>) {
          uint64_t h = 0x243f6a8885a308d3ULL;
          h = Mix(h, static_cast<uint64_t>(v.lat_e6));
          h = Mix(h, static_cast<uint64_t>(v.lon_e6));
          h = Mix(h, static_cast<uint64_t>(v.day));
          return Mix(h, static_cast<uint64_t>(v.hour));
        } else if constexpr (std::is_same_v<V, BitVector>) {
          uint64_t h = 0x13198a2e03707344ULL;
          h = Mix(h, v.bits);
          h = Mix(h, static_cast<uint64_t>(v.length));
          h = Mix(h, static_cast<uint64_t>(v.day));
          return Mix(h, static_cast<uint64_t>(v.brand));
        } else {
          uint64_t h = 0xa4093822299f31d0ULL;
          for (int64_t a : v.attrs) h = Mix(h, static_cast<uint64_t>(a));
          return Mix(h, v.attrs.size());
        }
      },
      p);
}

uint32_t PsiBucketCount(size_t n) {
  return static_cast<uint32_t>(
      std::max<size_t>(1, (n + kPsiBucketLoad - 1) / kPsiBucketLoad));
}

uint32_t PsiBucket(uint64_t key, uint32_t buckets) {
  return static_cast<uint32_t>(SplitMix64(key ^ kBucketSalt) % buckets);
}

PsiPolynomials BuildPsiPolynomials(std::span<const uint64_t> keys,
                                   uint32_t buckets, const mpz_class& modulus,
                                   size_t max_degree) {
  if (buckets == 0) throw Error(ErrorCode::kInvalidParams, "no buckets");
  std::vector<std::vector<uint64_t>> roots(buckets);
  for (uint64_t k : keys) roots[PsiBucket(k, buckets)].push_back(k);
  for (auto& r : roots) {
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
  }
  PsiPolynomials out;
  out.buckets = buckets;
  for (const auto& r : roots) out.degree = std::max(out.degree, r.size());
  if (out.degree > max_degree) {
    throw Error(ErrorCode::kPolynomialDegreeOverflow,
                "bucket of degree " + std::to_string(out.degree) + " exceeds " +
                    std::to_string(max_degree));
  }
  out.coeffs.resize(buckets);
  for (uint32_t i = 0; i < buckets; ++i) {
    std::vector<mpz_class> c{mpz_class(1)};
    for (uint64_t root : roots[i]) {
      // c(x) * (x - root)
      const mpz_class a = FromU64(root);
      std::vector<mpz_class> next(c.size() + 1, mpz_class(0));
      for (size_t j = 0; j < c.size(); ++j) {
        next[j + 1] += c[j];
        next[j] -= c[j] * a;
      }
      for (mpz_class& v : next) {
        v %= modulus;
        if (v < 0) v += modulus;
      }
      c = std::move(next);
    }
    c.resize(out.degree + 1, mpz_class(0));
    out.coeffs[i] = std::move(c);
  }
  return out;
}

std::vector<std::vector<Ciphertext>> EncryptPolynomials(
    const PublicKey& pk, const PsiPolynomials& polys, Rng& rng) {
  std::vector<std::vector<Ciphertext>> out(polys.buckets);
  for (uint32_t i = 0; i < polys.buckets; ++i) {
    for (const mpz_class& c : polys.coeffs[i]) {
      out[i].push_back(Encrypt(pk, c, rng));
    }
  }
  return out;
}

Ciphertext EvaluateMasked(const PublicKey& pk,
                          std::span<const Ciphertext> enc_coeffs, uint64_t key,
                          Rng& rng) {
  if (enc_coeffs.empty()) {
    throw Error(ErrorCode::kInvalidParams, "empty polynomial");
  }
  const mpz_class x = FromU64(key);
  Ciphertext acc = enc_coeffs.back();
  for (size_t i = enc_coeffs.size() - 1; i-- > 0;) {
    acc = Add(pk, ScalarMul(pk, acc, x), enc_coeffs[i]);
  }
  mpz_class r;
  do {
    r = RandomBelow(rng, pk.n);
  } while (r == 0);
  acc = Add(pk, ScalarMul(pk, acc, r), EncryptDeterministic(pk, x));
  return Rerandomize(pk, acc, rng);
}

int64_t PsiOpsPerKey(size_t degree) {
  return 2 * static_cast<int64_t>(degree) + 3;
}

PsiResult PsiEquiJoin(const KeyPair& alice_key, const Dataset& a,
                      const Dataset& b, const MatchRule& rule, Rng& alice_rng,
                      Rng& bob_rng) {
  PsiResult result;
  if (a.empty() || b.empty()) return result;
  const PublicKey& pk = alice_key.pub();
  std::vector<uint64_t> keys;
  std::unordered_map<uint64_t, std::vector<const Record*>> by_key;
  for (const Record& r : a.records()) {
    keys.push_back(PayloadKey(r.payload));
    by_key[keys.back()].push_back(&r);
  }
  const PsiPolynomials polys =
      BuildPsiPolynomials(keys, PsiBucketCount(by_key.size()), pk.n);
  const auto enc = EncryptPolynomials(pk, polys, alice_rng);
  result.encrypted_ops =
      static_cast<int64_t>(polys.buckets * (polys.degree + 1));
  for (const Record& y : b.records()) {
    const uint64_t key = PayloadKey(y.payload);
    const Ciphertext c =
        EvaluateMasked(pk, enc[PsiBucket(key, polys.buckets)], key, bob_rng);
    result.encrypted_ops += PsiOpsPerKey(polys.degree);
    const mpz_class v = alice_key.Decrypt(c);
    if (!v.fits_ulong_p()) continue;
    auto it = by_key.find(v.get_ui());
    if (it == by_key.end()) continue;
    for (const Record* x : it->second) {
      if (EvaluateMatch(*x, y, rule)) result.pairs.emplace(x->id, y.id);
    }
  }
  return result;
}

uint64_t ExpansionFactor(const MatchRule& rule, const Payload& like) {
  return std::visit(
      [&](const auto& r) -> uint64_t {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, EuclideanThreshold>) {
          if (!std::holds_alternative<GridPoint>(like)) {
            throw Error(ErrorCode::kIncompatiblePayload,
                        "euclidean rule needs grid points");
          }
          return DiskPoints(r.theta_e6);
        } else if constexpr (std::is_same_v<R, HammingThreshold>) {
          const auto* v = std::get_if<BitVector>(&like);
          if (v == nullptr) {
            throw Error(ErrorCode::kIncompatiblePayload,
                        "hamming rule needs bit vectors");
          }
          uint64_t g = 0;
          const int t = std::min(r.theta, v->length);
          for (int i = 0; i <= t; ++i) g += Binomial(v->length, i);
          return g;
        } else if constexpr (std::is_same_v<R, ExactEquality>) {
          return 1;
        } else {
          throw Error(ErrorCode::kIncompatiblePayload,
                      "conjunctive rules have no enumerable ball");
        }
      },
      rule.get());
}

void CheckExpansion(size_t n, uint64_t gamma, uint64_t cap) {
  if (n > 0 && gamma > cap / n) {
    throw Error(ErrorCode::kExpansionOverflow,
                std::to_string(n) + " records x gamma " +
                    std::to_string(gamma) + " exceed the cap of " +
                    std::to_string(cap));
  }
}

ExpandedDataset ExpandForPsix(const Dataset& a, const MatchRule& rule,
                              uint64_t cap) {
  ExpandedDataset x;
  if (a.empty()) return x;
  x.gamma = ExpansionFactor(rule, a.at(0).payload);
  CheckExpansion(a.size(), x.gamma, cap);
  x.points.reserve(a.size() * x.gamma);
  auto emit = [&](const Record& origin, Payload p) {
    x.points.push_back(Record{RecordId{x.points.size()}, std::move(p)});
    x.origin.push_back(origin.id);
  };
  for (const Record& r : a.records()) {
    std::visit(
        [&](const auto& rl) {
          using R = std::decay_t<decltype(rl)>;
          if constexpr (std::is_same_v<R, EuclideanThreshold>) {
            const GridPoint& g = std::get<GridPoint>(r.payload);
            const int64_t t = rl.theta_e6;
            for (int64_t dx = -t; dx <= t; ++dx) {
              for (int64_t dy = -t; dy <= t; ++dy) {
                if (dx * dx + dy * dy > t * t) continue;
                GridPoint q = g;
                q.lat_e6 += dx;
                q.lon_e6 += dy;
                emit(r, q);
              }
            }
          } else if constexpr (std::is_same_v<R, HammingThreshold>) {
            const auto* v = std::get_if<BitVector>(&r.payload);
            if (v == nullptr) {
              throw Error(ErrorCode::kIncompatiblePayload,
                          "hamming rule needs bit vectors");
            }
            std::vector<BitVector> ball;
            EnumerateFlips(*v, 0, std::min(rl.theta, v->length), ball);
            for (BitVector& w : ball) emit(r, w);
          } else {
            emit(r, r.payload);
          }
        },
        rule.get());
  }
  return x;
}

std::set<IdPair> EquiJoin(const ExpandedDataset& x, const Dataset& b) {
  std::unordered_map<uint64_t, std::vector<size_t>> by_key;
  for (size_t i = 0; i < x.points.size(); ++i) {
    by_key[PayloadKey(x.points[i].payload)].push_back(i);
  }
  std::set<IdPair> out;
  for (const Record& y : b.records()) {
    auto it = by_key.find(PayloadKey(y.payload));
    if (it == by_key.end()) continue;
    for (size_t i : it->second) {
      if (x.points[i].payload == y.payload) out.emplace(x.origin[i], y.id);
    }
  }
  return out;
}

double PsiCostModel(uint64_t gamma, size_t n) {
  if (n < 3) return 0.0;
  const double dn = static_cast<double>(n);
  return static_cast<double>(gamma) * dn * std::log(std::log(dn));
}

}  // namespace prlink

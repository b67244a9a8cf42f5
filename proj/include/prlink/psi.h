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
#ifndef PRLINK_PSI_H_
#define PRLINK_PSI_H_

#include <gmpxx.h>

#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "prlink/paillier.h"
#include "prlink/record.h"

namespace prlink {

inline constexpr size_t kPsiBucketLoad = 32;
inline constexpr size_t kPsiMaxDegree = 64;

// 64-bit key of the whole payload; equal payloads give equal keys.
uint64_t PayloadKey(const Payload& p);

// ceil(n / 32), at least one.
uint32_t PsiBucketCount(size_t n);
uint32_t PsiBucket(uint64_t key, uint32_t buckets);

// Coefficients (constant term first) of prod (x - key) over the distinct keys
// of each bucket, mod m, all padded with zeros to the largest bucket degree.
// Throws kPolynomialDegreeOverflow when a bucket holds more than max_degree
// distinct keys.
struct PsiPolynomials {
  uint32_t buckets = 0;
  size_t degree = 0;
  std::vector<std::vector<mpz_class>> coeffs;
};

PsiPolynomials BuildPsiPolynomials(std::span<const uint64_t> keys,
                                   uint32_t buckets, const mpz_class& modulus,
                                   size_t max_degree = kPsiMaxDegree);

std::vector<std::vector<Ciphertext>> EncryptPolynomials(
    const PublicKey& pk, const PsiPolynomials& polys, Rng& rng);

// Bob: E(r * p(key) + key) with r uniform in [1, n).
Ciphertext EvaluateMasked(const PublicKey& pk,
                          std::span<const Ciphertext> enc_coeffs, uint64_t key,
                          Rng& rng);

// Homomorphic operations Bob performs per key for a polynomial of `degree`.
int64_t PsiOpsPerKey(size_t degree);

struct PsiResult {
  std::set<IdPair> pairs;
  int64_t encrypted_ops = 0;
};

// Both roles in one call, for testing the arithmetic: intersection of the
// payload keys confirmed with the rule.
PsiResult PsiEquiJoin(const KeyPair& alice_key, const Dataset& a,
                      const Dataset& b, const MatchRule& rule, Rng& alice_rng,
                      Rng& bob_rng);

// γ: domain points within the rule's threshold of one record.
uint64_t ExpansionFactor(const MatchRule& rule, const Payload& like);

inline constexpr uint64_t kDefaultExpansionCap = uint64_t{1} << 22;

struct ExpandedDataset {
  std::vector<Record> points;    // ids are positions
  std::vector<RecordId> origin;  // origin[i] produced points[i]
  uint64_t gamma = 1;
};

// Throws kExpansionOverflow when n * gamma exceeds cap.
void CheckExpansion(size_t n, uint64_t gamma, uint64_t cap);

// Throws kExpansionOverflow when |D_A| * γ exceeds cap and
// kIncompatiblePayload for rules without an enumerable ball.
ExpandedDataset ExpandForPsix(const Dataset& a, const MatchRule& rule,
                              uint64_t cap = kDefaultExpansionCap);

// (origin, b) for every expanded point equal to a record b.
std::set<IdPair> EquiJoin(const ExpandedDataset& x, const Dataset& b);

// γ · n · ln ln n.
double PsiCostModel(uint64_t gamma, size_t n);

}  // namespace prlink

#endif  // PRLINK_PSI_H_

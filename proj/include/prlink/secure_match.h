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
#ifndef PRLINK_SECURE_MATCH_H_
#define PRLINK_SECURE_MATCH_H_

#include <gmpxx.h>

#include <cstdint>
#include <vector>

#include "prlink/paillier.h"
#include "prlink/record.h"

namespace prlink {

inline constexpr int kBlindingBits = 40;

// The rule as a weighted sum of per-attribute distances compared against an
// integer threshold:
//   kBinary:  x + y - 2xy            (x, y in {0, 1})
//   kSquared: w * (x - y)^2
//   kLinear:  x + y                  (the dummy sentinel)
enum class TermKind : uint8_t { kBinary, kSquared, kLinear };

struct DistanceTerm {
  TermKind kind = TermKind::kSquared;
  int64_t weight = 1;
};

struct DistanceShape {
  std::vector<DistanceTerm> terms;
  uint64_t threshold = 0;
  uint64_t sentinel = 1;  // exceeds the threshold

  // Ciphertexts Alice sends per record.
  size_t CiphertextCount() const;
};

// Throws kIncompatiblePayload for rules without a distance form
// (conjunctions) or payloads the rule does not apply to.
DistanceShape ShapeFor(const MatchRule& rule, const Payload& like);

// Attribute values in shape order; the last one is the sentinel.
std::vector<int64_t> DistanceAttributes(const DistanceShape& shape,
                                        const MatchRule& rule, const Record& r);

// The distance the encrypted evaluation computes, in the clear.
mpz_class PlainDistance(const DistanceShape& shape,
                        const std::vector<int64_t>& x,
                        const std::vector<int64_t>& y);

// Alice: E(x_t) per term plus E(x_t^2) for squared terms.
std::vector<Ciphertext> EncryptAttributes(const PublicKey& pk,
                                          const DistanceShape& shape,
                                          const std::vector<int64_t>& x,
                                          Rng& rng);

// Bob: E(r) ⊕ Σ_t term_t(E(x), y) = E(d + r).
Ciphertext BlindDistance(const PublicKey& pk, const DistanceShape& shape,
                         const std::vector<Ciphertext>& enc_x,
                         const std::vector<int64_t>& y, const mpz_class& r,
                         Rng& rng);

// Decides alice_value <= bob_bound and reveals only that bit.
class ComparisonOracle {
 public:
  virtual ~ComparisonOracle() = default;
  virtual bool LessOrEqual(const mpz_class& alice_value,
                           const mpz_class& bob_bound) = 0;
};

// Compares in the clear on behalf of both parties.
class TrustedSimulator : public ComparisonOracle {
 public:
  // Logs once per process that it stands in for a secure comparison.
  bool LessOrEqual(const mpz_class& alice_value,
                   const mpz_class& bob_bound) override;
  int64_t invocations() const { return invocations_; }

 private:
  int64_t invocations_ = 0;
};

// One full comparison without a channel: Alice encrypts a, Bob blinds with a
// fresh r, Alice decrypts and the oracle decides d + r <= threshold + r.
bool SecureMatch(const KeyPair& alice_key, const Record& a, const Record& b,
                 const MatchRule& rule, ComparisonOracle& oracle,
                 Rng& alice_rng, Rng& bob_rng);

}  // namespace prlink

#endif  // PRLINK_SECURE_MATCH_H_

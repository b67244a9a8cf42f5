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
#include "prlink/secure_match.h"

#include <cstdio>
#include <mutex>

namespace prlink {
namespace {

void AddTerm(DistanceShape& s, TermKind kind, int64_t weight, int count = 1) {
  for (int i = 0; i < count; ++i) s.terms.push_back({kind, weight});
}

[[noreturn]] void Incompatible(const std::string& what) {
  throw Error(ErrorCode::kIncompatiblePayload, what);
}

mpz_class Mpz(int64_t v) {
  mpz_class out;
  mpz_set_si(out.get_mpz_t(), v);
  return out;
}

}  // namespace

size_t DistanceShape::CiphertextCount() const {
  size_t n = 0;
  for (const DistanceTerm& t : terms) n += t.kind == TermKind::kSquared ? 2 : 1;
  return n;
}

DistanceShape ShapeFor(const MatchRule& rule, const Payload& like) {
  DistanceShape s;
  std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, EuclideanThreshold>) {
          if (!std::holds_alternative<GridPoint>(like)) {
            Incompatible("euclidean rule needs grid points");
          }
          const int64_t t2 = r.theta_e6 * r.theta_e6;
          AddTerm(s, TermKind::kSquared, 1, 2);
          // Any day or hour difference pushes the distance past theta^2.
          AddTerm(s, TermKind::kSquared, t2 + 1, 2);
          s.threshold = static_cast<uint64_t>(t2);
        } else if constexpr (std::is_same_v<R, HammingThreshold>) {
          const auto* v = std::get_if<BitVector>(&like);
          if (v == nullptr) Incompatible("hamming rule needs bit vectors");
          AddTerm(s, TermKind::kBinary, 1, v->length);
          AddTerm(s, TermKind::kSquared, r.theta + 1, 2);
          s.threshold = static_cast<uint64_t>(r.theta);
        } else if constexpr (std::is_same_v<R, ExactEquality>) {
          std::visit(
              [&](const auto& p) {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, GridPoint>) {
                  AddTerm(s, TermKind::kSquared, 1, 4);
                } else if constexpr (std::is_same_v<P, BitVector>) {
                  AddTerm(s, TermKind::kBinary, 1, p.length);
                  AddTerm(s, TermKind::kSquared, 1, 2);
                } else {
                  AddTerm(s, TermKind::kSquared, 1,
                          static_cast<int>(p.attrs.size()));
                }
              },
              like);
          s.threshold = 0;
        } else {
          Incompatible("conjunctive rules have no single distance form");
        }
      },
      rule.get());
  s.sentinel = s.threshold + 1;
  AddTerm(s, TermKind::kLinear, 1);
  return s;
}

std::vector<int64_t> DistanceAttributes(const DistanceShape& shape,
                                        const MatchRule& rule,
                                        const Record& r) {
  std::vector<int64_t> x;
  x.reserve(shape.terms.size());
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GridPoint>) {
          x = {p.lat_e6, p.lon_e6, p.day, p.hour};
        } else if constexpr (std::is_same_v<P, BitVector>) {
          for (int i = 0; i < p.length; ++i) {
            x.push_back(static_cast<int64_t>((p.bits >> i) & 1));
          }
          x.push_back(p.day);
          x.push_back(p.brand);
        } else {
          x = p.attrs;
        }
      },
      r.payload);
  if (std::holds_alternative<ExactEquality>(rule.get()) == false &&
      std::holds_alternative<Generic>(r.payload)) {
    Incompatible("threshold rules need structured payloads");
  }
  x.push_back(r.is_dummy() ? static_cast<int64_t>(shape.sentinel) : 0);
  if (x.size() != shape.terms.size()) {
    Incompatible("record " + std::to_string(r.id.value) +
                 " does not fit the distance shape");
  }
  return x;
}

mpz_class PlainDistance(const DistanceShape& shape,
                        const std::vector<int64_t>& x,
                        const std::vector<int64_t>& y) {
  mpz_class d = 0;
  for (size_t t = 0; t < shape.terms.size(); ++t) {
    const mpz_class a = Mpz(x[t]);
    const mpz_class b = Mpz(y[t]);
    switch (shape.terms[t].kind) {
      case TermKind::kBinary:
        d += a + b - 2 * a * b;
        break;
      case TermKind::kSquared:
        d += Mpz(shape.terms[t].weight) * (a - b) * (a - b);
        break;
      case TermKind::kLinear:
        d += a + b;
        break;
    }
  }
  return d;
}

std::vector<Ciphertext> EncryptAttributes(const PublicKey& pk,
                                          const DistanceShape& shape,
                                          const std::vector<int64_t>& x,
                                          Rng& rng) {
  std::vector<Ciphertext> out;
  out.reserve(shape.CiphertextCount());
  for (size_t t = 0; t < shape.terms.size(); ++t) {
    const mpz_class v = Mpz(x[t]);
    out.push_back(Encrypt(pk, v, rng));
    if (shape.terms[t].kind == TermKind::kSquared) {
      out.push_back(Encrypt(pk, v * v, rng));
    }
  }
  return out;
}

Ciphertext BlindDistance(const PublicKey& pk, const DistanceShape& shape,
                         const std::vector<Ciphertext>& enc_x,
                         const std::vector<int64_t>& y, const mpz_class& r,
                         Rng& rng) {
  if (enc_x.size() != shape.CiphertextCount() ||
      y.size() != shape.terms.size()) {
    Incompatible("encrypted record does not fit the distance shape");
  }
  Ciphertext s = Encrypt(pk, r, rng);
  size_t c = 0;
  for (size_t t = 0; t < shape.terms.size(); ++t) {
    const mpz_class b = Mpz(y[t]);
    const mpz_class w = Mpz(shape.terms[t].weight);
    switch (shape.terms[t].kind) {
      case TermKind::kBinary: {
        const Ciphertext& ea = enc_x[c++];
        s = Add(pk, s, ea);
        s = Add(pk, s, ScalarMul(pk, ea, -2 * y[t]));
        s = Add(pk, s, EncryptDeterministic(pk, b));
        break;
      }
      case TermKind::kSquared: {
        const Ciphertext& ea = enc_x[c++];
        const Ciphertext& ea2 = enc_x[c++];
        s = Add(pk, s, ScalarMul(pk, ea2, w));
        s = Add(pk, s, ScalarMul(pk, ea, mpz_class(-2 * w * b)));
        s = Add(pk, s, EncryptDeterministic(pk, w * b * b));
        break;
      }
      case TermKind::kLinear: {
        s = Add(pk, s, enc_x[c++]);
        s = Add(pk, s, EncryptDeterministic(pk, b));
        break;
      }
    }
  }
  return s;
}

bool TrustedSimulator::LessOrEqual(const mpz_class& alice_value,
                                   const mpz_class& bob_bound) {
  static std::once_flag logged;
  std::call_once(logged, [] {
    std::fprintf(stderr,
                 "prlink: comparisons use the trusted simulator; a production "
                 "deployment requires a secure comparison protocol\n");
  });
  ++invocations_;
  return alice_value <= bob_bound;
}

bool SecureMatch(const KeyPair& alice_key, const Record& a, const Record& b,
                 const MatchRule& rule, ComparisonOracle& oracle,
                 Rng& alice_rng, Rng& bob_rng) {
  const DistanceShape shape = ShapeFor(rule, a.payload);
  const std::vector<int64_t> x = DistanceAttributes(shape, rule, a);
  const std::vector<int64_t> y = DistanceAttributes(shape, rule, b);
  const std::vector<Ciphertext> enc =
      EncryptAttributes(alice_key.pub(), shape, x, alice_rng);
  const mpz_class r = RandomBits(bob_rng, kBlindingBits);
  const Ciphertext s =
      BlindDistance(alice_key.pub(), shape, enc, y, r, bob_rng);
  const mpz_class blinded = alice_key.Decrypt(s);
  return oracle.LessOrEqual(blinded, mpz_class(shape.threshold) + r);
}

}  // namespace prlink

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

#include <gtest/gtest.h>

#include "prlink/paillier.h"

namespace prlink {
namespace {

class SecureMatchTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    Rng rng = MakeRng(99);
    key_ = new KeyPair(KeyPair::Generate(512, rng));
  }
  static void TearDownTestSuite() { delete key_; }
  static KeyPair* key_;
};

KeyPair* SecureMatchTest::key_ = nullptr;

Record Bits(uint64_t id, uint64_t bits, int length, int32_t day = 0,
            int32_t brand = 0) {
  return Record{RecordId{id}, BitVector{bits, length, day, brand}};
}

TEST_F(SecureMatchTest, ExhaustiveFourBitHamming) {
  Rng ra = MakeRng(1), rb = MakeRng(2);
  for (int theta : {0, 1, 2}) {
    const MatchRule rule = HammingThreshold{theta};
    TrustedSimulator oracle;
    for (uint64_t x = 0; x < 16; ++x) {
      for (uint64_t y = 0; y < 16; ++y) {
        const Record a = Bits(1, x, 4), b = Bits(2, y, 4);
        EXPECT_EQ(SecureMatch(*key_, a, b, rule, oracle, ra, rb),
                  EvaluateMatch(a, b, rule))
            << theta << " " << x << " " << y;
      }
    }
    EXPECT_EQ(oracle.invocations(), 256);
  }
}

TEST_F(SecureMatchTest, RandomFiftyBitPairs) {
  Rng gen = MakeRng(3), ra = MakeRng(4), rb = MakeRng(5);
  const MatchRule rule = HammingThreshold{5};
  TrustedSimulator oracle;
  int matches = 0;
  for (int i = 0; i < 200; ++i) {
    const uint64_t x = gen() & ((1ULL << 50) - 1);
    uint64_t y = x;
    const int flips = static_cast<int>(UniformBelow(gen, 9));
    for (int f = 0; f < flips; ++f) y ^= 1ULL << UniformBelow(gen, 50);
    const Record a = Bits(1, x, 50, 0, static_cast<int32_t>(gen() % 2));
    const Record b = Bits(2, y, 50, 0, static_cast<int32_t>(gen() % 2));
    const bool expect = EvaluateMatch(a, b, rule);
    matches += expect;
    EXPECT_EQ(SecureMatch(*key_, a, b, rule, oracle, ra, rb), expect);
  }
  EXPECT_GT(matches, 20);
  EXPECT_LT(matches, 180);
}

TEST_F(SecureMatchTest, EuclideanAgrees) {
  Rng gen = MakeRng(6), ra = MakeRng(7), rb = MakeRng(8);
  const MatchRule rule = EuclideanThreshold{1000};
  TrustedSimulator oracle;
  for (int i = 0; i < 200; ++i) {
    const GridPoint p{40750000 + static_cast<int64_t>(gen() % 5000),
                      -73950000 + static_cast<int64_t>(gen() % 5000), 0,
                      static_cast<int32_t>(gen() % 2)};
    GridPoint q = p;
    q.lat_e6 += static_cast<int64_t>(gen() % 1600) - 800;
    q.lon_e6 += static_cast<int64_t>(gen() % 1600) - 800;
    q.hour = static_cast<int32_t>(gen() % 2);
    const Record a{RecordId{1}, p}, b{RecordId{2}, q};
    EXPECT_EQ(SecureMatch(*key_, a, b, rule, oracle, ra, rb),
              EvaluateMatch(a, b, rule));
  }
}

TEST_F(SecureMatchTest, DummyNeverMatches) {
  Rng ra = MakeRng(9), rb = MakeRng(10);
  TrustedSimulator oracle;
  Record d = Bits(1, 0, 8);
  d.kind = RecordKind::kDummy;
  EXPECT_FALSE(SecureMatch(*key_, d, Bits(2, 0, 8), HammingThreshold{3}, oracle,
                           ra, rb));
  EXPECT_FALSE(SecureMatch(*key_, Bits(2, 0, 8), d, HammingThreshold{3}, oracle,
                           ra, rb));
}

TEST(DistanceShapeTest, PlainDistanceMatchesHamming) {
  const MatchRule rule = HammingThreshold{2};
  const Record a = Bits(1, 0b1011, 4, 1, 2), b = Bits(2, 0b0110, 4, 1, 2);
  const DistanceShape s = ShapeFor(rule, a.payload);
  EXPECT_EQ(s.threshold, 2u);
  EXPECT_EQ(PlainDistance(s, DistanceAttributes(s, rule, a),
                          DistanceAttributes(s, rule, b)),
            3);
  const Record c = Bits(3, 0b1011, 4, 1, 3);
  EXPECT_GT(PlainDistance(s, DistanceAttributes(s, rule, a),
                          DistanceAttributes(s, rule, c)),
            2);
}

TEST(DistanceShapeTest, ConjunctiveIsIncompatible) {
  const MatchRule rule = Conjunctive{{MatchRule(ExactEquality{})}};
  try {
    ShapeFor(rule, BitVector{0, 4, 0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIncompatiblePayload);
  }
}

}  // namespace
}  // namespace prlink

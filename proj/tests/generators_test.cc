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
#include "prlink/generators.h"

#include <gtest/gtest.h>

namespace prlink {
namespace {

std::set<IdPair> DoubleLoop(const GeneratedData& d) {
  std::set<IdPair> out;
  for (const Record& a : d.alice.records()) {
    for (const Record& b : d.bob.records()) {
      if (EvaluateMatch(a, b, d.rule)) out.insert({a.id, b.id});
    }
  }
  return out;
}

TEST(GenTaxiTest, SizesAndTruth) {
  TaxiConfig c;
  c.days = 2;
  c.per_day = 300;
  c.seed = 4;
  const GeneratedData d = GenTaxi(c);
  EXPECT_EQ(d.alice.size(), 600u);
  EXPECT_EQ(d.bob.size(), 600u);
  EXPECT_EQ(d.truth, DoubleLoop(d));
  for (const Record& a : d.alice.records()) {
    const auto& p = std::get<GridPoint>(a.payload);
    EXPECT_GE(p.lat_e6, c.lat_min_e6);
    EXPECT_LE(p.lat_e6, c.lat_max_e6);
    EXPECT_GE(p.lon_e6, c.lon_min_e6);
    EXPECT_LE(p.lon_e6, c.lon_max_e6);
    EXPECT_LT(p.day, 2);
    EXPECT_LT(p.hour, 24);
    const auto& q = std::get<GridPoint>(d.bob.Find(a.id)->payload);
    EXPECT_LE(std::abs(p.lat_e6 - q.lat_e6), c.theta_e6);
    EXPECT_LE(std::abs(p.lon_e6 - q.lon_e6), c.theta_e6);
    EXPECT_EQ(p.day, q.day);
    EXPECT_EQ(p.hour, q.hour);
  }
}

TEST(GenTaxiTest, ZeroThetaCopies) {
  TaxiConfig c;
  c.per_day = 200;
  c.theta_e6 = 0;
  const GeneratedData d = GenTaxi(c);
  for (const Record& a : d.alice.records()) {
    EXPECT_EQ(a.payload, d.bob.Find(a.id)->payload);
    EXPECT_TRUE(d.truth.count({a.id, a.id}));
  }
}

TEST(GenTaxiTest, SeedDeterminism) {
  TaxiConfig c;
  c.per_day = 100;
  const GeneratedData a = GenTaxi(c), b = GenTaxi(c);
  for (size_t i = 0; i < a.bob.size(); ++i) EXPECT_EQ(a.bob.at(i), b.bob.at(i));
  c.seed = 2;
  const GeneratedData other = GenTaxi(c);
  EXPECT_NE(a.alice.at(0), other.alice.at(0));
}

TEST(GenAbTest, DuplicatesWithinThreshold) {
  AbConfig c;
  c.days = 2;
  c.per_day = 400;
  c.seed = 3;
  const GeneratedData d = GenAb(c);
  EXPECT_EQ(d.alice.size(), 800u);
  EXPECT_EQ(d.bob.size(), 800u);
  EXPECT_EQ(d.truth, DoubleLoop(d));
  // Each noisy copy matches its source, so at least dup_rate * n matches.
  EXPECT_GE(d.truth.size(), 400u);
  for (const Record& r : d.bob.records()) {
    const auto& b = std::get<BitVector>(r.payload);
    EXPECT_EQ(b.length, 50);
    EXPECT_EQ(b.bits >> 50, 0u);
    EXPECT_LT(b.brand, 16);
  }
}

TEST(GeneratorsTest, InvalidConfig) {
  TaxiConfig t;
  t.per_day = 0;
  EXPECT_THROW(GenTaxi(t), Error);
  AbConfig a;
  a.bits = 0;
  EXPECT_THROW(GenAb(a), Error);
}

}  // namespace
}  // namespace prlink

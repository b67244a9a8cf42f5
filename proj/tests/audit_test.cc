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
#include "prlink/audit.h"

#include <gtest/gtest.h>

#include <cmath>

#include "prlink/generators.h"
#include "prlink/noise.h"

namespace prlink {
namespace {

TEST(NeighborTest, GeneratedPairsAreNeighbors) {
  TaxiConfig c;
  c.per_day = 200;
  const GeneratedData d = GenTaxi(c);
  for (uint64_t s = 1; s <= 10; ++s) {
    Rng rng = MakeRng(s, 0);
    const NeighborPair p = GenNeighbor(d.alice, d.bob, d.rule, d.blocking, rng);
    EXPECT_TRUE(IsNeighbor(d.alice, p.bob, p.bob_prime, d.rule));
    EXPECT_EQ(p.bob_prime.size(), p.bob.size());
    EXPECT_EQ(p.bob_prime.Find(p.swapped_out.id), nullptr);
    EXPECT_NE(p.bob.Find(p.swapped_out.id), nullptr);
    for (const Record& a : d.alice.records()) {
      EXPECT_FALSE(EvaluateMatch(a, p.swapped_out, d.rule));
      EXPECT_FALSE(EvaluateMatch(a, p.swapped_in, d.rule));
    }
    EXPECT_EQ(PlaintextJoin(d.alice, p.bob, d.rule),
              PlaintextJoin(d.alice, p.bob_prime, d.rule));
    EXPECT_EQ(AffectedBins(d.blocking, p).size(), 2u);
  }
}

TEST(NeighborTest, NoNonMatchingRecord) {
  TaxiConfig c;
  c.per_day = 50;
  c.theta_e6 = 0;
  const GeneratedData d = GenTaxi(c);
  Rng rng = MakeRng(1, 0);
  try {
    GenNeighbor(d.alice, d.bob, d.rule, d.blocking, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoNonMatchingRecord);
  }
}

// Tiny universe: Alice holds {0}; Bob datasets are pairs of values in
// [0, 4) under exact equality. Compare against a direct definition.
TEST(NeighborTest, ExhaustiveMinimality) {
  const MatchRule rule = ExactEquality{};
  const Dataset alice(Party::kAlice, {Record{RecordId{0}, Generic{{0}}}});
  auto make = [](int x, int y, uint64_t id_y) {
    return Dataset(Party::kBob, {Record{RecordId{0}, Generic{{x}}},
                                 Record{RecordId{id_y}, Generic{{y}}}});
  };
  for (int x = 0; x < 4; ++x) {
    for (int y = 0; y < 4; ++y) {
      for (int x2 = 0; x2 < 4; ++x2) {
        for (int y2 = 0; y2 < 4; ++y2) {
          for (uint64_t id2 : {1u, 2u}) {
            const Dataset b = make(x, y, 1);
            const Dataset bp = make(x2, y2, id2);
            int changed = (x != x2) + (y != y2 || id2 != 1);
            bool expect = false;
            if (changed == 1) {
              const int out = x != x2 ? x : y;
              const int in = x != x2 ? x2 : y2;
              expect = out != 0 && in != 0;
            }
            EXPECT_EQ(IsNeighbor(alice, b, bp, rule), expect)
                << x << y << x2 << y2 << id2;
          }
        }
      }
    }
  }
}

ProtocolConfig AuditConfigFor(const AuditInstance& inst, ProtocolKind k) {
  ProtocolConfig c;
  c.protocol = k;
  c.rule = inst.rule;
  c.blocking = inst.blocking;
  c.eps_a = c.eps_b = 1.6;
  c.delta_a = c.delta_b = 1e-5;
  return c;
}

TEST(AuditTest, WhiteBoxLpHolds) {
  const AuditInstance inst = MakeGridAuditInstance(1);
  const AuditVerdict v =
      WhiteBoxBinCounts(inst.pair, AuditConfigFor(inst, ProtocolKind::kLp));
  EXPECT_FALSE(v.violated);
  EXPECT_LE(v.log_ratio, 1.6 + 1e-9);
  EXPECT_LE(v.hockey_stick, 1e-5 * (1 + 1e-9));
  EXPECT_EQ(v.bins.size(), 2u);
}

TEST(AuditTest, WhiteBoxBlockingLeaks) {
  const AuditInstance inst = MakeGridAuditInstance(1);
  const AuditVerdict v = WhiteBoxBinCounts(
      inst.pair, AuditConfigFor(inst, ProtocolKind::kBlocking));
  EXPECT_TRUE(v.violated);
  EXPECT_NEAR(v.hockey_stick, 1.0, 1e-12);
}

TEST(AuditTest, BlackBoxBlockingLeaks) {
  const AuditInstance inst = MakeGridAuditInstance(2);
  AuditConfig cfg;
  cfg.protocol = AuditConfigFor(inst, ProtocolKind::kBlocking);
  cfg.trials = 2000;
  cfg.min_trials = 1000;
  const AuditVerdict v = AuditBinCounts(inst.alice, inst.pair, cfg);
  EXPECT_TRUE(v.violated);
  EXPECT_GT(v.eps_hat, 1.6);
}

TEST(AuditTest, InsufficientTrials) {
  const AuditInstance inst = MakeGridAuditInstance(1);
  AuditConfig cfg;
  cfg.protocol = AuditConfigFor(inst, ProtocolKind::kLp);
  cfg.trials = 10;
  try {
    AuditBinCounts(inst.alice, inst.pair, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientTrials);
  }
}

TEST(AuditTest, Lp2AnalyticMatchesClosedForm) {
  const double eps = 1.6, delta = 1e-3, alpha = eps / 2;
  const int n1 = 10;
  const Lp2Counterexample cx =
      RunLp2Counterexample(eps, delta, n1, 2000, 3, 1000);
  const double p = (std::exp(alpha) - 1) / (std::exp(alpha) + 1);
  const double keep = 1 - p * std::exp(-alpha * n1) / (1 - std::exp(-alpha));
  const double view = p * p * keep;
  const double view_prime =
      p * std::exp(-alpha) * p * std::exp(-alpha) / (n1 + 1) * keep;
  EXPECT_NEAR(cx.p, p, 1e-12);
  EXPECT_NEAR(cx.view, view, 1e-12);
  EXPECT_NEAR(cx.view_prime, view_prime, 1e-12);
  EXPECT_EQ(cx.analytic_violation, view > std::exp(eps) * view_prime + delta);
  EXPECT_TRUE(cx.analytic_violation);
  EXPECT_TRUE(cx.empirical.violated);
}

TEST(AuditTest, Lp2RejectsOutOfRangeN1) {
  EXPECT_THROW(RunLp2Counterexample(1.6, 1e-3, 0, 2000, 1, 1000), Error);
  EXPECT_THROW(RunLp2Counterexample(1.6, 1e-3, 1000, 2000, 1, 1000), Error);
}

TEST(AuditTest, RrRatioWithinBound) {
  for (double eps : {0.4, 1.6}) {
    const RrRatioVerdict v = AuditRrRatio(16, 4, eps);
    EXPECT_FALSE(v.violated);
    EXPECT_NEAR(v.bound, std::exp(eps), 1e-12);
    EXPECT_LE(v.max_ratio, v.bound * (1 + 1e-9));
  }
}

TEST(AuditTest, VerdictJson) {
  AuditVerdict v;
  v.protocol = "lp";
  v.eps_hat = std::numeric_limits<double>::infinity();
  const std::string j = VerdictToJson(v);
  EXPECT_NE(j.find("\"inf\""), std::string::npos);
  EXPECT_NE(j.find("\"lp\""), std::string::npos);
}

}  // namespace
}  // namespace prlink

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
#include "prlink/protocols.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "prlink/generators.h"
#include "prlink/noise.h"
#include "prlink/transcript.h"

namespace prlink {
namespace {

GeneratedData SmallTaxi(uint64_t seed, int64_t per_day = 300) {
  TaxiConfig c;
  c.per_day = per_day;
  c.seed = seed;
  return GenTaxi(c);
}

// 12-bit vectors so PSI+X can expand Alice's records.
GeneratedData TinyAb(uint64_t seed) {
  AbConfig c;
  c.per_day = 24;
  c.bits = 12;
  c.theta = 1;
  c.brands = 2;
  c.seed = seed;
  return GenAb(c);
}

ProtocolConfig ConfigFor(const GeneratedData& d, ProtocolKind kind,
                         uint64_t seed = 1) {
  ProtocolConfig c;
  c.protocol = kind;
  c.rule = d.rule;
  c.blocking = d.blocking;
  c.seed = seed;
  if (kind == ProtocolKind::kRr) c.blocking = ModHashBlocking{16, 4, 1, 9};
  return c;
}

bool Subset(const std::set<IdPair>& a, const std::set<IdPair>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

TEST(ProtocolNamesTest, RoundTrip) {
  for (ProtocolKind k :
       {ProtocolKind::kApc, ProtocolKind::kLp, ProtocolKind::kLp2,
        ProtocolKind::kRr, ProtocolKind::kBlocking, ProtocolKind::kPsi,
        ProtocolKind::kPsix}) {
    EXPECT_EQ(ParseProtocol(ProtocolName(k)), k);
  }
  EXPECT_THROW(ParseProtocol("nope"), Error);
}

TEST(ValidateConfigTest, Rejects) {
  ProtocolConfig c;
  c.eps_b = 0;
  EXPECT_THROW(ValidateConfig(c), Error);
  c = ProtocolConfig{};
  c.delta_a = 1;
  EXPECT_THROW(ValidateConfig(c), Error);
  c = ProtocolConfig{};
  c.protocol = ProtocolKind::kRr;
  EXPECT_THROW(ValidateConfig(c), Error);
  c.blocking = ModHashBlocking{};
  EXPECT_NO_THROW(ValidateConfig(c));
}

TEST(ProtocolTest, AllProtocolsArePrecise) {
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    const GeneratedData d = TinyAb(seed);
    for (ProtocolKind k :
         {ProtocolKind::kApc, ProtocolKind::kLp, ProtocolKind::kLp2,
          ProtocolKind::kRr, ProtocolKind::kBlocking, ProtocolKind::kPsi,
          ProtocolKind::kPsix}) {
      const RunResult r =
          RunProtocol(d.alice, d.bob, ConfigFor(d, k, seed), &d.truth);
      EXPECT_TRUE(Subset(r.output.Pairs(), d.truth)) << ProtocolName(k);
      EXPECT_TRUE(r.alice_transcript.complete());
      EXPECT_TRUE(r.bob_transcript.complete());
    }
  }
}

TEST(ProtocolTest, ApcCostIsProduct) {
  const GeneratedData d = TinyAb(4);
  const RunResult r =
      RunProtocol(d.alice, d.bob, ConfigFor(d, ProtocolKind::kApc));
  EXPECT_EQ(r.cost, static_cast<int64_t>(d.alice.size() * d.bob.size()));
  EXPECT_DOUBLE_EQ(r.recall.value, 1.0);
}

TEST(ProtocolTest, BlockingCostIsCandidateCost) {
  const GeneratedData d = SmallTaxi(2);
  const RunResult r = RunProtocol(
      d.alice, d.bob, ConfigFor(d, ProtocolKind::kBlocking), &d.truth);
  const std::vector<BinPair> s = Strategy(d.blocking);
  EXPECT_EQ(r.cost, CandidateCost(AssignBins(d.blocking, d.alice),
                                  AssignBins(d.blocking, d.bob), s));
  EXPECT_DOUBLE_EQ(r.recall.value, 1.0);
}

TEST(ProtocolTest, LpCostEqualsNoisyCountProducts) {
  const GeneratedData d = SmallTaxi(3);
  const RunResult r =
      RunProtocol(d.alice, d.bob, ConfigFor(d, ProtocolKind::kLp), &d.truth);
  const ViewFeatures va = ExtractView(r.alice_transcript);
  const ViewFeatures vb = ExtractView(r.bob_transcript);
  int64_t oracle = 0;
  for (const BinPair& p : Strategy(d.blocking)) {
    oracle += va.alice_counts[p.a] * va.bob_counts[p.b];
  }
  EXPECT_EQ(r.cost, oracle);
  EXPECT_EQ(va.comparisons, oracle);
  EXPECT_EQ(vb.comparisons, oracle);
  EXPECT_EQ(va.alice_counts, vb.alice_counts);
  const std::vector<int64_t> real = AssignBins(d.blocking, d.bob).Counts();
  for (size_t i = 0; i < real.size(); ++i) EXPECT_GE(va.bob_counts[i], real[i]);
}

TEST(ProtocolTest, LpRecallEqualsBlocking) {
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    const GeneratedData d = SmallTaxi(seed);
    const RunResult lp = RunProtocol(
        d.alice, d.bob, ConfigFor(d, ProtocolKind::kLp, seed), &d.truth);
    const RunResult bl = RunProtocol(
        d.alice, d.bob, ConfigFor(d, ProtocolKind::kBlocking, seed), &d.truth);
    EXPECT_EQ(lp.output.Pairs(), bl.output.Pairs());
    EXPECT_DOUBLE_EQ(lp.recall.value, bl.recall.value);
  }
}

TEST(ProtocolTest, GmcNeverCostsMore) {
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    const GeneratedData d = SmallTaxi(seed);
    ProtocolConfig c = ConfigFor(d, ProtocolKind::kLp, seed);
    const RunResult plain = RunProtocol(d.alice, d.bob, c, &d.truth);
    c.gmc = true;
    const RunResult gmc = RunProtocol(d.alice, d.bob, c, &d.truth);
    EXPECT_LE(gmc.cost, plain.cost);
    EXPECT_TRUE(Subset(plain.output.Pairs(), gmc.output.Pairs()));
    EXPECT_TRUE(Subset(gmc.output.Pairs(), d.truth));
    EXPECT_GT(gmc.gmc_rounds, 0);
  }
}

TEST(ProtocolTest, SortPruneCheckpoints) {
  const GeneratedData d = SmallTaxi(5, 1000);
  ProtocolConfig c = ConfigFor(d, ProtocolKind::kLp);
  c.sp = SortPruneConfig{};
  const RunResult r = RunProtocol(d.alice, d.bob, c, &d.truth);
  ASSERT_EQ(r.checkpoints.size(), 10u);
  double last_p = 101;
  int64_t last_cost = 0;
  double last_recall = 0;
  for (const CheckpointResult& cp : r.checkpoints) {
    EXPECT_LT(cp.checkpoint.percentile, last_p);
    EXPECT_GE(cp.checkpoint.cost, last_cost);
    EXPECT_GE(cp.recall.value, last_recall);
    last_p = cp.checkpoint.percentile;
    last_cost = cp.checkpoint.cost;
    last_recall = cp.recall.value;
  }
  EXPECT_EQ(r.checkpoints.back().checkpoint.percentile, 0);
  EXPECT_EQ(last_cost, r.cost);
  EXPECT_DOUBLE_EQ(last_recall, r.recall.value);
}

TEST(ProtocolTest, PruneStopsEarly) {
  const GeneratedData d = SmallTaxi(6, 1000);
  ProtocolConfig c = ConfigFor(d, ProtocolKind::kLp);
  const RunResult full = RunProtocol(d.alice, d.bob, c, &d.truth);
  c.sp = SortPruneConfig{};
  c.sp->percentiles = {90, 50};
  c.sp->prune = true;
  const RunResult pruned = RunProtocol(d.alice, d.bob, c, &d.truth);
  EXPECT_LT(pruned.cost, full.cost);
  EXPECT_TRUE(Subset(pruned.output.Pairs(), full.output.Pairs()));
}

TEST(PlanTest, NearestRank) {
  const std::vector<int64_t> v = {5, 1, 4, 2, 3};
  EXPECT_EQ(NearestRankThreshold(v, 100), 5);
  EXPECT_EQ(NearestRankThreshold(v, 50), 3);
  EXPECT_EQ(NearestRankThreshold(v, 10), 1);
  EXPECT_EQ(NearestRankThreshold(v, 0), -1);
}

TEST(PlanTest, GroupsPartitionStrategy) {
  const std::vector<BinPair> s = {{0, 0}, {1, 1}, {2, 2}, {0, 1}};
  const std::vector<int64_t> a = {10, 1, 5}, b = {8, 9, 0};
  SortPruneConfig sp;
  sp.percentiles = {50, 0};
  const std::vector<PlanGroup> plan = BuildPlan(s, a, b, sp);
  size_t total = 0;
  for (const PlanGroup& g : plan) total += g.pairs.size();
  EXPECT_EQ(total, s.size());
  // Pooled {10,1,5,8,9,0}: 50th percentile by nearest rank is 5.
  EXPECT_EQ(plan.front().threshold, 5);
  EXPECT_EQ(plan.front().pairs, (std::vector<BinPair>{{0, 0}, {0, 1}}));
}

TEST(PlanTest, CostBoundFormula) {
  EXPECT_DOUBLE_EQ(LpExpectedCostBound(100, 14, 9, 6144, 3000),
                   100 + 14.0 * 14 * 9 * 6144 + 2 * 14.0 * 9 * 3000);
}

TEST(ProtocolTest, LpMeanCostWithinBound) {
  const GeneratedData d = SmallTaxi(7);
  const BinnedDataset a = AssignBins(d.blocking, d.alice);
  const BinnedDataset b = AssignBins(d.blocking, d.bob);
  const int64_t blocked = CandidateCost(a, b, Strategy(d.blocking));
  const double c_eta =
      TruncatedLaplace::Create(1.6, 1e-5, 2).ExpectedPositive();
  const double bound = LpExpectedCostBound(blocked, c_eta, 9,
                                           NumBins(d.blocking), d.alice.size());
  double mean = 0;
  for (uint64_t s = 1; s <= 3; ++s) {
    mean += static_cast<double>(RunProtocol(d.alice, d.bob,
                                            ConfigFor(d, ProtocolKind::kLp, s),
                                            &d.truth)
                                    .cost);
  }
  EXPECT_LE(mean / 3, bound);
}

TEST(ProtocolTest, SecureModeAgreesWithFastMode) {
  const GeneratedData d = TinyAb(8);
  for (ProtocolKind k : {ProtocolKind::kApc, ProtocolKind::kLp,
                         ProtocolKind::kPsi, ProtocolKind::kPsix}) {
    ProtocolConfig c = ConfigFor(d, k, 3);
    const RunResult fast = RunProtocol(d.alice, d.bob, c, &d.truth);
    c.mode = ExecMode::kSecure;
    const RunResult secure = RunProtocol(d.alice, d.bob, c, &d.truth);
    EXPECT_EQ(fast.cost, secure.cost) << ProtocolName(k);
    EXPECT_EQ(fast.output.Pairs(), secure.output.Pairs()) << ProtocolName(k);
  }
}

TEST(ProtocolTest, TcpTransport) {
  const GeneratedData d = TinyAb(9);
  ProtocolConfig c = ConfigFor(d, ProtocolKind::kLp);
  const RunResult in = RunProtocol(d.alice, d.bob, c, &d.truth);
  c.transport = TransportKind::kTcp;
  const RunResult tcp = RunProtocol(d.alice, d.bob, c, &d.truth);
  EXPECT_EQ(in.cost, tcp.cost);
  EXPECT_EQ(in.output.Pairs(), tcp.output.Pairs());
}

TEST(ProtocolTest, PsixFindsEveryMatchAndPsiOnlyExact) {
  const GeneratedData d = TinyAb(10);
  const RunResult x =
      RunProtocol(d.alice, d.bob, ConfigFor(d, ProtocolKind::kPsix), &d.truth);
  EXPECT_EQ(x.output.Pairs(), d.truth);
  EXPECT_EQ(x.gamma, 13u);
  EXPECT_EQ(x.cost, std::llround(PsiCostModel(
                        13, std::max(d.alice.size(), d.bob.size()))));
  const RunResult p =
      RunProtocol(d.alice, d.bob, ConfigFor(d, ProtocolKind::kPsi), &d.truth);
  for (const IdPair& pr : p.output.Pairs()) {
    EXPECT_EQ(d.alice.Find(pr.first)->payload, d.bob.Find(pr.second)->payload);
  }
}

TEST(ProtocolTest, PsixOverflowSurfaces) {
  AbConfig c;
  c.per_day = 100;
  const GeneratedData d = GenAb(c);
  try {
    RunProtocol(d.alice, d.bob, ConfigFor(d, ProtocolKind::kPsix));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kExpansionOverflow);
  }
}

TEST(ProtocolTest, RrDeterministicLimitEqualsBlocking) {
  const GeneratedData d = TinyAb(11);
  ProtocolConfig c = ConfigFor(d, ProtocolKind::kRr);
  c.eps_a = c.eps_b = std::numeric_limits<double>::infinity();
  const RunResult rr = RunProtocol(d.alice, d.bob, c, &d.truth);
  ProtocolConfig b = c;
  b.protocol = ProtocolKind::kBlocking;
  const RunResult bl = RunProtocol(d.alice, d.bob, b, &d.truth);
  EXPECT_EQ(rr.output.Pairs(), bl.output.Pairs());
  EXPECT_EQ(rr.cost, bl.cost);
}

TEST(ProtocolTest, SameSeedSameRun) {
  const GeneratedData d = SmallTaxi(12);
  const ProtocolConfig c = ConfigFor(d, ProtocolKind::kLp, 77);
  const RunResult a = RunProtocol(d.alice, d.bob, c, &d.truth);
  const RunResult b = RunProtocol(d.alice, d.bob, c, &d.truth);
  EXPECT_EQ(a.cost, b.cost);
  EXPECT_EQ(ExtractView(a.alice_transcript).bob_counts,
            ExtractView(b.alice_transcript).bob_counts);
}

}  // namespace
}  // namespace prlink

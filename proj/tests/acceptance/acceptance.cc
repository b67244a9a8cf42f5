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
// Acceptance suite: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "prlink/audit.h"
#include "prlink/generators.h"
#include "prlink/noise.h"
#include "prlink/paillier.h"
#include "prlink/protocols.h"
#include "prlink/psi.h"
#include "prlink/results.h"
#include "prlink/rr.h"
#include "prlink/secure_match.h"
#include "prlink/stats.h"

namespace prlink {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, double a, double b = 0, double c = 0,
                double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

bool Subset(const std::set<IdPair>& a, const std::set<IdPair>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// 4 x 4 cells of 0.02 degrees, one time slot.
GeneratedData SmallTaxi(uint64_t seed, int64_t per_day, int64_t theta_e6) {
  TaxiConfig c;
  c.per_day = per_day;
  c.theta_e6 = theta_e6;
  c.seed = seed;
  c.blocking.grid.cell_e6 = 20000;
  c.blocking.grid.rows = 4;
  c.blocking.grid.cols = 4;
  c.blocking.hour_slots = 1;
  return GenTaxi(c);
}

GeneratedData TinyAb(uint64_t seed, int64_t per_day) {
  AbConfig c;
  c.per_day = per_day;
  c.bits = 12;
  c.theta = 1 + static_cast<int32_t>(seed % 2);
  c.brands = 2;
  c.seed = seed;
  return GenAb(c);
}

ProtocolConfig ConfigFor(const GeneratedData& d, ProtocolKind kind,
                         uint64_t seed) {
  ProtocolConfig c;
  c.protocol = kind;
  c.rule = d.rule;
  c.blocking = d.blocking;
  c.seed = seed;
  if (kind == ProtocolKind::kRr) c.blocking = ModHashBlocking{16, 4, 1, seed};
  return c;
}

Outcome Precision() {
  const std::vector<ProtocolKind> all = {
      ProtocolKind::kApc, ProtocolKind::kLp,       ProtocolKind::kLp2,
      ProtocolKind::kRr,  ProtocolKind::kBlocking, ProtocolKind::kPsi,
      ProtocolKind::kPsix};
  int instances = 0, runs = 0, bad = 0, secure_runs = 0;
  size_t max_n = 0;
  for (uint64_t s = 1; s <= 200; ++s) {
    const GeneratedData d =
        s % 2 ? TinyAb(s, 20 + static_cast<int64_t>(s))
              : SmallTaxi(s, 100 + 4 * static_cast<int64_t>(s), 30);
    max_n = std::max({max_n, d.alice.size(), d.bob.size()});
    ++instances;
    for (ProtocolKind k : all) {
      ProtocolConfig c = ConfigFor(d, k, s);
      // Every tenth AB instance also runs the encrypted path.
      const bool secure = s % 20 == 1;
      for (int pass = 0; pass < (secure ? 2 : 1); ++pass) {
        if (pass == 1) {
          c.mode = ExecMode::kSecure;
          ++secure_runs;
        }
        const RunResult r = RunProtocol(d.alice, d.bob, c, &d.truth);
        ++runs;
        if (!Subset(r.output.Pairs(), d.truth)) ++bad;
      }
    }
  }
  return {bad == 0 && instances >= 200 && max_n <= 2000,
          std::to_string(instances) + " instances, " + std::to_string(runs) +
              " runs (" + std::to_string(secure_runs) + " encrypted), max n " +
              std::to_string(max_n) + ", " + std::to_string(bad) +
              " with a false positive"};
}

Outcome RecallPreservation() {
  int differ = 0;
  double min_recall = 1;
  for (uint64_t s = 1; s <= 100; ++s) {
    const GeneratedData d = SmallTaxi(1000 + s, 500, 1000);
    const RunResult lp = RunProtocol(
        d.alice, d.bob, ConfigFor(d, ProtocolKind::kLp, s), &d.truth);
    const RunResult bl = RunProtocol(
        d.alice, d.bob, ConfigFor(d, ProtocolKind::kBlocking, s), &d.truth);
    if (lp.recall.value != bl.recall.value ||
        lp.output.Pairs() != bl.output.Pairs()) {
      ++differ;
    }
    min_recall = std::min(min_recall, lp.recall.value);
  }
  return {differ == 0, "100 seeds, " + std::to_string(differ) +
                           " differ; min recall " + Fmt("%.4f", min_recall)};
}

Outcome GmcDominance() {
  int bad = 0;
  double saved = 0;
  for (uint64_t s = 1; s <= 100; ++s) {
    const GeneratedData d = SmallTaxi(2000 + s, 500, 1000);
    ProtocolConfig c = ConfigFor(d, ProtocolKind::kLp, s);
    const RunResult plain = RunProtocol(d.alice, d.bob, c, &d.truth);
    c.gmc = true;
    const RunResult gmc = RunProtocol(d.alice, d.bob, c, &d.truth);
    if (gmc.cost > plain.cost ||
        !Subset(plain.output.Pairs(), gmc.output.Pairs())) {
      ++bad;
    }
    saved += 1.0 - static_cast<double>(gmc.cost) / plain.cost;
  }
  return {bad == 0, "100 seeds, " + std::to_string(bad) +
                        " violations; mean cost saving " +
                        Fmt("%.1f%%", 100 * saved / 100)};
}

Outcome NoiseLaw() {
  const int sens = 2;
  double worst = 0;
  for (double eps : {0.4, 1.6}) {
    for (double delta : {1e-5, 1e-3}) {
      for (CenterMode m : {CenterMode::kCeiling, CenterMode::kExact}) {
        const TruncatedLaplace t =
            TruncatedLaplace::Create(eps, delta, sens, m);
        const int64_t c = static_cast<int64_t>(std::floor(t.law().center()));
        for (int64_t x = c - 200; x <= c + 200; ++x) {
          const double r = std::log(t.Pmf(x) / t.Pmf(x + 1));
          worst = std::max(worst, std::fabs(r) - eps / sens);
        }
      }
    }
  }
  const bool ratio_ok = worst <= 1e-12;

  const double eps = 1.6, delta = 1e-3;
  const TruncatedLaplace t =
      TruncatedLaplace::Create(eps, delta, sens, CenterMode::kExact);
  Rng rng = MakeRng(4242, 0);
  const int64_t n = 10'000'000;
  int64_t neg = 0;
  for (int64_t i = 0; i < n; ++i) neg += t.Sample(rng) < 0;
  const double target = 1 - std::pow(1 - delta, 1.0 / sens);
  const double sigma = std::sqrt(target * (1 - target) / n);
  const double z = (static_cast<double>(neg) / n - target) / sigma;
  return {ratio_ok && std::fabs(z) <= 3,
          Fmt("max log pmf ratio excess %.2e; Pr[eta<0] %.6e vs %.6e (z=%.2f)",
              worst, static_cast<double>(neg) / n, target, z)};
}

Outcome PositiveControl() {
  const AuditInstance inst = MakeGridAuditInstance(7);
  ProtocolConfig c;
  c.protocol = ProtocolKind::kLp;
  c.rule = inst.rule;
  c.blocking = inst.blocking;
  c.eps_a = c.eps_b = 1.6;
  c.delta_a = c.delta_b = 1e-5;
  const AuditVerdict white = WhiteBoxBinCounts(inst.pair, c);
  AuditConfig cfg;
  cfg.protocol = c;
  cfg.trials = 100000;
  cfg.seed = 7;
  const AuditVerdict black = AuditBinCounts(inst.alice, inst.pair, cfg);
  const bool ratio_ok = white.log_ratio <= 1.6 + 1e-9;
  return {ratio_ok && !white.violated && !black.violated,
          Fmt("white-box ln ratio %.6f (bound 1.6), hockey-stick %.3e; "
              "black-box eps_hat %.3f over %.0f trials",
              white.log_ratio, white.hockey_stick, black.eps_hat,
              static_cast<double>(black.trials)) +
              (white.violated ? " [white-box violated]" : "") +
              (black.violated ? " [black-box violated]" : "")};
}

Outcome NegativeControl() {
  const Lp2Counterexample cx = RunLp2Counterexample(1.6, 1e-3, 10, 100000, 11);
  const AuditVerdict& v = cx.empirical;
  // CI-separated: the lower bound under D_B clears e^eps times the upper
  // bound under D'_B plus delta.
  const bool separated =
      v.worst.p.lo > std::exp(1.6) * v.worst.p_prime.hi + 1e-3;
  return {cx.analytic_violation && v.violated && separated,
          Fmt("exact %.5f vs e^eps*%.6f+delta=%.5f; ", cx.view, cx.view_prime,
              std::exp(1.6) * cx.view_prime + 1e-3) +
              Fmt("empirical CI [%.5f,%.5f] vs [%.6f,%.6f]", v.worst.p.lo,
                  v.worst.p.hi, v.worst.p_prime.lo, v.worst.p_prime.hi)};
}

Outcome ScalingSlopes() {
  ExperimentSpec s;
  s.dataset.kind = DatasetKind::kTaxi;
  s.dataset.days = {1, 2, 4, 8};
  s.dataset.per_day = 200;
  s.protocols = {"apc", "lp"};
  s.eps = {1.6};
  s.delta = {1e-5};
  s.trials = 3;
  s.seed = 17;
  const SweepResult r = RunSweep(s);
  double apc = NAN, lp = NAN, apc_cost = 0, lp_cost = 0;
  size_t largest = 0;
  for (const SlopeSummary& x : r.slopes) {
    if (x.protocol == "apc") apc = x.slope;
    if (x.protocol == "lp") lp = x.slope;
  }
  for (const GroupSummary& g : r.groups) largest = std::max(largest, g.n_a);
  for (const GroupSummary& g : r.groups) {
    if (g.n_a != largest) continue;
    if (g.protocol == "apc") apc_cost = g.cost.mean;
    if (g.protocol == "lp") lp_cost = g.cost.mean;
  }
  const bool apc_ok = std::fabs(apc - 2.0) <= 0.01;
  const bool lp_ok = lp >= 1.0 && lp <= 1.3;
  const bool ratio_ok = lp_cost > 0 && lp_cost <= apc_cost / 10;
  std::string d =
      Fmt("APC slope %.6f, LP slope %.6f, at n=%.0f LP/APC cost %.2f", apc, lp,
          static_cast<double>(largest), lp_cost / apc_cost);
  if (!apc_ok) d += " [APC slope out of range]";
  if (!lp_ok) d += " [LP slope out of range]";
  if (!ratio_ok) d += " [LP cost above APC/10]";
  return {apc_ok && lp_ok && ratio_ok, d};
}

Outcome SortPruneRecall() {
  double sum = 0;
  for (uint64_t s = 1; s <= 10; ++s) {
    TaxiConfig tc;
    tc.seed = s;
    const GeneratedData d = GenTaxi(tc);
    ProtocolConfig c = ConfigFor(d, ProtocolKind::kLp, s);
    c.sp = SortPruneConfig{};
    c.sp->percentiles = {10};
    c.sp->prune = true;
    const RunResult r = RunProtocol(d.alice, d.bob, c, &d.truth);
    sum += r.checkpoints.front().recall.value;
  }
  const double mean = sum / 10;
  return {mean > 0.95, Fmt("mean recall %.4f over 10 seeds", mean)};
}

// Fraction of matching pairs compared under RR bin assignment. Each draw
// places 1000 records and their identical Bob copies.
Interval RrEmpirical(uint32_t k, uint32_t window, const std::vector<double>& pa,
                     const std::vector<double>& pb, int64_t batches,
                     uint64_t seed, int64_t* hits, int64_t* total) {
  std::vector<Record> recs;
  for (uint64_t i = 0; i < 1000; ++i) {
    recs.push_back(Record{RecordId{i}, Generic{{static_cast<int64_t>(i)}}});
  }
  const Dataset a(Party::kAlice, recs), b(Party::kBob, recs);
  const ModHashBlocking fn{k, window, 1, seed};
  Rng rng = MakeRng(seed, 1);
  *hits = *total = 0;
  for (int64_t t = 0; t < batches; ++t) {
    const BinnedDataset ba = RrAssignBins(fn, a, pa, rng);
    const BinnedDataset bb = RrAssignBins(fn, b, pb, rng);
    std::vector<uint32_t> bin_a(1000), bin_b(1000);
    for (uint32_t i = 0; i < k; ++i) {
      for (const Record& r : ba.bins[i]) bin_a[r.id.value] = i;
      for (const Record& r : bb.bins[i]) bin_b[r.id.value] = i;
    }
    for (size_t i = 0; i < 1000; ++i) {
      *hits += (bin_b[i] + k - bin_a[i]) % k < window;
    }
    *total += 1000;
  }
  return ClopperPearson(*hits, *total, 0.99);
}

Outcome RrFormulas() {
  const uint32_t k = 16;
  bool ok = true;
  std::string d;
  uint64_t seed = 50;
  for (double eps : {0.4, 1.6}) {
    const double e = std::exp(eps);
    const double p = e / (k - 1 + e), q = 1 / (k - 1 + e);
    const double basic = p * p + (k - 1) * q * q;
    const std::vector<double> law = RrOffsetProbs(k, 1, eps);
    int64_t h, n;
    const Interval ci = RrEmpirical(k, 1, law, law, 200, ++seed, &h, &n);
    const bool in = ci.lo <= basic && basic <= ci.hi;
    ok &= in;
    d += Fmt("basic eps=%.1f %.4f in [%.4f,%.4f]; ", eps, basic, ci.lo, ci.hi);
    if (!in) d += "[outside] ";
    for (uint32_t w : {1u, 4u}) {
      const double opt = w * e / (k - w + w * e);
      const Interval c2 = RrEmpirical(
          k, w, RrOffsetProbs(k, 1, std::numeric_limits<double>::infinity()),
          RrOptimalProbs(k, w, eps), 200, ++seed, &h, &n);
      const bool in2 = c2.lo <= opt && opt <= c2.hi;
      ok &= in2;
      d += Fmt("opt k'=%.0f eps=%.1f %.4f in [%.4f,", w, eps, opt, c2.lo) +
           Fmt("%.4f]; ", c2.hi);
      if (!in2) d += "[outside] ";
    }
  }
  int checked = 0, wrong = 0;
  std::string counter;
  for (uint32_t w = 1; w <= 10; ++w) {
    for (double eps : {0.1, 0.4, 0.8, 1.6, 3.2}) {
      if (std::exp(eps) - 3 + 2.0 * k - 4.0 * w <= 0) continue;
      ++checked;
      uint32_t best = 1;
      for (uint32_t x = 2; x <= w; ++x) {
        if (RrRestrictedRecall(k, w, x, eps) >
            RrRestrictedRecall(k, w, best, eps)) {
          best = x;
        }
      }
      if (best != w) {
        ++wrong;
        if (wrong <= 3) {
          counter += Fmt(" k'=%.0f eps=%.1f argmax %.0f;", w, eps, best);
        }
      }
    }
  }
  ok &= wrong == 0 && checked > 0;
  d += "argmax = k' in " + std::to_string(checked - wrong) + "/" +
       std::to_string(checked) + " cases with C2 > 0";
  if (wrong > 0) d += "; counterexamples:" + counter;
  return {ok, d};
}

Outcome SecureMatchEquivalence() {
  Rng key_rng = MakeRng(77, 0);
  const KeyPair key = KeyPair::Generate(kMinKeyBits, key_rng);
  Rng ra = MakeRng(78, 0), rb = MakeRng(79, 0), gen = MakeRng(80, 0);
  int bad = 0, pairs = 0;
  for (int theta : {0, 1, 2}) {
    TrustedSimulator oracle;
    const MatchRule rule = HammingThreshold{theta};
    for (uint64_t x = 0; x < 16; ++x) {
      for (uint64_t y = 0; y < 16; ++y) {
        const Record a{RecordId{1}, BitVector{x, 4, 0, 0}};
        const Record b{RecordId{2}, BitVector{y, 4, 0, 0}};
        bad += SecureMatch(key, a, b, rule, oracle, ra, rb) !=
               EvaluateMatch(a, b, rule);
        ++pairs;
      }
    }
  }
  TrustedSimulator oracle;
  const MatchRule rule = HammingThreshold{5};
  for (int i = 0; i < 1000; ++i) {
    const uint64_t x = gen() & ((uint64_t{1} << 50) - 1);
    uint64_t y = x;
    // Half near neighbors so both outcomes are exercised.
    if (i % 2) {
      y = gen() & ((uint64_t{1} << 50) - 1);
    } else {
      const uint64_t flips = UniformBelow(gen, 9);
      for (uint64_t f = 0; f < flips; ++f)
        y ^= uint64_t{1} << UniformBelow(gen, 50);
    }
    const Record a{RecordId{1}, BitVector{x, 50, 0, 0}};
    const Record b{RecordId{2}, BitVector{y, 50, 0, 0}};
    bad += SecureMatch(key, a, b, rule, oracle, ra, rb) !=
           EvaluateMatch(a, b, rule);
    ++pairs;
  }
  int psi_bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Record> a, b;
    for (uint64_t i = 1; i <= 20; ++i) {
      a.push_back({RecordId{i}, BitVector{gen() % 48, 6, 0, 0}});
      b.push_back({RecordId{i}, BitVector{gen() % 48, 6, 0, 0}});
    }
    std::set<IdPair> truth;
    for (const Record& x : a) {
      for (const Record& y : b) {
        if (x.payload == y.payload) truth.insert({x.id, y.id});
      }
    }
    const PsiResult r =
        PsiEquiJoin(key, Dataset(Party::kAlice, a), Dataset(Party::kBob, b),
                    ExactEquality{}, ra, rb);
    psi_bad += r.pairs != truth;
  }
  return {bad == 0 && psi_bad == 0,
          std::to_string(pairs) + " pairs, " + std::to_string(bad) +
              " disagree; PSI 100 instances, " + std::to_string(psi_bad) +
              " differ from the plaintext intersection"};
}

Outcome PsixCorrectness() {
  Rng gen = MakeRng(90, 0);
  int bad = 0, checks = 0;
  for (int theta = 0; theta <= 3; ++theta) {
    std::vector<Record> a, b;
    for (uint64_t v = 0; v < 256; ++v) {
      a.push_back({RecordId{v}, BitVector{v, 8, 0, 0}});
    }
    for (uint64_t i = 0; i < 100; ++i) {
      b.push_back({RecordId{i}, BitVector{gen() % 256, 8, 0, 0}});
    }
    const Dataset da(Party::kAlice, a), db(Party::kBob, b);
    const MatchRule rule = HammingThreshold{theta};
    const ExpandedDataset x = ExpandForPsix(da, rule);
    bad += EquiJoin(x, db) != PlaintextJoin(da, db, rule);
    ++checks;
  }
  // End to end through the encrypted protocol.
  std::vector<Record> a, b;
  for (uint64_t i = 0; i < 30; ++i) {
    a.push_back({RecordId{i}, BitVector{gen() % 256, 8, 0, 0}});
    b.push_back({RecordId{i}, BitVector{gen() % 256, 8, 0, 0}});
  }
  const Dataset da(Party::kAlice, a), db(Party::kBob, b);
  ProtocolConfig c;
  c.protocol = ProtocolKind::kPsix;
  c.mode = ExecMode::kSecure;
  c.rule = HammingThreshold{2};
  c.blocking = DayBrandBlocking{1, 1};
  const RunResult r = RunProtocol(da, db, c);
  bad += r.output.Pairs() != PlaintextJoin(da, db, c.rule);
  ++checks;
  const uint64_t gamma =
      ExpansionFactor(HammingThreshold{5}, BitVector{0, 50, 0, 0});
  return {
      bad == 0 && gamma == 2369936,
      std::to_string(checks - bad) + "/" + std::to_string(checks) +
          " joins agree; gamma(50 bits, theta 5) = " + std::to_string(gamma)};
}

}  // namespace
}  // namespace prlink

int main() {
  using prlink::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> suite = {
      {"perfect-precision", prlink::Precision},
      {"recall-preservation", prlink::RecallPreservation},
      {"gmc-dominance", prlink::GmcDominance},
      {"noise-law", prlink::NoiseLaw},
      {"audit-positive-control", prlink::PositiveControl},
      {"audit-negative-control", prlink::NegativeControl},
      {"scaling-slopes", prlink::ScalingSlopes},
      {"sp-recall-floor", prlink::SortPruneRecall},
      {"rr-formulas", prlink::RrFormulas},
      {"secure-match-equivalence", prlink::SecureMatchEquivalence},
      {"psix-correctness", prlink::PsixCorrectness},
  };
  int failed = 0;
  for (const auto& [name, fn] : suite) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    failed += !o.pass;
    std::printf("%s %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", name, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n",
              static_cast<int>(suite.size()) - failed, suite.size());
  return failed == 0 ? 0 : 1;
}

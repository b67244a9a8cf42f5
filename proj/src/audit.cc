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

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "json.hpp"
#include "prlink/noise.h"
#include "prlink/rr.h"
#include "prlink/transcript.h"

namespace prlink {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Range {
  int64_t lo = std::numeric_limits<int64_t>::max();
  int64_t hi = std::numeric_limits<int64_t>::min();
  void Add(int64_t v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  int64_t Draw(Rng& rng) const {
    if (hi <= lo) return lo;
    return lo + static_cast<int64_t>(
                    UniformBelow(rng, static_cast<uint64_t>(hi - lo) + 1));
  }
};

uint64_t RandomBitsOf(int length, Rng& rng) {
  const uint64_t mask = length >= 64 ? ~0ULL : (1ULL << length) - 1;
  return rng() & mask;
}

// Uniform over the cells, days and brands a blocking function covers; for
// keyed hashing, uniform over the attribute ranges seen in the data.
Payload RandomPayload(const BlockingFn& domain, const Dataset& alice,
                      const Dataset& bob, Rng& rng) {
  const Payload& like = bob.empty() ? alice.at(0).payload : bob.at(0).payload;
  if (const auto* g = std::get_if<GridTimeBlocking>(&domain)) {
    GridPoint p;
    p.lat_e6 = g->grid.lat_min_e6 +
               static_cast<int64_t>(UniformBelow(
                   rng, static_cast<uint64_t>(g->grid.rows * g->grid.cell_e6)));
    p.lon_e6 = g->grid.lon_min_e6 +
               static_cast<int64_t>(UniformBelow(
                   rng, static_cast<uint64_t>(g->grid.cols * g->grid.cell_e6)));
    p.day = static_cast<int32_t>(UniformBelow(rng, g->days));
    p.hour = static_cast<int32_t>(UniformBelow(rng, 24));
    return p;
  }
  if (const auto* d = std::get_if<DayBrandBlocking>(&domain)) {
    const auto* v = std::get_if<BitVector>(&like);
    if (v == nullptr) {
      throw Error(ErrorCode::kIncompatiblePayload,
                  "day/brand blocking needs bit vectors");
    }
    BitVector out;
    out.length = v->length;
    out.bits = RandomBitsOf(v->length, rng);
    out.day = static_cast<int32_t>(UniformBelow(rng, d->days));
    out.brand = static_cast<int32_t>(UniformBelow(rng, d->brands));
    return out;
  }
  std::vector<Range> ranges;
  auto scan = [&](const Dataset& ds) {
    for (const Record& r : ds.records()) {
      std::vector<int64_t> f;
      std::visit(
          [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, GridPoint>) {
              f = {p.lat_e6, p.lon_e6, p.day, p.hour};
            } else if constexpr (std::is_same_v<P, BitVector>) {
              f = {p.day, p.brand};
            } else {
              f = p.attrs;
            }
          },
          r.payload);
      ranges.resize(std::max(ranges.size(), f.size()));
      for (size_t i = 0; i < f.size(); ++i) ranges[i].Add(f[i]);
    }
  };
  scan(alice);
  scan(bob);
  return std::visit(
      [&](const auto& p) -> Payload {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GridPoint>) {
          return GridPoint{ranges[0].Draw(rng), ranges[1].Draw(rng),
                           static_cast<int32_t>(ranges[2].Draw(rng)),
                           static_cast<int32_t>(ranges[3].Draw(rng))};
        } else if constexpr (std::is_same_v<P, BitVector>) {
          return BitVector{RandomBitsOf(p.length, rng), p.length,
                           static_cast<int32_t>(ranges[0].Draw(rng)),
                           static_cast<int32_t>(ranges[1].Draw(rng))};
        } else {
          Generic out;
          for (size_t i = 0; i < p.attrs.size(); ++i) {
            out.attrs.push_back(ranges[i].Draw(rng));
          }
          return out;
        }
      },
      like);
}

bool MatchesAny(const Dataset& alice, const Record& b, const MatchRule& rule) {
  for (const Record& a : alice.records()) {
    if (EvaluateMatch(a, b, rule)) return true;
  }
  return false;
}

uint64_t TrialSeed(uint64_t master, int64_t trial, int side) {
  return SplitMix64(SplitMix64(master) + 2 * static_cast<uint64_t>(trial) +
                    static_cast<uint64_t>(side));
}

using Extractor = std::function<std::vector<std::string>(const RunResult&)>;
using Tally = std::map<std::string, std::pair<int64_t, int64_t>>;

Tally RunTrials(const Dataset& alice, const NeighborPair& pair,
                const AuditConfig& cfg, const Extractor& extract) {
  const std::set<IdPair> truth =
      PlaintextJoin(alice, pair.bob, cfg.protocol.rule);
  const unsigned workers = std::max(1U, std::thread::hardware_concurrency());
  Tally total;
  std::mutex mu;
  std::exception_ptr failure;
  auto work = [&](unsigned w) {
    Tally local;
    try {
      for (int64_t t = w; t < cfg.trials; t += workers) {
        for (int side = 0; side < 2; ++side) {
          ProtocolConfig pc = cfg.protocol;
          pc.mode = ExecMode::kFast;
          pc.seed = TrialSeed(cfg.seed, t, side);
          const RunResult run = RunProtocol(
              alice, side == 0 ? pair.bob : pair.bob_prime, pc, &truth);
          for (const std::string& e : extract(run)) {
            auto& slot = local[e];
            (side == 0 ? slot.first : slot.second)++;
          }
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!failure) failure = std::current_exception();
      return;
    }
    std::lock_guard<std::mutex> lock(mu);
    for (const auto& [e, c] : local) {
      total[e].first += c.first;
      total[e].second += c.second;
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return total;
}

// Bonferroni over both directions of every event.
void Judge(const Tally& tally, const AuditConfig& cfg, double eps, double delta,
           AuditVerdict& v) {
  v.eps = eps;
  v.delta_used = delta;
  v.trials = cfg.trials;
  v.events = static_cast<int64_t>(tally.size());
  if (tally.empty()) return;
  const double conf =
      1 - (1 - cfg.confidence) / (2.0 * static_cast<double>(tally.size()));
  v.eps_hat = 0;
  bool have_worst = false;
  for (const auto& [event, c] : tally) {
    EventEstimate est;
    est.event = event;
    est.hits = c.first;
    est.hits_prime = c.second;
    est.p = ClopperPearson(c.first, cfg.trials, conf);
    est.p_prime = ClopperPearson(c.second, cfg.trials, conf);
    for (int dir = 0; dir < 2; ++dir) {
      const Interval& p = dir == 0 ? est.p : est.p_prime;
      const Interval& q = dir == 0 ? est.p_prime : est.p;
      if (p.lo > std::exp(eps) * q.hi + delta) v.violated = true;
      double bound = 0;
      if (p.lo > delta) {
        bound =
            q.hi > 0 ? std::max(0.0, std::log((p.lo - delta) / q.hi)) : kInf;
      }
      if (!have_worst || bound > v.eps_hat) {
        v.eps_hat = bound;
        v.worst = est;
        have_worst = true;
      }
    }
  }
}

// Law of one announced count, indexed from `offset`.
struct CountLaw {
  int64_t offset = 0;
  std::vector<double> pmf;
  int64_t atom = std::numeric_limits<int64_t>::min();
  double At(int64_t v) const {
    const int64_t i = v - offset;
    if (i < 0 || i >= static_cast<int64_t>(pmf.size())) return 0;
    return pmf[static_cast<size_t>(i)];
  }
};

// Tail beyond this many scale lengths is below 1e-32.
constexpr double kTailScales = 75;

// Counts above `top` carry less than 1e-32 of either law.
int64_t CountTop(const ProtocolConfig& cfg, int64_t real) {
  const int sens = Sensitivity(cfg.blocking);
  if (cfg.protocol == ProtocolKind::kLp) {
    const TruncatedLaplace t =
        TruncatedLaplace::Create(cfg.eps_b, cfg.delta_b, sens, cfg.center);
    return real + static_cast<int64_t>(std::ceil(
                      t.law().center() + kTailScales / t.law().alpha()));
  }
  const ShiftedGeometric g = ZeroMeanDiscreteLaplace(cfg.eps_b, sens);
  return real + static_cast<int64_t>(std::ceil(kTailScales / g.alpha()));
}

bool Noisy(const ProtocolConfig& cfg) {
  return cfg.noise && (cfg.protocol == ProtocolKind::kLp ||
                       cfg.protocol == ProtocolKind::kLp2);
}

// Law of Bob's announced count for `real` records, up to `top`.
CountLaw BobCountLaw(const ProtocolConfig& cfg, int64_t real, int64_t top) {
  const int sens = Sensitivity(cfg.blocking);
  CountLaw law;
  if (!Noisy(cfg)) {
    law.offset = real;
    law.pmf = {1.0};
    return law;
  }
  if (cfg.protocol == ProtocolKind::kLp) {
    const TruncatedLaplace t =
        TruncatedLaplace::Create(cfg.eps_b, cfg.delta_b, sens, cfg.center);
    const ShiftedGeometric& g = t.law();
    law.offset = real;
    law.atom = real;
    law.pmf.push_back(g.CdfBelow(1));
    for (int64_t v = real + 1; v <= top; ++v)
      law.pmf.push_back(g.Pmf(v - real));
    return law;
  }
  const ShiftedGeometric g = ZeroMeanDiscreteLaplace(cfg.eps_b, sens);
  law.offset = 0;
  law.atom = 0;
  law.pmf.push_back(g.CdfBelow(-real + 1));
  for (int64_t v = 1; v <= top; ++v) law.pmf.push_back(g.Pmf(v - real));
  return law;
}

std::string DescribeRecord(const Record& r) {
  return std::visit(
      [&](const auto& p) -> std::string {
        using P = std::decay_t<decltype(p)>;
        std::string s = "#" + std::to_string(r.id.value);
        if constexpr (std::is_same_v<P, GridPoint>) {
          s += " (" + std::to_string(p.lat_e6) + "," +
               std::to_string(p.lon_e6) + " d" + std::to_string(p.day) + " h" +
               std::to_string(p.hour) + ")";
        } else if constexpr (std::is_same_v<P, BitVector>) {
          s += " (d" + std::to_string(p.day) + " brand " +
               std::to_string(p.brand) + ")";
        }
        return s;
      },
      r.payload);
}

}  // namespace

NeighborPair GenNeighbor(const Dataset& alice, const Dataset& bob,
                         const MatchRule& rule, const BlockingFn& domain,
                         Rng& rng, const NeighborOptions& opts) {
  std::set<RecordId> matched;
  for (const IdPair& p : PlaintextJoin(alice, bob, rule))
    matched.insert(p.second);
  std::vector<size_t> candidates;
  uint64_t max_id = 0;
  for (size_t i = 0; i < bob.size(); ++i) {
    max_id = std::max(max_id, bob.at(i).id.value);
    if (matched.count(bob.at(i).id) == 0) candidates.push_back(i);
  }
  if (candidates.empty()) {
    throw Error(ErrorCode::kNoNonMatchingRecord,
                "every record of D_B matches some record of D_A");
  }
  const Record out = bob.at(candidates[UniformBelow(rng, candidates.size())]);
  const std::vector<uint32_t> out_bins = AssignRecord(domain, out);
  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    Record in{RecordId{max_id + 1}, RandomPayload(domain, alice, bob, rng)};
    if (in.payload == out.payload || MatchesAny(alice, in, rule)) continue;
    if (opts.require_bin_change) {
      std::vector<uint32_t> in_bins;
      try {
        in_bins = AssignRecord(domain, in);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kOutOfDomain) continue;
        throw;
      }
      if (in_bins == out_bins) continue;
    }
    std::vector<Record> records;
    for (const Record& r : bob.records()) {
      if (r.id != out.id) records.push_back(r);
    }
    records.push_back(in);
    NeighborPair pair{bob, Dataset(bob.owner(), std::move(records)), out, in};
    if (!IsNeighbor(alice, pair.bob, pair.bob_prime, rule)) {
      throw Error(ErrorCode::kConstructionFailed,
                  "swap changed the join output");
    }
    return pair;
  }
  throw Error(ErrorCode::kNoFreshReplacement,
              "no fresh non-matching replacement found");
}

bool IsNeighbor(const Dataset& alice, const Dataset& bob,
                const Dataset& bob_prime, const MatchRule& rule) {
  if (bob.size() != bob_prime.size()) return false;
  std::vector<const Record*> only_b, only_bp;
  for (const Record& r : bob.records()) {
    const Record* o = bob_prime.Find(r.id);
    if (o == nullptr || !(*o == r)) only_b.push_back(&r);
  }
  for (const Record& r : bob_prime.records()) {
    const Record* o = bob.Find(r.id);
    if (o == nullptr || !(*o == r)) only_bp.push_back(&r);
  }
  if (only_b.size() != 1 || only_bp.size() != 1) return false;
  if (MatchesAny(alice, *only_b[0], rule) ||
      MatchesAny(alice, *only_bp[0], rule)) {
    return false;
  }
  return PlaintextJoin(alice, bob, rule) ==
         PlaintextJoin(alice, bob_prime, rule);
}

std::vector<uint32_t> AffectedBins(const BlockingFn& fn,
                                   const NeighborPair& pair) {
  const std::vector<int64_t> c = AssignBins(fn, pair.bob).Counts();
  const std::vector<int64_t> cp = AssignBins(fn, pair.bob_prime).Counts();
  std::vector<uint32_t> out;
  for (uint32_t i = 0; i < c.size(); ++i) {
    if (c[i] != cp[i]) out.push_back(i);
  }
  return out;
}

AuditVerdict AuditBinCounts(const Dataset& alice, const NeighborPair& pair,
                            const AuditConfig& cfg) {
  if (cfg.trials < cfg.min_trials) {
    throw Error(ErrorCode::kInsufficientTrials,
                std::to_string(cfg.trials) + " trials, need at least " +
                    std::to_string(cfg.min_trials));
  }
  ValidateConfig(cfg.protocol);
  AuditVerdict v;
  v.protocol = std::string(ProtocolName(cfg.protocol.protocol));
  v.mode = "black-box";
  v.bins = AffectedBins(cfg.protocol.blocking, pair);
  const uint32_t k = NumBins(cfg.protocol.blocking);
  const std::vector<uint32_t> bins = v.bins;
  const Extractor extract = [&bins, k](const RunResult& run) {
    const ViewFeatures view = ExtractView(run.alice_transcript);
    if (view.bob_counts.size() != k) {
      throw Error(ErrorCode::kInvalidParams,
                  "protocol announces no per-bin counts");
    }
    std::vector<std::string> events;
    std::string joint = "joint";
    for (uint32_t b : bins) {
      const std::string v = std::to_string(view.bob_counts[b]);
      events.push_back("bin" + std::to_string(b) + "=" + v);
      joint += ":" + v;
    }
    if (bins.size() > 1) events.push_back(joint);
    return events;
  };
  const Tally tally = RunTrials(alice, pair, cfg, extract);
  Judge(tally, cfg, cfg.protocol.eps_b, cfg.protocol.delta_b, v);
  v.instance = "swap " + DescribeRecord(pair.swapped_out) + " -> " +
               DescribeRecord(pair.swapped_in);
  return v;
}

AuditVerdict WhiteBoxBinCounts(const NeighborPair& pair,
                               const ProtocolConfig& cfg) {
  ValidateConfig(cfg);
  if (cfg.protocol != ProtocolKind::kLp && cfg.protocol != ProtocolKind::kLp2 &&
      cfg.protocol != ProtocolKind::kBlocking) {
    throw Error(ErrorCode::kInvalidParams,
                "white-box audit covers lp, lp2 and blocking");
  }
  AuditVerdict v;
  v.protocol = std::string(ProtocolName(cfg.protocol));
  v.mode = "white-box";
  v.eps = cfg.eps_b;
  v.delta_used = cfg.delta_b;
  v.bins = AffectedBins(cfg.blocking, pair);
  if (v.bins.size() > 3) {
    throw Error(ErrorCode::kInvalidParams, "more than three affected bins");
  }
  const std::vector<int64_t> c = AssignBins(cfg.blocking, pair.bob).Counts();
  const std::vector<int64_t> cp =
      AssignBins(cfg.blocking, pair.bob_prime).Counts();

  struct Axis {
    CountLaw p, q;
    int64_t lo = 0, hi = 0;
  };
  std::vector<Axis> axes;
  for (uint32_t b : v.bins) {
    const int64_t top = Noisy(cfg) ? CountTop(cfg, std::max(c[b], cp[b])) : 0;
    Axis a{BobCountLaw(cfg, c[b], top), BobCountLaw(cfg, cp[b], top)};
    a.lo = std::min(a.p.offset, a.q.offset);
    a.hi = std::max(a.p.offset + static_cast<int64_t>(a.p.pmf.size()),
                    a.q.offset + static_cast<int64_t>(a.q.pmf.size()));
    axes.push_back(std::move(a));
  }

  // The joint law factorizes, so the joint extreme ratio is the sum of the
  // per-bin extremes.
  double up = 0, down = 0;
  for (const Axis& a : axes) {
    double best_up = -kInf, best_down = -kInf;
    for (int64_t x = a.lo; x < a.hi; ++x) {
      if (x == a.p.atom || x == a.q.atom) continue;
      const double p = a.p.At(x), q = a.q.At(x);
      if (p == 0 && q == 0) continue;
      best_up = std::max(best_up, p == 0   ? -kInf
                                  : q == 0 ? kInf
                                           : std::log(p / q));
      best_down = std::max(best_down, q == 0   ? -kInf
                                      : p == 0 ? kInf
                                               : std::log(q / p));
    }
    up += best_up == -kInf ? 0 : best_up;
    down += best_down == -kInf ? 0 : best_down;
  }
  v.log_ratio = std::max(up, down);

  const double e = std::exp(cfg.eps_b);
  double hs_pq = 0, hs_qp = 0;
  std::vector<int64_t> x(axes.size());
  for (size_t i = 0; i < axes.size(); ++i) x[i] = axes[i].lo;
  while (!axes.empty()) {
    double p = 1, q = 1;
    for (size_t i = 0; i < axes.size(); ++i) {
      p *= axes[i].p.At(x[i]);
      q *= axes[i].q.At(x[i]);
    }
    hs_pq += std::max(0.0, p - e * q);
    hs_qp += std::max(0.0, q - e * p);
    size_t i = 0;
    while (i < axes.size() && ++x[i] >= axes[i].hi) {
      x[i] = axes[i].lo;
      ++i;
    }
    if (i == axes.size()) break;
  }
  v.hockey_stick = std::max(hs_pq, hs_qp);
  v.eps_hat = v.log_ratio;
  v.violated = v.log_ratio > cfg.eps_b + 1e-9 ||
               v.hockey_stick > cfg.delta_b * (1 + 1e-9);
  v.instance = "swap " + DescribeRecord(pair.swapped_out) + " -> " +
               DescribeRecord(pair.swapped_in);
  return v;
}

AuditInstance MakeGridAuditInstance(uint64_t seed) {
  AuditInstance inst;
  GridTimeBlocking g;
  g.grid.rows = 1;
  g.grid.cols = 2;
  g.hour_slots = 1;
  inst.blocking = g;
  const EuclideanThreshold rule{1000};
  inst.rule = rule;
  Rng rng = MakeRng(seed, 7);
  auto point = [&](int col) {
    GridPoint p;
    p.lat_e6 = g.grid.lat_min_e6 + 1000 +
               static_cast<int64_t>(UniformBelow(rng, g.grid.cell_e6 - 2000));
    p.lon_e6 = g.grid.lon_min_e6 + col * g.grid.cell_e6 + 1000 +
               static_cast<int64_t>(UniformBelow(rng, g.grid.cell_e6 - 2000));
    p.hour = static_cast<int32_t>(UniformBelow(rng, 24));
    return p;
  };
  std::vector<Record> a, b;
  for (uint64_t i = 1; i <= 4; ++i) {
    a.push_back({RecordId{i}, point(static_cast<int>(i % 2))});
  }
  // Two near copies of Alice's records and two fresh ones.
  for (uint64_t i = 1; i <= 2; ++i) {
    GridPoint p = std::get<GridPoint>(a[i - 1].payload);
    p.lat_e6 += 300;
    b.push_back({RecordId{i}, p});
  }
  for (uint64_t i = 3; i <= 4; ++i) {
    b.push_back({RecordId{i}, point(static_cast<int>(i % 2))});
  }
  inst.alice = Dataset(Party::kAlice, std::move(a));
  const Dataset bob(Party::kBob, std::move(b));
  inst.pair = GenNeighbor(inst.alice, bob, inst.rule, inst.blocking, rng);
  inst.description = "1x2 grid, 4+4 records, swap " +
                     DescribeRecord(inst.pair.swapped_out) + " -> " +
                     DescribeRecord(inst.pair.swapped_in);
  return inst;
}

Lp2Counterexample RunLp2Counterexample(double eps, double delta, int n1,
                                       int64_t trials, uint64_t seed,
                                       int64_t min_trials) {
  if (!(eps > 0) || !(delta > 0) || !(delta < 1)) {
    throw Error(ErrorCode::kInvalidParams, "need eps > 0 and delta in (0, 1)");
  }
  const DayBrandBlocking blocking{1, 2};
  const int sens = Sensitivity(blocking);
  const ShiftedGeometric law = ZeroMeanDiscreteLaplace(eps, sens);
  Lp2Counterexample cx;
  cx.n1 = n1;
  cx.p = law.Pmf(0);
  const double p_sens = std::pow(cx.p, sens);
  if (!(delta < p_sens / (2 * std::exp(eps)))) {
    throw Error(ErrorCode::kPreconditionViolated,
                "delta too large for the counterexample");
  }
  if (n1 < 1 || !(n1 < p_sens / (std::exp(eps) * delta) - 1)) {
    throw Error(ErrorCode::kPreconditionViolated, "n1 out of range");
  }

  AuditInstance& inst = cx.instance;
  inst.blocking = blocking;
  inst.rule = HammingThreshold{5};
  constexpr int kBits = 50;
  const uint64_t ones = (1ULL << kBits) - 1;
  std::vector<Record> a, b, bp;
  for (int i = 0; i < n1; ++i) {
    a.push_back(
        {RecordId{static_cast<uint64_t>(i + 1)}, BitVector{0, kBits, 0, 1}});
  }
  const Record b_star{RecordId{1}, BitVector{0, kBits, 0, 0}};
  const Record b_star_prime{RecordId{static_cast<uint64_t>(n1 + 2)},
                            BitVector{ones, kBits, 0, 1}};
  b.push_back(b_star);
  bp.push_back(b_star_prime);
  for (int i = 0; i < n1; ++i) {
    const Record r{RecordId{static_cast<uint64_t>(i + 2)},
                   BitVector{1ULL << i, kBits, 0, 1}};
    b.push_back(r);
    bp.push_back(r);
  }
  inst.alice = Dataset(Party::kAlice, std::move(a));
  inst.pair =
      NeighborPair{Dataset(Party::kBob, std::move(b)),
                   Dataset(Party::kBob, std::move(bp)), b_star, b_star_prime};
  if (!IsNeighbor(inst.alice, inst.pair.bob, inst.pair.bob_prime, inst.rule)) {
    throw Error(ErrorCode::kConstructionFailed, "not a neighbor pair");
  }
  inst.description = "day/brand 1x2, n1=" + std::to_string(n1) +
                     ", b* alone in bin 0 moves into bin 1";

  // Alice keeps at least one bin-1 record unless her noise is <= -n1.
  const ShiftedGeometric alice_law = ZeroMeanDiscreteLaplace(eps, sens);
  const double keep = 1 - alice_law.CdfBelow(-n1 + 1);
  cx.view = law.Pmf(0) * law.Pmf(0) * keep;
  cx.view_prime = law.Pmf(1) * law.Pmf(-1) / (n1 + 1) * keep;
  cx.analytic_violation = cx.view > std::exp(eps) * cx.view_prime + delta;

  AuditConfig cfg;
  cfg.protocol.protocol = ProtocolKind::kLp2;
  cfg.protocol.rule = inst.rule;
  cfg.protocol.blocking = inst.blocking;
  cfg.protocol.eps_a = cfg.protocol.eps_b = eps;
  cfg.protocol.delta_a = cfg.protocol.delta_b = delta;
  cfg.trials = trials;
  cfg.min_trials = min_trials;
  cfg.seed = seed;
  if (cfg.trials < cfg.min_trials) {
    throw Error(ErrorCode::kInsufficientTrials, std::to_string(trials) +
                                                    " trials, need at least " +
                                                    std::to_string(min_trials));
  }
  const Extractor extract = [n1](const RunResult& run) {
    const ViewFeatures view = ExtractView(run.alice_transcript);
    std::vector<std::string> events;
    if (view.bob_counts != std::vector<int64_t>{1, n1}) return events;
    std::set<uint64_t> seen;
    for (const IdPair& p : view.output) seen.insert(p.second.value);
    for (int i = 0; i < n1; ++i) {
      if (seen.count(static_cast<uint64_t>(i + 2)) == 0) return events;
    }
    events.push_back("view*");
    return events;
  };
  const Tally tally = RunTrials(inst.alice, inst.pair, cfg, extract);
  AuditVerdict& v = cx.empirical;
  v.protocol = "lp2";
  v.mode = "black-box";
  v.bins = {0, 1};
  Judge(tally, cfg, eps, delta, v);
  v.instance = inst.description;
  return cx;
}

RrRatioVerdict AuditRrRatio(uint32_t k, uint32_t top, double eps) {
  RrRatioVerdict v;
  v.max_ratio = RrProbabilityRatio(RrOffsetProbs(k, top, eps));
  v.bound = std::exp(eps);
  v.violated = v.max_ratio > v.bound * (1 + 1e-12);
  return v;
}

std::string VerdictToJson(const AuditVerdict& v) {
  auto num = [](double x) -> nlohmann::json {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
  };
  nlohmann::json j;
  j["protocol"] = v.protocol;
  j["mode"] = v.mode;
  j["eps"] = v.eps;
  j["delta"] = v.delta_used;
  j["trials"] = v.trials;
  j["eps_hat"] = num(v.eps_hat);
  j["violated"] = v.violated;
  j["instance"] = v.instance;
  j["bins"] = v.bins;
  j["events"] = v.events;
  if (v.mode == "white-box") {
    j["log_ratio"] = num(v.log_ratio);
    j["hockey_stick"] = v.hockey_stick;
  } else if (!v.worst.event.empty()) {
    j["worst_event"] = {{"event", v.worst.event},
                        {"hits", v.worst.hits},
                        {"hits_prime", v.worst.hits_prime},
                        {"p", {v.worst.p.lo, v.worst.p.hi}},
                        {"p_prime", {v.worst.p_prime.lo, v.worst.p_prime.hi}}};
  }
  return j.dump(2);
}

}  // namespace prlink

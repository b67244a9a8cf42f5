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
#include "prlink/blocking.h"

#include <algorithm>
#include <array>
#include <string>

namespace prlink {
namespace {

constexpr std::array<std::pair<int, int>, 9> kNeighborOffsets = {{
    {0, 0},
    {-1, -1},
    {-1, 0},
    {-1, 1},
    {0, -1},
    {0, 1},
    {1, -1},
    {1, 0},
    {1, 1},
}};

void Validate(const BlockingFn& fn) {
  std::visit(
      [](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        bool ok = true;
        if constexpr (std::is_same_v<F, GridTimeBlocking>) {
          ok = f.grid.cell_e6 > 0 && f.grid.rows > 0 && f.grid.cols > 0 &&
               f.days > 0 && f.hour_slots > 0 && f.hour_slots <= 24 &&
               24 % f.hour_slots == 0;
        } else if constexpr (std::is_same_v<F, DayBrandBlocking>) {
          ok = f.days > 0 && f.brands > 0;
        } else {
          ok = f.k > 0 && f.window > 0 && f.window <= f.k && f.replicas > 0 &&
               f.replicas <= f.k;
        }
        if (!ok) throw Error(ErrorCode::kInvalidParams, "blocking parameters");
      },
      fn);
}

// Index of the cell holding offset x from the grid origin, or -1.
int64_t CellIndex(int64_t x, int64_t cell, int32_t cells) {
  if (x < 0 || x > cell * cells) return -1;
  return x == 0 ? 0 : (x - 1) / cell;
}

uint32_t GridBin(const GridTimeBlocking& f, int32_t day, int32_t slot,
                 int64_t row, int64_t col) {
  const int64_t per_slot = int64_t{f.grid.rows} * f.grid.cols;
  return static_cast<uint32_t>((int64_t{day} * f.hour_slots + slot) * per_slot +
                               row * f.grid.cols + col);
}

}  // namespace

uint32_t NumBins(const BlockingFn& fn) {
  Validate(fn);
  return std::visit(
      [](const auto& f) -> uint32_t {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, GridTimeBlocking>) {
          return static_cast<uint32_t>(int64_t{f.days} * f.hour_slots *
                                       f.grid.rows * f.grid.cols);
        } else if constexpr (std::is_same_v<F, DayBrandBlocking>) {
          return static_cast<uint32_t>(f.days * f.brands);
        } else {
          return f.k;
        }
      },
      fn);
}

uint32_t MaxBinsPerRecord(const BlockingFn& fn) {
  Validate(fn);
  if (const auto* m = std::get_if<ModHashBlocking>(&fn)) return m->replicas;
  return 1;
}

int Sensitivity(const BlockingFn& fn) {
  return 2 * static_cast<int>(MaxBinsPerRecord(fn));
}

uint32_t MaxPartners(const BlockingFn& fn) {
  Validate(fn);
  return std::visit(
      [](const auto& f) -> uint32_t {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, GridTimeBlocking>) {
          return static_cast<uint32_t>(std::min(f.grid.rows, 3) *
                                       std::min(f.grid.cols, 3));
        } else if constexpr (std::is_same_v<F, DayBrandBlocking>) {
          return 1;
        } else {
          return f.window;
        }
      },
      fn);
}

uint64_t BlockKey(const Payload& p) {
  return std::visit(
      [](const auto& v) -> uint64_t {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, GridPoint>) {
          return SplitMix64((uint64_t{static_cast<uint32_t>(v.day)} << 32) |
                            static_cast<uint32_t>(v.hour));
        } else if constexpr (std::is_same_v<V, BitVector>) {
          return SplitMix64((uint64_t{static_cast<uint32_t>(v.day)} << 32) |
                            static_cast<uint32_t>(v.brand)) ^
                 0x632be59bd9b4e019ULL;
        } else {
          uint64_t h = 0x8cb92ba72f3d8dd7ULL;
          for (int64_t a : v.attrs)
            h = SplitMix64(h ^ static_cast<uint64_t>(a));
          return h;
        }
      },
      p);
}

std::vector<uint32_t> AssignRecord(const BlockingFn& fn, const Record& r) {
  Validate(fn);
  return std::visit(
      [&](const auto& f) -> std::vector<uint32_t> {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, GridTimeBlocking>) {
          const auto* p = std::get_if<GridPoint>(&r.payload);
          if (p == nullptr) {
            throw Error(ErrorCode::kIncompatiblePayload, "grid needs points");
          }
          const int64_t row = CellIndex(p->lat_e6 - f.grid.lat_min_e6,
                                        f.grid.cell_e6, f.grid.rows);
          const int64_t col = CellIndex(p->lon_e6 - f.grid.lon_min_e6,
                                        f.grid.cell_e6, f.grid.cols);
          if (row < 0 || col < 0 || p->day < 0 || p->day >= f.days ||
              p->hour < 0 || p->hour >= 24) {
            throw Error(
                ErrorCode::kOutOfDomain,
                "record " + std::to_string(r.id.value) + " outside the grid");
          }
          return {GridBin(f, p->day, p->hour * f.hour_slots / 24, row, col)};
        } else if constexpr (std::is_same_v<F, DayBrandBlocking>) {
          const auto* v = std::get_if<BitVector>(&r.payload);
          if (v == nullptr) {
            throw Error(ErrorCode::kIncompatiblePayload,
                        "day-brand blocking needs bit vectors");
          }
          if (v->day < 0 || v->day >= f.days || v->brand < 0 ||
              v->brand >= f.brands) {
            throw Error(ErrorCode::kOutOfDomain,
                        "record " + std::to_string(r.id.value) +
                            " outside day/brand range");
          }
          return {static_cast<uint32_t>(v->day * f.brands + v->brand)};
        } else {
          const uint64_t key = BlockKey(r.payload);
          std::vector<uint32_t> bins;
          for (uint32_t i = 0; i < f.replicas; ++i) {
            const uint64_t h = SplitMix64(key ^ SplitMix64(f.key + i));
            bins.push_back(static_cast<uint32_t>(h % f.k));
          }
          std::sort(bins.begin(), bins.end());
          bins.erase(std::unique(bins.begin(), bins.end()), bins.end());
          return bins;
        }
      },
      fn);
}

std::vector<BinPair> Strategy(const BlockingFn& fn) {
  Validate(fn);
  std::vector<BinPair> out;
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, GridTimeBlocking>) {
          for (const auto& [dr, dc] : kNeighborOffsets) {
            for (int32_t day = 0; day < f.days; ++day) {
              for (int32_t slot = 0; slot < f.hour_slots; ++slot) {
                for (int32_t r = 0; r < f.grid.rows; ++r) {
                  for (int32_t c = 0; c < f.grid.cols; ++c) {
                    const int32_t r2 = r + dr;
                    const int32_t c2 = c + dc;
                    if (r2 < 0 || r2 >= f.grid.rows || c2 < 0 ||
                        c2 >= f.grid.cols) {
                      continue;
                    }
                    out.push_back({GridBin(f, day, slot, r, c),
                                   GridBin(f, day, slot, r2, c2)});
                  }
                }
              }
            }
          }
        } else if constexpr (std::is_same_v<F, DayBrandBlocking>) {
          const uint32_t k = static_cast<uint32_t>(f.days * f.brands);
          for (uint32_t i = 0; i < k; ++i) out.push_back({i, i});
        } else {
          for (uint32_t j = 0; j < f.window; ++j) {
            for (uint32_t i = 0; i < f.k; ++i) {
              out.push_back({i, (i + j) % f.k});
            }
          }
        }
      },
      fn);
  return out;
}

std::vector<int64_t> BinnedDataset::Counts() const {
  std::vector<int64_t> c(bins.size());
  for (size_t i = 0; i < bins.size(); ++i) {
    c[i] = static_cast<int64_t>(bins[i].size());
  }
  return c;
}

BinnedDataset AssignBins(const BlockingFn& fn, const Dataset& d) {
  BinnedDataset out;
  out.bins.resize(NumBins(fn));
  out.real_records = d.size();
  std::vector<const Record*> sorted;
  sorted.reserve(d.size());
  for (const Record& r : d.records()) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const Record* x, const Record* y) { return x->id < y->id; });
  for (const Record* r : sorted) {
    for (uint32_t b : AssignRecord(fn, *r)) out.bins[b].push_back(*r);
  }
  return out;
}

int64_t CandidateCost(const BinnedDataset& a, const BinnedDataset& b,
                      std::span<const BinPair> strategy) {
  int64_t cost = 0;
  for (const BinPair& p : strategy) {
    cost += static_cast<int64_t>(a.bins.at(p.a).size()) *
            static_cast<int64_t>(b.bins.at(p.b).size());
  }
  return cost;
}

std::set<IdPair> BlockedJoin(const BinnedDataset& a, const BinnedDataset& b,
                             std::span<const BinPair> strategy,
                             const MatchRule& rule) {
  std::set<IdPair> out;
  for (const BinPair& p : strategy) {
    for (const Record& x : a.bins.at(p.a)) {
      for (const Record& y : b.bins.at(p.b)) {
        if (EvaluateMatch(x, y, rule)) out.emplace(x.id, y.id);
      }
    }
  }
  return out;
}

namespace {

struct Placement {
  std::vector<Record> alice;
  Record b;
  Record bprime;
  MatchRule rule;
};

Placement PlaceGrid(const GridTimeBlocking& f, const LshAttackSetup& s) {
  const GridSpec& g = f.grid;
  if (s.theta_e6 >= g.cell_e6) {
    throw Error(ErrorCode::kConstructionFailed, "theta exceeds cell size");
  }
  // Cell X is (0, 0) in slot 0 of day 0; Y must not neighbor X.
  int32_t y_day = 0, y_slot = 0, y_row = g.rows - 1, y_col = g.cols - 1;
  if (g.rows < 3 && g.cols < 3) {
    y_row = 0;
    y_col = 0;
    if (f.hour_slots > 1) {
      y_slot = 1;
    } else if (f.days > 1) {
      y_day = 1;
    } else {
      throw Error(ErrorCode::kConstructionFailed,
                  "grid too small for two independent bins");
    }
  }
  const int32_t hours_per_slot = 24 / f.hour_slots;
  auto point = [&](int32_t day, int32_t slot, int32_t row, int32_t col,
                   int64_t dlat, int64_t dlon) {
    return GridPoint{g.lat_min_e6 + row * g.cell_e6 + dlat,
                     g.lon_min_e6 + col * g.cell_e6 + dlon, day,
                     slot * hours_per_slot};
  };
  Placement pl;
  pl.rule = EuclideanThreshold{s.theta_e6};
  uint64_t next = 0;
  for (int i = 0; i < s.alice_at_b; ++i) {
    pl.alice.push_back({RecordId{next++}, point(0, 0, 0, 0, 1 + i, 1), {}});
  }
  for (int i = 0; i < s.alice_at_bprime; ++i) {
    pl.alice.push_back(
        {RecordId{next++}, point(y_day, y_slot, y_row, y_col, 1 + i, 1), {}});
  }
  const int64_t far = g.cell_e6 - 1;
  pl.b = {RecordId{0}, point(0, 0, 0, 0, far, far), {}};
  pl.bprime =
      s.same_bin
          ? Record{RecordId{1}, point(0, 0, 0, 0, far - 1, far), {}}
          : Record{
                RecordId{1}, point(y_day, y_slot, y_row, y_col, far, far), {}};
  return pl;
}

Placement PlaceDayBrand(const DayBrandBlocking& f, const LshAttackSetup& s) {
  if (s.bit_length <= s.hamming_theta || s.bit_length > 64) {
    throw Error(ErrorCode::kConstructionFailed, "bit length must exceed theta");
  }
  int32_t y_day = 0, y_brand = 1;
  if (f.brands < 2) {
    if (f.days < 2) {
      throw Error(ErrorCode::kConstructionFailed, "need two bins");
    }
    y_day = 1;
    y_brand = 0;
  }
  const uint64_t ones =
      s.bit_length == 64 ? ~uint64_t{0} : (uint64_t{1} << s.bit_length) - 1;
  Placement pl;
  pl.rule = HammingThreshold{s.hamming_theta};
  uint64_t next = 0;
  for (int i = 0; i < s.alice_at_b; ++i) {
    pl.alice.push_back(
        {RecordId{next++}, BitVector{0, s.bit_length, 0, 0}, {}});
  }
  for (int i = 0; i < s.alice_at_bprime; ++i) {
    pl.alice.push_back(
        {RecordId{next++}, BitVector{0, s.bit_length, y_day, y_brand}, {}});
  }
  pl.b = {RecordId{0}, BitVector{ones, s.bit_length, 0, 0}, {}};
  pl.bprime =
      s.same_bin
          ? Record{RecordId{1}, BitVector{ones ^ 1, s.bit_length, 0, 0}, {}}
          : Record{
                RecordId{1}, BitVector{ones, s.bit_length, y_day, y_brand}, {}};
  return pl;
}

Placement PlaceModHash(const ModHashBlocking& f, const LshAttackSetup& s) {
  const BlockingFn fn = f;
  auto bins_of = [&](int64_t v) {
    return AssignRecord(fn, Record{RecordId{0}, Generic{{v}}, {}});
  };
  // Alice bins whose records are compared with a Bob record in `bins`.
  auto partners = [&](const std::vector<uint32_t>& bins) {
    std::vector<uint32_t> out;
    for (uint32_t b : bins) {
      for (uint32_t j = 0; j < f.window; ++j)
        out.push_back((b + f.k - j) % f.k);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };
  const std::vector<uint32_t> bx = bins_of(0);
  const std::vector<uint32_t> px = partners(bx);
  int64_t vy = -1;
  for (int64_t v = 1; v < 100000 && !s.same_bin; ++v) {
    std::vector<uint32_t> py = partners(bins_of(v));
    std::vector<uint32_t> common;
    std::set_intersection(px.begin(), px.end(), py.begin(), py.end(),
                          std::back_inserter(common));
    if (common.empty()) {
      vy = v;
      break;
    }
  }
  if (!s.same_bin && vy < 0) {
    throw Error(ErrorCode::kConstructionFailed,
                "no two hash bins with disjoint partners");
  }
  // Alice values whose bins equal those of the target but differ in value.
  auto fill = [&](int64_t target, int count, int64_t& cursor,
                  std::vector<Record>& out, uint64_t& next) {
    const std::vector<uint32_t> want = bins_of(target);
    for (int found = 0; found < count; ++cursor) {
      if (cursor > 10000000) {
        throw Error(ErrorCode::kConstructionFailed, "hash search exhausted");
      }
      if (cursor == 0 || cursor == vy || bins_of(cursor) != want) continue;
      out.push_back({RecordId{next++}, Generic{{cursor}}, {}});
      ++found;
    }
  };
  Placement pl;
  pl.rule = ExactEquality{};
  uint64_t next = 0;
  int64_t cursor = 1;
  fill(0, s.alice_at_b, cursor, pl.alice, next);
  pl.b = {RecordId{0}, Generic{{0}}, {}};
  if (s.same_bin) {
    int64_t v = cursor;
    while (bins_of(v) != bx) ++v;
    pl.bprime = {RecordId{1}, Generic{{v}}, {}};
    cursor = v + 1;
  } else {
    int64_t c2 = 1;
    fill(vy, s.alice_at_bprime, c2, pl.alice, next);
    pl.bprime = {RecordId{1}, Generic{{vy}}, {}};
    return pl;
  }
  int64_t c2 = cursor;
  fill(0, s.alice_at_bprime, c2, pl.alice, next);
  return pl;
}

}  // namespace

LshAttackReport LshAttackDemo(const BlockingFn& fn,
                              const LshAttackSetup& setup) {
  if (setup.alice_at_b < 0 || setup.alice_at_bprime < 0) {
    throw Error(ErrorCode::kInvalidParams, "negative record counts");
  }
  Placement pl = std::visit(
      [&](const auto& f) -> Placement {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, GridTimeBlocking>) {
          return PlaceGrid(f, setup);
        } else if constexpr (std::is_same_v<F, DayBrandBlocking>) {
          return PlaceDayBrand(f, setup);
        } else {
          return PlaceModHash(f, setup);
        }
      },
      fn);
  LshAttackReport rep;
  rep.rule = pl.rule;
  rep.alice = Dataset(Party::kAlice, pl.alice);
  rep.bob = Dataset(Party::kBob, {pl.b});
  rep.bob_neighbor = Dataset(Party::kBob, {pl.bprime});
  for (const Record& a : rep.alice.records()) {
    if (EvaluateMatch(a, pl.b, pl.rule) ||
        EvaluateMatch(a, pl.bprime, pl.rule)) {
      throw Error(ErrorCode::kConstructionFailed,
                  "swapped record matches an Alice record");
    }
  }
  rep.bin_b = AssignRecord(fn, pl.b).front();
  rep.bin_bprime = AssignRecord(fn, pl.bprime).front();
  const std::vector<BinPair> strategy = Strategy(fn);
  const BinnedDataset a = AssignBins(fn, rep.alice);
  rep.cost_b = CandidateCost(a, AssignBins(fn, rep.bob), strategy);
  rep.cost_bprime =
      CandidateCost(a, AssignBins(fn, rep.bob_neighbor), strategy);
  rep.difference = rep.cost_b - rep.cost_bprime;
  rep.joins_equal = PlaintextJoin(rep.alice, rep.bob, rep.rule) ==
                    PlaintextJoin(rep.alice, rep.bob_neighbor, rep.rule);
  return rep;
}

}  // namespace prlink

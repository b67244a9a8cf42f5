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

#include <algorithm>
#include <numeric>
#include <vector>

namespace prlink {
namespace {

int64_t UniformIn(Rng& rng, int64_t lo, int64_t hi) {
  return lo + static_cast<int64_t>(
                  UniformBelow(rng, static_cast<uint64_t>(hi - lo + 1)));
}

uint64_t RandomBitsOf(Rng& rng, int32_t bits) {
  const uint64_t v = rng();
  return bits >= 64 ? v : v & ((uint64_t{1} << bits) - 1);
}

}  // namespace

GeneratedData GenTaxi(const TaxiConfig& cfg) {
  if (cfg.days < 1 || cfg.per_day < 1 || cfg.theta_e6 < 0) {
    throw Error(ErrorCode::kInvalidParams, "bad taxi generator settings");
  }
  const int64_t lat_lo = cfg.lat_min_e6 + cfg.theta_e6;
  const int64_t lat_hi = cfg.lat_max_e6 - cfg.theta_e6;
  const int64_t lon_lo = cfg.lon_min_e6 + cfg.theta_e6;
  const int64_t lon_hi = cfg.lon_max_e6 - cfg.theta_e6;
  if (lat_lo > lat_hi || lon_lo > lon_hi) {
    throw Error(ErrorCode::kInvalidParams, "theta exceeds the bounding box");
  }
  Rng rng = MakeRng(cfg.seed, 0x7a71);
  const int64_t n = cfg.per_day * cfg.days;
  std::vector<Record> a;
  std::vector<Record> b;
  a.reserve(n);
  b.reserve(n);
  for (int64_t i = 0; i < n; ++i) {
    GridPoint p;
    p.lat_e6 = UniformIn(rng, lat_lo, lat_hi);
    p.lon_e6 = UniformIn(rng, lon_lo, lon_hi);
    p.day = static_cast<int32_t>(i / cfg.per_day);
    p.hour = static_cast<int32_t>(UniformBelow(rng, 24));
    GridPoint q = p;
    q.lat_e6 += UniformIn(rng, -cfg.theta_e6, cfg.theta_e6);
    q.lon_e6 += UniformIn(rng, -cfg.theta_e6, cfg.theta_e6);
    const RecordId id{static_cast<uint64_t>(i + 1)};
    a.push_back(Record{id, p});
    b.push_back(Record{id, q});
  }
  GeneratedData g;
  g.alice = Dataset(Party::kAlice, std::move(a));
  g.bob = Dataset(Party::kBob, std::move(b));
  g.rule = EuclideanThreshold{cfg.theta_e6};
  GridTimeBlocking blocking = cfg.blocking;
  blocking.days = std::max(blocking.days, cfg.days);
  g.blocking = blocking;
  g.truth = PlaintextJoin(g.alice, g.bob, g.rule);
  return g;
}

GeneratedData GenAb(const AbConfig& cfg) {
  if (cfg.days < 1 || cfg.per_day < 1 || cfg.bits < 1 || cfg.bits > 64 ||
      cfg.theta < 0 || cfg.theta > cfg.bits || cfg.brands < 1 ||
      !(cfg.dup_rate >= 0 && cfg.dup_rate <= 1)) {
    throw Error(ErrorCode::kInvalidParams, "bad product generator settings");
  }
  Rng rng = MakeRng(cfg.seed, 0xab);
  const int64_t n = cfg.per_day * cfg.days;
  std::vector<Record> a;
  a.reserve(n);
  for (int64_t i = 0; i < n; ++i) {
    BitVector v;
    v.bits = RandomBitsOf(rng, cfg.bits);
    v.length = cfg.bits;
    v.day = static_cast<int32_t>(i / cfg.per_day);
    v.brand = static_cast<int32_t>(UniformBelow(rng, cfg.brands));
    a.push_back(Record{RecordId{static_cast<uint64_t>(i + 1)}, v});
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const int64_t dups = std::llround(cfg.dup_rate * static_cast<double>(n));
  std::vector<Record> b;
  b.reserve(n);
  std::vector<int> positions(cfg.bits);
  std::iota(positions.begin(), positions.end(), 0);
  for (int64_t i = 0; i < n; ++i) {
    BitVector v;
    if (i < dups) {
      v = std::get<BitVector>(a[order[i]].payload);
      const int flips = static_cast<int>(UniformBelow(rng, cfg.theta + 1));
      for (int f = 0; f < flips; ++f) {
        const size_t j = f + UniformBelow(rng, cfg.bits - f);
        std::swap(positions[f], positions[j]);
        v.bits ^= uint64_t{1} << positions[f];
      }
    } else {
      v.bits = RandomBitsOf(rng, cfg.bits);
      v.length = cfg.bits;
      v.day = static_cast<int32_t>(UniformBelow(rng, cfg.days));
      v.brand = static_cast<int32_t>(UniformBelow(rng, cfg.brands));
    }
    b.push_back(Record{RecordId{static_cast<uint64_t>(i + 1)}, v});
  }
  GeneratedData g;
  g.alice = Dataset(Party::kAlice, std::move(a));
  g.bob = Dataset(Party::kBob, std::move(b));
  g.rule = HammingThreshold{cfg.theta};
  g.blocking = DayBrandBlocking{cfg.days, cfg.brands};
  g.truth = PlaintextJoin(g.alice, g.bob, g.rule);
  return g;
}

}  // namespace prlink

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
#ifndef PRLINK_BLOCKING_H_
#define PRLINK_BLOCKING_H_

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "prlink/record.h"

namespace prlink {

// Square cells anchored at the south-west corner of the box. Cells are
// half-open towards the lower index: a point on an edge belongs to the
// lower-index cell.
struct GridSpec {
  int64_t lat_min_e6 = 40711720;
  int64_t lon_min_e6 = -74006600;
  int64_t cell_e6 = 5000;
  int32_t rows = 16;
  int32_t cols = 16;
};

// Bin = (day * hour_slots + slot) * rows * cols + row * cols + col, where
// slot = hour * hour_slots / 24. Alice's bin is paired with the 9 same-slot
// neighbor cells of Bob.
struct GridTimeBlocking {
  GridSpec grid;
  int32_t days = 1;
  int32_t hour_slots = 24;
};

// Bin = day * brands + brand, identity pairing.
struct DayBrandBlocking {
  int32_t days = 1;
  int32_t brands = 16;
};

// Keyed hash of the record's blocking attributes into k bins. Each record
// lands in up to `replicas` bins; Alice's bin i is paired with Bob's bins
// (i + j) mod k for j < window.
struct ModHashBlocking {
  uint32_t k = 16;
  uint32_t window = 1;
  uint32_t replicas = 1;
  uint64_t key = 0;
};

using BlockingFn =
    std::variant<GridTimeBlocking, DayBrandBlocking, ModHashBlocking>;

struct BinPair {
  uint32_t a = 0;
  uint32_t b = 0;
  auto operator<=>(const BinPair&) const = default;
};

uint32_t NumBins(const BlockingFn& fn);
uint32_t MaxBinsPerRecord(const BlockingFn& fn);

// ΔB: a single record swap changes at most this many bin counts by one.
int Sensitivity(const BlockingFn& fn);

// c_b: the largest number of partner bins any bin has in the strategy.
uint32_t MaxPartners(const BlockingFn& fn);

// Sorted, distinct bins of a real record. Throws kOutOfDomain or
// kIncompatiblePayload.
std::vector<uint32_t> AssignRecord(const BlockingFn& fn, const Record& r);

// The strategy B^S in processing order: all identity pairs first, then each
// further offset in turn.
std::vector<BinPair> Strategy(const BlockingFn& fn);

// Blocking attributes hashed by ModHashBlocking.
uint64_t BlockKey(const Payload& p);

struct BinnedDataset {
  std::vector<std::vector<Record>> bins;
  size_t real_records = 0;

  uint32_t k() const { return static_cast<uint32_t>(bins.size()); }
  std::vector<int64_t> Counts() const;
};

// Bins are kept in id order.
BinnedDataset AssignBins(const BlockingFn& fn, const Dataset& d);

// Σ over strategy pairs of |B_i(A)| * |B_j(B)|.
int64_t CandidateCost(const BinnedDataset& a, const BinnedDataset& b,
                      std::span<const BinPair> strategy);

// Matching pairs among the candidate pairs of a blocking run without noise.
std::set<IdPair> BlockedJoin(const BinnedDataset& a, const BinnedDataset& b,
                             std::span<const BinPair> strategy,
                             const MatchRule& rule);

struct LshAttackSetup {
  int alice_at_b = 5;
  int alice_at_bprime = 2;
  bool same_bin = false;
  int64_t theta_e6 = 1000;
  int32_t hamming_theta = 5;
  int32_t bit_length = 50;
};

// Two neighboring Bob datasets with identical joins whose candidate costs
// differ by |B_H(b)(D_A)| - |B_H(b')(D_A)|.
struct LshAttackReport {
  Dataset alice;
  Dataset bob;
  Dataset bob_neighbor;
  MatchRule rule;
  uint32_t bin_b = 0;
  uint32_t bin_bprime = 0;
  int64_t cost_b = 0;
  int64_t cost_bprime = 0;
  int64_t difference = 0;
  bool joins_equal = false;
};

// Throws kConstructionFailed if the domain cannot host the construction.
LshAttackReport LshAttackDemo(const BlockingFn& fn,
                              const LshAttackSetup& setup);

}  // namespace prlink

#endif  // PRLINK_BLOCKING_H_

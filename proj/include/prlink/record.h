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
#ifndef PRLINK_RECORD_H_
#define PRLINK_RECORD_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "prlink/common.h"

namespace prlink {

// Location and pickup time. Coordinates are degrees scaled by 10^6.
struct GridPoint {
  int64_t lat_e6 = 0;
  int64_t lon_e6 = 0;
  int32_t day = 0;
  int32_t hour = 0;
  bool operator==(const GridPoint&) const = default;
};

// Fixed-length boolean vector of up to 64 bits plus its blocking attributes.
struct BitVector {
  uint64_t bits = 0;
  int32_t length = 0;
  int32_t day = 0;
  int32_t brand = 0;
  bool operator==(const BitVector&) const = default;
};

struct Generic {
  std::vector<int64_t> attrs;
  bool operator==(const Generic&) const = default;
};

using Payload = std::variant<GridPoint, BitVector, Generic>;

enum class RecordKind : uint8_t { kReal = 0, kDummy = 1 };

struct Record {
  RecordId id;
  Payload payload;
  RecordKind kind = RecordKind::kReal;

  bool is_dummy() const { return kind == RecordKind::kDummy; }
  bool operator==(const Record&) const = default;
};

class Dataset {
 public:
  Dataset() = default;
  // Throws kInvalidDataset on duplicate ids, dummy records or mixed payload
  // variants.
  Dataset(Party owner, std::vector<Record> records);

  Party owner() const { return owner_; }
  std::span<const Record> records() const { return records_; }
  size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const Record* Find(RecordId id) const;
  const Record& at(size_t i) const { return records_[i]; }

 private:
  Party owner_ = Party::kAlice;
  std::vector<Record> records_;
  std::unordered_map<RecordId, size_t> index_;
};

// Squared Euclidean distance on (lat, lon) within threshold; day and hour must
// agree.
struct EuclideanThreshold {
  int64_t theta_e6 = 1000;
};

// Hamming distance within threshold; day and brand must agree.
struct HammingThreshold {
  int32_t theta = 5;
};

struct ExactEquality {};

class MatchRule;

struct Conjunctive {
  std::vector<MatchRule> clauses;
};

class MatchRule {
 public:
  using Variant = std::variant<EuclideanThreshold, HammingThreshold,
                               ExactEquality, Conjunctive>;

  MatchRule() : rule_(ExactEquality{}) {}
  MatchRule(EuclideanThreshold r) : rule_(r) {}
  MatchRule(HammingThreshold r) : rule_(r) {}
  MatchRule(ExactEquality r) : rule_(r) {}
  MatchRule(Conjunctive r) : rule_(std::move(r)) {}

  const Variant& get() const { return rule_; }

 private:
  Variant rule_;
};

// m(a, b). Dummies never match. Throws kIncompatiblePayload when the rule
// does not apply to the payload variants.
bool EvaluateMatch(const Record& a, const Record& b, const MatchRule& rule);

using IdPair = std::pair<RecordId, RecordId>;

enum class Provenance : uint8_t { kCompare = 0, kPlainMatch = 1, kPsi = 2 };

class MatchOutput {
 public:
  // Returns false if the pair was already present; the first provenance wins.
  bool Add(const IdPair& pair, Provenance provenance);
  bool Contains(const IdPair& pair) const { return pairs_.count(pair) > 0; }
  size_t size() const { return pairs_.size(); }
  std::set<IdPair> Pairs() const;
  const std::map<IdPair, Provenance>& entries() const { return pairs_; }

 private:
  std::map<IdPair, Provenance> pairs_;
};

struct RecallResult {
  double value = 1.0;
  bool undefined = false;
};

// |output ∩ truth| / |truth|; an empty truth set yields 1.0 flagged undefined.
RecallResult Recall(const std::set<IdPair>& output,
                    const std::set<IdPair>& truth);

// Attributes every match under the rule must agree on, as one key; nullopt
// for rules without such attributes.
std::optional<uint64_t> PartitionKey(const Record& r, const MatchRule& rule);

// Exhaustive join D_A ⋈ D_B under the rule.
std::set<IdPair> PlaintextJoin(const Dataset& a, const Dataset& b,
                               const MatchRule& rule);

// Delimited text with a header line naming the variant, e.g.
//   # prlink-dataset v1 variant=grid
//   id,lat_e6,lon_e6,day,hour
// or
//   # prlink-dataset v1 variant=bits length=50
//   id,bits_hex,day,brand
Dataset ReadDataset(const std::string& path, Party owner);
void WriteDataset(const std::string& path, const Dataset& dataset);

}  // namespace prlink

#endif  // PRLINK_RECORD_H_

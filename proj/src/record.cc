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
#include "prlink/record.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

namespace prlink {
namespace {

template <typename T>
const T& As(const Record& r) {
  const T* p = std::get_if<T>(&r.payload);
  if (p == nullptr) {
    throw Error(ErrorCode::kIncompatiblePayload,
                "rule does not apply to payload of record " +
                    std::to_string(r.id.value));
  }
  return *p;
}

bool Matches(const Record& a, const Record& b, const MatchRule& rule) {
  return std::visit(
      [&](const auto& r) -> bool {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, EuclideanThreshold>) {
          const GridPoint& x = As<GridPoint>(a);
          const GridPoint& y = As<GridPoint>(b);
          if (x.day != y.day || x.hour != y.hour) return false;
          const int64_t dl = x.lat_e6 - y.lat_e6;
          const int64_t dn = x.lon_e6 - y.lon_e6;
          return dl * dl + dn * dn <= r.theta_e6 * r.theta_e6;
        } else if constexpr (std::is_same_v<R, HammingThreshold>) {
          const BitVector& x = As<BitVector>(a);
          const BitVector& y = As<BitVector>(b);
          if (x.length != y.length) {
            throw Error(ErrorCode::kIncompatiblePayload,
                        "bit vectors of different length");
          }
          if (x.day != y.day || x.brand != y.brand) return false;
          return std::popcount(x.bits ^ y.bits) <= r.theta;
        } else if constexpr (std::is_same_v<R, ExactEquality>) {
          if (a.payload.index() != b.payload.index()) {
            throw Error(ErrorCode::kIncompatiblePayload,
                        "payload variants differ");
          }
          return a.payload == b.payload;
        } else {
          for (const MatchRule& clause : r.clauses) {
            if (!Matches(a, b, clause)) return false;
          }
          return true;
        }
      },
      rule.get());
}

// Attributes every match under the rule must agree on; used to partition the
// exhaustive join.
std::optional<uint64_t> EqualityKey(const Record& r, const MatchRule& rule) {
  return std::visit(
      [&](const auto& m) -> std::optional<uint64_t> {
        using R = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<R, EuclideanThreshold>) {
          const GridPoint& p = As<GridPoint>(r);
          return (static_cast<uint64_t>(static_cast<uint32_t>(p.day)) << 32) |
                 static_cast<uint32_t>(p.hour);
        } else if constexpr (std::is_same_v<R, HammingThreshold>) {
          const BitVector& v = As<BitVector>(r);
          return SplitMix64((static_cast<uint64_t>(v.length) << 48) ^
                            (static_cast<uint64_t>(v.day) << 24) ^
                            static_cast<uint64_t>(v.brand));
        } else {
          return std::nullopt;
        }
      },
      rule.get());
}

std::vector<std::string> Split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

template <typename T>
T ParseInt(const std::string& s, int base = 10) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kParseError, "bad integer '" + s + "'");
  }
  return v;
}

}  // namespace

Dataset::Dataset(Party owner, std::vector<Record> records)
    : owner_(owner), records_(std::move(records)) {
  index_.reserve(records_.size());
  for (size_t i = 0; i < records_.size(); ++i) {
    const Record& r = records_[i];
    if (r.is_dummy() || IsDummyId(r.id)) {
      throw Error(ErrorCode::kInvalidDataset,
                  "datasets hold real records only");
    }
    if (r.payload.index() != records_[0].payload.index()) {
      throw Error(ErrorCode::kInvalidDataset, "mixed payload variants");
    }
    if (!index_.emplace(r.id, i).second) {
      throw Error(ErrorCode::kInvalidDataset,
                  "duplicate id " + std::to_string(r.id.value));
    }
  }
}

const Record* Dataset::Find(RecordId id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

bool EvaluateMatch(const Record& a, const Record& b, const MatchRule& rule) {
  if (a.is_dummy() || b.is_dummy()) return false;
  return Matches(a, b, rule);
}

bool MatchOutput::Add(const IdPair& pair, Provenance provenance) {
  return pairs_.emplace(pair, provenance).second;
}

std::set<IdPair> MatchOutput::Pairs() const {
  std::set<IdPair> out;
  for (const auto& [pair, unused] : pairs_) out.insert(out.end(), pair);
  return out;
}

RecallResult Recall(const std::set<IdPair>& output,
                    const std::set<IdPair>& truth) {
  if (truth.empty()) return {1.0, true};
  size_t hit = 0;
  for (const IdPair& p : truth) hit += output.count(p);
  return {static_cast<double>(hit) / static_cast<double>(truth.size()), false};
}

std::optional<uint64_t> PartitionKey(const Record& r, const MatchRule& rule) {
  return EqualityKey(r, rule);
}

std::set<IdPair> PlaintextJoin(const Dataset& a, const Dataset& b,
                               const MatchRule& rule) {
  std::set<IdPair> out;
  if (a.empty() || b.empty()) return out;
  if (!EqualityKey(b.at(0), rule).has_value()) {
    for (const Record& x : a.records()) {
      for (const Record& y : b.records()) {
        if (EvaluateMatch(x, y, rule)) out.emplace(x.id, y.id);
      }
    }
    return out;
  }
  std::unordered_map<uint64_t, std::vector<const Record*>> parts;
  for (const Record& y : b.records()) {
    parts[*EqualityKey(y, rule)].push_back(&y);
  }
  for (const Record& x : a.records()) {
    auto it = parts.find(*EqualityKey(x, rule));
    if (it == parts.end()) continue;
    for (const Record* y : it->second) {
      if (EvaluateMatch(x, *y, rule)) out.emplace(x.id, y->id);
    }
  }
  return out;
}

Dataset ReadDataset(const std::string& path, Party owner) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open " + path);
  std::string header;
  std::getline(in, header);
  const std::vector<std::string> tokens = Split(header, ' ');
  if (tokens.size() < 4 || tokens[0] != "#" || tokens[1] != "prlink-dataset" ||
      tokens[2] != "v1") {
    throw Error(ErrorCode::kParseError, "missing dataset header in " + path);
  }
  std::string variant;
  int32_t length = 0;
  for (size_t i = 3; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string::npos) continue;
    const std::string key = tokens[i].substr(0, eq);
    const std::string value = tokens[i].substr(eq + 1);
    if (key == "variant") variant = value;
    if (key == "length") length = ParseInt<int32_t>(value);
  }
  std::string columns;
  std::getline(in, columns);
  const bool grid = variant == "grid";
  if (grid && columns != "id,lat_e6,lon_e6,day,hour") {
    throw Error(ErrorCode::kParseError, "unexpected columns: " + columns);
  }
  if (variant == "bits") {
    if (columns != "id,bits_hex,day,brand") {
      throw Error(ErrorCode::kParseError, "unexpected columns: " + columns);
    }
    if (length <= 0 || length > 64) {
      throw Error(ErrorCode::kParseError, "bit length must be in [1, 64]");
    }
  } else if (!grid) {
    throw Error(ErrorCode::kParseError, "unknown variant '" + variant + "'");
  }
  std::vector<Record> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = Split(line, ',');
    Record r;
    if (grid) {
      if (f.size() != 5) throw Error(ErrorCode::kParseError, "row: " + line);
      r.id = RecordId{ParseInt<uint64_t>(f[0])};
      r.payload = GridPoint{ParseInt<int64_t>(f[1]), ParseInt<int64_t>(f[2]),
                            ParseInt<int32_t>(f[3]), ParseInt<int32_t>(f[4])};
    } else {
      if (f.size() != 4) throw Error(ErrorCode::kParseError, "row: " + line);
      r.id = RecordId{ParseInt<uint64_t>(f[0])};
      r.payload = BitVector{ParseInt<uint64_t>(f[1], 16), length,
                            ParseInt<int32_t>(f[2]), ParseInt<int32_t>(f[3])};
    }
    records.push_back(std::move(r));
  }
  return Dataset(owner, std::move(records));
}

void WriteDataset(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kParseError, "cannot write " + path);
  if (dataset.empty() ||
      std::holds_alternative<GridPoint>(dataset.at(0).payload)) {
    out << "# prlink-dataset v1 variant=grid\n"
        << "id,lat_e6,lon_e6,day,hour\n";
    for (const Record& r : dataset.records()) {
      const GridPoint& p = std::get<GridPoint>(r.payload);
      out << r.id.value << ',' << p.lat_e6 << ',' << p.lon_e6 << ',' << p.day
          << ',' << p.hour << '\n';
    }
    return;
  }
  if (!std::holds_alternative<BitVector>(dataset.at(0).payload)) {
    throw Error(ErrorCode::kIncompatiblePayload,
                "only grid and bit-vector datasets have a file format");
  }
  out << "# prlink-dataset v1 variant=bits length="
      << std::get<BitVector>(dataset.at(0).payload).length << '\n'
      << "id,bits_hex,day,brand\n";
  for (const Record& r : dataset.records()) {
    const BitVector& v = std::get<BitVector>(r.payload);
    out << r.id.value << ',' << std::hex << v.bits << std::dec << ',' << v.day
        << ',' << v.brand << '\n';
  }
}

}  // namespace prlink

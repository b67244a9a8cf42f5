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
#ifndef PRLINK_MESSAGES_H_
#define PRLINK_MESSAGES_H_

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prlink/paillier.h"
#include "prlink/record.h"
#include "prlink/transport.h"

namespace prlink {

class ByteWriter {
 public:
  void U8(uint8_t v) { buf_.push_back(v); }
  void U32(uint32_t v);
  void U64(uint64_t v);
  void I64(int64_t v) { U64(static_cast<uint64_t>(v)); }
  void Bytes(std::span<const uint8_t> b);
  void String(const std::string& s);
  void Big(const mpz_class& v);
  void Rec(const Record& r);

  const std::vector<uint8_t>& data() const { return buf_; }
  std::vector<uint8_t> Take() { return std::move(buf_); }

 private:
  std::vector<uint8_t> buf_;
};

// Throws kFramingError on malformed input.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}
  uint8_t U8();
  uint32_t U32();
  uint64_t U64();
  int64_t I64() { return static_cast<int64_t>(U64()); }
  std::vector<uint8_t> Bytes();
  std::string String();
  mpz_class Big();
  Record Rec();
  bool done() const { return pos_ == data_.size(); }
  void ExpectDone() const;

 private:
  void Need(size_t n) const;
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

struct BinCountsAnnounce {
  std::vector<int64_t> counts;
};

enum class BatchMode : uint8_t { kPlain = 0, kEncrypted = 1 };

struct EncRecordBatch {
  uint32_t bin_a = 0;
  uint32_t bin_b = 0;
  BatchMode mode = BatchMode::kPlain;
  struct Entry {
    uint64_t handle = 0;
    std::optional<Record> plain;
    std::vector<Ciphertext> enc;
  };
  std::vector<Entry> entries;
};

struct BlindedDistance {
  struct Entry {
    uint64_t handle_a = 0;
    uint64_t handle_b = 0;
    Ciphertext value;
  };
  std::vector<Entry> entries;
};

struct CompareVerdict {
  std::vector<bool> bits;
};

struct MatchAnnounce {
  struct Entry {
    uint64_t handle_a = 0;
    uint64_t handle_b = 0;
    Record record;
  };
  std::vector<Entry> entries;
};

struct OutputSync {
  bool final = false;
  std::vector<IdPair> pairs;
  std::vector<Record> revealed;
};

struct AbortMessage {
  std::string reason;
};

struct KeyAnnounce {
  mpz_class n;
};

struct OracleRelay {
  std::vector<mpz_class> values;
};

std::vector<uint8_t> Encode(const BinCountsAnnounce& m);
std::vector<uint8_t> Encode(const EncRecordBatch& m);
std::vector<uint8_t> Encode(const BlindedDistance& m);
std::vector<uint8_t> Encode(const CompareVerdict& m);
std::vector<uint8_t> Encode(const MatchAnnounce& m);
std::vector<uint8_t> Encode(const OutputSync& m);
std::vector<uint8_t> Encode(const AbortMessage& m);
std::vector<uint8_t> Encode(const KeyAnnounce& m);
std::vector<uint8_t> Encode(const OracleRelay& m);

BinCountsAnnounce DecodeBinCounts(std::span<const uint8_t> b);
EncRecordBatch DecodeEncRecordBatch(std::span<const uint8_t> b);
BlindedDistance DecodeBlindedDistance(std::span<const uint8_t> b);
CompareVerdict DecodeCompareVerdict(std::span<const uint8_t> b);
MatchAnnounce DecodeMatchAnnounce(std::span<const uint8_t> b);
OutputSync DecodeOutputSync(std::span<const uint8_t> b);
AbortMessage DecodeAbort(std::span<const uint8_t> b);
KeyAnnounce DecodeKeyAnnounce(std::span<const uint8_t> b);
OracleRelay DecodeOracleRelay(std::span<const uint8_t> b);

template <typename M>
constexpr MessageType TypeOf();
template <>
constexpr MessageType TypeOf<BinCountsAnnounce>() {
  return MessageType::kBinCountsAnnounce;
}
template <>
constexpr MessageType TypeOf<EncRecordBatch>() {
  return MessageType::kEncRecordBatch;
}
template <>
constexpr MessageType TypeOf<BlindedDistance>() {
  return MessageType::kBlindedDistance;
}
template <>
constexpr MessageType TypeOf<CompareVerdict>() {
  return MessageType::kCompareVerdict;
}
template <>
constexpr MessageType TypeOf<MatchAnnounce>() {
  return MessageType::kMatchAnnounce;
}
template <>
constexpr MessageType TypeOf<OutputSync>() {
  return MessageType::kOutputSync;
}
template <>
constexpr MessageType TypeOf<AbortMessage>() {
  return MessageType::kAbort;
}
template <>
constexpr MessageType TypeOf<KeyAnnounce>() {
  return MessageType::kKeyAnnounce;
}
template <>
constexpr MessageType TypeOf<OracleRelay>() {
  return MessageType::kOracleRelay;
}

template <typename M>
M Decode(std::span<const uint8_t> b);
template <>
inline BinCountsAnnounce Decode(std::span<const uint8_t> b) {
  return DecodeBinCounts(b);
}
template <>
inline EncRecordBatch Decode(std::span<const uint8_t> b) {
  return DecodeEncRecordBatch(b);
}
template <>
inline BlindedDistance Decode(std::span<const uint8_t> b) {
  return DecodeBlindedDistance(b);
}
template <>
inline CompareVerdict Decode(std::span<const uint8_t> b) {
  return DecodeCompareVerdict(b);
}
template <>
inline MatchAnnounce Decode(std::span<const uint8_t> b) {
  return DecodeMatchAnnounce(b);
}
template <>
inline OutputSync Decode(std::span<const uint8_t> b) {
  return DecodeOutputSync(b);
}
template <>
inline AbortMessage Decode(std::span<const uint8_t> b) {
  return DecodeAbort(b);
}
template <>
inline KeyAnnounce Decode(std::span<const uint8_t> b) {
  return DecodeKeyAnnounce(b);
}
template <>
inline OracleRelay Decode(std::span<const uint8_t> b) {
  return DecodeOracleRelay(b);
}

}  // namespace prlink

#endif  // PRLINK_MESSAGES_H_

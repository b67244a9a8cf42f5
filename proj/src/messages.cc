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
#include "prlink/messages.h"

namespace prlink {

void ByteWriter::U32(uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) buf_.push_back(static_cast<uint8_t>(v >> s));
}

void ByteWriter::U64(uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) buf_.push_back(static_cast<uint8_t>(v >> s));
}

void ByteWriter::Bytes(std::span<const uint8_t> b) {
  U32(static_cast<uint32_t>(b.size()));
  buf_.insert(buf_.end(), b.begin(), b.end());
}

void ByteWriter::String(const std::string& s) {
  Bytes(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(s.data()),
                                 s.size()));
}

void ByteWriter::Big(const mpz_class& v) {
  if (v < 0) throw Error(ErrorCode::kInvalidParams, "negative big integer");
  Bytes(ToBigEndian(v));
}

void ByteWriter::Rec(const Record& r) {
  U64(r.id.value);
  U8(static_cast<uint8_t>(r.kind));
  U8(static_cast<uint8_t>(r.payload.index()));
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GridPoint>) {
          I64(p.lat_e6);
          I64(p.lon_e6);
          U32(static_cast<uint32_t>(p.day));
          U32(static_cast<uint32_t>(p.hour));
        } else if constexpr (std::is_same_v<P, BitVector>) {
          U64(p.bits);
          U32(static_cast<uint32_t>(p.length));
          U32(static_cast<uint32_t>(p.day));
          U32(static_cast<uint32_t>(p.brand));
        } else {
          U32(static_cast<uint32_t>(p.attrs.size()));
          for (int64_t a : p.attrs) I64(a);
        }
      },
      r.payload);
}

void ByteReader::Need(size_t n) const {
  if (data_.size() - pos_ < n) {
    throw Error(ErrorCode::kFramingError, "payload truncated");
  }
}

void ByteReader::ExpectDone() const {
  if (!done()) throw Error(ErrorCode::kFramingError, "trailing payload bytes");
}

uint8_t ByteReader::U8() {
  Need(1);
  return data_[pos_++];
}

uint32_t ByteReader::U32() {
  Need(4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
  return v;
}

uint64_t ByteReader::U64() {
  Need(8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
  return v;
}

std::vector<uint8_t> ByteReader::Bytes() {
  const uint32_t n = U32();
  Need(n);
  std::vector<uint8_t> out(data_.begin() + pos_, data_.begin() + pos_ + n);
  pos_ += n;
  return out;
}

std::string ByteReader::String() {
  const std::vector<uint8_t> b = Bytes();
  return std::string(b.begin(), b.end());
}

mpz_class ByteReader::Big() { return FromBigEndian(Bytes()); }

Record ByteReader::Rec() {
  Record r;
  r.id = RecordId{U64()};
  const uint8_t kind = U8();
  if (kind > 1) throw Error(ErrorCode::kFramingError, "bad record kind");
  r.kind = static_cast<RecordKind>(kind);
  switch (U8()) {
    case 0: {
      GridPoint p;
      p.lat_e6 = I64();
      p.lon_e6 = I64();
      p.day = static_cast<int32_t>(U32());
      p.hour = static_cast<int32_t>(U32());
      r.payload = p;
      break;
    }
    case 1: {
      BitVector v;
      v.bits = U64();
      v.length = static_cast<int32_t>(U32());
      v.day = static_cast<int32_t>(U32());
      v.brand = static_cast<int32_t>(U32());
      r.payload = v;
      break;
    }
    case 2: {
      Generic g;
      const uint32_t n = U32();
      Need(size_t{n} * 8);
      for (uint32_t i = 0; i < n; ++i) g.attrs.push_back(I64());
      r.payload = g;
      break;
    }
    default:
      throw Error(ErrorCode::kFramingError, "bad payload variant");
  }
  return r;
}

std::vector<uint8_t> Encode(const BinCountsAnnounce& m) {
  ByteWriter w;
  w.U32(static_cast<uint32_t>(m.counts.size()));
  for (int64_t c : m.counts) w.I64(c);
  return w.Take();
}

BinCountsAnnounce DecodeBinCounts(std::span<const uint8_t> b) {
  ByteReader r(b);
  BinCountsAnnounce m;
  const uint32_t n = r.U32();
  for (uint32_t i = 0; i < n; ++i) m.counts.push_back(r.I64());
  r.ExpectDone();
  return m;
}

std::vector<uint8_t> Encode(const EncRecordBatch& m) {
  ByteWriter w;
  w.U32(m.bin_a);
  w.U32(m.bin_b);
  w.U8(static_cast<uint8_t>(m.mode));
  w.U32(static_cast<uint32_t>(m.entries.size()));
  for (const auto& e : m.entries) {
    w.U64(e.handle);
    if (m.mode == BatchMode::kPlain) {
      w.Rec(*e.plain);
    } else {
      w.U32(static_cast<uint32_t>(e.enc.size()));
      for (const Ciphertext& c : e.enc) w.Big(c.c);
    }
  }
  return w.Take();
}

EncRecordBatch DecodeEncRecordBatch(std::span<const uint8_t> b) {
  ByteReader r(b);
  EncRecordBatch m;
  m.bin_a = r.U32();
  m.bin_b = r.U32();
  const uint8_t mode = r.U8();
  if (mode > 1) throw Error(ErrorCode::kFramingError, "bad batch mode");
  m.mode = static_cast<BatchMode>(mode);
  const uint32_t n = r.U32();
  for (uint32_t i = 0; i < n; ++i) {
    EncRecordBatch::Entry e;
    e.handle = r.U64();
    if (m.mode == BatchMode::kPlain) {
      e.plain = r.Rec();
    } else {
      const uint32_t k = r.U32();
      for (uint32_t j = 0; j < k; ++j) e.enc.push_back(Ciphertext{r.Big()});
    }
    m.entries.push_back(std::move(e));
  }
  r.ExpectDone();
  return m;
}

std::vector<uint8_t> Encode(const BlindedDistance& m) {
  ByteWriter w;
  w.U32(static_cast<uint32_t>(m.entries.size()));
  for (const auto& e : m.entries) {
    w.U64(e.handle_a);
    w.U64(e.handle_b);
    w.Big(e.value.c);
  }
  return w.Take();
}

BlindedDistance DecodeBlindedDistance(std::span<const uint8_t> b) {
  ByteReader r(b);
  BlindedDistance m;
  const uint32_t n = r.U32();
  for (uint32_t i = 0; i < n; ++i) {
    BlindedDistance::Entry e;
    e.handle_a = r.U64();
    e.handle_b = r.U64();
    e.value.c = r.Big();
    m.entries.push_back(std::move(e));
  }
  r.ExpectDone();
  return m;
}

std::vector<uint8_t> Encode(const CompareVerdict& m) {
  ByteWriter w;
  w.U32(static_cast<uint32_t>(m.bits.size()));
  uint8_t acc = 0;
  for (size_t i = 0; i < m.bits.size(); ++i) {
    if (m.bits[i]) acc |= static_cast<uint8_t>(1u << (i % 8));
    if (i % 8 == 7) {
      w.U8(acc);
      acc = 0;
    }
  }
  if (m.bits.size() % 8 != 0) w.U8(acc);
  return w.Take();
}

CompareVerdict DecodeCompareVerdict(std::span<const uint8_t> b) {
  ByteReader r(b);
  CompareVerdict m;
  const uint32_t n = r.U32();
  if (b.size() - 4 < (size_t{n} + 7) / 8) {
    throw Error(ErrorCode::kFramingError, "verdict truncated");
  }
  m.bits.resize(n);
  uint8_t acc = 0;
  for (uint32_t i = 0; i < n; ++i) {
    if (i % 8 == 0) acc = r.U8();
    m.bits[i] = (acc >> (i % 8)) & 1;
  }
  r.ExpectDone();
  return m;
}

std::vector<uint8_t> Encode(const MatchAnnounce& m) {
  ByteWriter w;
  w.U32(static_cast<uint32_t>(m.entries.size()));
  for (const auto& e : m.entries) {
    w.U64(e.handle_a);
    w.U64(e.handle_b);
    w.Rec(e.record);
  }
  return w.Take();
}

MatchAnnounce DecodeMatchAnnounce(std::span<const uint8_t> b) {
  ByteReader r(b);
  MatchAnnounce m;
  const uint32_t n = r.U32();
  for (uint32_t i = 0; i < n; ++i) {
    MatchAnnounce::Entry e;
    e.handle_a = r.U64();
    e.handle_b = r.U64();
    e.record = r.Rec();
    m.entries.push_back(std::move(e));
  }
  r.ExpectDone();
  return m;
}

std::vector<uint8_t> Encode(const OutputSync& m) {
  ByteWriter w;
  w.U8(m.final ? 1 : 0);
  w.U32(static_cast<uint32_t>(m.pairs.size()));
  for (const IdPair& p : m.pairs) {
    w.U64(p.first.value);
    w.U64(p.second.value);
  }
  w.U32(static_cast<uint32_t>(m.revealed.size()));
  for (const Record& rec : m.revealed) w.Rec(rec);
  return w.Take();
}

OutputSync DecodeOutputSync(std::span<const uint8_t> b) {
  ByteReader r(b);
  OutputSync m;
  m.final = r.U8() != 0;
  const uint32_t n = r.U32();
  for (uint32_t i = 0; i < n; ++i) {
    const uint64_t a = r.U64();
    const uint64_t c = r.U64();
    m.pairs.emplace_back(RecordId{a}, RecordId{c});
  }
  const uint32_t k = r.U32();
  for (uint32_t i = 0; i < k; ++i) m.revealed.push_back(r.Rec());
  r.ExpectDone();
  return m;
}

std::vector<uint8_t> Encode(const AbortMessage& m) {
  ByteWriter w;
  w.String(m.reason);
  return w.Take();
}

AbortMessage DecodeAbort(std::span<const uint8_t> b) {
  ByteReader r(b);
  AbortMessage m{r.String()};
  r.ExpectDone();
  return m;
}

std::vector<uint8_t> Encode(const KeyAnnounce& m) {
  ByteWriter w;
  w.Big(m.n);
  return w.Take();
}

KeyAnnounce DecodeKeyAnnounce(std::span<const uint8_t> b) {
  ByteReader r(b);
  KeyAnnounce m{r.Big()};
  r.ExpectDone();
  return m;
}

std::vector<uint8_t> Encode(const OracleRelay& m) {
  ByteWriter w;
  w.U32(static_cast<uint32_t>(m.values.size()));
  for (const mpz_class& v : m.values) w.Big(v);
  return w.Take();
}

OracleRelay DecodeOracleRelay(std::span<const uint8_t> b) {
  ByteReader r(b);
  OracleRelay m;
  const uint32_t n = r.U32();
  for (uint32_t i = 0; i < n; ++i) m.values.push_back(r.Big());
  r.ExpectDone();
  return m;
}

}  // namespace prlink

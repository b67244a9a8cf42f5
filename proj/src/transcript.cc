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
#include "prlink/transcript.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace prlink {
namespace {

uint64_t Fnv1a(std::span<const uint8_t> data) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (uint8_t b : data) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

nlohmann::json Summary(const TranscriptEntry& e) {
  nlohmann::json s = nlohmann::json::object();
  switch (e.type) {
    case MessageType::kBinCountsAnnounce: {
      const auto m = DecodeBinCounts(e.payload);
      s["bins"] = m.counts.size();
      s["total"] =
          std::accumulate(m.counts.begin(), m.counts.end(), int64_t{0});
      break;
    }
    case MessageType::kEncRecordBatch: {
      const auto m = DecodeEncRecordBatch(e.payload);
      s["bin_a"] = m.bin_a;
      s["bin_b"] = m.bin_b;
      s["entries"] = m.entries.size();
      s["encrypted"] = m.mode == BatchMode::kEncrypted;
      break;
    }
    case MessageType::kBlindedDistance:
      s["entries"] = DecodeBlindedDistance(e.payload).entries.size();
      break;
    case MessageType::kCompareVerdict: {
      const auto m = DecodeCompareVerdict(e.payload);
      s["comparisons"] = m.bits.size();
      s["matches"] = std::count(m.bits.begin(), m.bits.end(), true);
      break;
    }
    case MessageType::kMatchAnnounce:
      s["entries"] = DecodeMatchAnnounce(e.payload).entries.size();
      break;
    case MessageType::kOutputSync: {
      const auto m = DecodeOutputSync(e.payload);
      s["final"] = m.final;
      s["pairs"] = m.pairs.size();
      s["revealed"] = m.revealed.size();
      break;
    }
    case MessageType::kAbort:
      s["reason"] = DecodeAbort(e.payload).reason;
      break;
    case MessageType::kKeyAnnounce:
      s["modulus_bytes"] = ToBigEndian(DecodeKeyAnnounce(e.payload).n).size();
      break;
    case MessageType::kOracleRelay:
      s["values"] = DecodeOracleRelay(e.payload).values.size();
      break;
  }
  return s;
}

}  // namespace

void Transcript::Append(Direction dir, MessageType type,
                        std::span<const uint8_t> payload) {
  entries_.push_back(
      TranscriptEntry{entries_.size(), dir, type,
                      std::vector<uint8_t>(payload.begin(), payload.end())});
}

std::string Transcript::DumpJsonLines() const {
  std::ostringstream out;
  for (const TranscriptEntry& e : entries_) {
    nlohmann::json j;
    j["seq"] = e.seq;
    j["party"] = PartyName(owner_);
    j["dir"] = e.dir == Direction::kSent ? "sent" : "received";
    j["type"] = MessageTypeName(e.type);
    j["size"] = e.payload.size();
    char hash[17];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(Fnv1a(e.payload)));
    j["fnv1a"] = hash;
    j["summary"] = Summary(e);
    out << j.dump() << '\n';
  }
  return out.str();
}

ViewFeatures ExtractView(const Transcript& t) {
  if (!t.complete()) {
    throw Error(ErrorCode::kIncompleteTranscript, "run did not finish");
  }
  ViewFeatures v;
  BinPair current;
  bool have_final = false;
  for (const TranscriptEntry& e : t.entries()) {
    switch (e.type) {
      case MessageType::kBinCountsAnnounce: {
        // Alice announces first, so a sent announcement is hers iff she owns
        // the transcript.
        const bool from_alice =
            (e.dir == Direction::kSent) == (t.owner() == Party::kAlice);
        (from_alice ? v.alice_counts : v.bob_counts) =
            DecodeBinCounts(e.payload).counts;
        break;
      }
      case MessageType::kEncRecordBatch: {
        const auto m = DecodeEncRecordBatch(e.payload);
        current = BinPair{m.bin_a, m.bin_b};
        break;
      }
      case MessageType::kCompareVerdict: {
        const int64_t n =
            static_cast<int64_t>(DecodeCompareVerdict(e.payload).bits.size());
        v.pair_counts[current] += n;
        v.comparisons += n;
        break;
      }
      case MessageType::kOutputSync: {
        const auto m = DecodeOutputSync(e.payload);
        if (m.final) {
          v.output = std::set<IdPair>(m.pairs.begin(), m.pairs.end());
          have_final = true;
        }
        break;
      }
      default:
        break;
    }
  }
  if (!have_final) {
    throw Error(ErrorCode::kIncompleteTranscript, "no final output sync");
  }
  return v;
}

void Endpoint::SendAbort(const std::string& reason) noexcept {
  try {
    Send(AbortMessage{reason});
  } catch (...) {
  }
}

Frame Endpoint::ReceiveFrame(MessageType expected) {
  Frame f = channel_.Recv();
  transcript_.Append(Direction::kReceived, f.type, f.payload);
  if (f.type == MessageType::kAbort) {
    throw Error(ErrorCode::kProtocolAbort,
                "peer aborted: " + DecodeAbort(f.payload).reason);
  }
  if (f.type != expected) {
    throw Error(ErrorCode::kFramingError,
                "expected " + std::string(MessageTypeName(expected)) +
                    ", got " + std::string(MessageTypeName(f.type)));
  }
  return f;
}

}  // namespace prlink

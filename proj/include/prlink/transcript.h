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
#ifndef PRLINK_TRANSCRIPT_H_
#define PRLINK_TRANSCRIPT_H_

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "prlink/blocking.h"
#include "prlink/messages.h"
#include "prlink/transport.h"

namespace prlink {

enum class Direction : uint8_t { kSent = 0, kReceived = 1 };

struct TranscriptEntry {
  uint64_t seq = 0;
  Direction dir = Direction::kSent;
  MessageType type = MessageType::kAbort;
  std::vector<uint8_t> payload;
};

// Append-only log of every frame one party sent or received.
class Transcript {
 public:
  explicit Transcript(Party owner = Party::kAlice) : owner_(owner) {}

  void Append(Direction dir, MessageType type,
              std::span<const uint8_t> payload);
  void MarkComplete() { complete_ = true; }

  Party owner() const { return owner_; }
  bool complete() const { return complete_; }
  std::span<const TranscriptEntry> entries() const { return entries_; }

  // One JSON object per entry with direction, type, size, payload hash and a
  // decoded summary.
  std::string DumpJsonLines() const;

 private:
  Party owner_;
  bool complete_ = false;
  std::vector<TranscriptEntry> entries_;
};

struct ViewFeatures {
  std::map<BinPair, int64_t> pair_counts;
  std::set<IdPair> output;
  int64_t comparisons = 0;
  std::vector<int64_t> alice_counts;
  std::vector<int64_t> bob_counts;
};

// Throws kIncompleteTranscript unless the run finished with a final output
// synchronization.
ViewFeatures ExtractView(const Transcript& t);

// A party's side of a channel; every frame goes through the transcript.
class Endpoint {
 public:
  Endpoint(Channel& channel, Transcript& transcript)
      : channel_(channel), transcript_(transcript) {}

  template <typename M>
  void Send(const M& m) {
    const std::vector<uint8_t> payload = Encode(m);
    transcript_.Append(Direction::kSent, TypeOf<M>(), payload);
    channel_.Send(TypeOf<M>(), payload);
  }

  // Throws kProtocolAbort when the peer aborted and kFramingError on an
  // unexpected message type.
  template <typename M>
  M Recv() {
    Frame f = ReceiveFrame(TypeOf<M>());
    return Decode<M>(f.payload);
  }

  // Best effort; never throws.
  void SendAbort(const std::string& reason) noexcept;

  Transcript& transcript() { return transcript_; }

 private:
  Frame ReceiveFrame(MessageType expected);

  Channel& channel_;
  Transcript& transcript_;
};

}  // namespace prlink

#endif  // PRLINK_TRANSCRIPT_H_

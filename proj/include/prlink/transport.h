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
#ifndef PRLINK_TRANSPORT_H_
#define PRLINK_TRANSPORT_H_

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prlink/common.h"

namespace prlink {

enum class MessageType : uint8_t {
  kBinCountsAnnounce = 1,
  kEncRecordBatch = 2,
  kBlindedDistance = 3,
  kCompareVerdict = 4,
  kMatchAnnounce = 5,
  kOutputSync = 6,
  kAbort = 7,
  kKeyAnnounce = 8,
  // Traffic of the simulated comparison functionality. It stands in for the
  // sub-protocol a real comparison backend would run and is not part of the
  // protocol view.
  kOracleRelay = 9,
};

std::string_view MessageTypeName(MessageType t);
bool IsKnownMessageType(uint8_t tag);

inline constexpr uint32_t kMaxFramePayload = 16u << 20;

struct Frame {
  MessageType type = MessageType::kAbort;
  std::vector<uint8_t> payload;
};

// 4-byte big-endian payload length, 1-byte type tag, payload.
std::vector<uint8_t> EncodeFrame(MessageType type,
                                 std::span<const uint8_t> payload);
// Throws kFramingError on short input, oversize length or unknown tag.
Frame DecodeFrame(std::span<const uint8_t> bytes);

class Channel {
 public:
  virtual ~Channel() = default;
  virtual void Send(MessageType type, std::span<const uint8_t> payload) = 0;
  // Blocks until a frame arrives. Throws kTimeout or kClosed.
  virtual Frame Recv() = 0;
  virtual void Close() = 0;
};

using Timeout = std::chrono::milliseconds;
inline constexpr Timeout kDefaultTimeout{120000};

// Two connected endpoints backed by in-memory queues.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> MakeInProcessPair(
    Timeout timeout = kDefaultTimeout);

class TcpListener {
 public:
  // Port 0 picks an ephemeral port.
  explicit TcpListener(uint16_t port, const std::string& host = "127.0.0.1");
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  uint16_t port() const { return port_; }
  std::unique_ptr<Channel> Accept(Timeout timeout = kDefaultTimeout);

 private:
  int fd_ = -1;
  uint16_t port_ = 0;
};

std::unique_ptr<Channel> TcpConnect(const std::string& host, uint16_t port,
                                    Timeout timeout = kDefaultTimeout);

// Two connected endpoints over a loopback socket.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>>
MakeTcpLoopbackPair(Timeout timeout = kDefaultTimeout);

}  // namespace prlink

#endif  // PRLINK_TRANSPORT_H_

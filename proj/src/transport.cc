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
#include "prlink/transport.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

namespace prlink {

std::string_view MessageTypeName(MessageType t) {
  switch (t) {
    case MessageType::kBinCountsAnnounce:
      return "BinCountsAnnounce";
    case MessageType::kEncRecordBatch:
      return "EncRecordBatch";
    case MessageType::kBlindedDistance:
      return "BlindedDistance";
    case MessageType::kCompareVerdict:
      return "CompareVerdict";
    case MessageType::kMatchAnnounce:
      return "MatchAnnounce";
    case MessageType::kOutputSync:
      return "OutputSync";
    case MessageType::kAbort:
      return "Abort";
    case MessageType::kKeyAnnounce:
      return "KeyAnnounce";
    case MessageType::kOracleRelay:
      return "OracleRelay";
  }
  return "Unknown";
}

bool IsKnownMessageType(uint8_t tag) { return tag >= 1 && tag <= 9; }

std::vector<uint8_t> EncodeFrame(MessageType type,
                                 std::span<const uint8_t> payload) {
  if (payload.size() > kMaxFramePayload) {
    throw Error(ErrorCode::kFramingError, "payload of " +
                                              std::to_string(payload.size()) +
                                              " bytes exceeds the frame cap");
  }
  const uint32_t n = static_cast<uint32_t>(payload.size());
  std::vector<uint8_t> out;
  out.reserve(5 + payload.size());
  out.push_back(static_cast<uint8_t>(n >> 24));
  out.push_back(static_cast<uint8_t>(n >> 16));
  out.push_back(static_cast<uint8_t>(n >> 8));
  out.push_back(static_cast<uint8_t>(n));
  out.push_back(static_cast<uint8_t>(type));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

namespace {

uint32_t ReadLength(const uint8_t* h) {
  return (uint32_t{h[0]} << 24) | (uint32_t{h[1]} << 16) |
         (uint32_t{h[2]} << 8) | uint32_t{h[3]};
}

void CheckHeader(uint32_t length, uint8_t tag) {
  if (length > kMaxFramePayload) {
    throw Error(ErrorCode::kFramingError, "frame length over cap");
  }
  if (!IsKnownMessageType(tag)) {
    throw Error(ErrorCode::kFramingError,
                "unknown message tag " + std::to_string(tag));
  }
}

}  // namespace

Frame DecodeFrame(std::span<const uint8_t> bytes) {
  if (bytes.size() < 5) {
    throw Error(ErrorCode::kFramingError, "truncated frame header");
  }
  const uint32_t n = ReadLength(bytes.data());
  CheckHeader(n, bytes[4]);
  if (bytes.size() != 5 + size_t{n}) {
    throw Error(ErrorCode::kFramingError, "frame length mismatch");
  }
  return Frame{static_cast<MessageType>(bytes[4]),
               std::vector<uint8_t>(bytes.begin() + 5, bytes.end())};
}

namespace {

struct SharedQueues {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::vector<uint8_t>> queue[2];  // queue[i] is read by side i
  bool closed[2] = {false, false};
};

class InProcessChannel : public Channel {
 public:
  InProcessChannel(std::shared_ptr<SharedQueues> q, int side, Timeout timeout)
      : q_(std::move(q)), side_(side), timeout_(timeout) {}
  ~InProcessChannel() override { Close(); }

  void Send(MessageType type, std::span<const uint8_t> payload) override {
    std::vector<uint8_t> bytes = EncodeFrame(type, payload);
    {
      std::lock_guard<std::mutex> lock(q_->mu);
      if (q_->closed[side_] || q_->closed[1 - side_]) {
        throw Error(ErrorCode::kClosed, "channel closed");
      }
      q_->queue[1 - side_].push_back(std::move(bytes));
    }
    q_->cv.notify_all();
  }

  Frame Recv() override {
    std::unique_lock<std::mutex> lock(q_->mu);
    auto& in = q_->queue[side_];
    const bool ready = q_->cv.wait_for(lock, timeout_, [&] {
      return !in.empty() || q_->closed[1 - side_] || q_->closed[side_];
    });
    if (!ready) throw Error(ErrorCode::kTimeout, "receive timed out");
    if (in.empty()) throw Error(ErrorCode::kClosed, "peer closed");
    std::vector<uint8_t> bytes = std::move(in.front());
    in.pop_front();
    lock.unlock();
    return DecodeFrame(bytes);
  }

  void Close() override {
    {
      std::lock_guard<std::mutex> lock(q_->mu);
      q_->closed[side_] = true;
    }
    q_->cv.notify_all();
  }

 private:
  std::shared_ptr<SharedQueues> q_;
  int side_;
  Timeout timeout_;
};

class TcpChannel : public Channel {
 public:
  TcpChannel(int fd, Timeout timeout) : fd_(fd), timeout_(timeout) {
    int one = 1;
    setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  ~TcpChannel() override { Close(); }

  void Send(MessageType type, std::span<const uint8_t> payload) override {
    const std::vector<uint8_t> bytes = EncodeFrame(type, payload);
    if (fd_ < 0) throw Error(ErrorCode::kClosed, "socket closed");
    size_t off = 0;
    while (off < bytes.size()) {
      const ssize_t w =
          ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (w < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::kClosed, std::strerror(errno));
      }
      off += static_cast<size_t>(w);
    }
  }

  Frame Recv() override {
    uint8_t header[5];
    ReadExact(header, sizeof(header));
    const uint32_t n = ReadLength(header);
    CheckHeader(n, header[4]);
    Frame f{static_cast<MessageType>(header[4]), std::vector<uint8_t>(n)};
    ReadExact(f.payload.data(), n);
    return f;
  }

  void Close() override {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  void ReadExact(uint8_t* out, size_t n) {
    size_t off = 0;
    while (off < n) {
      if (fd_ < 0) throw Error(ErrorCode::kClosed, "socket closed");
      pollfd p{fd_, POLLIN, 0};
      const int ready = ::poll(&p, 1, static_cast<int>(timeout_.count()));
      if (ready == 0) throw Error(ErrorCode::kTimeout, "receive timed out");
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::kClosed, std::strerror(errno));
      }
      const ssize_t r = ::recv(fd_, out + off, n - off, 0);
      if (r == 0) throw Error(ErrorCode::kClosed, "peer closed");
      if (r < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::kClosed, std::strerror(errno));
      }
      off += static_cast<size_t>(r);
    }
  }

  int fd_;
  Timeout timeout_;
};

sockaddr_in Resolve(const std::string& host, uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw Error(ErrorCode::kInvalidParams, "cannot resolve " + host);
  }
  sockaddr_in addr = *reinterpret_cast<sockaddr_in*>(res->ai_addr);
  freeaddrinfo(res);
  addr.sin_port = htons(port);
  return addr;
}

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> MakeInProcessPair(
    Timeout timeout) {
  auto q = std::make_shared<SharedQueues>();
  return {std::make_unique<InProcessChannel>(q, 0, timeout),
          std::make_unique<InProcessChannel>(q, 1, timeout)};
}

TcpListener::TcpListener(uint16_t port, const std::string& host) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(ErrorCode::kClosed, std::strerror(errno));
  int one = 1;
  setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = Resolve(host, port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd_, 1) != 0) {
    const std::string msg = std::strerror(errno);
    ::close(fd_);
    throw Error(ErrorCode::kClosed, "listen failed: " + msg);
  }
  socklen_t len = sizeof(addr);
  getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Channel> TcpListener::Accept(Timeout timeout) {
  pollfd p{fd_, POLLIN, 0};
  const int ready = ::poll(&p, 1, static_cast<int>(timeout.count()));
  if (ready == 0) throw Error(ErrorCode::kTimeout, "no peer connected");
  if (ready < 0) throw Error(ErrorCode::kClosed, std::strerror(errno));
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) throw Error(ErrorCode::kClosed, std::strerror(errno));
  return std::make_unique<TcpChannel>(fd, timeout);
}

std::unique_ptr<Channel> TcpConnect(const std::string& host, uint16_t port,
                                    Timeout timeout) {
  const sockaddr_in addr = Resolve(host, port);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw Error(ErrorCode::kClosed, std::strerror(errno));
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) ==
        0) {
      return std::make_unique<TcpChannel>(fd, timeout);
    }
    ::close(fd);
    if (std::chrono::steady_clock::now() > deadline) {
      throw Error(ErrorCode::kTimeout,
                  "cannot connect to " + host + ":" + std::to_string(port));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>>
MakeTcpLoopbackPair(Timeout timeout) {
  TcpListener listener(0);
  std::unique_ptr<Channel> client =
      TcpConnect("127.0.0.1", listener.port(), timeout);
  std::unique_ptr<Channel> server = listener.Accept(timeout);
  return {std::move(client), std::move(server)};
}

}  // namespace prlink

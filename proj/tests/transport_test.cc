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

#include <gtest/gtest.h>

#include <thread>

#include "prlink/messages.h"
#include "prlink/transcript.h"

namespace prlink {
namespace {

TEST(FrameTest, EncodeLayout) {
  const std::vector<uint8_t> payload = {7, 8, 9};
  const std::vector<uint8_t> f =
      EncodeFrame(MessageType::kCompareVerdict, payload);
  ASSERT_EQ(f.size(), 8u);
  EXPECT_EQ(f[0], 0);
  EXPECT_EQ(f[3], 3);
  EXPECT_EQ(f[4], static_cast<uint8_t>(MessageType::kCompareVerdict));
  const Frame d = DecodeFrame(f);
  EXPECT_EQ(d.type, MessageType::kCompareVerdict);
  EXPECT_EQ(d.payload, payload);
}

TEST(FrameTest, Malformed) {
  std::vector<uint8_t> f = EncodeFrame(MessageType::kAbort, {});
  f[4] = 200;
  EXPECT_THROW(DecodeFrame(f), Error);
  const std::vector<uint8_t> shrt = {0, 0, 0, 5, 1, 0};
  try {
    DecodeFrame(shrt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFramingError);
  }
  const std::vector<uint8_t> huge = {0xff, 0xff, 0xff, 0xff, 1};
  EXPECT_THROW(DecodeFrame(huge), Error);
}

void PingPong(Channel& a, Channel& b) {
  const std::vector<uint8_t> x = {1, 2, 3};
  std::thread t([&] {
    Frame f = b.Recv();
    b.Send(MessageType::kCompareVerdict, f.payload);
  });
  a.Send(MessageType::kBinCountsAnnounce, x);
  const Frame back = a.Recv();
  t.join();
  EXPECT_EQ(back.type, MessageType::kCompareVerdict);
  EXPECT_EQ(back.payload, x);
}

TEST(ChannelTest, InProcess) {
  auto [a, b] = MakeInProcessPair();
  PingPong(*a, *b);
}

TEST(ChannelTest, TcpLoopback) {
  auto [a, b] = MakeTcpLoopbackPair();
  PingPong(*a, *b);
}

TEST(ChannelTest, RecvTimesOut) {
  auto [a, b] = MakeInProcessPair(Timeout{50});
  try {
    a->Recv();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTimeout);
  }
}

TEST(ChannelTest, ClosedPeer) {
  auto [a, b] = MakeTcpLoopbackPair(Timeout{2000});
  b->Close();
  try {
    a->Recv();
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::kClosed ||
                e.code() == ErrorCode::kTimeout);
  }
}

TEST(MessagesTest, RoundTrips) {
  BinCountsAnnounce c{{3, 0, 17}};
  EXPECT_EQ(DecodeBinCounts(Encode(c)).counts, c.counts);

  OutputSync s;
  s.final = true;
  s.pairs = {{RecordId{1}, RecordId{2}}};
  s.revealed = {Record{RecordId{5}, BitVector{9, 50, 1, 2}}};
  const OutputSync s2 = DecodeOutputSync(Encode(s));
  EXPECT_TRUE(s2.final);
  EXPECT_EQ(s2.pairs, s.pairs);
  EXPECT_EQ(s2.revealed, s.revealed);

  CompareVerdict v{{true, false, true}};
  EXPECT_EQ(DecodeCompareVerdict(Encode(v)).bits, v.bits);

  EncRecordBatch e;
  e.bin_a = 4;
  e.bin_b = 5;
  e.entries.push_back({77, Record{RecordId{1}, GridPoint{1, 2, 3, 4}}, {}});
  const EncRecordBatch e2 = DecodeEncRecordBatch(Encode(e));
  EXPECT_EQ(e2.bin_b, 5u);
  ASSERT_EQ(e2.entries.size(), 1u);
  EXPECT_EQ(e2.entries[0].handle, 77u);
  EXPECT_EQ(*e2.entries[0].plain, *e.entries[0].plain);

  AbortMessage ab{"bye"};
  EXPECT_EQ(DecodeAbort(Encode(ab)).reason, "bye");
}

TEST(MessagesTest, TrailingBytesRejected) {
  std::vector<uint8_t> b = Encode(BinCountsAnnounce{{1}});
  b.push_back(0);
  EXPECT_THROW(DecodeBinCounts(b), Error);
}

TEST(EndpointTest, RecordsTranscriptAndDetectsWrongType) {
  auto [a, b] = MakeInProcessPair(Timeout{1000});
  Transcript ta(Party::kAlice), tb(Party::kBob);
  Endpoint ea(*a, ta), eb(*b, tb);
  ea.Send(BinCountsAnnounce{{1, 2}});
  EXPECT_EQ(eb.Recv<BinCountsAnnounce>().counts, (std::vector<int64_t>{1, 2}));
  EXPECT_EQ(ta.entries().size(), 1u);
  EXPECT_EQ(tb.entries().size(), 1u);
  EXPECT_EQ(tb.entries()[0].dir, Direction::kReceived);
  ea.Send(CompareVerdict{{true}});
  EXPECT_THROW(eb.Recv<BinCountsAnnounce>(), Error);
}

TEST(EndpointTest, PeerAbortSurfaces) {
  auto [a, b] = MakeInProcessPair(Timeout{1000});
  Transcript ta(Party::kAlice), tb(Party::kBob);
  Endpoint ea(*a, ta), eb(*b, tb);
  ea.SendAbort("stop");
  try {
    eb.Recv<CompareVerdict>();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProtocolAbort);
  }
}

TEST(TranscriptTest, IncompleteViewRejected) {
  Transcript t(Party::kAlice);
  try {
    ExtractView(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIncompleteTranscript);
  }
}

}  // namespace
}  // namespace prlink

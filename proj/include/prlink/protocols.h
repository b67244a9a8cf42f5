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
#ifndef PRLINK_PROTOCOLS_H_
#define PRLINK_PROTOCOLS_H_

#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "prlink/blocking.h"
#include "prlink/noise.h"
#include "prlink/psi.h"
#include "prlink/record.h"
#include "prlink/transcript.h"
#include "prlink/transport.h"

namespace prlink {

enum class ProtocolKind : uint8_t {
  kApc,
  kLp,
  kLp2,
  kRr,
  kBlocking,  // the same blocking without noise
  kPsi,
  kPsix,
};

std::string_view ProtocolName(ProtocolKind kind);
// Throws kInvalidParams for unknown names.
ProtocolKind ParseProtocol(std::string_view name);

enum class ExecMode : uint8_t {
  kSecure,  // encrypted comparisons
  kFast,    // comparisons evaluated in the clear; costs are unchanged
};

enum class TransportKind : uint8_t { kInProcess, kTcp };

struct SortPruneConfig {
  // Percentiles of the pooled noisy bin sizes, descending, in [0, 100].
  std::vector<double> percentiles = {90, 80, 70, 60, 50, 40, 30, 20, 10, 0};
  // Explicit descending thresholds; when set they replace the percentiles.
  std::vector<double> thresholds;
  // Drop every pair below the last threshold.
  bool prune = false;
};

// Boosted offsets per party for RR blocking; 1 and 1 is basic RR.
struct RrConfig {
  uint32_t top_alice = 1;
  uint32_t top_bob = 1;
};

struct ProtocolConfig {
  ProtocolKind protocol = ProtocolKind::kLp;
  MatchRule rule = EuclideanThreshold{};
  BlockingFn blocking = GridTimeBlocking{};
  double eps_a = 1.6;
  double eps_b = 1.6;
  double delta_a = 1e-5;
  double delta_b = 1e-5;
  CenterMode center = CenterMode::kCeiling;
  bool noise = true;
  std::optional<SortPruneConfig> sp;
  bool gmc = false;
  RrConfig rr;
  ExecMode mode = ExecMode::kFast;
  int key_bits = kMinKeyBits;
  int min_key_bits = kMinKeyBits;
  TransportKind transport = TransportKind::kInProcess;
  Timeout timeout = kDefaultTimeout;
  uint64_t expansion_cap = kDefaultExpansionCap;
  uint64_t seed = 1;
};

// Throws kInvalidParams.
void ValidateConfig(const ProtocolConfig& cfg);

// State after one group of bin pairs. percentile is NaN outside sort & prune.
struct Checkpoint {
  double percentile = std::numeric_limits<double>::quiet_NaN();
  double threshold = -1;
  int64_t cost = 0;
  size_t outputs = 0;  // prefix length of the discovery order
};

struct PartyResult {
  Party party = Party::kAlice;
  MatchOutput output;
  std::vector<IdPair> discovery;
  int64_t cost = 0;
  int64_t encrypted_ops = 0;
  int64_t gmc_rounds = 0;
  uint64_t gamma = 1;
  std::vector<Checkpoint> checkpoints;
  std::vector<NoiseReceipt> receipts;
  Transcript transcript;
  size_t peer_size = 0;
};

// One party's side of a run over an established channel.
PartyResult RunParty(Party me, const Dataset& own, const ProtocolConfig& cfg,
                     Channel& channel);

struct CheckpointResult {
  Checkpoint checkpoint;
  RecallResult recall;
};

struct RunResult {
  MatchOutput output;
  // Secure comparisons, or the γ n ln ln n model for the PSI family.
  int64_t cost = 0;
  double model_cost = 0;
  uint64_t gamma = 1;
  int64_t encrypted_ops = 0;
  int64_t gmc_rounds = 0;
  RecallResult recall;
  std::vector<CheckpointResult> checkpoints;
  Transcript alice_transcript{Party::kAlice};
  Transcript bob_transcript{Party::kBob};
  std::vector<NoiseReceipt> alice_receipts;
  std::vector<NoiseReceipt> bob_receipts;
  double wall_ms = 0;
};

// Runs both parties on their own threads over the configured transport.
// truth defaults to the plaintext join.
RunResult RunProtocol(const Dataset& a, const Dataset& b,
                      const ProtocolConfig& cfg,
                      const std::set<IdPair>* truth = nullptr);

// Noisy-count groups in processing order.
struct PlanGroup {
  double percentile = std::numeric_limits<double>::quiet_NaN();
  double threshold = -1;
  std::vector<BinPair> pairs;
};

std::vector<PlanGroup> BuildPlan(const std::vector<BinPair>& strategy,
                                 const std::vector<int64_t>& alice_counts,
                                 const std::vector<int64_t>& bob_counts,
                                 const std::optional<SortPruneConfig>& sp);

// Nearest-rank percentile of the values; 0 maps to -1 so that every bin
// passes.
double NearestRankThreshold(std::vector<int64_t> values, double percentile);

// cost_{B^S} + c_eta^2 c_b k + 2 c_eta c_b n.
double LpExpectedCostBound(int64_t blocked_cost, double c_eta, uint32_t c_b,
                           uint32_t k, size_t n);

// The payload shape used for dummies when a party holds no records.
Payload DefaultLike(const ProtocolConfig& cfg, const Dataset& own);

}  // namespace prlink

#endif  // PRLINK_PROTOCOLS_H_

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
#ifndef PRLINK_AUDIT_H_
#define PRLINK_AUDIT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "prlink/blocking.h"
#include "prlink/protocols.h"
#include "prlink/record.h"
#include "prlink/stats.h"

namespace prlink {

// D_B and D'_B = D_B - b* + b*'. Neither swapped record matches any record
// of D_A.
struct NeighborPair {
  Dataset bob;
  Dataset bob_prime;
  Record swapped_out;
  Record swapped_in;
};

struct NeighborOptions {
  // Replacement must land in a different set of bins than b*.
  bool require_bin_change = true;
  int max_attempts = 100000;
};

// Picks b* uniformly among Bob's records that match nothing in D_A and draws
// a fresh non-matching b*' from the blocking domain. Throws
// kNoNonMatchingRecord or kNoFreshReplacement.
NeighborPair GenNeighbor(const Dataset& alice, const Dataset& bob,
                         const MatchRule& rule, const BlockingFn& domain,
                         Rng& rng, const NeighborOptions& opts = {});

// Equal sizes, a one-for-one swap of non-matching records and equal joins.
bool IsNeighbor(const Dataset& alice, const Dataset& bob,
                const Dataset& bob_prime, const MatchRule& rule);

// Bins whose real count differs between the two neighbors.
std::vector<uint32_t> AffectedBins(const BlockingFn& fn,
                                   const NeighborPair& pair);

struct AuditConfig {
  ProtocolConfig protocol;
  int64_t trials = 100000;
  int64_t min_trials = 10000;
  double confidence = 0.99;
  uint64_t seed = 1;
};

struct EventEstimate {
  std::string event;
  int64_t hits = 0;        // under D_B
  int64_t hits_prime = 0;  // under D'_B
  Interval p;
  Interval p_prime;
};

struct AuditVerdict {
  std::string protocol;
  std::string mode;  // "black-box" or "white-box"
  double eps = 0;
  double delta_used = 0;
  int64_t trials = 0;
  // Largest ln((lower(P) - delta) / upper(P')) over tested events.
  double eps_hat = 0;
  bool violated = false;
  std::string instance;
  std::vector<uint32_t> bins;
  int64_t events = 0;
  // The event that attains eps_hat.
  EventEstimate worst;
  // White-box only: ln of the largest pdf ratio over outcomes away from
  // truncation atoms, and the larger of the two hockey-stick divergences.
  double log_ratio = 0;
  double hockey_stick = 0;
};

// Runs the protocol `trials` times on each neighbor in fast mode and compares
// Bob's announced counts in the affected bins, one bin at a time and jointly.
// Throws kInsufficientTrials below cfg.min_trials.
AuditVerdict AuditBinCounts(const Dataset& alice, const NeighborPair& pair,
                            const AuditConfig& cfg);

// Exact count laws of Bob's affected bins for LP, LP-2 and noiseless
// blocking. Throws kInvalidParams for other protocols or more than three
// affected bins.
AuditVerdict WhiteBoxBinCounts(const NeighborPair& pair,
                               const ProtocolConfig& cfg);

// A small grid instance with a neighbor pair that moves b* across cells.
struct AuditInstance {
  Dataset alice;
  NeighborPair pair;
  MatchRule rule;
  BlockingFn blocking;
  std::string description;
};

AuditInstance MakeGridAuditInstance(uint64_t seed);

struct Lp2Counterexample {
  AuditInstance instance;
  int n1 = 0;
  double p = 0;
  // Exact probabilities of the distinguishing view under each neighbor.
  double view = 0;
  double view_prime = 0;
  bool analytic_violation = false;
  AuditVerdict empirical;
};

// D_A holds n1 identical records in bin 1; D_B holds b* alone in bin 0 and
// n1 records matching D_A in bin 1; D'_B moves b* into bin 1 as a
// non-matching record. The distinguishing view is Bob's counts (1, n1)
// together with every bin-1 record of D_B in the output. Throws
// kPreconditionViolated when delta or n1 is outside the construction's range.
Lp2Counterexample RunLp2Counterexample(double eps, double delta, int n1,
                                       int64_t trials, uint64_t seed,
                                       int64_t min_trials = 10000);

struct RrRatioVerdict {
  double max_ratio = 0;
  double bound = 0;
  bool violated = false;
};

// Largest ratio between two records' probabilities of landing in the same
// bin.
RrRatioVerdict AuditRrRatio(uint32_t k, uint32_t top, double eps);

std::string VerdictToJson(const AuditVerdict& v);

}  // namespace prlink

#endif  // PRLINK_AUDIT_H_

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
#ifndef PRLINK_RESULTS_H_
#define PRLINK_RESULTS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prlink/blocking.h"
#include "prlink/protocols.h"
#include "prlink/record.h"
#include "prlink/stats.h"

namespace prlink {

// First line of every results file. Bump the version on any column change.
inline constexpr char kResultsSchema[] = "# prlink-results v1";
inline constexpr char kResultsColumns[] =
    "protocol,n_A,n_B,eps,delta,trial,cost,recall,wall_ms,stop_percentile,"
    "gamma";

// eps and delta are empty for protocols without noise; stop_percentile is
// empty outside sort & prune.
struct ResultRow {
  std::string protocol;
  size_t n_a = 0;
  size_t n_b = 0;
  std::optional<double> eps;
  std::optional<double> delta;
  int trial = 0;
  int64_t cost = 0;
  double recall = 0;
  double wall_ms = 0;
  std::optional<double> stop_percentile;
  uint64_t gamma = 1;
};

std::string FormatRow(const ResultRow& row);

// One row per sort & prune checkpoint, or a single row for the whole run.
std::vector<ResultRow> RowsFor(const std::string& label, const Dataset& a,
                               const Dataset& b, const ProtocolConfig& cfg,
                               int trial, const RunResult& run);

// A protocol entry such as "lp", "lp+gmc" or "lp+sp+gmc".
struct ProtocolLabel {
  ProtocolKind kind = ProtocolKind::kLp;
  bool gmc = false;
  bool sp = false;
};

// Throws kParseError.
ProtocolLabel ParseLabel(const std::string& label);
bool UsesNoise(ProtocolKind kind);

enum class DatasetKind { kTaxi, kAb, kFile };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kTaxi;
  std::vector<int32_t> days = {1};  // scaling axis T
  int64_t per_day = 3000;
  int64_t theta = 1000;  // degrees * 10^6 for taxi, bits for ab
  int32_t bits = 50;
  int32_t brands = 16;
  double dup_rate = 0.5;
  GridSpec grid;
  int32_t hour_slots = 24;
  std::string alice_path;
  std::string bob_path;
  MatchRule rule = EuclideanThreshold{};
  BlockingFn blocking = GridTimeBlocking{};
};

struct ExperimentSpec {
  DatasetSpec dataset;
  std::vector<std::string> protocols = {"apc", "lp"};
  std::vector<double> eps = {1.6};
  std::vector<double> delta = {1e-5};
  int trials = 1;
  uint64_t seed = 1;
  unsigned workers = 0;  // 0 uses every core
  SortPruneConfig sp;
  CenterMode center = CenterMode::kCeiling;
  ExecMode mode = ExecMode::kFast;
  int key_bits = kMinKeyBits;
  TransportKind transport = TransportKind::kInProcess;
  uint32_t rr_k = 16;
  uint32_t rr_window = 1;
  RrConfig rr;
  uint64_t expansion_cap = kDefaultExpansionCap;
};

// Throws kParseError with the offending key.
ExperimentSpec ParseExperimentSpec(const std::string& json_text);
MatchRule ParseRule(const std::string& json_text);
BlockingFn ParseBlocking(const std::string& json_text);

struct GroupSummary {
  std::string protocol;
  std::optional<double> eps;
  std::optional<double> delta;
  size_t n_a = 0;
  size_t n_b = 0;
  int trials = 0;
  MeanStd cost;
  MeanStd recall;
};

struct SlopeSummary {
  std::string protocol;
  std::optional<double> eps;
  std::optional<double> delta;
  // log10(mean cost) against log10(n_A).
  double slope = 0;
  int points = 0;
};

struct SweepJob {
  std::string label;
  std::optional<double> eps;
  std::optional<double> delta;
  int32_t days = 1;
  int trial = 0;
};

struct JobOutcome {
  SweepJob job;
  std::vector<ResultRow> rows;
  int64_t final_cost = 0;
  double final_recall = 0;
  size_t n_a = 0;
  size_t n_b = 0;
  std::string error;  // non-empty when the job failed
};

struct SweepResult {
  std::vector<JobOutcome> jobs;  // in job order
  std::vector<GroupSummary> groups;
  std::vector<SlopeSummary> slopes;
};

ProtocolConfig JobConfig(const ExperimentSpec& spec, const SweepJob& job,
                         const MatchRule& rule, const BlockingFn& blocking);

// Every protocol x eps x delta x T x trial combination on a bounded worker
// pool. A failed job becomes a comment line and the sweep continues.
SweepResult RunSweep(const ExperimentSpec& spec);

// Header, column line, then rows in job order.
std::string SweepCsv(const SweepResult& result);
std::string SummaryJson(const SweepResult& result);

}  // namespace prlink

#endif  // PRLINK_RESULTS_H_

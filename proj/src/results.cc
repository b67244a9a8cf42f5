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
#include "prlink/results.h"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "prlink/generators.h"

namespace prlink {
namespace {

using nlohmann::json;

[[noreturn]] void Bad(const std::string& what) {
  throw Error(ErrorCode::kParseError, what);
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string Opt(const std::optional<double>& v) {
  return v ? Num(*v) : std::string();
}

template <typename T>
T Get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    Bad(std::string("bad value for \"") + key + "\"");
  }
}

MatchRule RuleFromJson(const json& j) {
  const std::string kind = Get<std::string>(j, "kind", "");
  if (kind == "euclidean") {
    return EuclideanThreshold{Get<int64_t>(j, "theta_e6", 1000)};
  }
  if (kind == "hamming") return HammingThreshold{Get<int32_t>(j, "theta", 5)};
  if (kind == "exact") return ExactEquality{};
  Bad("rule kind must be euclidean, hamming or exact");
}

GridSpec GridFromJson(const json& j) {
  GridSpec g;
  g.lat_min_e6 = Get<int64_t>(j, "lat_min_e6", g.lat_min_e6);
  g.lon_min_e6 = Get<int64_t>(j, "lon_min_e6", g.lon_min_e6);
  g.cell_e6 = Get<int64_t>(j, "cell_e6", g.cell_e6);
  g.rows = Get<int32_t>(j, "rows", g.rows);
  g.cols = Get<int32_t>(j, "cols", g.cols);
  return g;
}

BlockingFn BlockingFromJson(const json& j) {
  const std::string kind = Get<std::string>(j, "kind", "");
  if (kind == "grid") {
    GridTimeBlocking g;
    if (j.contains("grid")) g.grid = GridFromJson(j.at("grid"));
    g.days = Get<int32_t>(j, "days", g.days);
    g.hour_slots = Get<int32_t>(j, "hour_slots", g.hour_slots);
    return g;
  }
  if (kind == "daybrand") {
    return DayBrandBlocking{Get<int32_t>(j, "days", 1),
                            Get<int32_t>(j, "brands", 16)};
  }
  if (kind == "modhash") {
    return ModHashBlocking{
        Get<uint32_t>(j, "k", 16), Get<uint32_t>(j, "window", 1),
        Get<uint32_t>(j, "replicas", 1), Get<uint64_t>(j, "key", 0)};
  }
  Bad("blocking kind must be grid, daybrand or modhash");
}

json ParseJson(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    Bad(std::string("invalid JSON: ") + e.what());
  }
}

struct Instance {
  Dataset alice;
  Dataset bob;
  std::set<IdPair> truth;
  MatchRule rule;
  BlockingFn blocking;
};

Instance MakeInstance(const ExperimentSpec& spec, int32_t days, int trial) {
  const DatasetSpec& d = spec.dataset;
  const uint64_t seed =
      SplitMix64(spec.seed ^ SplitMix64(static_cast<uint64_t>(days) * 1000003u +
                                        static_cast<uint64_t>(trial)));
  GeneratedData g;
  if (d.kind == DatasetKind::kTaxi) {
    TaxiConfig c;
    c.days = days;
    c.per_day = d.per_day;
    c.theta_e6 = d.theta;
    c.blocking.grid = d.grid;
    c.blocking.hour_slots = d.hour_slots;
    c.seed = seed;
    g = GenTaxi(c);
  } else if (d.kind == DatasetKind::kAb) {
    AbConfig c;
    c.days = days;
    c.per_day = d.per_day;
    c.bits = d.bits;
    c.theta = static_cast<int32_t>(d.theta);
    c.brands = d.brands;
    c.dup_rate = d.dup_rate;
    c.seed = seed;
    g = GenAb(c);
  } else {
    g.alice = ReadDataset(d.alice_path, Party::kAlice);
    g.bob = ReadDataset(d.bob_path, Party::kBob);
    g.rule = d.rule;
    g.blocking = d.blocking;
    g.truth = PlaintextJoin(g.alice, g.bob, g.rule);
  }
  return {std::move(g.alice), std::move(g.bob), std::move(g.truth),
          std::move(g.rule), std::move(g.blocking)};
}

using GroupKey = std::tuple<std::string, std::optional<double>,
                            std::optional<double>, size_t, size_t>;

}  // namespace

std::string FormatRow(const ResultRow& r) {
  std::ostringstream out;
  out << r.protocol << ',' << r.n_a << ',' << r.n_b << ',' << Opt(r.eps) << ','
      << Opt(r.delta) << ',' << r.trial << ',' << r.cost << ',' << Num(r.recall)
      << ',' << Num(r.wall_ms) << ',' << Opt(r.stop_percentile) << ','
      << r.gamma;
  return out.str();
}

bool UsesNoise(ProtocolKind kind) {
  return kind == ProtocolKind::kLp || kind == ProtocolKind::kLp2 ||
         kind == ProtocolKind::kRr;
}

std::vector<ResultRow> RowsFor(const std::string& label, const Dataset& a,
                               const Dataset& b, const ProtocolConfig& cfg,
                               int trial, const RunResult& run) {
  ResultRow base;
  base.protocol = label;
  base.n_a = a.size();
  base.n_b = b.size();
  if (UsesNoise(cfg.protocol)) {
    base.eps = cfg.eps_b;
    base.delta = cfg.delta_b;
  }
  base.trial = trial;
  base.cost = run.cost;
  base.recall = run.recall.value;
  base.wall_ms = run.wall_ms;
  base.gamma = run.gamma;
  std::vector<ResultRow> rows;
  if (cfg.sp) {
    for (const CheckpointResult& c : run.checkpoints) {
      if (std::isnan(c.checkpoint.percentile)) continue;
      ResultRow r = base;
      r.cost = c.checkpoint.cost;
      r.recall = c.recall.value;
      r.stop_percentile = c.checkpoint.percentile;
      rows.push_back(r);
    }
  }
  if (rows.empty()) rows.push_back(base);
  return rows;
}

ProtocolLabel ParseLabel(const std::string& label) {
  ProtocolLabel out;
  std::stringstream ss(label);
  std::string part;
  bool first = true;
  while (std::getline(ss, part, '+')) {
    if (first) {
      try {
        out.kind = ParseProtocol(part);
      } catch (const Error&) {
        Bad("unknown protocol \"" + part + "\"");
      }
      first = false;
    } else if (part == "gmc") {
      out.gmc = true;
    } else if (part == "sp") {
      out.sp = true;
    } else {
      Bad("unknown protocol modifier \"" + part + "\"");
    }
  }
  if (first) Bad("empty protocol label");
  return out;
}

MatchRule ParseRule(const std::string& json_text) {
  return RuleFromJson(ParseJson(json_text));
}

BlockingFn ParseBlocking(const std::string& json_text) {
  return BlockingFromJson(ParseJson(json_text));
}

ExperimentSpec ParseExperimentSpec(const std::string& json_text) {
  const json j = ParseJson(json_text);
  if (!j.is_object()) Bad("config must be a JSON object");
  ExperimentSpec s;
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    DatasetSpec& ds = s.dataset;
    const std::string kind = Get<std::string>(d, "kind", "taxi");
    if (kind == "taxi") {
      ds.kind = DatasetKind::kTaxi;
    } else if (kind == "ab") {
      ds.kind = DatasetKind::kAb;
      ds.per_day = 500;
      ds.theta = 5;
    } else if (kind == "file") {
      ds.kind = DatasetKind::kFile;
      ds.alice_path = Get<std::string>(d, "alice", "");
      ds.bob_path = Get<std::string>(d, "bob", "");
      if (ds.alice_path.empty() || ds.bob_path.empty()) {
        Bad("file datasets need \"alice\" and \"bob\" paths");
      }
      if (!d.contains("rule") || !d.contains("blocking")) {
        Bad("file datasets need \"rule\" and \"blocking\"");
      }
      ds.rule = RuleFromJson(d.at("rule"));
      ds.blocking = BlockingFromJson(d.at("blocking"));
    } else {
      Bad("dataset kind must be taxi, ab or file");
    }
    ds.days = Get<std::vector<int32_t>>(d, "days", ds.days);
    ds.per_day = Get<int64_t>(d, "per_day", ds.per_day);
    ds.theta = Get<int64_t>(d, "theta", ds.theta);
    ds.bits = Get<int32_t>(d, "bits", ds.bits);
    ds.brands = Get<int32_t>(d, "brands", ds.brands);
    ds.dup_rate = Get<double>(d, "dup_rate", ds.dup_rate);
    if (d.contains("grid")) ds.grid = GridFromJson(d.at("grid"));
    ds.hour_slots = Get<int32_t>(d, "hour_slots", ds.hour_slots);
    if (ds.days.empty()) Bad("\"days\" must not be empty");
    if (ds.kind == DatasetKind::kFile) ds.days = {1};
  }
  s.protocols = Get<std::vector<std::string>>(j, "protocols", s.protocols);
  for (const std::string& p : s.protocols) ParseLabel(p);
  s.eps = Get<std::vector<double>>(j, "eps", s.eps);
  s.delta = Get<std::vector<double>>(j, "delta", s.delta);
  if (s.eps.empty() || s.delta.empty()) Bad("eps and delta need values");
  s.trials = Get<int>(j, "trials", s.trials);
  if (s.trials < 1) Bad("trials must be >= 1");
  s.seed = Get<uint64_t>(j, "seed", s.seed);
  s.workers = Get<unsigned>(j, "workers", s.workers);
  if (j.contains("sp")) {
    const json& sp = j.at("sp");
    s.sp.percentiles =
        Get<std::vector<double>>(sp, "percentiles", s.sp.percentiles);
    s.sp.thresholds =
        Get<std::vector<double>>(sp, "thresholds", s.sp.thresholds);
    s.sp.prune = Get<bool>(sp, "prune", s.sp.prune);
  }
  const std::string center = Get<std::string>(j, "center", "ceil");
  if (center == "ceil") {
    s.center = CenterMode::kCeiling;
  } else if (center == "exact") {
    s.center = CenterMode::kExact;
  } else {
    Bad("center must be ceil or exact");
  }
  const std::string mode = Get<std::string>(j, "mode", "fast");
  if (mode == "fast") {
    s.mode = ExecMode::kFast;
  } else if (mode == "secure") {
    s.mode = ExecMode::kSecure;
  } else {
    Bad("mode must be fast or secure");
  }
  s.key_bits = Get<int>(j, "key_bits", s.key_bits);
  const std::string transport = Get<std::string>(j, "transport", "inproc");
  if (transport == "inproc") {
    s.transport = TransportKind::kInProcess;
  } else if (transport == "tcp") {
    s.transport = TransportKind::kTcp;
  } else {
    Bad("transport must be inproc or tcp");
  }
  if (j.contains("rr")) {
    const json& rr = j.at("rr");
    s.rr_k = Get<uint32_t>(rr, "k", s.rr_k);
    s.rr_window = Get<uint32_t>(rr, "window", s.rr_window);
    s.rr.top_alice = Get<uint32_t>(rr, "top_alice", s.rr.top_alice);
    s.rr.top_bob = Get<uint32_t>(rr, "top_bob", s.rr.top_bob);
  }
  s.expansion_cap = Get<uint64_t>(j, "expansion_cap", s.expansion_cap);
  return s;
}

ProtocolConfig JobConfig(const ExperimentSpec& spec, const SweepJob& job,
                         const MatchRule& rule, const BlockingFn& blocking) {
  const ProtocolLabel label = ParseLabel(job.label);
  ProtocolConfig c;
  c.protocol = label.kind;
  c.rule = rule;
  c.blocking = blocking;
  if (label.kind == ProtocolKind::kRr) {
    c.blocking = ModHashBlocking{spec.rr_k, spec.rr_window, 1, spec.seed};
    c.rr = spec.rr;
  }
  if (job.eps) c.eps_a = c.eps_b = *job.eps;
  if (job.delta) c.delta_a = c.delta_b = *job.delta;
  c.center = spec.center;
  c.gmc = label.gmc;
  if (label.sp) c.sp = spec.sp;
  c.mode = spec.mode;
  c.key_bits = spec.key_bits;
  c.transport = spec.transport;
  c.expansion_cap = spec.expansion_cap;
  std::hash<std::string> h;
  c.seed =
      SplitMix64(spec.seed ^
                 h(job.label + "/" + Opt(job.eps) + "/" + Opt(job.delta) + "/" +
                   std::to_string(job.days) + "/" + std::to_string(job.trial)));
  return c;
}

SweepResult RunSweep(const ExperimentSpec& spec) {
  std::vector<ProtocolLabel> labels;
  for (const std::string& p : spec.protocols) labels.push_back(ParseLabel(p));

  std::vector<SweepJob> jobs;
  std::vector<size_t> instance_of;
  for (size_t di = 0; di < spec.dataset.days.size(); ++di) {
    for (int t = 0; t < spec.trials; ++t) {
      for (size_t p = 0; p < labels.size(); ++p) {
        if (!UsesNoise(labels[p].kind)) {
          jobs.push_back({spec.protocols[p], std::nullopt, std::nullopt,
                          spec.dataset.days[di], t});
          instance_of.push_back(di * spec.trials + t);
          continue;
        }
        for (double e : spec.eps) {
          for (double d : spec.delta) {
            jobs.push_back({spec.protocols[p], e, d, spec.dataset.days[di], t});
            instance_of.push_back(di * spec.trials + t);
          }
        }
      }
    }
  }

  const size_t n_inst = spec.dataset.days.size() * spec.trials;
  std::vector<std::optional<Instance>> instances(n_inst);
  std::vector<std::string> instance_error(n_inst);
  std::vector<std::once_flag> made(n_inst);

  SweepResult result;
  result.jobs.resize(jobs.size());
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i = next++; i < jobs.size(); i = next++) {
      JobOutcome& out = result.jobs[i];
      out.job = jobs[i];
      const size_t ii = instance_of[i];
      std::call_once(made[ii], [&] {
        try {
          instances[ii] =
              MakeInstance(spec, spec.dataset.days[ii / spec.trials],
                           static_cast<int>(ii % spec.trials));
        } catch (const std::exception& e) {
          instance_error[ii] = e.what();
        }
      });
      if (!instances[ii]) {
        out.error = "dataset: " + instance_error[ii];
        continue;
      }
      const Instance& inst = *instances[ii];
      out.n_a = inst.alice.size();
      out.n_b = inst.bob.size();
      try {
        const ProtocolConfig cfg =
            JobConfig(spec, jobs[i], inst.rule, inst.blocking);
        const RunResult run =
            RunProtocol(inst.alice, inst.bob, cfg, &inst.truth);
        out.rows = RowsFor(jobs[i].label, inst.alice, inst.bob, cfg,
                           jobs[i].trial, run);
        out.final_cost = run.cost;
        out.final_recall = run.recall.value;
      } catch (const std::exception& e) {
        out.error = e.what();
      }
    }
  };
  unsigned workers = spec.workers;
  if (workers == 0) workers = std::max(1U, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<size_t>(workers, jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();

  std::map<GroupKey, std::pair<std::vector<double>, std::vector<double>>> g;
  for (const JobOutcome& o : result.jobs) {
    if (!o.error.empty()) continue;
    auto& [costs, recalls] =
        g[{o.job.label, o.job.eps, o.job.delta, o.n_a, o.n_b}];
    costs.push_back(static_cast<double>(o.final_cost));
    recalls.push_back(o.final_recall);
  }
  using SlopeKey =
      std::tuple<std::string, std::optional<double>, std::optional<double>>;
  std::map<SlopeKey, std::pair<std::vector<double>, std::vector<double>>> s;
  for (const auto& [key, v] : g) {
    GroupSummary gs;
    gs.protocol = std::get<0>(key);
    gs.eps = std::get<1>(key);
    gs.delta = std::get<2>(key);
    gs.n_a = std::get<3>(key);
    gs.n_b = std::get<4>(key);
    gs.trials = static_cast<int>(v.first.size());
    gs.cost = Summarize(v.first);
    gs.recall = Summarize(v.second);
    result.groups.push_back(gs);
    if (gs.cost.mean > 0 && gs.n_a > 0) {
      auto& [x, y] = s[{gs.protocol, std::get<1>(key), std::get<2>(key)}];
      x.push_back(std::log10(static_cast<double>(gs.n_a)));
      y.push_back(std::log10(gs.cost.mean));
    }
  }
  for (const auto& [key, v] : s) {
    std::set<double> distinct(v.first.begin(), v.first.end());
    if (distinct.size() < 2) continue;
    SlopeSummary ss;
    ss.protocol = std::get<0>(key);
    ss.eps = std::get<1>(key);
    ss.delta = std::get<2>(key);
    ss.slope = FitLine(v.first, v.second).slope;
    ss.points = static_cast<int>(v.first.size());
    result.slopes.push_back(ss);
  }
  return result;
}

std::string SweepCsv(const SweepResult& result) {
  std::ostringstream out;
  out << kResultsSchema << '\n' << kResultsColumns << '\n';
  for (const JobOutcome& o : result.jobs) {
    if (!o.error.empty()) {
      std::string msg = o.error;
      for (char& c : msg) {
        if (c == '\n') c = ' ';
      }
      out << "# failed protocol=" << o.job.label << " eps=" << Opt(o.job.eps)
          << " delta=" << Opt(o.job.delta) << " days=" << o.job.days
          << " trial=" << o.job.trial << " error=" << msg << '\n';
      continue;
    }
    for (const ResultRow& r : o.rows) out << FormatRow(r) << '\n';
  }
  return out.str();
}

std::string SummaryJson(const SweepResult& result) {
  auto opt = [](const std::optional<double>& v) -> json {
    return v ? json(*v) : json(nullptr);
  };
  json j;
  j["groups"] = json::array();
  for (const GroupSummary& g : result.groups) {
    j["groups"].push_back({{"protocol", g.protocol},
                           {"eps", opt(g.eps)},
                           {"delta", opt(g.delta)},
                           {"n_A", g.n_a},
                           {"n_B", g.n_b},
                           {"trials", g.trials},
                           {"cost_mean", g.cost.mean},
                           {"cost_std", g.cost.std},
                           {"recall_mean", g.recall.mean},
                           {"recall_std", g.recall.std}});
  }
  j["slopes"] = json::array();
  for (const SlopeSummary& s : result.slopes) {
    j["slopes"].push_back({{"protocol", s.protocol},
                           {"eps", opt(s.eps)},
                           {"delta", opt(s.delta)},
                           {"slope", s.slope},
                           {"points", s.points}});
  }
  int failed = 0;
  for (const JobOutcome& o : result.jobs) failed += o.error.empty() ? 0 : 1;
  j["failed_jobs"] = failed;
  return j.dump(2);
}

}  // namespace prlink

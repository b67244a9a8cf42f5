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
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "prlink/audit.h"
#include "prlink/blocking.h"
#include "prlink/generators.h"
#include "prlink/protocols.h"
#include "prlink/results.h"
#include "prlink/transport.h"

namespace prlink {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitViolation = 3;
constexpr int kExitFailure = 4;

using nlohmann::json;

struct Globals {
  uint64_t seed = 1;
  std::string config;
  std::string out;
  std::string transport = "inproc";
  std::string parties = "single-process";
  bool fast = false;
};

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to <out>/<name>, or to stdout when no directory was given.
void Emit(const Globals& g, const std::string& name, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::filesystem::create_directories(g.out);
  const std::string path = (std::filesystem::path(g.out) / name).string();
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::kInvalidParams, "cannot write " + path);
  f << text;
  std::cerr << "wrote " << path << '\n';
}

void WriteTruth(const std::string& path, const std::set<IdPair>& truth) {
  std::ofstream f(path);
  f << "a_id,b_id\n";
  for (const IdPair& p : truth)
    f << p.first.value << ',' << p.second.value << '\n';
}

struct DatasetFlags {
  std::string kind = "taxi";
  int32_t days = 1;
  int64_t per_day = 0;
  int64_t theta = -1;
};

void AddDatasetFlags(CLI::App* app, DatasetFlags& d) {
  app->add_option("--dataset", d.kind, "taxi or ab")
      ->check(CLI::IsMember({"taxi", "ab"}));
  app->add_option("--days", d.days, "days T")->check(CLI::PositiveNumber);
  app->add_option("--per-day", d.per_day, "records per day")
      ->check(CLI::PositiveNumber);
  app->add_option("--theta", d.theta,
                  "match threshold (degrees*1e6 for taxi, bits for ab)");
}

ExperimentSpec BaseSpec(const Globals& g) {
  ExperimentSpec s;
  if (!g.config.empty()) s = ParseExperimentSpec(ReadFile(g.config));
  s.seed = g.seed;
  if (g.fast) s.mode = ExecMode::kFast;
  if (g.transport == "tcp") s.transport = TransportKind::kTcp;
  return s;
}

void ApplyDatasetFlags(const DatasetFlags& d, CLI::App* app,
                       ExperimentSpec& s) {
  if (app->count("--dataset")) {
    s.dataset = DatasetSpec{};
    if (d.kind == "ab") {
      s.dataset.kind = DatasetKind::kAb;
      s.dataset.per_day = 500;
      s.dataset.theta = 5;
    }
  }
  if (app->count("--days")) s.dataset.days = {d.days};
  if (app->count("--per-day")) s.dataset.per_day = d.per_day;
  if (app->count("--theta")) s.dataset.theta = d.theta;
}

int CmdGen(const Globals& g, const DatasetFlags& d, CLI::App* app) {
  ExperimentSpec s = BaseSpec(g);
  ApplyDatasetFlags(d, app, s);
  GeneratedData data;
  if (s.dataset.kind == DatasetKind::kAb) {
    AbConfig c;
    c.days = s.dataset.days.front();
    c.per_day = s.dataset.per_day;
    c.theta = static_cast<int32_t>(s.dataset.theta);
    c.bits = s.dataset.bits;
    c.brands = s.dataset.brands;
    c.dup_rate = s.dataset.dup_rate;
    c.seed = g.seed;
    data = GenAb(c);
  } else if (s.dataset.kind == DatasetKind::kTaxi) {
    TaxiConfig c;
    c.days = s.dataset.days.front();
    c.per_day = s.dataset.per_day;
    c.theta_e6 = s.dataset.theta;
    c.blocking.grid = s.dataset.grid;
    c.blocking.hour_slots = s.dataset.hour_slots;
    c.seed = g.seed;
    data = GenTaxi(c);
  } else {
    throw Error(ErrorCode::kInvalidParams, "gen needs a taxi or ab dataset");
  }
  const std::string dir = g.out.empty() ? "." : g.out;
  std::filesystem::create_directories(dir);
  WriteDataset((std::filesystem::path(dir) / "alice.csv").string(), data.alice);
  WriteDataset((std::filesystem::path(dir) / "bob.csv").string(), data.bob);
  WriteTruth((std::filesystem::path(dir) / "truth.csv").string(), data.truth);
  std::cout << "alice=" << data.alice.size() << " bob=" << data.bob.size()
            << " matches=" << data.truth.size() << '\n';
  return kExitOk;
}

struct RunFlags {
  std::string protocol = "lp";
  double eps = 1.6;
  double delta = 1e-5;
  std::string alice;
  std::string bob;
  std::string rule;
  std::string blocking;
  std::string role;
  std::string peer;
  bool transcripts = false;
};

std::pair<std::string, uint16_t> SplitHostPort(const std::string& s) {
  const size_t colon = s.rfind(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::kParseError, "--peer needs host:port");
  }
  const int port = std::stoi(s.substr(colon + 1));
  if (port <= 0 || port > 65535) {
    throw Error(ErrorCode::kParseError, "bad port in --peer");
  }
  return {s.substr(0, colon), static_cast<uint16_t>(port)};
}

// One party in its own process; Alice listens, Bob connects.
int RunTwoProcess(const Globals& g, const RunFlags& f, ExperimentSpec s) {
  if (f.role != "alice" && f.role != "bob") {
    throw Error(ErrorCode::kParseError, "two-process mode needs --role");
  }
  if (f.peer.empty()) {
    throw Error(ErrorCode::kParseError, "two-process mode needs --peer");
  }
  const Party me = f.role == "alice" ? Party::kAlice : Party::kBob;
  const std::string data_path = me == Party::kAlice ? f.alice : f.bob;
  if (data_path.empty() || f.rule.empty() || f.blocking.empty()) {
    throw Error(ErrorCode::kParseError,
                "two-process mode needs the party's dataset, --rule and "
                "--blocking");
  }
  const Dataset own = ReadDataset(data_path, me);
  SweepJob job{f.protocol, f.eps, f.delta, 1, 0};
  ProtocolConfig cfg =
      JobConfig(s, job, ParseRule(f.rule), ParseBlocking(f.blocking));
  ValidateConfig(cfg);
  const auto [host, port] = SplitHostPort(f.peer);
  std::unique_ptr<Channel> channel;
  std::unique_ptr<TcpListener> listener;
  if (me == Party::kAlice) {
    listener = std::make_unique<TcpListener>(port, host);
    channel = listener->Accept(cfg.timeout);
  } else {
    channel = TcpConnect(host, port, cfg.timeout);
  }
  const PartyResult r = RunParty(me, own, cfg, *channel);
  channel->Close();
  std::ostringstream out;
  out << "a_id,b_id\n";
  for (const IdPair& p : r.output.Pairs()) {
    out << p.first.value << ',' << p.second.value << '\n';
  }
  Emit(g, f.role + "_output.csv", out.str());
  std::cerr << f.role << ": cost=" << r.cost << " outputs=" << r.output.size()
            << '\n';
  if (f.transcripts) {
    Emit(g, f.role + "_transcript.jsonl", r.transcript.DumpJsonLines());
  }
  return kExitOk;
}

int CmdRun(const Globals& g, const RunFlags& f, const DatasetFlags& d,
           CLI::App* app) {
  ExperimentSpec s = BaseSpec(g);
  ApplyDatasetFlags(d, app, s);
  if (g.parties != "single-process") {
    if (g.parties != "two-process") {
      throw Error(ErrorCode::kParseError,
                  "--parties must be single-process or two-process");
    }
    return RunTwoProcess(g, f, s);
  }
  if (!f.alice.empty() || !f.bob.empty()) {
    if (f.alice.empty() || f.bob.empty() || f.rule.empty() ||
        f.blocking.empty()) {
      throw Error(ErrorCode::kParseError,
                  "file input needs --alice, --bob, --rule and --blocking");
    }
    s.dataset = DatasetSpec{};
    s.dataset.kind = DatasetKind::kFile;
    s.dataset.alice_path = f.alice;
    s.dataset.bob_path = f.bob;
    s.dataset.rule = ParseRule(f.rule);
    s.dataset.blocking = ParseBlocking(f.blocking);
  }
  s.protocols = {f.protocol};
  ParseLabel(f.protocol);
  s.eps = {f.eps};
  s.delta = {f.delta};
  s.trials = 1;
  s.dataset.days = {s.dataset.days.front()};
  const SweepResult r = RunSweep(s);
  Emit(g, "results.csv", SweepCsv(r));
  const JobOutcome& o = r.jobs.front();
  if (!o.error.empty()) {
    std::cerr << "run failed: " << o.error << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int CmdSweep(const Globals& g) {
  if (g.config.empty()) {
    throw Error(ErrorCode::kParseError, "sweep needs --config");
  }
  const ExperimentSpec s = BaseSpec(g);
  const SweepResult r = RunSweep(s);
  Emit(g, "results.csv", SweepCsv(r));
  if (g.out.empty()) {
    std::cerr << SummaryJson(r) << '\n';
  } else {
    Emit(g, "summary.json", SummaryJson(r));
  }
  for (const SlopeSummary& sl : r.slopes) {
    std::fprintf(
        stderr, "slope %s eps=%s: %.4f over %d sizes\n", sl.protocol.c_str(),
        sl.eps ? std::to_string(*sl.eps).c_str() : "-", sl.slope, sl.points);
  }
  return kExitOk;
}

struct AuditFlags {
  std::string protocol = "lp";
  double eps = 1.6;
  double delta = 1e-5;
  int64_t trials = 100000;
  int64_t min_trials = 10000;
  std::string mode = "both";
  int n1 = 10;
  uint32_t k = 16;
  uint32_t top = 1;
  std::string center = "ceil";
};

int CmdAudit(const Globals& g, const AuditFlags& f) {
  json out;
  bool violated = false;
  if (f.protocol == "rr") {
    const RrRatioVerdict v = AuditRrRatio(f.k, f.top, f.eps);
    out = {{"protocol", "rr"},
           {"eps", f.eps},
           {"delta", 0},
           {"trials", 0},
           {"eps_hat", std::log(v.max_ratio)},
           {"violated", v.violated},
           {"instance",
            "k=" + std::to_string(f.k) + " top=" + std::to_string(f.top)},
           {"max_ratio", v.max_ratio},
           {"bound", v.bound}};
    violated = v.violated;
  } else if (f.protocol == "lp2" && f.mode != "white") {
    const Lp2Counterexample cx = RunLp2Counterexample(
        f.eps, f.delta, f.n1, f.trials, g.seed, f.min_trials);
    out = json::parse(VerdictToJson(cx.empirical));
    out["analytic"] = {{"p", cx.p},
                       {"view", cx.view},
                       {"view_prime", cx.view_prime},
                       {"violated", cx.analytic_violation}};
    violated = cx.empirical.violated || cx.analytic_violation;
    out["violated"] = violated;
  } else {
    const AuditInstance inst = MakeGridAuditInstance(g.seed);
    ProtocolConfig cfg;
    cfg.protocol = ParseProtocol(f.protocol);
    cfg.rule = inst.rule;
    cfg.blocking = inst.blocking;
    cfg.eps_a = cfg.eps_b = f.eps;
    cfg.delta_a = cfg.delta_b = f.delta;
    cfg.center =
        f.center == "exact" ? CenterMode::kExact : CenterMode::kCeiling;
    cfg.mode = ExecMode::kFast;
    if (cfg.protocol == ProtocolKind::kBlocking) cfg.noise = false;
    json checks = json::array();
    if (f.mode != "black") {
      const AuditVerdict w = WhiteBoxBinCounts(inst.pair, cfg);
      checks.push_back(json::parse(VerdictToJson(w)));
      violated = violated || w.violated;
    }
    if (f.mode != "white") {
      AuditConfig ac;
      ac.protocol = cfg;
      ac.trials = f.trials;
      ac.min_trials = f.min_trials;
      ac.seed = g.seed;
      const AuditVerdict b = AuditBinCounts(inst.alice, inst.pair, ac);
      checks.push_back(json::parse(VerdictToJson(b)));
      violated = violated || b.violated;
    }
    // The first check is the authoritative one.
    out = checks.front();
    out["violated"] = violated;
    out["instance"] = inst.description;
    out["checks"] = checks;
  }
  Emit(g, "audit.json", out.dump(2));
  return violated ? kExitViolation : kExitOk;
}

struct AttackFlags {
  std::string blocking = "grid";
  LshAttackSetup setup;
};

int CmdAttack(const Globals& g, const AttackFlags& f) {
  BlockingFn fn = GridTimeBlocking{};
  if (f.blocking == "daybrand") fn = DayBrandBlocking{};
  const LshAttackReport r = LshAttackDemo(fn, f.setup);
  const json out = {{"blocking", f.blocking},
                    {"bin_b", r.bin_b},
                    {"bin_bprime", r.bin_bprime},
                    {"cost_b", r.cost_b},
                    {"cost_bprime", r.cost_bprime},
                    {"difference", r.difference},
                    {"joins_equal", r.joins_equal},
                    {"distinguishes", r.difference != 0 && r.joins_equal}};
  Emit(g, "attack.json", out.dump(2));
  return kExitOk;
}

int Main(int argc, char** argv) {
  CLI::App app{"prlink: two-party private record linkage toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--config", g.config, "JSON experiment config");
  app.add_option("--out", g.out, "output directory (default stdout)");
  app.add_option("--transport", g.transport, "inproc or tcp")
      ->check(CLI::IsMember({"inproc", "tcp"}));
  app.add_option("--parties", g.parties, "single-process or two-process")
      ->check(CLI::IsMember({"single-process", "two-process"}));
  app.add_flag("--fast", g.fast,
               "stub secure comparisons with plaintext matching");

  DatasetFlags gen_d;
  CLI::App* gen = app.add_subcommand("gen", "write a synthetic dataset pair");
  AddDatasetFlags(gen, gen_d);

  RunFlags rf;
  DatasetFlags run_d;
  CLI::App* run = app.add_subcommand("run", "run one protocol once");
  AddDatasetFlags(run, run_d);
  run->add_option("--protocol", rf.protocol,
                  "apc, lp, lp2, rr, blocking, psi or psix, with +gmc/+sp");
  run->add_option("--eps", rf.eps, "privacy budget")
      ->check(CLI::PositiveNumber);
  run->add_option("--delta", rf.delta, "privacy slack");
  run->add_option("--alice", rf.alice, "Alice's dataset file");
  run->add_option("--bob", rf.bob, "Bob's dataset file");
  run->add_option("--rule", rf.rule, "match rule as JSON");
  run->add_option("--blocking", rf.blocking, "blocking function as JSON");
  run->add_option("--role", rf.role, "alice or bob (two-process mode)")
      ->check(CLI::IsMember({"alice", "bob"}));
  run->add_option("--peer", rf.peer, "host:port (two-process mode)");
  run->add_flag("--transcripts", rf.transcripts,
                "also write the party transcript (two-process mode)");

  CLI::App* sweep = app.add_subcommand("sweep", "run an experiment sweep");

  AuditFlags af;
  CLI::App* audit = app.add_subcommand("audit", "audit the DPRL guarantee");
  audit->add_option("--protocol", af.protocol, "lp, lp2, blocking or rr")
      ->check(CLI::IsMember({"lp", "lp2", "blocking", "rr"}));
  audit->add_option("--eps", af.eps, "claimed eps")->check(CLI::PositiveNumber);
  audit->add_option("--delta", af.delta, "claimed delta");
  audit->add_option("--trials", af.trials, "trials per neighbor");
  audit->add_option("--min-trials", af.min_trials, "smallest trial count");
  audit->add_option("--mode", af.mode, "white, black or both")
      ->check(CLI::IsMember({"white", "black", "both"}));
  audit->add_option("--n1", af.n1, "matching records in the lp2 instance");
  audit->add_option("--k", af.k, "rr bins");
  audit->add_option("--top", af.top, "rr boosted offsets");
  audit->add_option("--center", af.center, "ceil or exact noise shift")
      ->check(CLI::IsMember({"ceil", "exact"}));

  AttackFlags atf;
  CLI::App* attack =
      app.add_subcommand("attack-lsh", "cost side channel of plain blocking");
  attack->add_option("--blocking", atf.blocking, "grid or daybrand")
      ->check(CLI::IsMember({"grid", "daybrand"}));
  attack->add_option("--alice-at-b", atf.setup.alice_at_b,
                     "Alice records in b's bin");
  attack->add_option("--alice-at-bprime", atf.setup.alice_at_bprime,
                     "Alice records in b''s bin");
  attack->add_flag("--same-bin", atf.setup.same_bin, "put b' in b's bin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  try {
    if (*gen) return CmdGen(g, gen_d, gen);
    if (*run) return CmdRun(g, rf, run_d, run);
    if (*sweep) return CmdSweep(g);
    if (*audit) return CmdAudit(g, af);
    if (*attack) return CmdAttack(g, atf);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kParseError ||
                   e.code() == ErrorCode::kInvalidParams
               ? kExitUsage
               : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace
}  // namespace prlink

int main(int argc, char** argv) { return prlink::Main(argc, argv); }

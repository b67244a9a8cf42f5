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
#include "prlink/protocols.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <memory>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "prlink/rr.h"
#include "prlink/secure_match.h"

namespace prlink {
namespace {

// RNG streams per party; Bob's are offset by kBobStreams.
constexpr uint64_t kNoiseStream = 1;
constexpr uint64_t kCryptoStream = 2;
constexpr uint64_t kHandleStream = 3;
constexpr uint64_t kBobStreams = 16;

bool IsPsiFamily(ProtocolKind k) {
  return k == ProtocolKind::kPsi || k == ProtocolKind::kPsix;
}

[[noreturn]] void Mismatch(const std::string& what) {
  throw Error(ErrorCode::kProtocolAbort, what);
}

[[noreturn]] void Unexpected(const std::string& what) {
  throw Error(ErrorCode::kFramingError, what);
}

void SortById(std::vector<Record>& bin) {
  std::sort(bin.begin(), bin.end(),
            [](const Record& x, const Record& y) { return x.id < y.id; });
}

class Session {
 public:
  Session(Party me, const Dataset& own, const ProtocolConfig& cfg,
          Channel& channel)
      : me_(me),
        own_(own),
        cfg_(cfg),
        channel_(channel),
        ep_(channel, result_.transcript),
        noise_rng_(Stream(kNoiseStream)),
        crypto_rng_(Stream(kCryptoStream)),
        handle_rng_(Stream(kHandleStream)) {
    result_.party = me;
    result_.transcript = Transcript(me);
  }

  PartyResult Run() {
    try {
      if (IsPsiFamily(cfg_.protocol)) {
        RunPsi();
      } else {
        RunBlocked();
      }
      FinalSync();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kProtocolAbort) ep_.SendAbort(e.what());
      channel_.Close();
      throw;
    } catch (const std::exception& e) {
      ep_.SendAbort(e.what());
      channel_.Close();
      throw;
    }
    result_.transcript.MarkComplete();
    result_.cost = cost_;
    result_.output = output_;
    result_.discovery = discovery_;
    return std::move(result_);
  }

 private:
  bool alice() const { return me_ == Party::kAlice; }
  bool secure() const { return cfg_.mode == ExecMode::kSecure; }

  Rng Stream(uint64_t s) const {
    return MakeRng(cfg_.seed, me_ == Party::kAlice ? s : s + kBobStreams);
  }

  uint64_t FreshHandle() { return handle_rng_(); }

  // (Alice id, Bob id) for an own and a peer record.
  IdPair PairOf(RecordId own, RecordId peer) const {
    return alice() ? IdPair{own, peer} : IdPair{peer, own};
  }

  bool Match(const Record& own, const Record& peer) const {
    return alice() ? EvaluateMatch(own, peer, cfg_.rule)
                   : EvaluateMatch(peer, own, cfg_.rule);
  }

  bool AddPair(const IdPair& p, Provenance prov) {
    if (!output_.Add(p, prov)) return false;
    discovery_.push_back(p);
    return true;
  }

  RecordId OwnIdOf(const IdPair& p) const {
    return alice() ? p.first : p.second;
  }
  RecordId PeerIdOf(const IdPair& p) const {
    return alice() ? p.second : p.first;
  }

  void Learn(const Record& peer) {
    if (peer.is_dummy() || IsDummyId(peer.id)) {
      Mismatch("peer revealed a dummy record");
    }
    if (peer_known_.emplace(peer.id, peer).second) pending_.push_back(peer.id);
  }

  void ExchangeKey() {
    if (!secure()) return;
    if (alice()) {
      key_ = KeyPair::Generate(cfg_.key_bits, crypto_rng_, cfg_.min_key_bits);
      pk_ = key_->pub();
      ep_.Send(KeyAnnounce{pk_.n});
    } else {
      pk_.n = ep_.Recv<KeyAnnounce>().n;
      pk_.bits = static_cast<int>(mpz_sizeinbase(pk_.n.get_mpz_t(), 2));
      if (pk_.bits < cfg_.min_key_bits) {
        throw Error(ErrorCode::kWeakKey, "announced modulus is too short");
      }
      pk_.n2 = pk_.n * pk_.n;
    }
  }

  std::vector<int64_t> ExchangeCounts(const std::vector<int64_t>& mine) {
    std::vector<int64_t> theirs;
    if (alice()) {
      ep_.Send(BinCountsAnnounce{mine});
      theirs = ep_.Recv<BinCountsAnnounce>().counts;
    } else {
      theirs = ep_.Recv<BinCountsAnnounce>().counts;
      ep_.Send(BinCountsAnnounce{mine});
    }
    if (theirs.size() != mine.size()) {
      Unexpected("bin count vectors differ in length");
    }
    return theirs;
  }

  BinnedDataset Bin() {
    switch (cfg_.protocol) {
      case ProtocolKind::kApc: {
        BinnedDataset b;
        b.bins.resize(1);
        b.bins[0].assign(own_.records().begin(), own_.records().end());
        SortById(b.bins[0]);
        b.real_records = own_.size();
        return b;
      }
      case ProtocolKind::kRr: {
        const auto& fn = std::get<ModHashBlocking>(cfg_.blocking);
        const uint32_t top = alice() ? cfg_.rr.top_alice : cfg_.rr.top_bob;
        const double eps = alice() ? cfg_.eps_a : cfg_.eps_b;
        return RrAssignBins(fn, own_, RrOffsetProbs(fn.k, top, eps),
                            noise_rng_);
      }
      default:
        return AssignBins(cfg_.blocking, own_);
    }
  }

  void Pad(BinnedDataset& bins) {
    if (!cfg_.noise) return;
    const double eps = alice() ? cfg_.eps_a : cfg_.eps_b;
    const double delta = alice() ? cfg_.delta_a : cfg_.delta_b;
    const int sens = Sensitivity(cfg_.blocking);
    DummyIdAllocator ids;
    if (cfg_.protocol == ProtocolKind::kLp) {
      const TruncatedLaplace lap =
          TruncatedLaplace::Create(eps, delta, sens, cfg_.center);
      result_.receipts = PadBins(bins, lap.law(), noise_rng_, ids, like_);
    } else if (cfg_.protocol == ProtocolKind::kLp2) {
      result_.receipts = PadBinsSigned(bins, ZeroMeanDiscreteLaplace(eps, sens),
                                       noise_rng_, ids, like_);
    }
    for (auto& bin : bins.bins) SortById(bin);
  }

  void RunBlocked() {
    ExchangeKey();
    like_ = DefaultLike(cfg_, own_);
    if (secure()) shape_ = ShapeFor(cfg_.rule, like_);
    BinnedDataset bins = Bin();
    Pad(bins);
    const std::vector<int64_t> mine = bins.Counts();
    const std::vector<int64_t> theirs = ExchangeCounts(mine);
    const std::vector<int64_t>& ac = alice() ? mine : theirs;
    const std::vector<int64_t>& bc = alice() ? theirs : mine;
    for (int64_t c : theirs) peer_total_ += static_cast<size_t>(c);
    std::vector<BinPair> strategy;
    if (cfg_.protocol == ProtocolKind::kApc) {
      strategy.push_back({0, 0});
    } else {
      strategy = Strategy(cfg_.blocking);
    }
    live_ = std::move(bins.bins);
    for (uint32_t i = 0; i < live_.size(); ++i) {
      for (const Record& r : live_[i]) {
        if (!r.is_dummy()) home_bins_[r.id].push_back(i);
      }
    }
    const std::vector<PlanGroup> plan = BuildPlan(strategy, ac, bc, cfg_.sp);
    for (const PlanGroup& g : plan) {
      for (const BinPair& bp : g.pairs) {
        // An announced empty bin stays empty, so both sides skip the pair.
        if (ac[bp.a] == 0 || bc[bp.b] == 0) continue;
        const bool matched = alice() ? AliceBatch(bp) : BobBatch(bp);
        if (matched && cfg_.gmc) Gmc();
      }
      result_.checkpoints.push_back(
          Checkpoint{g.percentile, g.threshold, cost_, discovery_.size()});
    }
  }

  const std::vector<Ciphertext>& Encrypted(const Record& r) {
    auto it = enc_cache_.find(r.id);
    if (it != enc_cache_.end()) return it->second;
    const std::vector<int64_t> x = DistanceAttributes(shape_, cfg_.rule, r);
    return enc_cache_[r.id] = EncryptAttributes(pk_, shape_, x, crypto_rng_);
  }

  const std::vector<int64_t>& Attributes(const Record& r) {
    auto it = attr_cache_.find(r.id);
    if (it != attr_cache_.end()) return it->second;
    return attr_cache_[r.id] = DistanceAttributes(shape_, cfg_.rule, r);
  }

  bool AliceBatch(const BinPair& bp) {
    const std::vector<Record>& live = live_[bp.a];
    EncRecordBatch batch;
    batch.bin_a = bp.a;
    batch.bin_b = bp.b;
    batch.mode = secure() ? BatchMode::kEncrypted : BatchMode::kPlain;
    std::unordered_map<uint64_t, const Record*> by_handle;
    for (const Record& r : live) {
      EncRecordBatch::Entry e;
      do {
        e.handle = FreshHandle();
      } while (by_handle.count(e.handle) > 0);
      if (secure()) {
        e.enc = Encrypted(r);
      } else {
        e.plain = r;
      }
      by_handle[e.handle] = &r;
      batch.entries.push_back(std::move(e));
    }
    ep_.Send(batch);
    size_t slots = 0;
    if (secure()) {
      const BlindedDistance bd = ep_.Recv<BlindedDistance>();
      OracleRelay relay;
      relay.values.reserve(bd.entries.size());
      for (const auto& e : bd.entries) {
        relay.values.push_back(key_->Decrypt(e.value));
      }
      slots = bd.entries.size();
      ep_.Send(relay);
    }
    const CompareVerdict v = ep_.Recv<CompareVerdict>();
    if (secure() && v.bits.size() != slots) {
      Unexpected("verdict length differs from the blinded batch");
    }
    cost_ += static_cast<int64_t>(v.bits.size());
    const auto matches = std::count(v.bits.begin(), v.bits.end(), true);
    const MatchAnnounce theirs = ep_.Recv<MatchAnnounce>();
    if (static_cast<int64_t>(theirs.entries.size()) != matches) {
      Unexpected("match announcement differs from the verdict");
    }
    MatchAnnounce reply;
    for (const auto& e : theirs.entries) {
      auto it = by_handle.find(e.handle_a);
      if (it == by_handle.end()) Unexpected("unknown record handle");
      const Record& a = *it->second;
      if (!Match(a, e.record)) Mismatch("decryption mismatch on a verdict");
      reply.entries.push_back({e.handle_a, e.handle_b, a});
      Learn(e.record);
      revealed_.insert(a.id);
      AddPair(PairOf(a.id, e.record.id), Provenance::kCompare);
    }
    ep_.Send(reply);
    return matches > 0;
  }

  bool BobBatch(const BinPair& bp) {
    const EncRecordBatch batch = ep_.Recv<EncRecordBatch>();
    if (batch.bin_a != bp.a || batch.bin_b != bp.b) {
      Unexpected("batch for an unexpected bin pair");
    }
    if (batch.mode != (secure() ? BatchMode::kEncrypted : BatchMode::kPlain)) {
      Unexpected("batch mode does not match the session");
    }
    const std::vector<Record>& live = live_[bp.b];
    struct Slot {
      uint64_t handle_a;
      uint64_t handle_b;
      const Record* b;
    };
    std::vector<Slot> slots;
    std::vector<bool> bits;
    if (secure()) {
      BlindedDistance bd;
      std::vector<mpz_class> bounds;
      for (const auto& e : batch.entries) {
        if (e.enc.size() != shape_.CiphertextCount()) {
          throw Error(ErrorCode::kIncompatiblePayload,
                      "encrypted record does not fit the distance shape");
        }
        for (const Record& b : live) {
          const mpz_class r = RandomBits(crypto_rng_, kBlindingBits);
          const uint64_t hb = FreshHandle();
          bd.entries.push_back({e.handle, hb,
                                BlindDistance(pk_, shape_, e.enc, Attributes(b),
                                              r, crypto_rng_)});
          bounds.push_back(
              mpz_class(static_cast<unsigned long>(shape_.threshold)) + r);
          slots.push_back({e.handle, hb, &b});
        }
      }
      ep_.Send(bd);
      const OracleRelay relay = ep_.Recv<OracleRelay>();
      if (relay.values.size() != bounds.size()) {
        Unexpected("oracle relay length differs from the batch");
      }
      for (size_t i = 0; i < bounds.size(); ++i) {
        bits.push_back(oracle_.LessOrEqual(relay.values[i], bounds[i]));
      }
    } else {
      for (const auto& e : batch.entries) {
        if (!e.plain.has_value()) Unexpected("plain batch without records");
        for (const Record& b : live) {
          slots.push_back({e.handle, FreshHandle(), &b});
          bits.push_back(EvaluateMatch(*e.plain, b, cfg_.rule));
        }
      }
    }
    ep_.Send(CompareVerdict{bits});
    cost_ += static_cast<int64_t>(bits.size());
    MatchAnnounce mine;
    std::vector<const Record*> matched;
    for (size_t i = 0; i < bits.size(); ++i) {
      if (!bits[i]) continue;
      mine.entries.push_back(
          {slots[i].handle_a, slots[i].handle_b, *slots[i].b});
      matched.push_back(slots[i].b);
    }
    ep_.Send(mine);
    const MatchAnnounce theirs = ep_.Recv<MatchAnnounce>();
    if (theirs.entries.size() != mine.entries.size()) {
      Unexpected("match announcement lengths differ");
    }
    for (size_t i = 0; i < theirs.entries.size(); ++i) {
      const auto& e = theirs.entries[i];
      if (e.handle_a != mine.entries[i].handle_a ||
          e.handle_b != mine.entries[i].handle_b) {
        Unexpected("match announcement handles differ");
      }
      const Record& b = *matched[i];
      if (!Match(b, e.record)) Mismatch("decryption mismatch on a verdict");
      Learn(e.record);
      revealed_.insert(b.id);
      AddPair(PairOf(b.id, e.record.id), Provenance::kCompare);
    }
    return !matched.empty();
  }

  void RemoveOutputFromLive() {
    for (; removed_upto_ < discovery_.size(); ++removed_upto_) {
      const RecordId id = OwnIdOf(discovery_[removed_upto_]);
      auto it = home_bins_.find(id);
      if (it == home_bins_.end()) continue;
      for (uint32_t bin : it->second) {
        std::erase_if(live_[bin], [&](const Record& r) { return r.id == id; });
      }
      home_bins_.erase(it);
    }
  }

  // Own real records that may match the peer record.
  const std::vector<const Record*>& Candidates(const Record& peer) {
    if (partitions_.empty()) {
      for (const Record& r : own_.records()) {
        partitions_[PartitionKey(r, cfg_.rule).value_or(0)].push_back(&r);
      }
    }
    static const std::vector<const Record*> kNone;
    auto it = partitions_.find(PartitionKey(peer, cfg_.rule).value_or(0));
    return it == partitions_.end() ? kNone : it->second;
  }

  // Removes own output records, plain-matches newly revealed peer records
  // against the full dataset and sends the new pairs.
  bool GmcTurn() {
    RemoveOutputFromLive();
    OutputSync sync;
    for (RecordId id : pending_) {
      const Record& peer = peer_known_.at(id);
      for (const Record* rp : Candidates(peer)) {
        const Record& r = *rp;
        if (!Match(r, peer)) continue;
        const IdPair p = PairOf(r.id, peer.id);
        if (!AddPair(p, Provenance::kPlainMatch)) continue;
        sync.pairs.push_back(p);
        if (revealed_.insert(r.id).second) sync.revealed.push_back(r);
      }
    }
    pending_.clear();
    ep_.Send(sync);
    return !sync.pairs.empty();
  }

  bool ApplySync(const OutputSync& sync) {
    if (sync.final) Unexpected("final output sync inside greedy cleaning");
    for (const Record& r : sync.revealed) Learn(r);
    for (const IdPair& p : sync.pairs) {
      const Record* own = own_.Find(OwnIdOf(p));
      auto it = peer_known_.find(PeerIdOf(p));
      if (own == nullptr || it == peer_known_.end()) {
        Mismatch("output sync names an unknown record");
      }
      if (!Match(*own, it->second)) Mismatch("output sync pair does not match");
      AddPair(p, Provenance::kPlainMatch);
    }
    return !sync.pairs.empty();
  }

  void Gmc() {
    // Announced counts bound the peer's dataset size from above.
    const int64_t cap = static_cast<int64_t>(own_.size() + peer_total_);
    for (int64_t round = 1;; ++round) {
      if (round > cap) {
        throw Error(ErrorCode::kProtocolAbort,
                    "greedy match and clean exceeded its round cap");
      }
      ++result_.gmc_rounds;
      if (alice()) {
        GmcTurn();
        if (!ApplySync(ep_.Recv<OutputSync>())) return;
      } else {
        ApplySync(ep_.Recv<OutputSync>());
        if (!GmcTurn()) return;
      }
    }
  }

  void FinalSync() {
    OutputSync mine;
    mine.final = true;
    const std::set<IdPair> pairs = output_.Pairs();
    mine.pairs.assign(pairs.begin(), pairs.end());
    OutputSync theirs;
    if (alice()) {
      ep_.Send(mine);
      theirs = ep_.Recv<OutputSync>();
    } else {
      theirs = ep_.Recv<OutputSync>();
      ep_.Send(mine);
    }
    if (!theirs.final || theirs.pairs != mine.pairs) {
      Mismatch("parties finished with different outputs");
    }
  }

  void RunPsi() {
    ExchangeKey();
    like_ = DefaultLike(cfg_, own_);
    const std::vector<int64_t> theirs =
        ExchangeCounts({static_cast<int64_t>(own_.size())});
    result_.peer_size = static_cast<size_t>(std::max<int64_t>(theirs[0], 0));
    if (cfg_.protocol == ProtocolKind::kPsix) {
      result_.gamma = ExpansionFactor(cfg_.rule, like_);
      if (alice()) {
        CheckExpansion(own_.size(), result_.gamma, cfg_.expansion_cap);
      }
    }
    if (alice()) {
      PsiAlice();
    } else {
      PsiBob();
    }
  }

  void PsiAlice() {
    EncRecordBatch batch;
    std::unordered_map<uint64_t, const Record*> by_handle;
    std::unordered_map<uint64_t, std::vector<const Record*>> by_key;
    if (secure()) {
      std::vector<uint64_t> keys;
      if (cfg_.protocol == ProtocolKind::kPsix) {
        const ExpandedDataset x =
            ExpandForPsix(own_, cfg_.rule, cfg_.expansion_cap);
        for (size_t i = 0; i < x.points.size(); ++i) {
          keys.push_back(PayloadKey(x.points[i].payload));
          auto& v = by_key[keys.back()];
          const Record* origin = own_.Find(x.origin[i]);
          if (std::find(v.begin(), v.end(), origin) == v.end()) {
            v.push_back(origin);
          }
        }
      } else {
        for (const Record& r : own_.records()) {
          keys.push_back(PayloadKey(r.payload));
          by_key[keys.back()].push_back(&r);
        }
      }
      const PsiPolynomials polys =
          BuildPsiPolynomials(keys, PsiBucketCount(by_key.size()), pk_.n);
      auto enc = EncryptPolynomials(pk_, polys, crypto_rng_);
      result_.encrypted_ops +=
          static_cast<int64_t>(polys.buckets * (polys.degree + 1));
      batch.bin_a = polys.buckets;
      batch.bin_b = static_cast<uint32_t>(polys.degree);
      batch.mode = BatchMode::kEncrypted;
      for (uint32_t i = 0; i < polys.buckets; ++i) {
        EncRecordBatch::Entry e;
        e.handle = i;
        e.enc = std::move(enc[i]);
        batch.entries.push_back(std::move(e));
      }
    } else {
      batch.mode = BatchMode::kPlain;
      for (const Record& r : own_.records()) {
        EncRecordBatch::Entry e;
        do {
          e.handle = FreshHandle();
        } while (by_handle.count(e.handle) > 0);
        e.plain = r;
        by_handle[e.handle] = &r;
        batch.entries.push_back(std::move(e));
      }
    }
    ep_.Send(batch);
    MatchAnnounce claims;
    std::vector<const Record*> claimed;
    if (secure()) {
      const BlindedDistance bd = ep_.Recv<BlindedDistance>();
      result_.encrypted_ops += static_cast<int64_t>(bd.entries.size());
      for (const auto& e : bd.entries) {
        const mpz_class v = key_->Decrypt(e.value);
        if (!v.fits_ulong_p()) continue;
        auto it = by_key.find(v.get_ui());
        if (it == by_key.end()) continue;
        for (const Record* a : it->second) {
          claims.entries.push_back({0, e.handle_b, *a});
          claimed.push_back(a);
        }
      }
      ep_.Send(claims);
      const MatchAnnounce replies = ep_.Recv<MatchAnnounce>();
      std::unordered_map<uint64_t, const Record*> bob_by_handle;
      for (const auto& e : replies.entries)
        bob_by_handle[e.handle_b] = &e.record;
      for (size_t i = 0; i < claims.entries.size(); ++i) {
        auto it = bob_by_handle.find(claims.entries[i].handle_b);
        if (it == bob_by_handle.end()) Unexpected("missing PSI reply");
        if (Match(*claimed[i], *it->second)) {
          AddPair(PairOf(claimed[i]->id, it->second->id), Provenance::kPsi);
        }
      }
    } else {
      const MatchAnnounce theirs = ep_.Recv<MatchAnnounce>();
      MatchAnnounce reply;
      for (const auto& e : theirs.entries) {
        auto it = by_handle.find(e.handle_a);
        if (it == by_handle.end()) Unexpected("unknown record handle");
        if (!Match(*it->second, e.record)) Mismatch("PSI pair does not match");
        reply.entries.push_back({e.handle_a, e.handle_b, *it->second});
        AddPair(PairOf(it->second->id, e.record.id), Provenance::kPsi);
      }
      ep_.Send(reply);
    }
  }

  void PsiBob() {
    const EncRecordBatch batch = ep_.Recv<EncRecordBatch>();
    if (batch.mode != (secure() ? BatchMode::kEncrypted : BatchMode::kPlain)) {
      Unexpected("batch mode does not match the session");
    }
    if (secure()) {
      const uint32_t buckets = static_cast<uint32_t>(batch.entries.size());
      if (buckets == 0) Unexpected("no PSI polynomials");
      BlindedDistance bd;
      std::unordered_map<uint64_t, const Record*> by_handle;
      for (const Record& b : own_.records()) {
        const uint64_t key = PayloadKey(b.payload);
        const auto& coeffs = batch.entries[PsiBucket(key, buckets)].enc;
        uint64_t hb;
        do {
          hb = FreshHandle();
        } while (by_handle.count(hb) > 0);
        by_handle[hb] = &b;
        bd.entries.push_back(
            {0, hb, EvaluateMasked(pk_, coeffs, key, crypto_rng_)});
        result_.encrypted_ops += PsiOpsPerKey(coeffs.size() - 1);
      }
      std::shuffle(bd.entries.begin(), bd.entries.end(), crypto_rng_);
      ep_.Send(bd);
      const MatchAnnounce claims = ep_.Recv<MatchAnnounce>();
      MatchAnnounce replies;
      std::unordered_set<uint64_t> answered;
      for (const auto& e : claims.entries) {
        auto it = by_handle.find(e.handle_b);
        if (it == by_handle.end()) Unexpected("unknown PSI handle");
        if (answered.insert(e.handle_b).second) {
          replies.entries.push_back({0, e.handle_b, *it->second});
        }
        if (Match(*it->second, e.record)) {
          AddPair(PairOf(it->second->id, e.record.id), Provenance::kPsi);
        }
      }
      ep_.Send(replies);
      return;
    }
    std::vector<Record> theirs;
    std::unordered_map<RecordId, uint64_t> handle_of;
    for (const auto& e : batch.entries) {
      if (!e.plain.has_value()) Unexpected("plain batch without records");
      theirs.push_back(*e.plain);
      handle_of[e.plain->id] = e.handle;
    }
    const Dataset alice_data(Party::kAlice, std::move(theirs));
    std::set<IdPair> pairs;
    if (cfg_.protocol == ProtocolKind::kPsix) {
      pairs = PlaintextJoin(alice_data, own_, cfg_.rule);
    } else {
      std::unordered_map<uint64_t, std::vector<const Record*>> by_key;
      for (const Record& b : own_.records()) {
        by_key[PayloadKey(b.payload)].push_back(&b);
      }
      for (const Record& a : alice_data.records()) {
        auto it = by_key.find(PayloadKey(a.payload));
        if (it == by_key.end()) continue;
        for (const Record* b : it->second) {
          if (EvaluateMatch(a, *b, cfg_.rule)) pairs.emplace(a.id, b->id);
        }
      }
    }
    MatchAnnounce mine;
    for (const IdPair& p : pairs) {
      mine.entries.push_back(
          {handle_of.at(p.first), FreshHandle(), *own_.Find(p.second)});
    }
    ep_.Send(mine);
    const MatchAnnounce reply = ep_.Recv<MatchAnnounce>();
    if (reply.entries.size() != mine.entries.size()) {
      Unexpected("PSI reply length differs");
    }
    for (size_t i = 0; i < reply.entries.size(); ++i) {
      const Record& b = mine.entries[i].record;
      if (!Match(b, reply.entries[i].record)) {
        Mismatch("PSI pair does not match");
      }
      AddPair(PairOf(b.id, reply.entries[i].record.id), Provenance::kPsi);
    }
  }

  Party me_;
  const Dataset& own_;
  const ProtocolConfig& cfg_;
  Channel& channel_;
  PartyResult result_;
  Endpoint ep_;
  Rng noise_rng_;
  Rng crypto_rng_;
  Rng handle_rng_;

  std::optional<KeyPair> key_;
  PublicKey pk_;
  DistanceShape shape_;
  TrustedSimulator oracle_;
  Payload like_;

  std::vector<std::vector<Record>> live_;
  std::unordered_map<RecordId, std::vector<Ciphertext>> enc_cache_;
  std::unordered_map<RecordId, std::vector<int64_t>> attr_cache_;
  std::unordered_map<RecordId, Record> peer_known_;
  std::unordered_map<uint64_t, std::vector<const Record*>> partitions_;
  std::vector<RecordId> pending_;
  std::unordered_set<RecordId> revealed_;
  MatchOutput output_;
  std::vector<IdPair> discovery_;
  std::unordered_map<RecordId, std::vector<uint32_t>> home_bins_;
  size_t removed_upto_ = 0;
  int64_t cost_ = 0;
  size_t peer_total_ = 0;
};

bool IsPeerFailure(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const Error& err) {
    return err.code() == ErrorCode::kProtocolAbort ||
           err.code() == ErrorCode::kClosed ||
           err.code() == ErrorCode::kTimeout;
  } catch (...) {
    return false;
  }
}

}  // namespace

std::string_view ProtocolName(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::kApc:
      return "apc";
    case ProtocolKind::kLp:
      return "lp";
    case ProtocolKind::kLp2:
      return "lp2";
    case ProtocolKind::kRr:
      return "rr";
    case ProtocolKind::kBlocking:
      return "blocking";
    case ProtocolKind::kPsi:
      return "psi";
    case ProtocolKind::kPsix:
      return "psix";
  }
  return "unknown";
}

ProtocolKind ParseProtocol(std::string_view name) {
  for (ProtocolKind k :
       {ProtocolKind::kApc, ProtocolKind::kLp, ProtocolKind::kLp2,
        ProtocolKind::kRr, ProtocolKind::kBlocking, ProtocolKind::kPsi,
        ProtocolKind::kPsix}) {
    if (ProtocolName(k) == name) return k;
  }
  throw Error(ErrorCode::kInvalidParams,
              "unknown protocol '" + std::string(name) + "'");
}

void ValidateConfig(const ProtocolConfig& cfg) {
  auto fail = [](const std::string& m) {
    throw Error(ErrorCode::kInvalidParams, m);
  };
  const bool dp = cfg.noise && (cfg.protocol == ProtocolKind::kLp ||
                                cfg.protocol == ProtocolKind::kLp2);
  if (dp) {
    for (double e : {cfg.eps_a, cfg.eps_b}) {
      if (!(e > 0) || std::isinf(e)) fail("eps must be positive and finite");
    }
  }
  if (dp && cfg.protocol == ProtocolKind::kLp) {
    for (double d : {cfg.delta_a, cfg.delta_b}) {
      if (!(d > 0 && d < 1)) fail("delta must lie in (0, 1)");
    }
  }
  if (cfg.protocol == ProtocolKind::kRr) {
    const auto* fn = std::get_if<ModHashBlocking>(&cfg.blocking);
    if (fn == nullptr) fail("RR needs mod-hash blocking");
    if (!(cfg.eps_a >= 0) || !(cfg.eps_b >= 0)) fail("eps must be >= 0");
    for (uint32_t top : {cfg.rr.top_alice, cfg.rr.top_bob}) {
      if (top < 1 || top > fn->window) fail("RR top offsets outside window");
    }
  }
  if (cfg.sp.has_value()) {
    const auto& sp = *cfg.sp;
    const auto& v = sp.thresholds.empty() ? sp.percentiles : sp.thresholds;
    if (v.empty()) fail("sort & prune needs thresholds");
    for (size_t i = 1; i < v.size(); ++i) {
      if (!(v[i] < v[i - 1])) fail("sort & prune thresholds must descend");
    }
    if (sp.thresholds.empty()) {
      for (double p : v) {
        if (p < 0 || p > 100) fail("percentiles must lie in [0, 100]");
      }
    }
  }
}

double NearestRankThreshold(std::vector<int64_t> values, double percentile) {
  if (values.empty() || percentile <= 0) return -1;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  size_t rank = static_cast<size_t>(std::ceil(percentile / 100.0 * n));
  rank = std::clamp<size_t>(rank, 1, values.size());
  return static_cast<double>(values[rank - 1]);
}

std::vector<PlanGroup> BuildPlan(const std::vector<BinPair>& strategy,
                                 const std::vector<int64_t>& alice_counts,
                                 const std::vector<int64_t>& bob_counts,
                                 const std::optional<SortPruneConfig>& sp) {
  if (!sp.has_value()) {
    PlanGroup g;
    g.pairs = strategy;
    return {g};
  }
  std::vector<double> thresholds = sp->thresholds;
  std::vector<double> percentiles(thresholds.size(),
                                  std::numeric_limits<double>::quiet_NaN());
  if (thresholds.empty()) {
    std::vector<int64_t> pooled = alice_counts;
    pooled.insert(pooled.end(), bob_counts.begin(), bob_counts.end());
    for (double p : sp->percentiles) {
      thresholds.push_back(NearestRankThreshold(pooled, p));
      percentiles.push_back(p);
    }
  }
  std::vector<bool> taken(strategy.size(), false);
  std::vector<PlanGroup> plan;
  for (size_t l = 0; l < thresholds.size(); ++l) {
    PlanGroup g;
    g.percentile = percentiles[l];
    g.threshold = thresholds[l];
    for (size_t i = 0; i < strategy.size(); ++i) {
      if (taken[i]) continue;
      const BinPair& bp = strategy[i];
      if (static_cast<double>(alice_counts[bp.a]) > g.threshold &&
          static_cast<double>(bob_counts[bp.b]) > g.threshold) {
        g.pairs.push_back(bp);
        taken[i] = true;
      }
    }
    plan.push_back(std::move(g));
  }
  if (!sp->prune) {
    PlanGroup rest;
    rest.threshold = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < strategy.size(); ++i) {
      if (!taken[i]) rest.pairs.push_back(strategy[i]);
    }
    if (!rest.pairs.empty()) plan.push_back(std::move(rest));
  }
  return plan;
}

double LpExpectedCostBound(int64_t blocked_cost, double c_eta, uint32_t c_b,
                           uint32_t k, size_t n) {
  return static_cast<double>(blocked_cost) + c_eta * c_eta * c_b * k +
         2 * c_eta * c_b * static_cast<double>(n);
}

Payload DefaultLike(const ProtocolConfig& cfg, const Dataset& own) {
  if (!own.empty()) return own.at(0).payload;
  if (const auto* g = std::get_if<GridTimeBlocking>(&cfg.blocking)) {
    return GridPoint{g->grid.lat_min_e6, g->grid.lon_min_e6, 0, 0};
  }
  if (std::holds_alternative<DayBrandBlocking>(cfg.blocking) ||
      std::holds_alternative<HammingThreshold>(cfg.rule.get())) {
    return BitVector{0, 50, 0, 0};
  }
  if (std::holds_alternative<EuclideanThreshold>(cfg.rule.get())) {
    return GridPoint{};
  }
  return Generic{};
}

PartyResult RunParty(Party me, const Dataset& own, const ProtocolConfig& cfg,
                     Channel& channel) {
  ValidateConfig(cfg);
  Session s(me, own, cfg, channel);
  return s.Run();
}

RunResult RunProtocol(const Dataset& a, const Dataset& b,
                      const ProtocolConfig& cfg,
                      const std::set<IdPair>* truth) {
  ValidateConfig(cfg);
  std::set<IdPair> computed;
  if (truth == nullptr) {
    computed = PlaintextJoin(a, b, cfg.rule);
    truth = &computed;
  }
  auto [ca, cb] = cfg.transport == TransportKind::kTcp
                      ? MakeTcpLoopbackPair(cfg.timeout)
                      : MakeInProcessPair(cfg.timeout);
  const auto start = std::chrono::steady_clock::now();
  std::optional<PartyResult> ra;
  std::optional<PartyResult> rb;
  std::exception_ptr ea;
  std::exception_ptr eb;
  std::thread bob([&] {
    try {
      rb = RunParty(Party::kBob, b, cfg, *cb);
    } catch (...) {
      eb = std::current_exception();
    }
  });
  try {
    ra = RunParty(Party::kAlice, a, cfg, *ca);
  } catch (...) {
    ea = std::current_exception();
  }
  bob.join();
  if (ea || eb) {
    if (ea && (!eb || !IsPeerFailure(ea))) std::rethrow_exception(ea);
    std::rethrow_exception(eb);
  }
  RunResult r;
  r.wall_ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - start)
                  .count();
  if (ra->cost != rb->cost) {
    throw Error(ErrorCode::kProtocolAbort, "parties disagree on the cost");
  }
  r.output = ra->output;
  r.gamma = ra->gamma;
  r.encrypted_ops = ra->encrypted_ops + rb->encrypted_ops;
  r.gmc_rounds = ra->gmc_rounds;
  if (IsPsiFamily(cfg.protocol)) {
    r.model_cost = PsiCostModel(r.gamma, std::max(a.size(), b.size()));
    r.cost = std::llround(r.model_cost);
  } else {
    r.cost = ra->cost;
    r.model_cost = static_cast<double>(r.cost);
  }
  r.recall = Recall(r.output.Pairs(), *truth);
  for (const Checkpoint& c : ra->checkpoints) {
    const std::set<IdPair> prefix(ra->discovery.begin(),
                                  ra->discovery.begin() + c.outputs);
    r.checkpoints.push_back({c, Recall(prefix, *truth)});
  }
  r.alice_transcript = std::move(ra->transcript);
  r.bob_transcript = std::move(rb->transcript);
  r.alice_receipts = std::move(ra->receipts);
  r.bob_receipts = std::move(rb->receipts);
  return r;
}

}  // namespace prlink

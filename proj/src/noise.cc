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
#include "prlink/noise.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace prlink {
namespace {

// Number of failures before the first success, Pr[G >= g] = exp(-alpha g).
int64_t SampleGeometric(double alpha, Rng& rng) {
  const double u = 1.0 - UniformUnit(rng);  // (0, 1]
  return static_cast<int64_t>(std::floor(-std::log(u) / alpha));
}

void CheckPrivacyParams(double eps, int sensitivity) {
  if (!(eps > 0) || !std::isfinite(eps)) {
    throw Error(ErrorCode::kInvalidParams, "eps must be positive");
  }
  if (sensitivity < 1) {
    throw Error(ErrorCode::kInvalidParams, "sensitivity must be >= 1");
  }
}

}  // namespace

ShiftedGeometric::ShiftedGeometric(double alpha, double center)
    : alpha_(alpha), center_(center) {
  if (!(alpha > 0) || !std::isfinite(alpha) || !std::isfinite(center)) {
    throw Error(ErrorCode::kInvalidParams, "bad geometric parameters");
  }
  floor_ = static_cast<int64_t>(std::floor(center));
  frac_ = center - static_cast<double>(floor_);
  p_ = std::tanh(alpha / 2);
  const double one_minus = -std::expm1(-alpha);
  lower_mass_ = p_ * std::exp(-alpha * frac_) / one_minus;
  p_upper_ = (one_minus - p_ * std::exp(-alpha * frac_)) *
             std::exp(alpha * (1 - frac_));
}

double ShiftedGeometric::Pmf(int64_t x) const {
  const double d = static_cast<double>(x - floor_) - frac_;
  if (x <= floor_) return p_ * std::exp(alpha_ * d);
  return p_upper_ * std::exp(-alpha_ * d);
}

double ShiftedGeometric::CdfBelow(int64_t x) const {
  const double one_minus = -std::expm1(-alpha_);
  if (x - 1 <= floor_) {
    const double d = static_cast<double>(floor_ - (x - 1)) + frac_;
    return p_ * std::exp(-alpha_ * d) / one_minus;
  }
  const double first = p_upper_ * std::exp(-alpha_ * (1 - frac_));
  const double steps = static_cast<double>(x - 1 - floor_);
  return lower_mass_ + first * -std::expm1(-alpha_ * steps) / one_minus;
}

int64_t ShiftedGeometric::Sample(Rng& rng) const {
  if (UniformUnit(rng) < lower_mass_) {
    return floor_ - SampleGeometric(alpha_, rng);
  }
  return floor_ + 1 + SampleGeometric(alpha_, rng);
}

double Eta0(double eps, double delta, int sensitivity) {
  CheckPrivacyParams(eps, sensitivity);
  if (!(delta > 0) || !(delta < 1)) {
    throw Error(ErrorCode::kInvalidParams, "delta must be in (0, 1)");
  }
  const double alpha = eps / sensitivity;
  // 1 - (1 - delta)^(1 / ΔB) without cancellation.
  const double tail = -std::expm1(std::log1p(-delta) / sensitivity);
  return -sensitivity * std::log((std::exp(alpha) + 1) * tail) / eps;
}

TruncatedLaplace::TruncatedLaplace(double eps, double delta, int sensitivity,
                                   double eta0, CenterMode mode)
    : eps_(eps),
      delta_(delta),
      sensitivity_(sensitivity),
      eta0_(eta0),
      law_(eps / sensitivity,
           mode == CenterMode::kCeiling ? std::ceil(eta0) : eta0) {}

TruncatedLaplace TruncatedLaplace::Create(double eps, double delta,
                                          int sensitivity, CenterMode mode) {
  const double eta0 = Eta0(eps, delta, sensitivity);
  return TruncatedLaplace(eps, delta, sensitivity, eta0, mode);
}

TruncatedLaplace TruncatedLaplace::WithShift(double eps, int sensitivity,
                                             double eta0, CenterMode mode) {
  CheckPrivacyParams(eps, sensitivity);
  if (!std::isfinite(eta0)) {
    throw Error(ErrorCode::kInvalidParams, "shift must be finite");
  }
  TruncatedLaplace t(eps, 0, sensitivity, eta0, mode);
  t.delta_ = t.AchievedDelta();
  return t;
}

double TruncatedLaplace::AchievedDelta() const {
  return -std::expm1(sensitivity_ * std::log1p(-ProbNegative()));
}

double TruncatedLaplace::ExpectedPositive() const {
  double sum = 0;
  for (int64_t x = 1;; ++x) {
    const double term = static_cast<double>(x) * law_.Pmf(x);
    sum += term;
    if (static_cast<double>(x) > law_.center() && term < 1e-18 * sum) break;
  }
  return sum;
}

NegligibleShift NegligibleEta0(int64_t n, double eps, int sensitivity) {
  CheckPrivacyParams(eps, sensitivity);
  if (n < 2) throw Error(ErrorCode::kInvalidParams, "n must be >= 2");
  const double ln_n = std::log(static_cast<double>(n));
  const double alpha = eps / sensitivity;
  NegligibleShift s;
  s.eta0 = ln_n * ln_n * sensitivity / eps;
  // x = 1 / (n^(ln n) * (e^alpha + 1)).
  const double log_x = -ln_n * ln_n - std::log(std::exp(alpha) + 1);
  const double x = std::exp(log_x);
  s.delta = -std::expm1(sensitivity * std::log1p(-x));
  s.log_delta = s.delta > 0 && x > 1e-12 ? std::log(s.delta)
                                         : std::log(sensitivity) + log_x;
  return s;
}

ShiftedGeometric ZeroMeanDiscreteLaplace(double eps, int sensitivity) {
  CheckPrivacyParams(eps, sensitivity);
  return ShiftedGeometric(eps / sensitivity, 0.0);
}

std::string ReceiptsToJsonLines(const std::vector<NoiseReceipt>& receipts) {
  std::ostringstream out;
  for (const NoiseReceipt& r : receipts) {
    nlohmann::json j;
    j["bin"] = r.bin;
    j["raw"] = r.raw;
    j["applied"] = r.applied;
    std::vector<uint64_t> d, s;
    for (RecordId id : r.dummies) d.push_back(id.value);
    for (RecordId id : r.suppressed) s.push_back(id.value);
    j["dummies"] = d;
    j["suppressed"] = s;
    out << j.dump() << '\n';
  }
  return out.str();
}

Record MakeDummy(RecordId id, const Payload& like) {
  Payload p = std::visit(
      [](const auto& v) -> Payload {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, BitVector>) {
          return BitVector{0, v.length, 0, 0};
        } else if constexpr (std::is_same_v<V, Generic>) {
          return Generic{std::vector<int64_t>(v.attrs.size(), 0)};
        } else {
          return GridPoint{};
        }
      },
      like);
  return Record{id, std::move(p), RecordKind::kDummy};
}

std::vector<NoiseReceipt> PadBins(BinnedDataset& bins,
                                  const ShiftedGeometric& law, Rng& rng,
                                  DummyIdAllocator& ids, const Payload& like) {
  std::vector<NoiseReceipt> receipts(bins.k());
  for (uint32_t i = 0; i < bins.k(); ++i) {
    NoiseReceipt& r = receipts[i];
    r.bin = i;
    r.raw = law.Sample(rng);
    r.applied = std::max<int64_t>(r.raw, 0);
    for (int64_t j = 0; j < r.applied; ++j) {
      r.dummies.push_back(ids.Next());
      bins.bins[i].push_back(MakeDummy(r.dummies.back(), like));
    }
  }
  return receipts;
}

std::vector<NoiseReceipt> PadBinsSigned(BinnedDataset& bins,
                                        const ShiftedGeometric& law, Rng& rng,
                                        DummyIdAllocator& ids,
                                        const Payload& like) {
  std::vector<NoiseReceipt> receipts(bins.k());
  for (uint32_t i = 0; i < bins.k(); ++i) {
    NoiseReceipt& r = receipts[i];
    std::vector<Record>& bin = bins.bins[i];
    r.bin = i;
    r.raw = law.Sample(rng);
    if (r.raw >= 0) {
      r.applied = r.raw;
      for (int64_t j = 0; j < r.applied; ++j) {
        r.dummies.push_back(ids.Next());
        bin.push_back(MakeDummy(r.dummies.back(), like));
      }
      continue;
    }
    const size_t m = std::min<size_t>(static_cast<size_t>(-r.raw), bin.size());
    r.applied = -static_cast<int64_t>(m);
    // Partial Fisher-Yates over positions, then drop the chosen ones.
    std::vector<size_t> pos(bin.size());
    for (size_t j = 0; j < pos.size(); ++j) pos[j] = j;
    for (size_t j = 0; j < m; ++j) {
      const size_t pick = j + UniformBelow(rng, pos.size() - j);
      std::swap(pos[j], pos[pick]);
    }
    std::vector<bool> drop(bin.size(), false);
    for (size_t j = 0; j < m; ++j) drop[pos[j]] = true;
    std::vector<Record> kept;
    for (size_t j = 0; j < bin.size(); ++j) {
      if (drop[j]) {
        r.suppressed.push_back(bin[j].id);
      } else {
        kept.push_back(std::move(bin[j]));
      }
    }
    std::sort(r.suppressed.begin(), r.suppressed.end());
    bin = std::move(kept);
  }
  return receipts;
}

}  // namespace prlink

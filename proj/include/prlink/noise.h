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
#ifndef PRLINK_NOISE_H_
#define PRLINK_NOISE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "prlink/blocking.h"
#include "prlink/common.h"

namespace prlink {

// Discrete law on the integers with decay rate alpha around a real center c:
//
//   Pr[x] = p  * exp(-alpha * (c - x))   for x <= floor(c)
//   Pr[x] = p' * exp(-alpha * (x - c))   for x >  floor(c)
//
// with p = (e^alpha - 1) / (e^alpha + 1). For an integer center p' = p and the
// law is the two-sided geometric. For a fractional center p' >= p absorbs the
// remaining mass so the lower tail keeps its closed form exactly and
// neighboring probabilities never differ by more than e^alpha.
class ShiftedGeometric {
 public:
  ShiftedGeometric(double alpha, double center);

  double alpha() const { return alpha_; }
  double center() const { return center_; }
  double p() const { return p_; }
  double p_upper() const { return p_upper_; }

  double Pmf(int64_t x) const;
  // Pr[X < x].
  double CdfBelow(int64_t x) const;
  int64_t Sample(Rng& rng) const;

 private:
  double alpha_;
  double center_;
  int64_t floor_;
  double frac_;
  double p_;
  double p_upper_;
  double lower_mass_;
};

enum class CenterMode {
  kCeiling,  // shift by ceil(eta0); the achieved delta never exceeds the target
  kExact,    // shift by the real eta0
};

// Lap(eps, delta, ΔB): the shifted law above with alpha = eps / ΔB, whose
// negative part is truncated to zero when used for padding.
class TruncatedLaplace {
 public:
  static TruncatedLaplace Create(double eps, double delta, int sensitivity,
                                 CenterMode mode = CenterMode::kCeiling);
  // Explicit shift, e.g. from NegligibleEta0.
  static TruncatedLaplace WithShift(double eps, int sensitivity, double eta0,
                                    CenterMode mode = CenterMode::kCeiling);

  double eps() const { return eps_; }
  double delta() const { return delta_; }
  int sensitivity() const { return sensitivity_; }
  double eta0() const { return eta0_; }
  const ShiftedGeometric& law() const { return law_; }

  int64_t Sample(Rng& rng) const { return law_.Sample(rng); }
  double Pmf(int64_t x) const { return law_.Pmf(x); }
  double ProbNegative() const { return law_.CdfBelow(0); }
  // 1 - (1 - Pr[eta < 0])^ΔB: the delta actually achieved.
  double AchievedDelta() const;
  // c_eta = E[max(eta, 0)].
  double ExpectedPositive() const;

 private:
  TruncatedLaplace(double eps, double delta, int sensitivity, double eta0,
                   CenterMode mode);

  double eps_;
  double delta_;
  int sensitivity_;
  double eta0_;
  ShiftedGeometric law_;
};

// Real-valued shift for (eps, delta, ΔB).
double Eta0(double eps, double delta, int sensitivity);

struct NegligibleShift {
  double eta0 = 0;
  double delta = 0;
  double log_delta = 0;
};

// eta0 = ln^2(n) * ΔB / eps and the delta it implies.
NegligibleShift NegligibleEta0(int64_t n, double eps, int sensitivity);

// Zero-mean two-sided geometric with the same decay, used by the signed
// padding variant.
ShiftedGeometric ZeroMeanDiscreteLaplace(double eps, int sensitivity);

struct NoiseReceipt {
  uint32_t bin = 0;
  int64_t raw = 0;
  int64_t applied = 0;
  std::vector<RecordId> dummies;
  std::vector<RecordId> suppressed;
};

std::string ReceiptsToJsonLines(const std::vector<NoiseReceipt>& receipts);

// Allocates dummy ids from the reserved namespace.
class DummyIdAllocator {
 public:
  explicit DummyIdAllocator(uint64_t start = 0) : next_(start) {}
  RecordId Next() { return RecordId{kDummyIdBit | next_++}; }

 private:
  uint64_t next_;
};

// Adds max(eta, 0) dummies shaped like `like` to every bin.
std::vector<NoiseReceipt> PadBins(BinnedDataset& bins,
                                  const ShiftedGeometric& law, Rng& rng,
                                  DummyIdAllocator& ids, const Payload& like);

// Adds eta dummies for positive draws and suppresses min(-eta, |bin|) real
// records chosen uniformly without replacement for negative draws.
std::vector<NoiseReceipt> PadBinsSigned(BinnedDataset& bins,
                                        const ShiftedGeometric& law, Rng& rng,
                                        DummyIdAllocator& ids,
                                        const Payload& like);

// Dummy whose payload has the shape of `like`.
Record MakeDummy(RecordId id, const Payload& like);

}  // namespace prlink

#endif  // PRLINK_NOISE_H_

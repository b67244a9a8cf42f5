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
#include "prlink/rr.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace prlink {
namespace {

void CheckWindow(uint32_t k, uint32_t window) {
  if (k < 2 || window < 1 || window > k) {
    throw Error(ErrorCode::kInvalidParams, "need 1 <= window <= k, k >= 2");
  }
}

}  // namespace

std::vector<double> RrOffsetProbs(uint32_t k, uint32_t top, double eps) {
  CheckWindow(k, top);
  if (eps < 0 || std::isnan(eps)) {
    throw Error(ErrorCode::kInvalidParams, "eps must be non-negative");
  }
  std::vector<double> out(k);
  if (std::isinf(eps)) {
    for (uint32_t i = 0; i < k; ++i) out[i] = i < top ? 1.0 / top : 0.0;
    return out;
  }
  const double e = std::exp(eps);
  const double z = static_cast<double>(k - top) + top * e;
  for (uint32_t i = 0; i < k; ++i) out[i] = (i < top ? e : 1.0) / z;
  return out;
}

RrBasic RrBasicProbs(uint32_t k, double eps) {
  const std::vector<double> v = RrOffsetProbs(k, 1, eps);
  return RrBasic{v[0], v[1]};
}

std::vector<double> RrOptimalProbs(uint32_t k, uint32_t window, double eps) {
  return RrOffsetProbs(k, window, eps);
}

double RrOptimalRecall(uint32_t k, uint32_t window, double eps) {
  CheckWindow(k, window);
  if (std::isinf(eps)) return 1.0;
  const double e = std::exp(eps);
  return window * e / (static_cast<double>(k - window) + window * e);
}

double RrRecallFromRho(double rho, double eps) {
  if (std::isinf(eps)) return 1.0;
  const double e = std::exp(eps);
  return rho * e / (1 - rho + rho * e);
}

double RrComparedProbability(uint32_t k, uint32_t window,
                             const std::vector<double>& alice,
                             const std::vector<double>& bob) {
  CheckWindow(k, window);
  if (alice.size() != k || bob.size() != k) {
    throw Error(ErrorCode::kInvalidParams, "offset laws must have k entries");
  }
  double total = 0;
  for (uint32_t oa = 0; oa < k; ++oa) {
    for (uint32_t j = 0; j < window; ++j)
      total += alice[oa] * bob[(oa + j) % k];
  }
  return total;
}

double RrRestrictedRecall(uint32_t k, uint32_t window, uint32_t x, double eps) {
  CheckWindow(k, window);
  if (x < 1 || x > window) {
    throw Error(ErrorCode::kDomainError, "x = " + std::to_string(x) +
                                             " outside [1, " +
                                             std::to_string(window) + "]");
  }
  const double e = std::exp(eps);
  const double z = static_cast<double>(k - x) + x * e;
  const double top = e / z;
  const double bottom = 1 / z;
  const double dx = x;
  const double kk = window;
  const double tt = dx * (dx + 1) / 2;
  const double tb = 2 * kk * dx - dx * (dx + 1);
  const double bb = static_cast<double>(k) * kk - (2 * kk * dx - tt);
  return tt * top * top + tb * top * bottom + bb * bottom * bottom;
}

double RrC2(uint32_t k, uint32_t window, double eps) {
  return std::exp(eps) - 3 + 2.0 * k - 4.0 * window;
}

double RrProbabilityRatio(const std::vector<double>& probs) {
  const auto [lo, hi] = std::minmax_element(probs.begin(), probs.end());
  if (*lo <= 0) return std::numeric_limits<double>::infinity();
  return *hi / *lo;
}

uint32_t SampleOffset(const std::vector<double>& probs, Rng& rng) {
  double u = UniformUnit(rng);
  for (uint32_t i = 0; i < probs.size(); ++i) {
    if (u < probs[i]) return i;
    u -= probs[i];
  }
  // Rounding left a sliver of mass; give it to the last positive offset.
  for (uint32_t i = static_cast<uint32_t>(probs.size()); i-- > 0;) {
    if (probs[i] > 0) return i;
  }
  return 0;
}

BinnedDataset RrAssignBins(const ModHashBlocking& fn, const Dataset& d,
                           const std::vector<double>& probs, Rng& rng) {
  if (fn.replicas != 1) {
    throw Error(ErrorCode::kInvalidParams, "RR blocking needs one replica");
  }
  if (probs.size() != fn.k) {
    throw Error(ErrorCode::kInvalidParams, "offset law must have k entries");
  }
  BinnedDataset out;
  out.bins.resize(fn.k);
  for (const Record& r : d.records()) {
    const uint32_t h = AssignRecord(fn, r).front();
    out.bins[(h + SampleOffset(probs, rng)) % fn.k].push_back(r);
    ++out.real_records;
  }
  for (auto& bin : out.bins) {
    std::sort(bin.begin(), bin.end(),
              [](const Record& x, const Record& y) { return x.id < y.id; });
  }
  return out;
}

}  // namespace prlink

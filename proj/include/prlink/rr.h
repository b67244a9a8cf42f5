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
#ifndef PRLINK_RR_H_
#define PRLINK_RR_H_

#include <cstdint>
#include <vector>

#include "prlink/blocking.h"

namespace prlink {

// Randomized-response bin assignment over ModHashBlocking. A record with hash
// bin h lands in (h + o) mod k, where the offset o is drawn from a vector of
// k probabilities. The first `top` offsets share the boosted weight e^eps; an
// infinite eps puts all mass on the top offsets.
std::vector<double> RrOffsetProbs(uint32_t k, uint32_t top, double eps);

struct RrBasic {
  double p = 0;  // stay in the hashed bin
  double q = 0;  // move to one specific other bin
};

// p = e^eps / (k - 1 + e^eps), q = 1 / (k - 1 + e^eps).
RrBasic RrBasicProbs(uint32_t k, double eps);

// The one-sided optimum when Alice hashes deterministically.
std::vector<double> RrOptimalProbs(uint32_t k, uint32_t window, double eps);
// k' e^eps / (k - k' + k' e^eps).
double RrOptimalRecall(uint32_t k, uint32_t window, double eps);
// rho e^eps / (1 - rho + rho e^eps).
double RrRecallFromRho(double rho, double eps);

// Probability that a matching pair with equal hash bins is compared under
// window strategy offsets [0, window) for the given offset laws.
double RrComparedProbability(uint32_t k, uint32_t window,
                             const std::vector<double>& alice,
                             const std::vector<double>& bob);

// Symmetric restricted strategy with x boosted offsets per party. Throws
// kDomainError unless 1 <= x <= window.
double RrRestrictedRecall(uint32_t k, uint32_t window, uint32_t x, double eps);

// e^eps - 3 + 2k - 4k'. When positive the restricted recall peaks at x = k'.
double RrC2(uint32_t k, uint32_t window, double eps);

// max / min over the offset law; e^eps for any finite eps and top < k.
double RrProbabilityRatio(const std::vector<double>& probs);

// Draws one offset.
uint32_t SampleOffset(const std::vector<double>& probs, Rng& rng);

// Bins every real record by its randomized hash bin. Requires one replica.
BinnedDataset RrAssignBins(const ModHashBlocking& fn, const Dataset& d,
                           const std::vector<double>& probs, Rng& rng);

}  // namespace prlink

#endif  // PRLINK_RR_H_

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
#ifndef PRLINK_STATS_H_
#define PRLINK_STATS_H_

#include <cstdint>
#include <span>

namespace prlink {

struct Interval {
  double lo = 0;
  double hi = 1;
};

// Exact two-sided binomial interval for k successes in n trials at the given
// confidence.
Interval ClopperPearson(int64_t k, int64_t n, double confidence);

struct LinearFit {
  double slope = 0;
  double intercept = 0;
};

// Ordinary least squares of y on x; needs two distinct x values.
LinearFit FitLine(std::span<const double> x, std::span<const double> y);

struct MeanStd {
  double mean = 0;
  double std = 0;  // sample standard deviation; 0 for a single value
};

MeanStd Summarize(std::span<const double> v);

}  // namespace prlink

#endif  // PRLINK_STATS_H_

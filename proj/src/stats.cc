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
#include "prlink/stats.h"

#include <boost/math/special_functions/beta.hpp>
#include <cmath>

#include "prlink/common.h"

namespace prlink {

Interval ClopperPearson(int64_t k, int64_t n, double confidence) {
  if (n <= 0 || k < 0 || k > n || !(confidence > 0 && confidence < 1)) {
    throw Error(ErrorCode::kInvalidParams, "bad binomial interval inputs");
  }
  const double alpha = 1 - confidence;
  const double dk = static_cast<double>(k);
  const double dn = static_cast<double>(n);
  Interval out;
  if (k > 0) out.lo = boost::math::ibeta_inv(dk, dn - dk + 1, alpha / 2);
  if (k < n) out.hi = boost::math::ibeta_inv(dk + 1, dn - dk, 1 - alpha / 2);
  return out;
}

LinearFit FitLine(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::kInvalidParams, "need two or more points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw Error(ErrorCode::kInvalidParams, "x values coincide");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

MeanStd Summarize(std::span<const double> v) {
  MeanStd s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() < 2) return s;
  double ss = 0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return s;
}

}  // namespace prlink

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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "prlink/common.h"

namespace prlink {
namespace {

// Exact binomial tail Σ_{i>=k} C(n,i) p^i (1-p)^(n-i).
double UpperTail(int64_t k, int64_t n, double p) {
  double s = 0;
  for (int64_t i = k; i <= n; ++i) {
    s += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) -
                  std::lgamma(n - i + 1.0) + i * std::log(p) +
                  (n - i) * std::log1p(-p));
  }
  return s;
}

TEST(ClopperPearsonTest, ZeroAndAllSuccesses) {
  const Interval z = ClopperPearson(0, 100, 0.99);
  EXPECT_EQ(z.lo, 0);
  EXPECT_NEAR(z.hi, 1 - std::pow(0.005, 1.0 / 100), 1e-12);
  const Interval a = ClopperPearson(100, 100, 0.99);
  EXPECT_EQ(a.hi, 1);
  EXPECT_NEAR(a.lo, std::pow(0.005, 1.0 / 100), 1e-12);
}

TEST(ClopperPearsonTest, BoundsInvertTheBinomialTail) {
  for (auto [k, n] : {std::pair{7, 40}, std::pair{1, 10}, std::pair{55, 60}}) {
    const Interval i = ClopperPearson(k, n, 0.95);
    EXPECT_NEAR(UpperTail(k, n, i.lo), 0.025, 1e-9);
    EXPECT_NEAR(1 - UpperTail(k + 1, n, i.hi), 0.025, 1e-9);
  }
}

TEST(ClopperPearsonTest, RejectsBadInput) {
  EXPECT_THROW(ClopperPearson(5, 4, 0.99), Error);
  EXPECT_THROW(ClopperPearson(1, 0, 0.99), Error);
  EXPECT_THROW(ClopperPearson(1, 4, 1.0), Error);
}

TEST(FitLineTest, ExactLine) {
  const std::vector<double> x = {1, 2, 3, 4};
  const std::vector<double> y = {3, 5, 7, 9};
  const LinearFit f = FitLine(x, y);
  EXPECT_DOUBLE_EQ(f.slope, 2);
  EXPECT_DOUBLE_EQ(f.intercept, 1);
  const std::vector<double> same = {1, 1};
  EXPECT_THROW(FitLine(same, same), Error);
}

TEST(SummarizeTest, MeanAndSampleStd) {
  const std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
  const MeanStd s = Summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 5);
  EXPECT_NEAR(s.std, std::sqrt(32.0 / 7), 1e-12);
  EXPECT_EQ(Summarize(std::vector<double>{3}).std, 0);
}

}  // namespace
}  // namespace prlink

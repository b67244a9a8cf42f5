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
#ifndef PRLINK_GENERATORS_H_
#define PRLINK_GENERATORS_H_

#include <cstdint>
#include <set>

#include "prlink/blocking.h"
#include "prlink/record.h"

namespace prlink {

struct GeneratedData {
  Dataset alice;
  Dataset bob;
  std::set<IdPair> truth;
  MatchRule rule;
  BlockingFn blocking;
};

// Pickup points uniform over the bounding box (kept theta away from its
// edges) with a random day and hour. Bob's copy perturbs both coordinates of
// every record by independent uniform offsets in [-theta, theta].
struct TaxiConfig {
  int32_t days = 1;
  int64_t per_day = 3000;
  int64_t theta_e6 = 1000;
  int64_t lat_min_e6 = 40711720;
  int64_t lat_max_e6 = 40786770;
  int64_t lon_min_e6 = -74006600;
  int64_t lon_max_e6 = -73929670;
  GridTimeBlocking blocking;
  uint64_t seed = 1;
};

// Random bit vectors per (day, brand). A dup_rate share of Bob's records are
// copies of distinct Alice records with up to theta flipped bits; the rest are
// fresh vectors.
struct AbConfig {
  int32_t days = 1;
  int64_t per_day = 500;
  int32_t bits = 50;
  int32_t theta = 5;
  int32_t brands = 16;
  double dup_rate = 0.5;
  uint64_t seed = 1;
};

// Both throw kInvalidParams on empty or inconsistent configurations.
GeneratedData GenTaxi(const TaxiConfig& cfg);
GeneratedData GenAb(const AbConfig& cfg);

}  // namespace prlink

#endif  // PRLINK_GENERATORS_H_

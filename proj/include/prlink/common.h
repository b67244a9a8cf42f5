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
#ifndef PRLINK_COMMON_H_
#define PRLINK_COMMON_H_

#include <compare>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace prlink {

enum class ErrorCode {
  kInvalidParams,
  kInvalidDataset,
  kIncompatiblePayload,
  kOutOfDomain,
  kConstructionFailed,
  kDomainError,
  kWeakKey,
  kPolynomialDegreeOverflow,
  kExpansionOverflow,
  kFramingError,
  kClosed,
  kTimeout,
  kIncompleteTranscript,
  kProtocolAbort,
  kNoNonMatchingRecord,
  kNoFreshReplacement,
  kPreconditionViolated,
  kInsufficientTrials,
  kParseError,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct RecordId {
  uint64_t value = 0;
  auto operator<=>(const RecordId&) const = default;
};

// Ids with this bit set are reserved for dummy records.
inline constexpr uint64_t kDummyIdBit = uint64_t{1} << 62;

inline bool IsDummyId(RecordId id) { return (id.value & kDummyIdBit) != 0; }

enum class Party : uint8_t { kAlice = 0, kBob = 1 };

std::string_view PartyName(Party p);

using Rng = std::mt19937_64;

// Independent stream for (seed, stream) so trials and parties never share
// random state.
Rng MakeRng(uint64_t seed, uint64_t stream = 0);

uint64_t SplitMix64(uint64_t x);

// Uniform in [0, 1) with 53 random bits.
double UniformUnit(Rng& rng);

// Uniform in [0, bound). bound must be positive.
uint64_t UniformBelow(Rng& rng, uint64_t bound);

}  // namespace prlink

template <>
struct std::hash<prlink::RecordId> {
  size_t operator()(const prlink::RecordId& id) const noexcept {
    return std::hash<uint64_t>()(id.value);
  }
};

#endif  // PRLINK_COMMON_H_

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
#include "prlink/common.h"

namespace prlink {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParams:
      return "InvalidParams";
    case ErrorCode::kInvalidDataset:
      return "InvalidDataset";
    case ErrorCode::kIncompatiblePayload:
      return "IncompatiblePayload";
    case ErrorCode::kOutOfDomain:
      return "OutOfDomain";
    case ErrorCode::kConstructionFailed:
      return "ConstructionFailed";
    case ErrorCode::kDomainError:
      return "DomainError";
    case ErrorCode::kWeakKey:
      return "WeakKey";
    case ErrorCode::kPolynomialDegreeOverflow:
      return "PolynomialDegreeOverflow";
    case ErrorCode::kExpansionOverflow:
      return "ExpansionOverflow";
    case ErrorCode::kFramingError:
      return "FramingError";
    case ErrorCode::kClosed:
      return "Closed";
    case ErrorCode::kTimeout:
      return "Timeout";
    case ErrorCode::kIncompleteTranscript:
      return "IncompleteTranscript";
    case ErrorCode::kProtocolAbort:
      return "ProtocolAbort";
    case ErrorCode::kNoNonMatchingRecord:
      return "NoNonMatchingRecord";
    case ErrorCode::kNoFreshReplacement:
      return "NoFreshReplacement";
    case ErrorCode::kPreconditionViolated:
      return "PreconditionViolated";
    case ErrorCode::kInsufficientTrials:
      return "InsufficientTrials";
    case ErrorCode::kParseError:
      return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

std::string_view PartyName(Party p) {
  return p == Party::kAlice ? "alice" : "bob";
}

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng MakeRng(uint64_t seed, uint64_t stream) {
  const uint64_t a = SplitMix64(seed);
  const uint64_t b = SplitMix64(a ^ SplitMix64(stream + 0x5851f42d4c957f2dULL));
  std::seed_seq seq{static_cast<uint32_t>(a), static_cast<uint32_t>(a >> 32),
                    static_cast<uint32_t>(b), static_cast<uint32_t>(b >> 32)};
  return Rng(seq);
}

double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

uint64_t UniformBelow(Rng& rng, uint64_t bound) {
  // Rejection sampling keeps the result exactly uniform.
  const uint64_t limit = bound * (UINT64_MAX / bound);
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace prlink

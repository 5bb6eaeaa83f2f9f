#include "rhm/rng.hpp"

#include "rhm/error.hpp"

namespace rhm {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kInfeasibleParams: return "infeasible_params";
    case ErrorCode::kCapExceeded: return "cap_exceeded";
    case ErrorCode::kImpossibleEvidence: return "impossible_evidence";
    case ErrorCode::kMissingLatents: return "missing_latents";
    case ErrorCode::kInsufficientData: return "insufficient_data";
    case ErrorCode::kDivergent: return "divergent";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kInvalidConfig: return "invalid_config";
  }
  return "unknown";
}

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t Fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t index,
                         std::string_view tag) {
  std::uint64_t h = SplitMix64(master);
  h = SplitMix64(h ^ Fnv1a64(tag));
  // SplitMix64 is a bijection, so for fixed (master, tag) distinct indices
  // can never collide.
  return SplitMix64(h ^ index);
}

}  // namespace rhm

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rhm {

// Thin wrapper over std::mt19937_64. The engine is specified bit-exactly by the
// standard; the bounded-integer and real draws below are implemented here so
// that streams are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform integer in [0, bound). Rejection sampling, unbiased.
  std::uint64_t Below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool Bernoulli(double p) { return Uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t SplitMix64(std::uint64_t x);

std::uint64_t Fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

// Stateless seed derivation for trials: mixes (master, index, tag) with
// avalanche so neighbouring indices and distinct tags give unrelated seeds.
std::uint64_t DeriveSeed(std::uint64_t master, std::uint64_t index,
                         std::string_view tag);

}  // namespace rhm

#pragma once

#include <cstdint>

#include "nkdc/tpm.hpp"

namespace nkdc {

/// SplitMix64. Output is a pure function of the seed on every platform; used
/// for the public input stream and initial weights, not as a secret source.
class SeededGenerator {
 public:
  explicit constexpr SeededGenerator(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next_u64() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// One draw per entry, row-major; low bit 1 -> +1, else -1.
InputVector gen_input(SeededGenerator& g, const TpmParams& params);

/// One draw per entry, row-major; entry = (draw mod (2l+1)) - l.
WeightMatrix gen_weights(SeededGenerator& g, const TpmParams& params);

}  // namespace nkdc

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nkdc/tpm.hpp"

namespace nkdc {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xCBF29CE484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x00000100000001B3ull;

constexpr std::uint64_t fnv1a64(std::span<const std::uint8_t> data,
                                std::uint64_t h = kFnvOffsetBasis) noexcept {
  for (std::uint8_t b : data) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

struct KeyMaterial {
  std::vector<std::uint8_t> bytes;  // k*n octets, w + l each
  std::uint64_t fingerprint = 0;    // fnv1a64(bytes)

  friend bool operator==(const KeyMaterial&, const KeyMaterial&) = default;
};

/// Row-major, one octet per weight: w[i][j] + l. Throws BoundExceeded if l > 127.
std::vector<std::uint8_t> serialize_weights(const WeightMatrix& w);

/// Inverse of serialize_weights. Throws DimensionMismatch on a wrong length
/// and BoundExceeded on an octet above 2l.
WeightMatrix deserialize_weights(const TpmParams& params, std::span<const std::uint8_t> bytes);

KeyMaterial derive_key(const WeightMatrix& w);

inline std::uint64_t key_fingerprint(const WeightMatrix& w) { return derive_key(w).fingerprint; }

/// Lowercase hex, no separators.
std::string to_hex(std::span<const std::uint8_t> bytes);
/// 16 lowercase hex digits.
std::string fingerprint_hex(std::uint64_t fingerprint);

}  // namespace nkdc

#pragma once

#include <random>

#include "nkdc/wire.hpp"

namespace wire_fuzz {

using namespace nkdc::wire;

inline Message random_message(std::mt19937_64& rng) {
  switch (rng() % 8) {
    case 0: {
      const Role roles[] = {Role::A, Role::B, Role::E};
      return Hello{rng(), roles[rng() % 3], static_cast<std::uint16_t>(rng()), static_cast<std::uint16_t>(rng()),
                   static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng() % 3)};
    }
    case 1: return Start{static_cast<std::uint32_t>(rng())};
    case 2: {
      std::vector<std::uint8_t> packed(1 + rng() % 64);
      for (auto& b : packed) b = static_cast<std::uint8_t>(rng());
      return Input{static_cast<std::uint32_t>(rng()), std::move(packed)};
    }
    case 3: return Output{static_cast<std::uint32_t>(rng()), (rng() & 1) ? 1 : -1};
    case 4: return SyncProbe{static_cast<std::uint32_t>(rng()), rng()};
    case 5: return SyncOk{};
    case 6: return SyncFail{};
    default: return Abort{static_cast<std::uint8_t>(rng())};
  }
}

/// Flips, truncates, extends, or rewrites header octets.
inline std::vector<std::uint8_t> mutate(std::vector<std::uint8_t> bytes, std::mt19937_64& rng) {
  switch (rng() % 5) {
    case 0:
      bytes[rng() % bytes.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
      break;
    case 1:
      bytes.resize(rng() % bytes.size());
      break;
    case 2:
      bytes[0] = static_cast<std::uint8_t>(rng());
      break;
    case 3:
      if (bytes.size() >= 5) bytes[1 + rng() % 4] = static_cast<std::uint8_t>(rng());
      break;
    default:
      bytes.push_back(static_cast<std::uint8_t>(rng()));
      if (bytes.size() >= 5) bytes[4] = static_cast<std::uint8_t>(bytes[4] + 1);
      break;
  }
  return bytes;
}

}  // namespace wire_fuzz

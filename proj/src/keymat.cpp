#include "nkdc/keymat.hpp"

#include "nkdc/error.hpp"

namespace nkdc {

std::vector<std::uint8_t> serialize_weights(const WeightMatrix& w) {
  const int l = w.params().l();
  if (l > TpmParams::kMaxWeightBound) {
    throw Error(ErrorCode::BoundExceeded, "l > 127 cannot be serialized one octet per weight");
  }
  std::vector<std::uint8_t> out;
  out.reserve(w.params().size());
  for (int v : w.values()) out.push_back(static_cast<std::uint8_t>(v + l));
  return out;
}

WeightMatrix deserialize_weights(const TpmParams& params, std::span<const std::uint8_t> bytes) {
  if (bytes.size() != params.size()) {
    throw Error(ErrorCode::DimensionMismatch, "key length != k*n");
  }
  std::vector<int> w;
  w.reserve(bytes.size());
  for (std::uint8_t b : bytes) {
    if (b > 2 * params.l()) throw Error(ErrorCode::BoundExceeded, "key octet above 2l");
    w.push_back(int{b} - params.l());
  }
  return WeightMatrix(params, std::move(w));
}

KeyMaterial derive_key(const WeightMatrix& w) {
  KeyMaterial key;
  key.bytes = serialize_weights(w);
  key.fingerprint = fnv1a64(key.bytes);
  return key;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0F]);
  }
  return out;
}

std::string fingerprint_hex(std::uint64_t fingerprint) {
  std::uint8_t be[8];
  for (int i = 0; i < 8; ++i) be[i] = static_cast<std::uint8_t>(fingerprint >> (56 - 8 * i));
  return to_hex(be);
}

}  // namespace nkdc

#pragma once

// Framed KDC protocol. A frame is one type octet, a 4-octet big-endian
// payload length, then the payload. All integers are big-endian.
//
//   0x01 HELLO      session_id u64, role u8 ('A' 'B' 'E'), k u16, n u16, l u8, rule u8
//   0x02 START      round u32
//   0x03 INPUT      round u32, ceil(k*n/8) packed octets (bit 1 -> +1, MSB first)
//   0x04 OUTPUT     round u32, tau u8 (0x01 = +1, 0xFF = -1)
//   0x05 SYNC_PROBE round u32, fingerprint u64
//   0x06 SYNC_OK    (empty)
//   0x07 SYNC_FAIL  (empty)
//   0x08 ABORT      reason u8

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nkdc/tpm.hpp"

namespace nkdc::wire {

inline constexpr std::size_t kHeaderSize = 5;
inline constexpr std::size_t kMaxPayload = std::size_t{1} << 20;

enum class MsgType : std::uint8_t {
  Hello = 0x01,
  Start = 0x02,
  Input = 0x03,
  Output = 0x04,
  SyncProbe = 0x05,
  SyncOk = 0x06,
  SyncFail = 0x07,
  Abort = 0x08,
};

enum class Role : std::uint8_t { A = 0x41, B = 0x42, E = 0x45 };

enum class AbortReason : std::uint8_t {
  ParamMismatch = 1,
  RoundCap = 2,
  PeerFailure = 3,
  LateJoin = 4,
  ProtocolViolation = 5,
};

struct Hello {
  std::uint64_t session_id = 0;
  Role role = Role::A;
  std::uint16_t k = 0;
  std::uint16_t n = 0;
  std::uint8_t l = 0;
  std::uint8_t rule = 0;  // LearningRule value
  friend bool operator==(const Hello&, const Hello&) = default;
};

struct Start {
  std::uint32_t round = 0;
  friend bool operator==(const Start&, const Start&) = default;
};

struct Input {
  std::uint32_t round = 0;
  std::vector<std::uint8_t> packed;
  friend bool operator==(const Input&, const Input&) = default;
};

struct Output {
  std::uint32_t round = 0;
  int tau = 1;
  friend bool operator==(const Output&, const Output&) = default;
};

struct SyncProbe {
  std::uint32_t round = 0;
  std::uint64_t fingerprint = 0;
  friend bool operator==(const SyncProbe&, const SyncProbe&) = default;
};

struct SyncOk {
  friend bool operator==(const SyncOk&, const SyncOk&) = default;
};

struct SyncFail {
  friend bool operator==(const SyncFail&, const SyncFail&) = default;
};

struct Abort {
  std::uint8_t reason = 0;
  friend bool operator==(const Abort&, const Abort&) = default;
};

using Message = std::variant<Hello, Start, Input, Output, SyncProbe, SyncOk, SyncFail, Abort>;

MsgType type_of(const Message& m) noexcept;
std::string describe(const Message& m);
bool is_known_type(std::uint8_t octet) noexcept;

/// Throws Oversize if the payload exceeds max_payload, MalformedPayload for a
/// tau outside +-1 or an empty INPUT.
std::vector<std::uint8_t> encode(const Message& m, std::size_t max_payload = kMaxPayload);

struct Decoded {
  Message message;
  std::size_t consumed;  // header + payload of exactly one frame
};

/// Decodes the first frame in bytes. Throws Truncated when more bytes are
/// needed, UnknownType, Oversize, or MalformedPayload.
Decoded decode(std::span<const std::uint8_t> bytes, std::size_t max_payload = kMaxPayload);

/// Declared payload length from a complete 5-octet header, after checking the
/// type octet and the size cap.
std::size_t payload_length(std::span<const std::uint8_t, kHeaderSize> header,
                           std::size_t max_payload = kMaxPayload);

std::size_t packed_size(const TpmParams& params) noexcept;
std::vector<std::uint8_t> pack_input(const InputVector& x);
/// Throws MalformedPayload if the length is not ceil(k*n/8) or padding bits are set.
InputVector unpack_input(const TpmParams& params, std::span<const std::uint8_t> packed);

}  // namespace nkdc::wire

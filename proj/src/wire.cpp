#include "nkdc/wire.hpp"

#include <sstream>

#include "nkdc/error.hpp"

namespace nkdc::wire {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { be(v, 2); }
  void u32(std::uint32_t v) { be(v, 4); }
  void u64(std::uint64_t v) { be(v, 8); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void be(std::uint64_t v, int width) {
    for (int i = width - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(be(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
  std::uint64_t u64() { return be(8); }
  std::span<const std::uint8_t> rest() {
    auto r = in_.subspan(pos_);
    pos_ = in_.size();
    return r;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::uint64_t be(std::size_t width) {
    if (remaining() < width) throw Error(ErrorCode::MalformedPayload, "payload too short");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v = (v << 8) | in_[pos_++];
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void expect_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::MalformedPayload, std::string(what) + " payload must be " +
                                                 std::to_string(want) + " octets, got " +
                                                 std::to_string(got));
  }
}

std::uint8_t tau_octet(int tau) {
  if (tau == 1) return 0x01;
  if (tau == -1) return 0xFF;
  throw Error(ErrorCode::MalformedPayload, "tau must be +-1");
}

std::vector<std::uint8_t> encode_payload(const Message& m) {
  Writer w;
  std::visit(
      [&w](const auto& msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, Hello>) {
          w.u64(msg.session_id);
          w.u8(static_cast<std::uint8_t>(msg.role));
          w.u16(msg.k);
          w.u16(msg.n);
          w.u8(msg.l);
          w.u8(msg.rule);
        } else if constexpr (std::is_same_v<T, Start>) {
          w.u32(msg.round);
        } else if constexpr (std::is_same_v<T, Input>) {
          if (msg.packed.empty()) throw Error(ErrorCode::MalformedPayload, "INPUT without entries");
          w.u32(msg.round);
          w.bytes(msg.packed);
        } else if constexpr (std::is_same_v<T, Output>) {
          w.u32(msg.round);
          w.u8(tau_octet(msg.tau));
        } else if constexpr (std::is_same_v<T, SyncProbe>) {
          w.u32(msg.round);
          w.u64(msg.fingerprint);
        } else if constexpr (std::is_same_v<T, Abort>) {
          w.u8(msg.reason);
        }
      },
      m);
  return w.take();
}

Message decode_payload(MsgType type, std::span<const std::uint8_t> payload) {
  Reader r(payload);
  switch (type) {
    case MsgType::Hello: {
      expect_length(payload.size(), 15, "HELLO");
      Hello h;
      h.session_id = r.u64();
      const std::uint8_t role = r.u8();
      if (role != 0x41 && role != 0x42 && role != 0x45) {
        throw Error(ErrorCode::MalformedPayload, "bad role octet " + std::to_string(role));
      }
      h.role = static_cast<Role>(role);
      h.k = r.u16();
      h.n = r.u16();
      h.l = r.u8();
      h.rule = r.u8();
      if (h.rule > 2) throw Error(ErrorCode::MalformedPayload, "bad rule octet");
      return h;
    }
    case MsgType::Start:
      expect_length(payload.size(), 4, "START");
      return Start{r.u32()};
    case MsgType::Input: {
      if (payload.size() < 5) throw Error(ErrorCode::MalformedPayload, "INPUT without entries");
      Input in;
      in.round = r.u32();
      const auto rest = r.rest();
      in.packed.assign(rest.begin(), rest.end());
      return in;
    }
    case MsgType::Output: {
      expect_length(payload.size(), 5, "OUTPUT");
      Output out;
      out.round = r.u32();
      const std::uint8_t t = r.u8();
      if (t == 0x01) {
        out.tau = 1;
      } else if (t == 0xFF) {
        out.tau = -1;
      } else {
        throw Error(ErrorCode::MalformedPayload, "bad tau octet " + std::to_string(t));
      }
      return out;
    }
    case MsgType::SyncProbe: {
      expect_length(payload.size(), 12, "SYNC_PROBE");
      SyncProbe p;
      p.round = r.u32();
      p.fingerprint = r.u64();
      return p;
    }
    case MsgType::SyncOk:
      expect_length(payload.size(), 0, "SYNC_OK");
      return SyncOk{};
    case MsgType::SyncFail:
      expect_length(payload.size(), 0, "SYNC_FAIL");
      return SyncFail{};
    case MsgType::Abort:
      expect_length(payload.size(), 1, "ABORT");
      return Abort{r.u8()};
  }
  throw Error(ErrorCode::UnknownType, "unreachable");
}

}  // namespace

MsgType type_of(const Message& m) noexcept {
  return static_cast<MsgType>(m.index() + 1);
}

bool is_known_type(std::uint8_t octet) noexcept { return octet >= 0x01 && octet <= 0x08; }

std::string describe(const Message& m) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, Hello>) {
          os << "HELLO{session=" << msg.session_id << " role=" << static_cast<char>(msg.role)
             << " k=" << msg.k << " n=" << msg.n << " l=" << int{msg.l} << " rule=" << int{msg.rule}
             << "}";
        } else if constexpr (std::is_same_v<T, Start>) {
          os << "START{round=" << msg.round << "}";
        } else if constexpr (std::is_same_v<T, Input>) {
          os << "INPUT{round=" << msg.round << " packed=" << msg.packed.size() << " octets}";
        } else if constexpr (std::is_same_v<T, Output>) {
          os << "OUTPUT{round=" << msg.round << " tau=" << msg.tau << "}";
        } else if constexpr (std::is_same_v<T, SyncProbe>) {
          os << "SYNC_PROBE{round=" << msg.round << " fingerprint=" << std::hex << msg.fingerprint
             << "}";
        } else if constexpr (std::is_same_v<T, SyncOk>) {
          os << "SYNC_OK{}";
        } else if constexpr (std::is_same_v<T, SyncFail>) {
          os << "SYNC_FAIL{}";
        } else {
          os << "ABORT{reason=" << int{msg.reason} << "}";
        }
      },
      m);
  return os.str();
}

std::vector<std::uint8_t> encode(const Message& m, std::size_t max_payload) {
  const std::vector<std::uint8_t> payload = encode_payload(m);
  if (payload.size() > max_payload) {
    throw Error(ErrorCode::Oversize, "payload of " + std::to_string(payload.size()) + " octets");
  }
  Writer w;
  w.u8(static_cast<std::uint8_t>(type_of(m)));
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.bytes(payload);
  return w.take();
}

std::size_t payload_length(std::span<const std::uint8_t, kHeaderSize> header,
                           std::size_t max_payload) {
  if (!is_known_type(header[0])) {
    throw Error(ErrorCode::UnknownType, "msg_type " + std::to_string(header[0]));
  }
  std::size_t len = 0;
  for (std::size_t i = 1; i < kHeaderSize; ++i) len = (len << 8) | header[i];
  if (len > max_payload) {
    throw Error(ErrorCode::Oversize, "declared payload of " + std::to_string(len) + " octets");
  }
  return len;
}

Decoded decode(std::span<const std::uint8_t> bytes, std::size_t max_payload) {
  if (bytes.empty()) throw Error(ErrorCode::Truncated, "no header");
  if (!is_known_type(bytes[0])) {
    throw Error(ErrorCode::UnknownType, "msg_type " + std::to_string(bytes[0]));
  }
  if (bytes.size() < kHeaderSize) throw Error(ErrorCode::Truncated, "partial header");
  const std::size_t len = payload_length(bytes.first<kHeaderSize>(), max_payload);
  if (bytes.size() - kHeaderSize < len) throw Error(ErrorCode::Truncated, "partial payload");
  const auto type = static_cast<MsgType>(bytes[0]);
  return Decoded{decode_payload(type, bytes.subspan(kHeaderSize, len)), kHeaderSize + len};
}

std::size_t packed_size(const TpmParams& params) noexcept { return (params.size() + 7) / 8; }

std::vector<std::uint8_t> pack_input(const InputVector& x) {
  std::vector<std::uint8_t> packed(packed_size(x.params()), 0);
  const auto v = x.values();
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    if (v[idx] == 1) packed[idx / 8] |= static_cast<std::uint8_t>(0x80u >> (idx % 8));
  }
  return packed;
}

InputVector unpack_input(const TpmParams& params, std::span<const std::uint8_t> packed) {
  if (packed.size() != packed_size(params)) {
    throw Error(ErrorCode::MalformedPayload,
                "INPUT carries " + std::to_string(packed.size()) + " packed octets, expected " +
                    std::to_string(packed_size(params)));
  }
  const std::size_t count = params.size();
  const std::size_t used_bits = count % 8;
  if (used_bits != 0) {
    const auto pad_mask = static_cast<std::uint8_t>(0xFFu >> used_bits);
    if (packed.back() & pad_mask) throw Error(ErrorCode::MalformedPayload, "INPUT padding bits set");
  }
  std::vector<int> x(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    x[idx] = (packed[idx / 8] & (0x80u >> (idx % 8))) ? 1 : -1;
  }
  return InputVector(params, std::move(x));
}

}  // namespace nkdc::wire

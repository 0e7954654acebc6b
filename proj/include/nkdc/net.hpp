#pragma once

// Blocking TCP transport for wire frames. Every receive carries its own
// deadline; sends use a socket-level timeout of the same length.

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "nkdc/wire.hpp"

namespace nkdc::net {

using Millis = std::chrono::milliseconds;
inline constexpr Millis kDefaultMessageTimeout{30'000};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

/// Parses HOST:PORT (the last colon separates the port). Throws InvalidArgument.
Endpoint parse_endpoint(std::string_view text);

class Connection {
 public:
  Connection(int fd, Millis timeout, std::size_t max_payload = wire::kMaxPayload);
  ~Connection();
  Connection(Connection&& other) noexcept;
  Connection& operator=(Connection&& other) noexcept;
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  /// Throws ConnectionLost or Timeout.
  static Connection connect(const Endpoint& ep, Millis timeout = kDefaultMessageTimeout,
                            std::size_t max_payload = wire::kMaxPayload);

  void send(const wire::Message& m);
  void send_bytes(std::span<const std::uint8_t> bytes);
  /// One frame within the deadline. Throws Timeout, ConnectionLost, or the
  /// codec's error for a bad frame.
  wire::Message receive();
  /// Wakes any thread blocked on this connection; further I/O fails.
  void shutdown() noexcept;

  Millis timeout() const noexcept { return timeout_; }

 private:
  void read_exact(std::span<std::uint8_t> out, std::chrono::steady_clock::time_point deadline);
  void close() noexcept;

  int fd_ = -1;
  Millis timeout_;
  std::size_t max_payload_;
};

class Listener {
 public:
  /// Binds and listens; port 0 picks an ephemeral port. Throws ConnectionLost.
  explicit Listener(const Endpoint& ep);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  /// Waits up to `wait` for a client; nullopt on timeout.
  std::optional<int> accept_fd(Millis wait);
  void close() noexcept;

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace nkdc::net

#include "nkdc/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <vector>

#include "nkdc/error.hpp"

namespace nkdc::net {

namespace {

using Clock = std::chrono::steady_clock;

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

void set_send_timeout(int fd, Millis timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

struct AddrInfo {
  addrinfo* head = nullptr;
  ~AddrInfo() {
    if (head) ::freeaddrinfo(head);
  }
};

AddrInfo resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  AddrInfo info;
  const std::string port = std::to_string(ep.port);
  const int rc = ::getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints,
                               &info.head);
  if (rc != 0) {
    throw Error(ErrorCode::ConnectionLost,
                "cannot resolve " + ep.host + ": " + ::gai_strerror(rc));
  }
  return info;
}

}  // namespace

Endpoint parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon + 1 == text.size()) {
    throw Error(ErrorCode::InvalidArgument, "expected HOST:PORT, got '" + std::string(text) + "'");
  }
  std::string_view host = text.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') {
    host = host.substr(1, host.size() - 2);
  }
  const std::string_view port_text = text.substr(colon + 1);
  unsigned port = 0;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port > 65535) {
    throw Error(ErrorCode::InvalidArgument, "bad port '" + std::string(port_text) + "'");
  }
  return Endpoint{std::string(host), static_cast<std::uint16_t>(port)};
}

Connection::Connection(int fd, Millis timeout, std::size_t max_payload)
    : fd_(fd), timeout_(timeout), max_payload_(max_payload) {
  set_send_timeout(fd_, timeout_);
}

Connection::~Connection() { close(); }

Connection::Connection(Connection&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), timeout_(other.timeout_), max_payload_(other.max_payload_) {}

Connection& Connection::operator=(Connection&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
    timeout_ = other.timeout_;
    max_payload_ = other.max_payload_;
  }
  return *this;
}

void Connection::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Connection::shutdown() noexcept {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Connection Connection::connect(const Endpoint& ep, Millis timeout, std::size_t max_payload) {
  AddrInfo info = resolve(ep, false);
  std::string last_error = "no addresses";
  for (addrinfo* ai = info.head; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      last_error = errno_text("socket");
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) return Connection(fd, timeout, max_payload);
    last_error = errno_text("connect");
    ::close(fd);
  }
  throw Error(ErrorCode::ConnectionLost,
              ep.host + ":" + std::to_string(ep.port) + ": " + last_error);
}

void Connection::send(const wire::Message& m) { send_bytes(wire::encode(m, max_payload_)); }

void Connection::send_bytes(std::span<const std::uint8_t> bytes) {
  if (fd_ < 0) throw Error(ErrorCode::ConnectionLost, "send on closed connection");
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t rc = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (rc < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) throw Error(ErrorCode::Timeout, "send stalled");
      throw Error(ErrorCode::ConnectionLost, errno_text("send"));
    }
    sent += static_cast<std::size_t>(rc);
  }
}

void Connection::read_exact(std::span<std::uint8_t> out, Clock::time_point deadline) {
  std::size_t got = 0;
  while (got < out.size()) {
    const auto left = std::chrono::duration_cast<Millis>(deadline - Clock::now());
    if (left.count() <= 0) throw Error(ErrorCode::Timeout, "no frame within deadline");
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::ConnectionLost, errno_text("poll"));
    }
    if (ready == 0) throw Error(ErrorCode::Timeout, "no frame within deadline");
    const ssize_t rc = ::recv(fd_, out.data() + got, out.size() - got, 0);
    if (rc == 0) throw Error(ErrorCode::ConnectionLost, "peer closed the connection");
    if (rc < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw Error(ErrorCode::ConnectionLost, errno_text("recv"));
    }
    got += static_cast<std::size_t>(rc);
  }
}

wire::Message Connection::receive() {
  if (fd_ < 0) throw Error(ErrorCode::ConnectionLost, "receive on closed connection");
  const auto deadline = Clock::now() + timeout_;
  std::vector<std::uint8_t> frame(wire::kHeaderSize);
  read_exact(frame, deadline);
  const std::size_t len =
      wire::payload_length(std::span<const std::uint8_t, wire::kHeaderSize>(frame.data(), wire::kHeaderSize),
                           max_payload_);
  frame.resize(wire::kHeaderSize + len);
  read_exact(std::span(frame).subspan(wire::kHeaderSize), deadline);
  return wire::decode(frame, max_payload_).message;
}

Listener::Listener(const Endpoint& ep) {
  AddrInfo info = resolve(ep, true);
  std::string last_error = "no addresses";
  for (addrinfo* ai = info.head; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      last_error = errno_text("socket");
      continue;
    }
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
      fd_ = fd;
      break;
    }
    last_error = errno_text("bind/listen");
    ::close(fd);
  }
  if (fd_ < 0) throw Error(ErrorCode::ConnectionLost, "cannot listen on " + ep.host + ": " + last_error);

  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  if (addr.ss_family == AF_INET) {
    port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  } else if (addr.ss_family == AF_INET6) {
    port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
  }
}

Listener::~Listener() { close(); }

void Listener::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

std::optional<int> Listener::accept_fd(Millis wait) {
  if (fd_ < 0) return std::nullopt;
  pollfd pfd{fd_, POLLIN, 0};
  const int ready = ::poll(&pfd, 1, static_cast<int>(wait.count()));
  if (ready <= 0) return std::nullopt;
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) return std::nullopt;
  return fd;
}

}  // namespace nkdc::net

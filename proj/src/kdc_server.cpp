#include <condition_variable>
#include <deque>

#include "nkdc/error.hpp"
#include "nkdc/kdc.hpp"
#include "nkdc/rng.hpp"

namespace nkdc {

namespace {

using wire::AbortReason;
using wire::Role;

constexpr std::size_t kMaxQueuedFrames = 1 << 16;

/// Non-blocking fan-out to one eavesdropper: frames are queued and written by
/// a dedicated thread, so a slow or dead listener never stalls the partners.
class Outbox {
 public:
  explicit Outbox(std::shared_ptr<net::Connection> conn)
      : conn_(std::move(conn)), writer_([this] { drain(); }) {}

  ~Outbox() { close(); }

  void post(std::vector<std::uint8_t> frame) {
    {
      std::lock_guard lock(mu_);
      if (dead_ || closing_) return;
      if (queue_.size() >= kMaxQueuedFrames) {
        dead_ = true;
        conn_->shutdown();
      } else {
        queue_.push_back(std::move(frame));
      }
    }
    cv_.notify_one();
  }

  /// Flushes what is queued, then joins the writer.
  void close() {
    {
      std::lock_guard lock(mu_);
      closing_ = true;
    }
    cv_.notify_one();
    if (writer_.joinable()) writer_.join();
  }

 private:
  void drain() {
    std::unique_lock lock(mu_);
    for (;;) {
      cv_.wait(lock, [this] { return closing_ || !queue_.empty(); });
      if (queue_.empty()) return;
      auto frame = std::move(queue_.front());
      queue_.pop_front();
      if (dead_) continue;
      lock.unlock();
      try {
        conn_->send_bytes(frame);
      } catch (const Error&) {
        lock.lock();
        dead_ = true;
        continue;
      }
      lock.lock();
    }
  }

  std::shared_ptr<net::Connection> conn_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::vector<std::uint8_t>> queue_;
  bool closing_ = false;
  bool dead_ = false;
  std::thread writer_;
};

/// A partner misbehaved or vanished; `protocol` separates bad frames from I/O.
struct PartnerFault {
  Role who;
  bool protocol;
  std::string detail;
};

template <typename T>
T expect_from(net::Connection& conn, Role who, std::uint32_t round) {
  wire::Message m = [&] {
    try {
      return conn.receive();
    } catch (const Error& e) {
      const bool io = e.code() == ErrorCode::ConnectionLost || e.code() == ErrorCode::Timeout;
      throw PartnerFault{who, !io, e.what()};
    }
  }();
  auto* msg = std::get_if<T>(&m);
  if (msg == nullptr) throw PartnerFault{who, true, "unexpected " + wire::describe(m)};
  if (msg->round != round) {
    throw PartnerFault{who, true, "round " + std::to_string(msg->round) + " while expecting " +
                                      std::to_string(round)};
  }
  return std::move(*msg);
}

void send_to(net::Connection& conn, Role who, const std::vector<std::uint8_t>& frame) {
  try {
    conn.send_bytes(frame);
  } catch (const Error& e) {
    throw PartnerFault{who, false, e.what()};
  }
}

void try_send(net::Connection* conn, const wire::Message& m) noexcept {
  if (conn == nullptr) return;
  try {
    conn->send(m);
  } catch (...) {
  }
}

bool same_machine(const wire::Hello& a, const wire::Hello& b) {
  return a.k == b.k && a.n == b.n && a.l == b.l && a.rule == b.rule;
}

std::optional<TpmParams> params_from(const wire::Hello& h) {
  try {
    return TpmParams(h.k, h.n, h.l, static_cast<LearningRule>(h.rule));
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

KdcServer::KdcServer(ServerConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.agreement_window < 1 || cfg_.max_rounds < cfg_.agreement_window) {
    throw Error(ErrorCode::ConfigInvalid, "need 1 <= agreement_window <= max_rounds");
  }
  if (cfg_.max_rounds > UINT32_MAX) {
    throw Error(ErrorCode::ConfigInvalid, "max_rounds must fit the u32 round field");
  }
}

KdcServer::~KdcServer() { stop(); }

void KdcServer::start() {
  listener_ = std::make_unique<net::Listener>(cfg_.listen);
  port_ = listener_->port();
  acceptor_ = std::thread([this] { accept_loop(); });
}

void KdcServer::stop() {
  if (stopping_.exchange(true)) return;
  if (acceptor_.joinable()) acceptor_.join();
  if (listener_) listener_->close();
  {
    std::lock_guard lock(mu_);
    for (auto& weak : live_) {
      if (auto conn = weak.lock()) conn->shutdown();
    }
    pending_.clear();
  }
  std::vector<Worker> workers;
  {
    std::lock_guard lock(workers_mu_);
    workers.swap(workers_);
  }
  for (auto& w : workers) {
    if (w.thread.joinable()) w.thread.join();
  }
}

std::size_t KdcServer::waiting_eavesdroppers(std::uint64_t session_id) const {
  std::lock_guard lock(mu_);
  const auto it = pending_.find(session_id);
  return it == pending_.end() ? 0 : it->second.listeners.size();
}

void KdcServer::track(const std::shared_ptr<net::Connection>& conn) {
  std::lock_guard lock(mu_);
  std::erase_if(live_, [](const auto& weak) { return weak.expired(); });
  live_.push_back(conn);
}

void KdcServer::spawn(std::function<void()> fn) {
  auto done = std::make_shared<std::atomic<bool>>(false);
  std::lock_guard lock(workers_mu_);
  for (auto it = workers_.begin(); it != workers_.end();) {
    if (it->done->load()) {
      it->thread.join();
      it = workers_.erase(it);
    } else {
      ++it;
    }
  }
  workers_.push_back(Worker{std::thread([fn = std::move(fn), done] {
                              fn();
                              done->store(true);
                            }),
                            done});
}

void KdcServer::accept_loop() {
  while (!stopping_.load()) {
    const auto fd = listener_->accept_fd(net::Millis{100});
    if (!fd) continue;
    auto conn = std::make_shared<net::Connection>(*fd, cfg_.message_timeout, cfg_.max_payload);
    track(conn);
    spawn([this, conn] { handshake(conn); });
  }
}

void KdcServer::handshake(std::shared_ptr<net::Connection> conn) {
  wire::Hello hello;
  try {
    wire::Message m = conn->receive();
    auto* h = std::get_if<wire::Hello>(&m);
    if (h == nullptr) {
      try_send(conn.get(), wire::Abort{static_cast<std::uint8_t>(AbortReason::ProtocolViolation)});
      return;
    }
    hello = *h;
  } catch (const Error&) {
    try_send(conn.get(), wire::Abort{static_cast<std::uint8_t>(AbortReason::ProtocolViolation)});
    return;
  }

  const auto late = wire::Abort{static_cast<std::uint8_t>(AbortReason::LateJoin)};
  std::optional<Pending> ready;
  {
    std::lock_guard lock(mu_);
    if (stopping_.load()) return;
    if (closed_.contains(hello.session_id)) {
      try_send(conn.get(), late);
      return;
    }
    Pending& p = pending_[hello.session_id];
    switch (hello.role) {
      case Role::A:
        if (p.a) {
          try_send(conn.get(), late);
          return;
        }
        p.a = conn;
        p.hello_a = hello;
        break;
      case Role::B:
        if (p.b) {
          try_send(conn.get(), late);
          return;
        }
        p.b = conn;
        p.hello_b = hello;
        break;
      case Role::E:
        p.listeners.push_back(conn);
        break;
    }
    if (p.a && p.b) {
      ready = std::move(p);
      pending_.erase(hello.session_id);
      closed_.insert(hello.session_id);
    }
  }
  if (ready) run_session(hello.session_id, std::move(*ready));
}

void KdcServer::run_session(std::uint64_t session_id, Pending p) {
  // Only used before the outboxes own the listener connections.
  auto abort_all = [&](AbortReason reason) {
    const wire::Message m = wire::Abort{static_cast<std::uint8_t>(reason)};
    try_send(p.a.get(), m);
    try_send(p.b.get(), m);
    for (auto& e : p.listeners) try_send(e.get(), m);
  };

  const auto params = params_from(*p.hello_a);
  if (!params || !same_machine(*p.hello_a, *p.hello_b)) {
    abort_all(AbortReason::ParamMismatch);
    finished_.fetch_add(1);
    return;
  }

  std::vector<std::unique_ptr<Outbox>> outboxes;
  const auto hello_e = wire::encode(wire::Hello{session_id, Role::E, p.hello_a->k, p.hello_a->n,
                                                p.hello_a->l, p.hello_a->rule});
  const auto start = wire::encode(wire::Start{1});
  for (auto& e : p.listeners) {
    outboxes.push_back(std::make_unique<Outbox>(e));
    outboxes.back()->post(hello_e);
    outboxes.back()->post(start);
  }
  auto fan_out = [&](const std::vector<std::uint8_t>& frame) {
    for (auto& box : outboxes) box->post(frame);
  };

  net::Connection& a = *p.a;
  net::Connection& b = *p.b;
  SeededGenerator inputs(session_input_seed(cfg_.input_seed, session_id));
  try {
    send_to(a, Role::A, start);
    send_to(b, Role::B, start);

    std::uint64_t streak = 0;
    for (std::uint32_t round = 1;; ++round) {
      const auto input = wire::encode(wire::Input{round, wire::pack_input(gen_input(inputs, *params))});
      send_to(a, Role::A, input);
      send_to(b, Role::B, input);
      fan_out(input);

      const auto out_a = expect_from<wire::Output>(a, Role::A, round);
      const auto out_b = expect_from<wire::Output>(b, Role::B, round);
      const auto frame_a = wire::encode(out_a);
      const auto frame_b = wire::encode(out_b);
      send_to(b, Role::B, frame_a);
      send_to(a, Role::A, frame_b);
      fan_out(frame_a);
      fan_out(frame_b);
      streak = out_a.tau == out_b.tau ? streak + 1 : 0;

      if (streak >= cfg_.agreement_window) {
        const auto probe_a = expect_from<wire::SyncProbe>(a, Role::A, round);
        const auto probe_frame_a = wire::encode(probe_a);
        send_to(b, Role::B, probe_frame_a);
        fan_out(probe_frame_a);
        const auto probe_b = expect_from<wire::SyncProbe>(b, Role::B, round);
        const auto probe_frame_b = wire::encode(probe_b);
        send_to(a, Role::A, probe_frame_b);
        fan_out(probe_frame_b);

        if (probe_a.fingerprint == probe_b.fingerprint) {
          const auto ok = wire::encode(wire::SyncOk{});
          send_to(a, Role::A, ok);
          send_to(b, Role::B, ok);
          fan_out(ok);
          break;
        }
        const auto fail = wire::encode(wire::SyncFail{});
        send_to(a, Role::A, fail);
        send_to(b, Role::B, fail);
        fan_out(fail);
        streak = 0;
      }
      if (round >= cfg_.max_rounds) {
        const wire::Message cap = wire::Abort{static_cast<std::uint8_t>(AbortReason::RoundCap)};
        try_send(&a, cap);
        try_send(&b, cap);
        fan_out(wire::encode(cap));
        break;
      }
    }
  } catch (const PartnerFault& fault) {
    const wire::Message m = wire::Abort{static_cast<std::uint8_t>(
        fault.protocol ? AbortReason::ProtocolViolation : AbortReason::PeerFailure)};
    if (fault.protocol || fault.who != Role::A) try_send(&a, m);
    if (fault.protocol || fault.who != Role::B) try_send(&b, m);
    for (auto& box : outboxes) box->post(wire::encode(m));
  }
  for (auto& box : outboxes) box->close();
  finished_.fetch_add(1);
}

}  // namespace nkdc

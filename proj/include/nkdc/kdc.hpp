#pragma once

// Key Distribution Centre service and its three client roles.
//
// Per session the KDC waits for HELLO from A and B (any number of E may
// register before that), checks that A and B agree on (k, n, l, rule), then
// runs rounds: INPUT to everyone, OUTPUT from A and B, each relayed to the
// other partner and to every E (A's first, then B's). The KDC tracks the
// agreement streak exactly as the partners do; once it reaches the window
// both partners send SYNC_PROBE, each probe is relayed to the other partner
// and to E, and the KDC answers SYNC_OK or SYNC_FAIL.
//
// The round inputs come from SplitMix64 seeded with input_seed + session_id,
// so a session replays run_local_session with that input seed.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "nkdc/net.hpp"
#include "nkdc/session.hpp"
#include "nkdc/wire.hpp"

namespace nkdc {

struct ServerConfig {
  net::Endpoint listen{"127.0.0.1", 0};
  std::uint64_t max_rounds = kDefaultMaxRounds;
  std::uint64_t agreement_window = kDefaultAgreementWindow;
  std::uint64_t input_seed = 0;
  net::Millis message_timeout = net::kDefaultMessageTimeout;
  std::size_t max_payload = wire::kMaxPayload;
};

/// Input seed the KDC uses for a given session.
constexpr std::uint64_t session_input_seed(std::uint64_t input_seed, std::uint64_t session_id) noexcept {
  return input_seed + session_id;
}

class KdcServer {
 public:
  /// Throws ConfigInvalid for a bad round budget.
  explicit KdcServer(ServerConfig cfg);
  ~KdcServer();
  KdcServer(const KdcServer&) = delete;
  KdcServer& operator=(const KdcServer&) = delete;

  /// Binds the listener and starts accepting. Throws ConnectionLost if the
  /// address cannot be bound.
  void start();
  /// Closes the listener, wakes every connection, joins every worker.
  void stop();

  std::uint16_t port() const noexcept { return port_; }
  /// Eavesdroppers registered for a session that has not started yet.
  std::size_t waiting_eavesdroppers(std::uint64_t session_id) const;
  std::size_t sessions_finished() const noexcept { return finished_.load(); }

 private:
  struct Pending {
    std::shared_ptr<net::Connection> a;
    std::shared_ptr<net::Connection> b;
    std::optional<wire::Hello> hello_a;
    std::optional<wire::Hello> hello_b;
    std::vector<std::shared_ptr<net::Connection>> listeners;
  };
  struct Worker {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };

  void accept_loop();
  void spawn(std::function<void()> fn);
  void handshake(std::shared_ptr<net::Connection> conn);
  void run_session(std::uint64_t session_id, Pending pending);
  void track(const std::shared_ptr<net::Connection>& conn);

  ServerConfig cfg_;
  std::unique_ptr<net::Listener> listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::size_t> finished_{0};
  std::thread acceptor_;

  mutable std::mutex mu_;
  std::map<std::uint64_t, Pending> pending_;
  std::set<std::uint64_t> closed_;
  std::vector<std::weak_ptr<net::Connection>> live_;

  std::mutex workers_mu_;
  std::vector<Worker> workers_;
};

struct PartyConfig {
  std::uint64_t session_id = 0;
  wire::Role role = wire::Role::A;
  TpmParams params;
  std::uint64_t weight_seed = 0;
  std::uint64_t agreement_window = kDefaultAgreementWindow;
  std::uint64_t max_rounds = kDefaultMaxRounds;
  net::Millis timeout = net::kDefaultMessageTimeout;
};

enum class SessionOutcome { Synced, TimedOut, Aborted };

struct PartyResult {
  SessionOutcome outcome = SessionOutcome::Aborted;
  std::optional<std::uint8_t> abort_reason;
  SyncReport report;  // fingerprint of the peer is 0 until it has probed
  WeightMatrix weights;
  std::uint64_t probes = 0;
};

/// Drives one partner over the wire until SYNC_OK or ABORT. Throws
/// ConnectionLost, ProtocolViolation, or Timeout.
PartyResult party_client(const net::Endpoint& kdc, const PartyConfig& cfg);

struct EavesdropConfig {
  std::uint64_t session_id = 0;
  std::uint64_t weight_seed = 0;
  net::Millis timeout = net::kDefaultMessageTimeout;
};

struct EavesdropResult {
  SessionOutcome outcome = SessionOutcome::Aborted;
  std::optional<std::uint8_t> abort_reason;
  std::optional<TpmParams> params;  // unset if refused before the KDC sent them
  std::optional<WeightMatrix> weights;
  std::uint64_t rounds_observed = 0;
  std::uint64_t key_fingerprint_e = 0;
  /// Last probe fingerprint relayed by the KDC (0 if none was seen).
  std::uint64_t observed_fingerprint = 0;
  /// Own fingerprint equals the confirmed probe fingerprint.
  bool attacker_synced = false;
};

/// Passive listener for one session. Throws as party_client.
EavesdropResult eavesdrop_client(const net::Endpoint& kdc, const EavesdropConfig& cfg);

}  // namespace nkdc

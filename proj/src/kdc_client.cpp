#include "nkdc/error.hpp"
#include "nkdc/keymat.hpp"
#include "nkdc/kdc.hpp"

namespace nkdc {

namespace {

using Clock = std::chrono::steady_clock;

[[noreturn]] void violation(const std::string& what, const wire::Message& m) {
  throw Error(ErrorCode::ProtocolViolation, what + " (frame: " + wire::describe(m) + ")");
}

/// Transport errors pass through; a frame the codec rejects is the KDC's fault.
wire::Message receive(net::Connection& conn) {
  try {
    return conn.receive();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConnectionLost || e.code() == ErrorCode::Timeout) throw;
    throw Error(ErrorCode::ProtocolViolation, std::string("undecodable frame: ") + e.what());
  }
}

SessionOutcome outcome_of_abort(std::uint8_t reason) {
  return reason == static_cast<std::uint8_t>(wire::AbortReason::RoundCap) ? SessionOutcome::TimedOut
                                                                          : SessionOutcome::Aborted;
}

class PartyDriver {
 public:
  PartyDriver(net::Connection& conn, const PartyConfig& cfg)
      : conn_(conn), cfg_(cfg), state_(make_state(cfg)) {}

  PartyResult run() {
    const auto started = Clock::now();
    conn_.send(wire::Hello{cfg_.session_id, cfg_.role, static_cast<std::uint16_t>(cfg_.params.k()),
                           static_cast<std::uint16_t>(cfg_.params.n()),
                           static_cast<std::uint8_t>(cfg_.params.l()),
                           static_cast<std::uint8_t>(cfg_.params.rule())});

    wire::Message first = receive(conn_);
    if (auto* abort = std::get_if<wire::Abort>(&first)) {
      finish(outcome_of_abort(abort->reason), abort->reason);
    } else if (!std::holds_alternative<wire::Start>(first)) {
      violation("expected START", first);
    }

    while (!done_) {
      wire::Message m = receive(conn_);
      if (auto* in = std::get_if<wire::Input>(&m)) {
        play_round(*in, m);
      } else if (auto* probe = std::get_if<wire::SyncProbe>(&m)) {
        // The peer probed first; answer with ours and wait for the verdict.
        if (state_.status != PartnerStatus::Running) violation("probe after the session ended", m);
        peer_fingerprint_ = probe->fingerprint;
        send_probe(static_cast<std::uint32_t>(state_.rounds_elapsed));
        await_verdict();
      } else if (auto* abort = std::get_if<wire::Abort>(&m)) {
        finish(outcome_of_abort(abort->reason), abort->reason);
      } else {
        violation("unexpected frame", m);
      }
    }

    PartyResult result{outcome_, abort_reason_, {}, state_.weights, probes_};
    result.report.synced = outcome_ == SessionOutcome::Synced;
    result.report.rounds_used = state_.rounds_elapsed;
    result.report.updates_applied = state_.updates_applied;
    const std::uint64_t own = key_fingerprint(state_.weights);
    const bool is_a = cfg_.role == wire::Role::A;
    result.report.key_fingerprint_a = is_a ? own : peer_fingerprint_;
    result.report.key_fingerprint_b = is_a ? peer_fingerprint_ : own;
    result.report.elapsed = Clock::now() - started;
    return result;
  }

 private:
  static PartnerState make_state(const PartyConfig& cfg) {
    if (cfg.role == wire::Role::E) throw Error(ErrorCode::ConfigInvalid, "party role must be A or B");
    SessionConfig session{cfg.params, cfg.max_rounds, cfg.agreement_window};
    return PartnerState::create(session, cfg.weight_seed);
  }

  void play_round(const wire::Input& in, const wire::Message& frame) {
    if (state_.status != PartnerStatus::Running) violation("INPUT after the round budget", frame);
    const auto round = static_cast<std::uint32_t>(state_.rounds_elapsed + 1);
    if (in.round != round) violation("expected round " + std::to_string(round), frame);
    const InputVector x = [&] {
      try {
        return wire::unpack_input(cfg_.params, in.packed);
      } catch (const Error& e) {
        violation(e.what(), frame);
      }
    }();

    const PartnerOutput out = partner_round(state_, x);
    conn_.send(wire::Output{round, out.tau});

    wire::Message reply = receive(conn_);
    if (auto* abort = std::get_if<wire::Abort>(&reply)) {
      finish(outcome_of_abort(abort->reason), abort->reason);
      return;
    }
    auto* peer = std::get_if<wire::Output>(&reply);
    if (peer == nullptr || peer->round != round) violation("expected peer OUTPUT", reply);
    apply_peer_output(state_, x, out.trace, peer->tau);

    if (state_.probe_eligible()) {
      send_probe(round);
      await_verdict();
    }
  }

  void send_probe(std::uint32_t round) {
    ++probes_;
    conn_.send(wire::SyncProbe{round, key_fingerprint(state_.weights)});
  }

  void await_verdict() {
    for (;;) {
      wire::Message m = receive(conn_);
      if (auto* probe = std::get_if<wire::SyncProbe>(&m)) {
        peer_fingerprint_ = probe->fingerprint;
      } else if (std::holds_alternative<wire::SyncOk>(m)) {
        if (peer_fingerprint_ != key_fingerprint(state_.weights)) {
          violation("SYNC_OK for unequal fingerprints", m);
        }
        resolve_probe(state_, true);
        finish(SessionOutcome::Synced, std::nullopt);
        return;
      } else if (std::holds_alternative<wire::SyncFail>(m)) {
        resolve_probe(state_, false);
        return;
      } else if (auto* abort = std::get_if<wire::Abort>(&m)) {
        finish(outcome_of_abort(abort->reason), abort->reason);
        return;
      } else {
        violation("expected probe verdict", m);
      }
    }
  }

  void finish(SessionOutcome outcome, std::optional<std::uint8_t> reason) {
    outcome_ = outcome;
    abort_reason_ = reason;
    done_ = true;
  }

  net::Connection& conn_;
  const PartyConfig& cfg_;
  PartnerState state_;
  std::uint64_t peer_fingerprint_ = 0;
  std::uint64_t probes_ = 0;
  bool done_ = false;
  SessionOutcome outcome_ = SessionOutcome::Aborted;
  std::optional<std::uint8_t> abort_reason_;
};

}  // namespace

PartyResult party_client(const net::Endpoint& kdc, const PartyConfig& cfg) {
  net::Connection conn = net::Connection::connect(kdc, cfg.timeout);
  PartyDriver driver(conn, cfg);
  return driver.run();
}

EavesdropResult eavesdrop_client(const net::Endpoint& kdc, const EavesdropConfig& cfg) {
  net::Connection conn = net::Connection::connect(kdc, cfg.timeout);
  conn.send(wire::Hello{cfg.session_id, wire::Role::E, 0, 0, 0, 0});

  EavesdropResult result;
  wire::Message first = receive(conn);
  if (auto* abort = std::get_if<wire::Abort>(&first)) {
    result.outcome = outcome_of_abort(abort->reason);
    result.abort_reason = abort->reason;
    return result;
  }
  auto* hello = std::get_if<wire::Hello>(&first);
  if (hello == nullptr || hello->session_id != cfg.session_id) violation("expected session HELLO", first);
  try {
    result.params = TpmParams(hello->k, hello->n, hello->l, static_cast<LearningRule>(hello->rule));
  } catch (const Error& e) {
    violation(e.what(), first);
  }
  const TpmParams& params = *result.params;
  SeededGenerator g(cfg.weight_seed);
  EavesdropperState eve{gen_weights(g, params)};

  wire::Message start = receive(conn);
  if (auto* abort = std::get_if<wire::Abort>(&start)) {
    result.outcome = outcome_of_abort(abort->reason);
    result.abort_reason = abort->reason;
    result.weights = eve.weights;
    result.key_fingerprint_e = key_fingerprint(eve.weights);
    return result;
  }
  if (!std::holds_alternative<wire::Start>(start)) violation("expected START", start);

  std::optional<InputVector> x;
  std::vector<int> taus;
  std::uint32_t round = 0;
  bool done = false;
  while (!done) {
    wire::Message m = receive(conn);
    if (auto* in = std::get_if<wire::Input>(&m)) {
      if (in->round != round + 1 || taus.size() == 1) violation("out-of-order INPUT", m);
      round = in->round;
      try {
        x = wire::unpack_input(params, in->packed);
      } catch (const Error& e) {
        violation(e.what(), m);
      }
      taus.clear();
    } else if (auto* out = std::get_if<wire::Output>(&m)) {
      if (!x || out->round != round || taus.size() >= 2) violation("unexpected OUTPUT", m);
      taus.push_back(out->tau);
      // Relayed in a fixed order: A's output, then B's.
      if (taus.size() == 2) eavesdrop_round(eve, *x, taus[0], taus[1]);
    } else if (auto* probe = std::get_if<wire::SyncProbe>(&m)) {
      result.observed_fingerprint = probe->fingerprint;
    } else if (std::holds_alternative<wire::SyncOk>(m)) {
      result.outcome = SessionOutcome::Synced;
      done = true;
    } else if (std::holds_alternative<wire::SyncFail>(m)) {
      continue;
    } else if (auto* abort = std::get_if<wire::Abort>(&m)) {
      result.outcome = outcome_of_abort(abort->reason);
      result.abort_reason = abort->reason;
      done = true;
    } else {
      violation("unexpected frame", m);
    }
  }

  result.rounds_observed = eve.rounds_observed;
  result.key_fingerprint_e = key_fingerprint(eve.weights);
  result.attacker_synced =
      result.outcome == SessionOutcome::Synced && result.key_fingerprint_e == result.observed_fingerprint;
  result.weights = std::move(eve.weights);
  return result;
}

}  // namespace nkdc

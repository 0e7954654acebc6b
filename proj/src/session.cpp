#include "nkdc/session.hpp"

#include "nkdc/error.hpp"
#include "nkdc/keymat.hpp"

namespace nkdc {

void SessionConfig::validate() const {
  if (agreement_window < 1) throw Error(ErrorCode::ConfigInvalid, "agreement_window must be >= 1");
  if (max_rounds < agreement_window) {
    throw Error(ErrorCode::ConfigInvalid, "max_rounds must be >= agreement_window");
  }
}

PartnerState PartnerState::create(const SessionConfig& cfg, std::uint64_t weight_seed) {
  cfg.validate();
  SeededGenerator g(weight_seed);
  PartnerState s{gen_weights(g, cfg.params)};
  s.max_rounds = cfg.max_rounds;
  s.agreement_window = cfg.agreement_window;
  return s;
}

PartnerOutput partner_round(const PartnerState& s, const InputVector& x) {
  if (s.status != PartnerStatus::Running) {
    throw Error(ErrorCode::InvalidState, "partner_round on a partner that is not running");
  }
  RoundTrace trace = compute_output(s.weights, x);
  const int tau = trace.tau;
  return PartnerOutput{tau, std::move(trace)};
}

void apply_peer_output(PartnerState& s, const InputVector& x, const RoundTrace& trace, int tau_peer) {
  if (s.status != PartnerStatus::Running) {
    throw Error(ErrorCode::InvalidState, "apply_peer_output on a partner that is not running");
  }
  if (update_weights(s.weights, x, trace, tau_peer)) {
    ++s.consecutive_agreements;
    ++s.updates_applied;
  } else {
    s.consecutive_agreements = 0;
  }
  ++s.rounds_elapsed;
  if (s.rounds_elapsed >= s.max_rounds && !s.probe_eligible()) s.status = PartnerStatus::TimedOut;
}

void resolve_probe(PartnerState& s, bool fingerprints_match) {
  if (s.status != PartnerStatus::Running) {
    throw Error(ErrorCode::InvalidState, "probe result for a partner that is not running");
  }
  if (fingerprints_match) {
    s.status = PartnerStatus::Synced;
    return;
  }
  s.consecutive_agreements = 0;
  if (s.rounds_elapsed >= s.max_rounds) s.status = PartnerStatus::TimedOut;
}

void eavesdrop_round(EavesdropperState& e, const InputVector& x, int tau_a, int tau_b) {
  const RoundTrace own = compute_output(e.weights, x);
  if (tau_a == tau_b) learn(e.weights, x, own.sigma, tau_a);
  ++e.rounds_observed;
}

LocalSession::LocalSession(const SessionConfig& cfg, bool with_eavesdropper)
    : cfg_(cfg),
      inputs_(cfg.input_seed),
      a_(PartnerState::create(cfg, cfg.weight_seed_a)),
      b_(PartnerState::create(cfg, cfg.weight_seed_b)) {
  if (with_eavesdropper) e_ = EavesdropperState::create(cfg);
}

bool LocalSession::step() {
  if (finished()) return false;
  const auto start = std::chrono::steady_clock::now();

  const InputVector x = gen_input(inputs_, cfg_.params);
  const PartnerOutput out_a = partner_round(a_, x);
  const PartnerOutput out_b = partner_round(b_, x);
  if (e_) eavesdrop_round(*e_, x, out_a.tau, out_b.tau);
  apply_peer_output(a_, x, out_a.trace, out_b.tau);
  apply_peer_output(b_, x, out_b.trace, out_a.tau);

  if (a_.probe_eligible() || b_.probe_eligible()) {
    ++probes_;
    const bool match = key_fingerprint(a_.weights) == key_fingerprint(b_.weights);
    resolve_probe(a_, match);
    resolve_probe(b_, match);
  }

  elapsed_ += std::chrono::steady_clock::now() - start;
  return !finished();
}

void LocalSession::run() {
  while (step()) {
  }
}

SyncReport LocalSession::report() const {
  SyncReport r;
  r.synced = a_.status == PartnerStatus::Synced && b_.status == PartnerStatus::Synced;
  r.rounds_used = a_.rounds_elapsed;
  r.updates_applied = a_.updates_applied;
  r.key_fingerprint_a = key_fingerprint(a_.weights);
  r.key_fingerprint_b = key_fingerprint(b_.weights);
  r.elapsed = elapsed_;
  return r;
}

AttackReport LocalSession::attack_report() const {
  if (!e_) throw Error(ErrorCode::InvalidState, "session has no eavesdropper");
  AttackReport r;
  r.partner_report = report();
  r.attacker_synced = e_->weights == a_.weights;
  r.attacker_mean_overlap = mean_overlap(e_->weights, a_.weights);
  r.key_fingerprint_e = key_fingerprint(e_->weights);
  return r;
}

SyncReport run_local_session(const SessionConfig& cfg) {
  LocalSession session(cfg);
  session.run();
  return session.report();
}

AttackReport run_attack_session(const SessionConfig& cfg) {
  LocalSession session(cfg, true);
  session.run();
  return session.attack_report();
}

}  // namespace nkdc

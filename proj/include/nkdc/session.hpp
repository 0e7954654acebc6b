#pragma once

// Protocol roles for mutual learning: partners A and B and the passive
// eavesdropper E. LocalSession drives all of them in-process; the network
// clients drive the same state machines from wire messages.

#include <chrono>
#include <cstdint>
#include <optional>

#include "nkdc/rng.hpp"
#include "nkdc/tpm.hpp"

namespace nkdc {

inline constexpr std::uint64_t kDefaultMaxRounds = 100'000;
inline constexpr std::uint64_t kDefaultAgreementWindow = 50;

struct SessionConfig {
  TpmParams params;
  std::uint64_t max_rounds = kDefaultMaxRounds;
  std::uint64_t agreement_window = kDefaultAgreementWindow;
  std::uint64_t input_seed = 0;
  std::uint64_t weight_seed_a = 0;
  std::uint64_t weight_seed_b = 0;
  std::uint64_t weight_seed_e = 0;

  /// Throws ConfigInvalid unless 1 <= agreement_window <= max_rounds.
  void validate() const;
};

enum class PartnerStatus { Running, Synced, TimedOut };

struct PartnerState {
  WeightMatrix weights;
  std::uint64_t max_rounds = kDefaultMaxRounds;
  std::uint64_t agreement_window = kDefaultAgreementWindow;
  std::uint64_t rounds_elapsed = 0;
  std::uint64_t consecutive_agreements = 0;
  std::uint64_t updates_applied = 0;
  PartnerStatus status = PartnerStatus::Running;

  static PartnerState create(const SessionConfig& cfg, std::uint64_t weight_seed);

  const TpmParams& params() const noexcept { return weights.params(); }
  /// Running with a full agreement streak: the next step is a fingerprint probe.
  bool probe_eligible() const noexcept {
    return status == PartnerStatus::Running && consecutive_agreements >= agreement_window;
  }
};

struct PartnerOutput {
  int tau;
  RoundTrace trace;
};

/// Computes this round's output bit. Throws InvalidState unless Running.
PartnerOutput partner_round(const PartnerState& s, const InputVector& x);

/// Learns from the peer's bit when it agrees with ours and advances the round
/// counter. A partner whose streak just filled stays Running past max_rounds
/// until resolve_probe settles it.
void apply_peer_output(PartnerState& s, const InputVector& x, const RoundTrace& trace, int tau_peer);

/// Outcome of a fingerprint probe: match -> Synced; mismatch -> streak reset,
/// and TimedOut if the round budget is spent.
void resolve_probe(PartnerState& s, bool fingerprints_match);

struct EavesdropperState {
  WeightMatrix weights;
  std::uint64_t rounds_observed = 0;

  static EavesdropperState create(const SessionConfig& cfg) {
    SeededGenerator g(cfg.weight_seed_e);
    return EavesdropperState{gen_weights(g, cfg.params)};
  }
};

/// Simple attack: when the partners agree, learn as if our own output were
/// theirs, using our own hidden units to pick rows.
void eavesdrop_round(EavesdropperState& e, const InputVector& x, int tau_a, int tau_b);

struct SyncReport {
  bool synced = false;
  std::uint64_t rounds_used = 0;
  std::uint64_t updates_applied = 0;
  std::uint64_t key_fingerprint_a = 0;
  std::uint64_t key_fingerprint_b = 0;
  std::chrono::nanoseconds elapsed{0};
};

struct AttackReport {
  SyncReport partner_report;
  bool attacker_synced = false;
  double attacker_mean_overlap = 0.0;
  std::uint64_t key_fingerprint_e = 0;
};

/// In-process A/B session, optionally with E listening on every round.
class LocalSession {
 public:
  explicit LocalSession(const SessionConfig& cfg, bool with_eavesdropper = false);

  /// One round plus any probe it triggers. Returns false once both partners
  /// have left Running.
  bool step();
  void run();
  bool finished() const noexcept { return a_.status != PartnerStatus::Running; }

  SyncReport report() const;
  /// Throws InvalidState if the session has no eavesdropper.
  AttackReport attack_report() const;

  const PartnerState& partner_a() const noexcept { return a_; }
  const PartnerState& partner_b() const noexcept { return b_; }
  const std::optional<EavesdropperState>& eavesdropper() const noexcept { return e_; }
  std::uint64_t probes() const noexcept { return probes_; }

 private:
  SessionConfig cfg_;
  SeededGenerator inputs_;
  PartnerState a_;
  PartnerState b_;
  std::optional<EavesdropperState> e_;
  std::uint64_t probes_ = 0;
  std::chrono::nanoseconds elapsed_{0};
};

SyncReport run_local_session(const SessionConfig& cfg);
AttackReport run_attack_session(const SessionConfig& cfg);

}  // namespace nkdc

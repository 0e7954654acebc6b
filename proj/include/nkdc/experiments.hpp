#pragma once

// Batch Monte-Carlo harness. Each command produces a CSV with a data section,
// a blank line, and a summary section. Output is deterministic for a given
// spec except for the elapsed_micros column of the sweep.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nkdc/session.hpp"

namespace nkdc::experiments {

struct TrialSeeds {
  std::uint64_t input = 0;
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  std::uint64_t e = 0;
};

/// fnv1a64 over base_seed, value and trial (8 octets each, big-endian) plus a
/// one-octet stream tag per seed ('I', 'A', 'B', 'E').
TrialSeeds derive_trial_seeds(std::uint64_t base_seed, std::uint64_t value, std::uint64_t trial);

SessionConfig trial_config(const TpmParams& params, const TrialSeeds& seeds, std::uint64_t max_rounds,
                           std::uint64_t agreement_window);

enum class SweepDim { N, L, K };

std::string_view to_string(SweepDim dim) noexcept;
std::optional<SweepDim> parse_dim(std::string_view text) noexcept;

struct SweepSpec {
  SweepDim varying = SweepDim::N;
  std::vector<std::uint32_t> values;
  TpmParams fixed{3, 10, 3};  // the varying dimension is overridden per value
  std::uint32_t trials_per_value = 1;
  std::uint64_t base_seed = 0;
  std::uint64_t max_rounds = kDefaultMaxRounds;
  std::uint64_t agreement_window = kDefaultAgreementWindow;
  unsigned jobs = 1;

  /// Throws ConfigInvalid.
  void validate() const;
  TpmParams params_for(std::uint32_t value) const;
};

struct TrialRow {
  std::uint32_t varying_value = 0;
  std::uint32_t trial_index = 0;
  bool synced = false;
  std::uint64_t rounds_used = 0;
  std::uint64_t updates_applied = 0;
  double pct_iterations = 0.0;  // rounds_used / max_rounds
  std::uint64_t elapsed_micros = 0;
  std::uint64_t fingerprint = 0;
};

struct SweepSummary {
  std::uint32_t varying_value = 0;
  std::uint32_t trials = 0;
  double synced_fraction = 0.0;
  double mean_rounds = 0.0;
  double median_rounds = 0.0;
};

struct SweepResult {
  SweepDim varying = SweepDim::N;
  std::vector<TrialRow> rows;  // ordered by (value, trial)
  std::vector<SweepSummary> summary;
};

inline constexpr std::string_view kSweepHeader =
    "varying_value,trial_index,synced,rounds_used,updates_applied,pct_iterations,elapsed_micros,"
    "fingerprint";
inline constexpr std::string_view kSweepSummaryHeader =
    "varying_value,trials,synced_fraction,mean_rounds,median_rounds";

SweepResult run_sweep(const SweepSpec& spec);
std::string to_csv(const SweepResult& result);

struct RandomnessRow {
  std::uint32_t trial_index = 0;
  bool synced = false;
  std::uint64_t rounds_used = 0;
  std::uint64_t fingerprint = 0;
  std::vector<std::uint8_t> key;  // kept in memory only, never written to CSV
};

struct RandomnessResult {
  std::vector<RandomnessRow> rows;
  std::size_t distinct_fingerprints = 0;
  std::size_t distinct_keys = 0;
};

inline constexpr std::string_view kRandomnessHeader = "trial_index,synced,rounds_used,fingerprint";
inline constexpr std::string_view kRandomnessSummaryHeader = "trials,distinct_fingerprints,distinct_keys";

/// Throws ConfigInvalid if trials < 2.
RandomnessResult run_randomness(std::uint32_t trials, const TpmParams& params, std::uint64_t base_seed,
                                std::uint64_t max_rounds = kDefaultMaxRounds,
                                std::uint64_t agreement_window = kDefaultAgreementWindow,
                                unsigned jobs = 1);
/// Same, with caller-chosen seeds per trial.
RandomnessResult run_randomness_trials(const std::vector<TrialSeeds>& seeds, const TpmParams& params,
                                       std::uint64_t max_rounds, std::uint64_t agreement_window,
                                       unsigned jobs = 1);
std::string to_csv(const RandomnessResult& result);

struct AttackRow {
  std::uint32_t trial_index = 0;
  bool partner_synced = false;
  std::uint64_t partner_rounds_used = 0;
  bool attacker_synced = false;
  double attacker_mean_overlap = 0.0;
  std::uint64_t fingerprint_a = 0;
  std::uint64_t fingerprint_e = 0;
};

struct AttackResult {
  std::vector<AttackRow> rows;
  double partner_success_fraction = 0.0;
  double attacker_success_fraction = 0.0;
  double mean_attacker_overlap = 0.0;
};

inline constexpr std::string_view kAttackHeader =
    "trial_index,partner_synced,partner_rounds_used,attacker_synced,attacker_mean_overlap,"
    "fingerprint_a,fingerprint_e";
inline constexpr std::string_view kAttackSummaryHeader =
    "trials,partner_success_fraction,attacker_success_fraction,mean_attacker_overlap";

/// Throws ConfigInvalid if trials < 1.
AttackResult run_attack_bench(std::uint32_t trials, const TpmParams& params, std::uint64_t base_seed,
                              std::uint64_t max_rounds = kDefaultMaxRounds,
                              std::uint64_t agreement_window = kDefaultAgreementWindow,
                              unsigned jobs = 1);
std::string to_csv(const AttackResult& result);

}  // namespace nkdc::experiments

#include "nkdc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "nkdc/error.hpp"
#include "nkdc/keymat.hpp"

namespace nkdc::experiments {

namespace {

void put_be64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

/// Runs fn(0..count-1) on up to `jobs` threads. Each index writes only its
/// own slot, so results are ordered regardless of completion order.
template <typename Fn>
void for_each_trial(std::size_t count, unsigned jobs, Fn fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

void validate_budget(std::uint64_t max_rounds, std::uint64_t agreement_window) {
  if (agreement_window < 1 || max_rounds < agreement_window) {
    throw Error(ErrorCode::ConfigInvalid, "need 1 <= agreement_window <= max_rounds");
  }
}

}  // namespace

TrialSeeds derive_trial_seeds(std::uint64_t base_seed, std::uint64_t value, std::uint64_t trial) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(25);
  put_be64(bytes, base_seed);
  put_be64(bytes, value);
  put_be64(bytes, trial);
  auto seed_for = [&](char tag) {
    bytes.resize(24);
    bytes.push_back(static_cast<std::uint8_t>(tag));
    return fnv1a64(bytes);
  };
  return TrialSeeds{seed_for('I'), seed_for('A'), seed_for('B'), seed_for('E')};
}

SessionConfig trial_config(const TpmParams& params, const TrialSeeds& seeds, std::uint64_t max_rounds,
                           std::uint64_t agreement_window) {
  return SessionConfig{params, max_rounds, agreement_window, seeds.input, seeds.a, seeds.b, seeds.e};
}

std::string_view to_string(SweepDim dim) noexcept {
  switch (dim) {
    case SweepDim::N: return "n";
    case SweepDim::L: return "l";
    case SweepDim::K: return "k";
  }
  return "?";
}

std::optional<SweepDim> parse_dim(std::string_view text) noexcept {
  if (text == "n") return SweepDim::N;
  if (text == "l") return SweepDim::L;
  if (text == "k") return SweepDim::K;
  return std::nullopt;
}

TpmParams SweepSpec::params_for(std::uint32_t value) const {
  switch (varying) {
    case SweepDim::N: return TpmParams(fixed.k(), value, fixed.l(), fixed.rule());
    case SweepDim::L: return TpmParams(fixed.k(), fixed.n(), static_cast<int>(value), fixed.rule());
    case SweepDim::K: return TpmParams(value, fixed.n(), fixed.l(), fixed.rule());
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown sweep dimension");
}

void SweepSpec::validate() const {
  if (values.empty()) throw Error(ErrorCode::ConfigInvalid, "sweep needs at least one value");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] <= values[i - 1]) {
      throw Error(ErrorCode::ConfigInvalid, "sweep values must be strictly increasing");
    }
  }
  if (trials_per_value < 1) throw Error(ErrorCode::ConfigInvalid, "trials must be >= 1");
  validate_budget(max_rounds, agreement_window);
  for (std::uint32_t v : values) {
    if (varying == SweepDim::L && v > static_cast<std::uint32_t>(TpmParams::kMaxWeightBound)) {
      throw Error(ErrorCode::ConfigInvalid, "l values must lie in [1, 127]");
    }
    (void)params_for(v);
  }
}

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  const std::size_t trials = spec.trials_per_value;
  SweepResult result;
  result.varying = spec.varying;
  result.rows.resize(spec.values.size() * trials);

  for_each_trial(result.rows.size(), spec.jobs, [&](std::size_t slot) {
    const std::uint32_t value = spec.values[slot / trials];
    const auto trial = static_cast<std::uint32_t>(slot % trials);
    const SessionConfig cfg = trial_config(spec.params_for(value), derive_trial_seeds(spec.base_seed, value, trial),
                                           spec.max_rounds, spec.agreement_window);
    const SyncReport report = run_local_session(cfg);
    TrialRow& row = result.rows[slot];
    row.varying_value = value;
    row.trial_index = trial;
    row.synced = report.synced;
    row.rounds_used = report.rounds_used;
    row.updates_applied = report.updates_applied;
    row.pct_iterations = static_cast<double>(report.rounds_used) / static_cast<double>(spec.max_rounds);
    row.elapsed_micros =
        static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(report.elapsed).count());
    row.fingerprint = report.key_fingerprint_a;
  });

  for (std::size_t v = 0; v < spec.values.size(); ++v) {
    std::vector<std::uint64_t> rounds;
    std::size_t synced = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const TrialRow& row = result.rows[v * trials + t];
      rounds.push_back(row.rounds_used);
      synced += row.synced ? 1 : 0;
    }
    std::sort(rounds.begin(), rounds.end());
    double total = 0.0;
    for (auto r : rounds) total += static_cast<double>(r);
    const std::size_t mid = rounds.size() / 2;
    const double median = rounds.size() % 2 == 1
                              ? static_cast<double>(rounds[mid])
                              : (static_cast<double>(rounds[mid - 1]) + static_cast<double>(rounds[mid])) / 2.0;
    result.summary.push_back(SweepSummary{spec.values[v], static_cast<std::uint32_t>(trials),
                                          static_cast<double>(synced) / static_cast<double>(trials),
                                          total / static_cast<double>(trials), median});
  }
  return result;
}

std::string to_csv(const SweepResult& result) {
  std::string out(kSweepHeader);
  out += '\n';
  for (const TrialRow& r : result.rows) {
    out += std::to_string(r.varying_value) + ',' + std::to_string(r.trial_index) + ',' +
           (r.synced ? "1" : "0") + ',' + std::to_string(r.rounds_used) + ',' +
           std::to_string(r.updates_applied) + ',' + fixed6(r.pct_iterations) + ',' +
           std::to_string(r.elapsed_micros) + ',' + fingerprint_hex(r.fingerprint) + '\n';
  }
  out += '\n';
  out += kSweepSummaryHeader;
  out += '\n';
  for (const SweepSummary& s : result.summary) {
    out += std::to_string(s.varying_value) + ',' + std::to_string(s.trials) + ',' +
           fixed6(s.synced_fraction) + ',' + fixed6(s.mean_rounds) + ',' + fixed6(s.median_rounds) + '\n';
  }
  return out;
}

RandomnessResult run_randomness_trials(const std::vector<TrialSeeds>& seeds, const TpmParams& params,
                                       std::uint64_t max_rounds, std::uint64_t agreement_window,
                                       unsigned jobs) {
  if (seeds.size() < 2) throw Error(ErrorCode::ConfigInvalid, "randomness needs at least 2 trials");
  validate_budget(max_rounds, agreement_window);
  RandomnessResult result;
  result.rows.resize(seeds.size());
  for_each_trial(seeds.size(), jobs, [&](std::size_t i) {
    LocalSession session(trial_config(params, seeds[i], max_rounds, agreement_window));
    session.run();
    const SyncReport report = session.report();
    const KeyMaterial key = derive_key(session.partner_a().weights);
    result.rows[i] = RandomnessRow{static_cast<std::uint32_t>(i), report.synced, report.rounds_used,
                                   key.fingerprint, key.bytes};
  });

  std::set<std::uint64_t> fingerprints;
  std::set<std::vector<std::uint8_t>> keys;
  for (const auto& row : result.rows) {
    fingerprints.insert(row.fingerprint);
    keys.insert(row.key);
  }
  result.distinct_fingerprints = fingerprints.size();
  result.distinct_keys = keys.size();
  return result;
}

RandomnessResult run_randomness(std::uint32_t trials, const TpmParams& params, std::uint64_t base_seed,
                                std::uint64_t max_rounds, std::uint64_t agreement_window, unsigned jobs) {
  if (trials < 2) throw Error(ErrorCode::ConfigInvalid, "randomness needs at least 2 trials");
  std::vector<TrialSeeds> seeds;
  for (std::uint32_t t = 0; t < trials; ++t) seeds.push_back(derive_trial_seeds(base_seed, 0, t));
  return run_randomness_trials(seeds, params, max_rounds, agreement_window, jobs);
}

std::string to_csv(const RandomnessResult& result) {
  std::string out(kRandomnessHeader);
  out += '\n';
  for (const auto& r : result.rows) {
    out += std::to_string(r.trial_index) + ',' + (r.synced ? "1" : "0") + ',' +
           std::to_string(r.rounds_used) + ',' + fingerprint_hex(r.fingerprint) + '\n';
  }
  out += '\n';
  out += kRandomnessSummaryHeader;
  out += '\n';
  out += std::to_string(result.rows.size()) + ',' + std::to_string(result.distinct_fingerprints) + ',' +
         std::to_string(result.distinct_keys) + '\n';
  return out;
}

AttackResult run_attack_bench(std::uint32_t trials, const TpmParams& params, std::uint64_t base_seed,
                              std::uint64_t max_rounds, std::uint64_t agreement_window, unsigned jobs) {
  if (trials < 1) throw Error(ErrorCode::ConfigInvalid, "attack bench needs at least 1 trial");
  validate_budget(max_rounds, agreement_window);
  AttackResult result;
  result.rows.resize(trials);
  for_each_trial(trials, jobs, [&](std::size_t i) {
    const auto t = static_cast<std::uint32_t>(i);
    const AttackReport report =
        run_attack_session(trial_config(params, derive_trial_seeds(base_seed, 0, t), max_rounds, agreement_window));
    result.rows[i] = AttackRow{t,
                               report.partner_report.synced,
                               report.partner_report.rounds_used,
                               report.attacker_synced,
                               report.attacker_mean_overlap,
                               report.partner_report.key_fingerprint_a,
                               report.key_fingerprint_e};
  });

  double partners = 0.0;
  double attackers = 0.0;
  double overlap = 0.0;
  for (const auto& r : result.rows) {
    partners += r.partner_synced ? 1.0 : 0.0;
    attackers += r.attacker_synced ? 1.0 : 0.0;
    overlap += r.attacker_mean_overlap;
  }
  const auto n = static_cast<double>(trials);
  result.partner_success_fraction = partners / n;
  result.attacker_success_fraction = attackers / n;
  result.mean_attacker_overlap = overlap / n;
  return result;
}

std::string to_csv(const AttackResult& result) {
  std::string out(kAttackHeader);
  out += '\n';
  for (const auto& r : result.rows) {
    out += std::to_string(r.trial_index) + ',' + (r.partner_synced ? "1" : "0") + ',' +
           std::to_string(r.partner_rounds_used) + ',' + (r.attacker_synced ? "1" : "0") + ',' +
           fixed6(r.attacker_mean_overlap) + ',' + fingerprint_hex(r.fingerprint_a) + ',' +
           fingerprint_hex(r.fingerprint_e) + '\n';
  }
  out += '\n';
  out += kAttackSummaryHeader;
  out += '\n';
  out += std::to_string(result.rows.size()) + ',' + fixed6(result.partner_success_fraction) + ',' +
         fixed6(result.attacker_success_fraction) + ',' + fixed6(result.mean_attacker_overlap) + '\n';
  return out;
}

}  // namespace nkdc::experiments

// Acceptance suite: one PASS/FAIL line per criterion. With no arguments every
// criterion runs; otherwise only the numbered ones. Exit status is non-zero if
// any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "csv_util.hpp"
#include "loopback.hpp"
#include "nkdc/error.hpp"
#include "nkdc/experiments.hpp"
#include "nkdc/keymat.hpp"
#include "nkdc/rng.hpp"
#include "nkdc/tpm.hpp"
#include "nkdc/wire.hpp"
#include "reference_sim.hpp"
#include "wire_fuzz.hpp"

using namespace nkdc;
namespace ex = nkdc::experiments;

namespace {

constexpr std::uint64_t kSeed = 1;

// Mean rounds of the reference simulation over criterion 4's seeds, pinned
// when the reference was written; the live reference must still produce it.
constexpr double kFrozenBaselineMean = 260.17;
constexpr double kBaselineTolerance = 0.25;
constexpr double kOverlapThreshold = 0.95;

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // 0: no runtime limit
  std::function<Verdict()> run;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

TpmParams random_params(std::mt19937_64& rng, LearningRule rule = LearningRule::Hebbian) {
  return TpmParams(static_cast<std::uint32_t>(1 + rng() % 4), static_cast<std::uint32_t>(1 + rng() % 16),
                   static_cast<std::int32_t>(1 + rng() % 6), rule);
}

Verdict formula() {
  std::mt19937_64 rng(2024);
  int mismatches = 0;
  for (int i = 0; i < 10'000; ++i) {
    const TpmParams p = random_params(rng);
    SeededGenerator g(rng());
    const WeightMatrix w = gen_weights(g, p);
    const InputVector x = gen_input(g, p);
    const RoundTrace t = compute_output(w, x);
    std::vector<int> sigma;
    const std::vector<int> wv(w.values().begin(), w.values().end());
    const std::vector<int> xv(x.values().begin(), x.values().end());
    const int tau = refsim::machine_output(wv, xv, static_cast<int>(p.k()),
                                           static_cast<int>(p.n()), sigma);
    if (tau != t.tau || sigma != t.sigma) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in 10000 pairs"};
}

Verdict update_properties() {
  std::mt19937_64 rng(99);
  long violations = 0;
  long steps = 0;
  for (auto rule : {LearningRule::Hebbian, LearningRule::AntiHebbian, LearningRule::RandomWalk}) {
    for (int seq = 0; seq < 10'000; ++seq) {
      const TpmParams p = random_params(rng, rule);
      SeededGenerator g(rng());
      WeightMatrix w = gen_weights(g, p);
      const int l = p.l();
      for (int step = 0; step < 10; ++step, ++steps) {
        const InputVector x = gen_input(g, p);
        const RoundTrace t = compute_output(w, x);
        const int tau_peer = (rng() & 1) ? 1 : -1;
        const WeightMatrix before = w;
        const bool applied = update_weights(w, x, t, tau_peer);
        if (applied != (tau_peer == t.tau)) ++violations;
        for (std::size_t i = 0; i < p.k(); ++i) {
          const bool selected = tau_peer == t.tau && t.sigma[i] == t.tau;
          for (std::size_t j = 0; j < p.n(); ++j) {
            const int now = w.at(i, j);
            const int was = before.at(i, j);
            if (now < -l || now > l) ++violations;                            // bounded
            if (!selected && now != was) ++violations;                        // gated, row-selective
            if (selected && now == was && std::abs(was) != l) ++violations;   // moved unless clamped
            if (std::abs(now - was) > 1) ++violations;                        // unit step
          }
        }
      }
    }
  }
  return {violations == 0, std::to_string(violations) + " violations over " + std::to_string(steps) + " updates"};
}

Verdict absorbing() {
  std::mt19937_64 rng(5);
  int violations = 0;
  for (auto rule : {LearningRule::Hebbian, LearningRule::AntiHebbian, LearningRule::RandomWalk}) {
    for (int trial = 0; trial < 1'000; ++trial) {
      const TpmParams p = random_params(rng, rule);
      SeededGenerator g(rng());
      WeightMatrix a = gen_weights(g, p);
      WeightMatrix b = a;
      for (int round = 0; round < 100; ++round) {
        const InputVector x = gen_input(g, p);
        const auto ta = compute_output(a, x);
        const auto tb = compute_output(b, x);
        update_weights(a, x, ta, tb.tau);
        update_weights(b, x, tb, ta.tau);
        if (!(a == b)) {
          ++violations;
          break;
        }
      }
    }
  }
  return {violations == 0, std::to_string(violations) + " diverged of 3000 trials"};
}

ex::SweepSpec sweep_spec(std::vector<std::uint32_t> values, std::uint32_t trials) {
  ex::SweepSpec spec;
  spec.varying = ex::SweepDim::N;
  spec.values = std::move(values);
  spec.fixed = TpmParams(3, 11, 3);
  spec.trials_per_value = trials;
  spec.base_seed = kSeed;
  return spec;
}

Verdict sync_success() {
  const auto result = ex::run_sweep(sweep_spec({11}, 100));
  const auto& s = result.summary.at(0);
  const long synced = std::lround(s.synced_fraction * s.trials);

  double baseline = 0;
  for (std::uint32_t t = 0; t < 100; ++t) {
    const auto seeds = refsim::trial_seeds(kSeed, 11, t);
    baseline += static_cast<double>(refsim::run(3, 11, 3, 0, seeds.input, seeds.a, seeds.b).rounds);
  }
  baseline /= 100;
  const bool reference_ok = std::abs(baseline - kFrozenBaselineMean) < 1e-9;
  const double dev = std::abs(s.mean_rounds - baseline) / baseline;
  const bool pass = synced >= 99 && dev <= kBaselineTolerance && reference_ok;
  return {pass, std::to_string(synced) + "/100 synced; mean " + fmt("%.2f", s.mean_rounds) + " vs baseline " +
                    fmt("%.2f", baseline) + " (frozen " + fmt("%.2f", kFrozenBaselineMean) + ", deviation " +
                    fmt("%.1f%%", 100 * dev) + ", limit 25%)"};
}

Verdict trend() {
  const auto result = ex::run_sweep(sweep_spec({5, 10, 20, 40}, 50));
  bool monotone = true;
  std::string detail = "mean rounds:";
  for (std::size_t i = 0; i < result.summary.size(); ++i) {
    const auto& s = result.summary[i];
    detail += " n=" + std::to_string(s.varying_value) + ":" + fmt("%.2f", s.mean_rounds);
    if (i > 0 && s.mean_rounds < result.summary[i - 1].mean_rounds) monotone = false;
  }
  return {monotone, detail + (monotone ? " (non-decreasing)" : " (not non-decreasing)")};
}

Verdict randomness() {
  const auto r = ex::run_randomness(100, TpmParams(3, 11, 3), kSeed);
  std::size_t synced = 0;
  for (const auto& row : r.rows) synced += row.synced;
  const bool pass = r.distinct_fingerprints == 100 && r.distinct_keys == 100 && synced == 100;
  return {pass, std::to_string(r.distinct_fingerprints) + " distinct fingerprints, " +
                    std::to_string(r.distinct_keys) + " distinct keys, " + std::to_string(synced) + "/100 synced"};
}

Verdict attacker() {
  const auto r = ex::run_attack_bench(100, TpmParams(3, 11, 5), kSeed);
  const bool pass = r.attacker_success_fraction < r.partner_success_fraction &&
                    r.mean_attacker_overlap < kOverlapThreshold;
  return {pass, "partner " + fmt("%.2f", r.partner_success_fraction) + ", attacker " +
                    fmt("%.2f", r.attacker_success_fraction) + ", mean overlap " +
                    fmt("%.4f", r.mean_attacker_overlap) + " (limit " + fmt("%.2f", kOverlapThreshold) + ")"};
}

Verdict wire_fidelity() {
  using namespace nkdc::wire;
  int failures = 0;
  const std::vector<Message> all{Hello{1, Role::A, 3, 11, 3, 0}, Start{1}, Input{1, {0x5A, 0x80}}, Output{1, -1},
                                 SyncProbe{1, 0x0123456789ABCDEFull}, SyncOk{}, SyncFail{}, Abort{2}};
  for (const auto& m : all) {
    const auto bytes = encode(m);
    const auto d = decode(bytes);
    if (!(d.message == m) || d.consumed != bytes.size()) ++failures;
  }
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10'000; ++i) {
    const Message m = wire_fuzz::random_message(rng);
    if (!(decode(encode(m)).message == m)) ++failures;
  }
  int typed = 0;
  int accepted = 0;
  for (int i = 0; i < 1'000; ++i) {
    const auto bytes = wire_fuzz::mutate(encode(wire_fuzz::random_message(rng)), rng);
    try {
      decode(bytes);
      ++accepted;
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::Truncated:
        case ErrorCode::UnknownType:
        case ErrorCode::Oversize:
        case ErrorCode::MalformedPayload:
          ++typed;
          break;
        default:
          ++failures;
      }
    } catch (...) {
      ++failures;
    }
  }
  return {failures == 0, std::to_string(failures) + " failures; mutated frames: " + std::to_string(typed) +
                             " typed errors, " + std::to_string(accepted) + " still well-formed"};
}

Verdict end_to_end() {
  const TpmParams p(3, 11, 3);
  const loopback::Seeds s{1, 7, 2, 3, 4};
  const auto run = loopback::run_session(p, s);
  LocalSession local(loopback::local_config(p, s), true);
  local.run();
  const auto rep = local.attack_report();
  const bool pass = run.a.outcome == SessionOutcome::Synced && run.b.outcome == SessionOutcome::Synced &&
                    run.a.report.rounds_used == rep.partner_report.rounds_used &&
                    run.b.report.rounds_used == rep.partner_report.rounds_used &&
                    run.a.weights == local.partner_a().weights && run.b.weights == local.partner_b().weights &&
                    run.a.report.key_fingerprint_a == rep.partner_report.key_fingerprint_a &&
                    run.b.report.key_fingerprint_b == rep.partner_report.key_fingerprint_b &&
                    run.e.weights && *run.e.weights == local.eavesdropper()->weights &&
                    run.e.key_fingerprint_e == rep.key_fingerprint_e;
  return {pass, "rounds tcp=" + std::to_string(run.a.report.rounds_used) +
                    " local=" + std::to_string(rep.partner_report.rounds_used) + ", fingerprint " +
                    fingerprint_hex(run.a.report.key_fingerprint_a) + " local " +
                    fingerprint_hex(rep.partner_report.key_fingerprint_a)};
}

std::vector<std::string> experiment_csvs() {
  return {csv_util::drop_column(ex::to_csv(ex::run_sweep(sweep_spec({11}, 100))), "elapsed_micros"),
          csv_util::drop_column(ex::to_csv(ex::run_sweep(sweep_spec({5, 10, 20, 40}, 50))), "elapsed_micros"),
          ex::to_csv(ex::run_randomness(100, TpmParams(3, 11, 3), kSeed)),
          ex::to_csv(ex::run_attack_bench(100, TpmParams(3, 11, 5), kSeed))};
}

Verdict determinism() {
  const auto first = experiment_csvs();
  const auto second = experiment_csvs();
  int differing = 0;
  for (std::size_t i = 0; i < first.size(); ++i) differing += first[i] != second[i];
  return {differing == 0, std::to_string(differing) + " of 4 CSVs differ between runs"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "formula correctness", 5, formula},
      {2, "update-rule properties", 10, update_properties},
      {3, "absorbing synchronization", 10, absorbing},
      {4, "synchronization success", 60, sync_success},
      {5, "trend in n", 120, trend},
      {6, "key randomness", 60, randomness},
      {7, "attacker inferiority", 120, attacker},
      {8, "wire fidelity", 10, wire_fidelity},
      {9, "end-to-end equivalence", 30, end_to_end},
      {10, "determinism", 0, determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs > c.limit_s) {
      v.pass = false;
      v.detail += "; over the " + fmt("%.0f", c.limit_s) + " s limit";
    }
    std::printf("criterion %2d %-26s %s  %s [%.2f s]\n", c.id, c.name, v.pass ? "PASS" : "FAIL", v.detail.c_str(),
                secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}

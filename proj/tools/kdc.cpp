// kdc: key distribution centre server, partner and eavesdropper clients, and
// the simulation harness.
//
//   kdc serve --listen HOST:PORT [--max-rounds U32] [--agreement-window U32] [--input-seed U64]
//   kdc party --connect HOST:PORT --session U64 --role A|B --k U16 --n U16 --l U8
//             --rule hebbian|anti-hebbian|random-walk --weight-seed U64 [--emit-key]
//   kdc eavesdrop --connect HOST:PORT --session U64 --weight-seed U64
//   kdc sim sweep|randomness|attack ... --out FILE|-
//
// party/eavesdrop exit 0 on synced, 2 on timeout, 3 on protocol or connection
// errors. sim exits 0 on completion, 1 on a config error.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "nkdc/error.hpp"
#include "nkdc/experiments.hpp"
#include "nkdc/kdc.hpp"
#include "nkdc/keymat.hpp"

namespace {

using namespace nkdc;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitTimeout = 2;
constexpr int kExitProtocol = 3;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

struct MachineFlags {
  std::uint32_t k = 3;
  std::uint32_t n = 11;
  int l = 3;
  std::string rule = "hebbian";

  void add_to(CLI::App& app, bool required) {
    auto* ok = app.add_option("--k", k, "hidden units")->check(CLI::Range(1u, 65535u));
    auto* on = app.add_option("--n", n, "inputs per hidden unit")->check(CLI::Range(1u, 65535u));
    auto* ol = app.add_option("--l", l, "weight bound")->check(CLI::Range(1, 127));
    auto* orule = app.add_option("--rule", rule, "learning rule")
                      ->check(CLI::IsMember({"hebbian", "anti-hebbian", "random-walk"}));
    if (required) {
      ok->required();
      on->required();
      ol->required();
      orule->required();
    } else {
      ok->capture_default_str();
      on->capture_default_str();
      ol->capture_default_str();
      orule->capture_default_str();
    }
  }

  TpmParams params() const { return TpmParams(k, n, l, *parse_rule(rule)); }
};

int exit_for(SessionOutcome outcome) {
  switch (outcome) {
    case SessionOutcome::Synced: return kExitOk;
    case SessionOutcome::TimedOut: return kExitTimeout;
    case SessionOutcome::Aborted: return kExitProtocol;
  }
  return kExitProtocol;
}

std::string_view outcome_name(SessionOutcome outcome) {
  switch (outcome) {
    case SessionOutcome::Synced: return "synced";
    case SessionOutcome::TimedOut: return "timeout";
    case SessionOutcome::Aborted: return "aborted";
  }
  return "?";
}

int write_output(const std::string& path, const std::string& csv) {
  if (path == "-") {
    std::cout << csv << std::flush;
    return kExitOk;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "kdc: cannot open " << path << " for writing\n";
    return kExitConfig;
  }
  out << csv;
  return out ? kExitOk : kExitConfig;
}

std::vector<std::uint32_t> parse_values(const std::string& text) {
  std::vector<std::uint32_t> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty() || v == 0 || v > UINT32_MAX) {
      throw Error(ErrorCode::ConfigInvalid, "bad value '" + item + "' in --values");
    }
    values.push_back(static_cast<std::uint32_t>(v));
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural key distribution centre"};
  app.require_subcommand(1);

  // serve
  auto* serve = app.add_subcommand("serve", "run the key distribution centre");
  std::string listen = "127.0.0.1:7878";
  std::uint32_t max_rounds = static_cast<std::uint32_t>(kDefaultMaxRounds);
  std::uint32_t window = static_cast<std::uint32_t>(kDefaultAgreementWindow);
  std::uint64_t input_seed = 0;
  std::uint64_t timeout_ms = net::kDefaultMessageTimeout.count();
  serve->add_option("--listen", listen, "HOST:PORT")->capture_default_str();
  serve->add_option("--max-rounds", max_rounds)->capture_default_str();
  serve->add_option("--agreement-window", window)->capture_default_str();
  serve->add_option("--input-seed", input_seed)->capture_default_str();
  serve->add_option("--timeout-ms", timeout_ms, "per-message deadline")->capture_default_str();

  // party
  auto* party = app.add_subcommand("party", "join a session as partner A or B");
  std::string connect = "127.0.0.1:7878";
  std::uint64_t session_id = 0;
  std::string role = "A";
  std::uint64_t weight_seed = 0;
  bool emit_key = false;
  MachineFlags party_machine;
  party->add_option("--connect", connect, "HOST:PORT")->required();
  party->add_option("--session", session_id)->required();
  party->add_option("--role", role)->required()->check(CLI::IsMember({"A", "B"}));
  party_machine.add_to(*party, true);
  party->add_option("--weight-seed", weight_seed)->required();
  party->add_flag("--emit-key", emit_key, "print the key as one line of lowercase hex");
  party->add_option("--agreement-window", window, "must match the server")->capture_default_str();
  party->add_option("--max-rounds", max_rounds, "must match the server")->capture_default_str();
  party->add_option("--timeout-ms", timeout_ms)->capture_default_str();

  // eavesdrop
  auto* eavesdrop = app.add_subcommand("eavesdrop", "listen to a session and run the simple attack");
  eavesdrop->add_option("--connect", connect, "HOST:PORT")->required();
  eavesdrop->add_option("--session", session_id)->required();
  eavesdrop->add_option("--weight-seed", weight_seed)->required();
  eavesdrop->add_option("--timeout-ms", timeout_ms)->capture_default_str();

  // sim
  auto* sim = app.add_subcommand("sim", "Monte-Carlo experiments, CSV output");
  sim->require_subcommand(1);
  std::string out_path = "-";
  std::uint32_t trials = 50;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  MachineFlags sim_machine;
  auto add_common = [&](CLI::App* cmd) {
    sim_machine.add_to(*cmd, false);
    cmd->add_option("--trials", trials)->capture_default_str();
    cmd->add_option("--seed", seed, "base seed")->capture_default_str();
    cmd->add_option("--out", out_path, "output file, - for stdout")->capture_default_str();
    cmd->add_option("--max-rounds", max_rounds)->capture_default_str();
    cmd->add_option("--agreement-window", window)->capture_default_str();
    cmd->add_option("--jobs", jobs, "worker threads")->capture_default_str();
  };
  auto* sweep = sim->add_subcommand("sweep", "synchronization cost against one machine dimension");
  std::string vary = "n";
  std::string values_text = "5,10,20,40";
  sweep->add_option("--vary", vary)->check(CLI::IsMember({"n", "l", "k"}))->capture_default_str();
  sweep->add_option("--values", values_text, "comma-separated, strictly increasing")->capture_default_str();
  add_common(sweep);
  auto* randomness = sim->add_subcommand("randomness", "key fingerprints across independent sessions");
  add_common(randomness);
  auto* attack = sim->add_subcommand("attack", "partners against a simple-attack eavesdropper");
  add_common(attack);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  const net::Millis timeout{static_cast<std::int64_t>(timeout_ms)};

  if (*serve) {
    try {
      ServerConfig cfg;
      cfg.listen = net::parse_endpoint(listen);
      cfg.max_rounds = max_rounds;
      cfg.agreement_window = window;
      cfg.input_seed = input_seed;
      cfg.message_timeout = timeout;
      KdcServer server(cfg);
      server.start();
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "kdc: listening on " << cfg.listen.host << ":" << server.port() << "\n";
      while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
      return kExitOk;
    } catch (const Error& e) {
      std::cerr << "kdc serve: " << e.what() << "\n";
      return e.code() == ErrorCode::ConfigInvalid || e.code() == ErrorCode::InvalidArgument ? kExitConfig
                                                                                            : kExitProtocol;
    }
  }

  if (*party) {
    try {
      PartyConfig cfg{session_id, role == "A" ? wire::Role::A : wire::Role::B, party_machine.params(),
                      weight_seed, window, max_rounds, timeout};
      const PartyResult r = party_client(net::parse_endpoint(connect), cfg);
      const std::uint64_t own = role == "A" ? r.report.key_fingerprint_a : r.report.key_fingerprint_b;
      std::cout << "outcome=" << outcome_name(r.outcome) << " rounds_used=" << r.report.rounds_used
                << " updates_applied=" << r.report.updates_applied << " probes=" << r.probes
                << " fingerprint=" << fingerprint_hex(own);
      if (r.abort_reason) std::cout << " abort_reason=" << int{*r.abort_reason};
      std::cout << "\n";
      if (emit_key && r.outcome == SessionOutcome::Synced) {
        std::cout << to_hex(serialize_weights(r.weights)) << "\n";
      }
      return exit_for(r.outcome);
    } catch (const Error& e) {
      std::cerr << "kdc party: " << e.what() << "\n";
      return e.code() == ErrorCode::ConfigInvalid || e.code() == ErrorCode::InvalidArgument ? kExitConfig
                                                                                            : kExitProtocol;
    }
  }

  if (*eavesdrop) {
    try {
      const EavesdropResult r =
          eavesdrop_client(net::parse_endpoint(connect), EavesdropConfig{session_id, weight_seed, timeout});
      std::cout << "outcome=" << outcome_name(r.outcome) << " rounds_observed=" << r.rounds_observed
                << " attacker_synced=" << (r.attacker_synced ? 1 : 0)
                << " fingerprint=" << fingerprint_hex(r.key_fingerprint_e)
                << " observed_fingerprint=" << fingerprint_hex(r.observed_fingerprint);
      if (r.abort_reason) std::cout << " abort_reason=" << int{*r.abort_reason};
      std::cout << "\n";
      return exit_for(r.outcome);
    } catch (const Error& e) {
      std::cerr << "kdc eavesdrop: " << e.what() << "\n";
      return e.code() == ErrorCode::InvalidArgument ? kExitConfig : kExitProtocol;
    }
  }

  try {
    const TpmParams params = sim_machine.params();
    std::string csv;
    if (*sweep) {
      experiments::SweepSpec spec;
      spec.varying = *experiments::parse_dim(vary);
      spec.values = parse_values(values_text);
      spec.fixed = params;
      spec.trials_per_value = trials;
      spec.base_seed = seed;
      spec.max_rounds = max_rounds;
      spec.agreement_window = window;
      spec.jobs = jobs;
      csv = experiments::to_csv(experiments::run_sweep(spec));
    } else if (*randomness) {
      csv = experiments::to_csv(experiments::run_randomness(trials, params, seed, max_rounds, window, jobs));
    } else {
      csv = experiments::to_csv(experiments::run_attack_bench(trials, params, seed, max_rounds, window, jobs));
    }
    return write_output(out_path, csv);
  } catch (const Error& e) {
    std::cerr << "kdc sim: " << e.what() << "\n";
    return kExitConfig;
  }
}

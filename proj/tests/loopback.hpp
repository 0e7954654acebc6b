#pragma once

// Runs one A/B/E session against an in-process KDC over 127.0.0.1.

#include <future>
#include <thread>

#include "nkdc/kdc.hpp"

namespace loopback {

struct Seeds {
  std::uint64_t kdc_input = 0;
  std::uint64_t session = 1;
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  std::uint64_t e = 0;
};

struct Run {
  nkdc::PartyResult a;
  nkdc::PartyResult b;
  nkdc::EavesdropResult e;
};

inline nkdc::net::Endpoint endpoint(const nkdc::KdcServer& kdc) { return {"127.0.0.1", kdc.port()}; }

/// Blocks until `count` eavesdroppers wait on the session (or ~5 s pass).
inline bool await_listeners(const nkdc::KdcServer& kdc, std::uint64_t session, std::size_t count) {
  for (int i = 0; i < 500; ++i) {
    if (kdc.waiting_eavesdroppers(session) >= count) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return false;
}

inline nkdc::PartyConfig party(const Seeds& s, nkdc::wire::Role role, const nkdc::TpmParams& params,
                               std::uint64_t window, std::uint64_t max_rounds) {
  return nkdc::PartyConfig{s.session, role, params, role == nkdc::wire::Role::A ? s.a : s.b, window, max_rounds,
                           nkdc::net::Millis{10'000}};
}

/// E registers before A and B, so it sees the session from round 1.
inline Run run_session(const nkdc::TpmParams& params, const Seeds& s,
                       std::uint64_t window = nkdc::kDefaultAgreementWindow,
                       std::uint64_t max_rounds = nkdc::kDefaultMaxRounds) {
  nkdc::ServerConfig sc;
  sc.input_seed = s.kdc_input;
  sc.agreement_window = window;
  sc.max_rounds = max_rounds;
  sc.message_timeout = nkdc::net::Millis{10'000};
  nkdc::KdcServer kdc(sc);
  kdc.start();
  const auto ep = endpoint(kdc);

  auto e = std::async(std::launch::async, [&] {
    return nkdc::eavesdrop_client(ep, {s.session, s.e, nkdc::net::Millis{10'000}});
  });
  if (!await_listeners(kdc, s.session, 1)) throw std::runtime_error("eavesdropper never registered");
  auto a = std::async(std::launch::async,
                      [&] { return nkdc::party_client(ep, party(s, nkdc::wire::Role::A, params, window, max_rounds)); });
  auto b = std::async(std::launch::async,
                      [&] { return nkdc::party_client(ep, party(s, nkdc::wire::Role::B, params, window, max_rounds)); });
  Run run{a.get(), b.get(), e.get()};
  kdc.stop();
  return run;
}

/// The in-process session the loopback run must reproduce.
inline nkdc::SessionConfig local_config(const nkdc::TpmParams& params, const Seeds& s,
                                        std::uint64_t window = nkdc::kDefaultAgreementWindow,
                                        std::uint64_t max_rounds = nkdc::kDefaultMaxRounds) {
  nkdc::SessionConfig cfg{params, max_rounds, window};
  cfg.input_seed = nkdc::session_input_seed(s.kdc_input, s.session);
  cfg.weight_seed_a = s.a;
  cfg.weight_seed_b = s.b;
  cfg.weight_seed_e = s.e;
  return cfg;
}

}  // namespace loopback

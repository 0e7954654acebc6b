#include <random>

#include "doctest.h"
#include "nkdc/error.hpp"
#include "nkdc/keymat.hpp"
#include "nkdc/rng.hpp"

using namespace nkdc;

TEST_CASE("serialize_weights offsets by l") {
  const WeightMatrix w(TpmParams(1, 3, 3), {-3, 0, 3});
  CHECK(serialize_weights(w) == std::vector<std::uint8_t>{0, 3, 6});
}

TEST_CASE("serialization is local and invertible") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const TpmParams p(static_cast<std::uint32_t>(rng() % 4 + 1), static_cast<std::uint32_t>(rng() % 20 + 1),
                      static_cast<int>(rng() % 127 + 1));
    SeededGenerator g(rng());
    const WeightMatrix w = gen_weights(g, p);
    const auto bytes = serialize_weights(w);
    REQUIRE(bytes.size() == p.size());
    REQUIRE(deserialize_weights(p, bytes) == w);

    std::vector<int> changed(w.values().begin(), w.values().end());
    const std::size_t idx = rng() % changed.size();
    changed[idx] = changed[idx] == p.l() ? changed[idx] - 1 : changed[idx] + 1;
    const auto other = serialize_weights(WeightMatrix(p, changed));
    std::size_t differing = 0;
    for (std::size_t i = 0; i < bytes.size(); ++i) differing += bytes[i] != other[i] ? 1 : 0;
    REQUIRE(differing == 1);
  }
}

TEST_CASE("deserialize_weights rejects bad keys") {
  const TpmParams p(1, 2, 3);
  const std::vector<std::uint8_t> too_big{0, 7};
  const std::vector<std::uint8_t> short_key{0};
  CHECK_THROWS_AS(deserialize_weights(p, too_big), Error);
  CHECK_THROWS_AS(deserialize_weights(p, short_key), Error);
}

TEST_CASE("fnv1a64") {
  CHECK(fnv1a64({}) == 0xCBF29CE484222325ull);
  const std::uint8_t a[] = {0x61};
  // Independent one-loop reference (Python) gives 0xaf63dc4c8601ec8c.
  CHECK(fnv1a64(a) == 0xAF63DC4C8601EC8Cull);

  SUBCASE("single-octet differences never collide in the smoke corpus") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 10'000; ++trial) {
      std::vector<std::uint8_t> data(1 + rng() % 64);
      for (auto& b : data) b = static_cast<std::uint8_t>(rng());
      auto other = data;
      other[rng() % other.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
      REQUIRE(fnv1a64(data) != fnv1a64(other));
    }
  }
}

TEST_CASE("derive_key") {
  const TpmParams p(3, 11, 3);
  SeededGenerator g(1);
  const WeightMatrix w = gen_weights(g, p);
  const KeyMaterial key = derive_key(w);
  CHECK(key.bytes.size() == 33);
  CHECK(key.fingerprint == fnv1a64(key.bytes));
  CHECK(derive_key(WeightMatrix(w)) == key);
  CHECK(key_fingerprint(w) == key.fingerprint);
}

TEST_CASE("fingerprint reacts to any single weight flip") {
  std::mt19937_64 rng(17);
  const TpmParams p(3, 11, 3);
  std::size_t changed = 0;
  const int trials = 10'000;
  for (int trial = 0; trial < trials; ++trial) {
    SeededGenerator g(rng());
    const WeightMatrix w = gen_weights(g, p);
    std::vector<int> flipped(w.values().begin(), w.values().end());
    const std::size_t idx = rng() % flipped.size();
    int next = flipped[idx];
    while (next == flipped[idx]) next = static_cast<int>(rng() % 7) - 3;
    flipped[idx] = next;
    changed += key_fingerprint(w) != key_fingerprint(WeightMatrix(p, flipped)) ? 1 : 0;
  }
  CHECK(static_cast<double>(changed) / trials >= 0.999);
}

TEST_CASE("hex helpers") {
  const std::uint8_t bytes[] = {0x00, 0x0a, 0xff};
  CHECK(to_hex(bytes) == "000aff");
  CHECK(fingerprint_hex(0xCBF29CE484222325ull) == "cbf29ce484222325");
  CHECK(fingerprint_hex(1) == "0000000000000001");
}

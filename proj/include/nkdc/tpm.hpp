#pragma once

// Tree parity machine: K hidden units, each fed N inputs in {-1,+1} through
// integer weights bounded by [-L, +L]. The output bit is the product of the
// hidden-unit signs.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace nkdc {

enum class LearningRule : std::uint8_t { Hebbian = 0, AntiHebbian = 1, RandomWalk = 2 };

std::string_view to_string(LearningRule rule) noexcept;
/// Accepts the CLI spellings: hebbian, anti-hebbian, random-walk.
std::optional<LearningRule> parse_rule(std::string_view text) noexcept;

class InputVector;

class TpmParams {
 public:
  static constexpr int kMaxWeightBound = 127;

  /// Throws ConfigInvalid unless k >= 1, n >= 1, 1 <= l <= 127 and k*n*l <= 2^60.
  TpmParams(std::uint32_t k, std::uint32_t n, int l, LearningRule rule = LearningRule::Hebbian);

  std::uint32_t k() const noexcept { return k_; }
  std::uint32_t n() const noexcept { return n_; }
  int l() const noexcept { return l_; }
  LearningRule rule() const noexcept { return rule_; }
  std::size_t size() const noexcept { return std::size_t{k_} * n_; }

  bool same_shape(const TpmParams& other) const noexcept { return k_ == other.k_ && n_ == other.n_; }
  friend bool operator==(const TpmParams&, const TpmParams&) = default;

 private:
  std::uint32_t k_;
  std::uint32_t n_;
  int l_;
  LearningRule rule_;
};

/// k x n synaptic weights, row-major. Every entry stays within [-l, +l].
class WeightMatrix {
 public:
  explicit WeightMatrix(const TpmParams& params);
  /// Throws DimensionMismatch on a wrong length, BoundExceeded on an entry outside [-l, l].
  WeightMatrix(const TpmParams& params, std::vector<int> values);

  const TpmParams& params() const noexcept { return params_; }
  int at(std::size_t i, std::size_t j) const { return w_[i * params_.n() + j]; }
  std::span<const int> row(std::size_t i) const {
    return std::span<const int>(w_).subspan(i * params_.n(), params_.n());
  }
  std::span<const int> values() const noexcept { return w_; }

  friend bool operator==(const WeightMatrix& a, const WeightMatrix& b) {
    return a.params_.same_shape(b.params_) && a.params_.l() == b.params_.l() && a.w_ == b.w_;
  }

 private:
  friend bool learn(WeightMatrix&, const InputVector&, std::span<const int>, int);

  TpmParams params_;
  std::vector<int> w_;
};

/// k x n public inputs, row-major, every entry -1 or +1.
class InputVector {
 public:
  /// Throws DimensionMismatch on a wrong length, InvalidArgument on an entry other than +-1.
  InputVector(const TpmParams& params, std::vector<int> values);

  const TpmParams& params() const noexcept { return params_; }
  int at(std::size_t i, std::size_t j) const { return x_[i * params_.n() + j]; }
  std::span<const int> values() const noexcept { return x_; }

  friend bool operator==(const InputVector& a, const InputVector& b) {
    return a.params_.same_shape(b.params_) && a.x_ == b.x_;
  }

 private:
  TpmParams params_;
  std::vector<int> x_;
};

struct RoundTrace {
  std::vector<std::int64_t> sums;  // local fields, one per hidden unit
  std::vector<int> sigma;          // sign(sums[i]), sign(0) = -1
  int tau = 1;                     // product of sigma
};

/// sign() with the zero convention used throughout: sign(0) = -1.
constexpr int sign_of(std::int64_t v) noexcept { return v > 0 ? 1 : -1; }

RoundTrace compute_output(const WeightMatrix& w, const InputVector& x);

constexpr int clamp_weight(std::int64_t v, int l) noexcept {
  return v > l ? l : (v < -l ? -l : static_cast<int>(v));
}

/// Applies the session rule to every row whose sigma equals tau, clamping to
/// [-l, l]. No output-agreement gate; callers decide whether the round counts.
/// Returns true if any entry changed.
bool learn(WeightMatrix& w, const InputVector& x, std::span<const int> sigma, int tau);

/// Gated update: identity unless trace.tau == tau_peer. Returns whether the
/// gate was open.
bool update_weights(WeightMatrix& w, const InputVector& x, const RoundTrace& trace, int tau_peer);

WeightMatrix updated_weights(const WeightMatrix& w, const InputVector& x, const RoundTrace& trace,
                             int tau_peer);

/// Per-row normalized dot product; 0 for a row where either side is all zero.
std::vector<double> overlap(const WeightMatrix& a, const WeightMatrix& b);
double mean_overlap(const WeightMatrix& a, const WeightMatrix& b);

}  // namespace nkdc

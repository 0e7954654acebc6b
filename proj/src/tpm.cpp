#include "nkdc/tpm.hpp"

#include <cmath>
#include <string>

#include "nkdc/error.hpp"

namespace nkdc {

std::string_view to_string(LearningRule rule) noexcept {
  switch (rule) {
    case LearningRule::Hebbian: return "hebbian";
    case LearningRule::AntiHebbian: return "anti-hebbian";
    case LearningRule::RandomWalk: return "random-walk";
  }
  return "unknown";
}

std::optional<LearningRule> parse_rule(std::string_view text) noexcept {
  if (text == "hebbian") return LearningRule::Hebbian;
  if (text == "anti-hebbian") return LearningRule::AntiHebbian;
  if (text == "random-walk") return LearningRule::RandomWalk;
  return std::nullopt;
}

TpmParams::TpmParams(std::uint32_t k, std::uint32_t n, int l, LearningRule rule)
    : k_(k), n_(n), l_(l), rule_(rule) {
  if (k == 0 || n == 0) throw Error(ErrorCode::ConfigInvalid, "k and n must be positive");
  if (l < 1 || l > kMaxWeightBound) {
    throw Error(ErrorCode::ConfigInvalid, "l must lie in [1, 127], got " + std::to_string(l));
  }
  constexpr std::uint64_t kFieldBudget = std::uint64_t{1} << 60;
  const std::uint64_t kn = std::uint64_t{k} * n;
  if (kn > kFieldBudget / static_cast<std::uint64_t>(l)) {
    throw Error(ErrorCode::ConfigInvalid, "k*n*l exceeds 2^60");
  }
  switch (rule) {
    case LearningRule::Hebbian:
    case LearningRule::AntiHebbian:
    case LearningRule::RandomWalk:
      break;
    default:
      throw Error(ErrorCode::ConfigInvalid, "unknown learning rule");
  }
}

WeightMatrix::WeightMatrix(const TpmParams& params) : params_(params), w_(params.size(), 0) {}

WeightMatrix::WeightMatrix(const TpmParams& params, std::vector<int> values)
    : params_(params), w_(std::move(values)) {
  if (w_.size() != params_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "weight count " + std::to_string(w_.size()) +
                                                  " != k*n " + std::to_string(params_.size()));
  }
  for (int v : w_) {
    if (v < -params_.l() || v > params_.l()) {
      throw Error(ErrorCode::BoundExceeded, "weight " + std::to_string(v) + " outside [-l, l]");
    }
  }
}

InputVector::InputVector(const TpmParams& params, std::vector<int> values)
    : params_(params), x_(std::move(values)) {
  if (x_.size() != params_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "input count " + std::to_string(x_.size()) +
                                                  " != k*n " + std::to_string(params_.size()));
  }
  for (int v : x_) {
    if (v != 1 && v != -1) {
      throw Error(ErrorCode::InvalidArgument, "input entry " + std::to_string(v) + " not in {-1,+1}");
    }
  }
}

namespace {

void require_shape(const TpmParams& a, const TpmParams& b) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::DimensionMismatch,
                "(" + std::to_string(a.k()) + "," + std::to_string(a.n()) + ") vs (" +
                    std::to_string(b.k()) + "," + std::to_string(b.n()) + ")");
  }
}

void require_spin(int v, const char* what) {
  if (v != 1 && v != -1) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be +-1");
}

}  // namespace

RoundTrace compute_output(const WeightMatrix& w, const InputVector& x) {
  require_shape(w.params(), x.params());
  const std::size_t k = w.params().k();
  const std::size_t n = w.params().n();
  const auto wv = w.values();
  const auto xv = x.values();

  RoundTrace trace;
  trace.sums.resize(k);
  trace.sigma.resize(k);
  trace.tau = 1;
  for (std::size_t i = 0; i < k; ++i) {
    std::int64_t field = 0;
    for (std::size_t j = 0; j < n; ++j) field += std::int64_t{wv[i * n + j]} * xv[i * n + j];
    trace.sums[i] = field;
    trace.sigma[i] = sign_of(field);
    trace.tau *= trace.sigma[i];
  }
  return trace;
}

bool learn(WeightMatrix& w, const InputVector& x, std::span<const int> sigma, int tau) {
  require_shape(w.params(), x.params());
  require_spin(tau, "tau");
  const std::size_t k = w.params().k();
  const std::size_t n = w.params().n();
  if (sigma.size() != k) throw Error(ErrorCode::DimensionMismatch, "sigma length != k");

  const int l = w.params().l();
  const auto xv = x.values();
  bool changed = false;
  for (std::size_t i = 0; i < k; ++i) {
    if (sigma[i] != tau) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t idx = i * n + j;
      int step = 0;
      switch (w.params().rule()) {
        case LearningRule::Hebbian: step = xv[idx] * tau; break;
        case LearningRule::AntiHebbian: step = -xv[idx] * tau; break;
        case LearningRule::RandomWalk: step = xv[idx]; break;
      }
      const int next = clamp_weight(std::int64_t{w.w_[idx]} + step, l);
      changed |= next != w.w_[idx];
      w.w_[idx] = next;
    }
  }
  return changed;
}

bool update_weights(WeightMatrix& w, const InputVector& x, const RoundTrace& trace, int tau_peer) {
  require_shape(w.params(), x.params());
  require_spin(tau_peer, "tau_peer");
  if (trace.sigma.size() != w.params().k()) {
    throw Error(ErrorCode::DimensionMismatch, "trace length != k");
  }
  if (trace.tau != tau_peer) return false;
  learn(w, x, trace.sigma, trace.tau);
  return true;
}

WeightMatrix updated_weights(const WeightMatrix& w, const InputVector& x, const RoundTrace& trace,
                             int tau_peer) {
  WeightMatrix next = w;
  update_weights(next, x, trace, tau_peer);
  return next;
}

std::vector<double> overlap(const WeightMatrix& a, const WeightMatrix& b) {
  require_shape(a.params(), b.params());
  const std::size_t k = a.params().k();
  std::vector<double> rho(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const auto ra = a.row(i);
    const auto rb = b.row(i);
    std::int64_t dot = 0;
    std::int64_t na = 0;
    std::int64_t nb = 0;
    for (std::size_t j = 0; j < ra.size(); ++j) {
      dot += std::int64_t{ra[j]} * rb[j];
      na += std::int64_t{ra[j]} * ra[j];
      nb += std::int64_t{rb[j]} * rb[j];
    }
    if (na == 0 || nb == 0) continue;
    // Product taken in double so it cannot overflow; for equal rows the
    // correctly rounded sqrt of na*na is na again, so rho is exactly +-1.
    rho[i] = static_cast<double>(dot) /
             std::sqrt(static_cast<double>(na) * static_cast<double>(nb));
  }
  return rho;
}

double mean_overlap(const WeightMatrix& a, const WeightMatrix& b) {
  const auto rho = overlap(a, b);
  double total = 0.0;
  for (double r : rho) total += r;
  return total / static_cast<double>(rho.size());
}

}  // namespace nkdc

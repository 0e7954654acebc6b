#include "nkdc/rng.hpp"

#include <vector>

namespace nkdc {

InputVector gen_input(SeededGenerator& g, const TpmParams& params) {
  std::vector<int> x(params.size());
  for (auto& v : x) v = (g.next_u64() & 1u) ? 1 : -1;
  return InputVector(params, std::move(x));
}

WeightMatrix gen_weights(SeededGenerator& g, const TpmParams& params) {
  const auto span = static_cast<std::uint64_t>(2 * params.l() + 1);
  std::vector<int> w(params.size());
  for (auto& v : w) v = static_cast<int>(g.next_u64() % span) - params.l();
  return WeightMatrix(params, std::move(w));
}

}  // namespace nkdc

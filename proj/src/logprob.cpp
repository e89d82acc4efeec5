#include "wordprob/logprob.hpp"

#include <algorithm>

namespace wordprob {

LogProb logsumexp(std::span<const LogProb> terms) {
  if (terms.empty()) return LogProb::zero();
  double m = -std::numeric_limits<double>::infinity();
  for (LogProb t : terms) m = std::max(m, t.value);
  if (std::isinf(m) && m < 0.0) return LogProb::zero();
  double acc = 0.0;
  for (LogProb t : terms) acc += std::exp(t.value - m);
  return LogProb{m + std::log(acc)};
}

}  // namespace wordprob

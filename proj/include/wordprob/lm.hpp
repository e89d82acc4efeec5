#pragma once

#include <Eigen/Core>
#include <span>

namespace wordprob {

// Source of next-subword conditional distributions. Returned vectors are
// natural-log probabilities over V ∪ {eos}: vocab_size() + 1 entries indexed
// by vocabulary slot, eos last. References stay valid until the next call.
class ConditionalLM {
 public:
  virtual ~ConditionalLM() = default;
  virtual int vocab_size() const = 0;
  virtual const Eigen::VectorXd& next_log_distribution(std::span<const int> context) const = 0;

  int eos_slot() const { return vocab_size(); }
};

}  // namespace wordprob

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "wordprob/lm.hpp"
#include "wordprob/tokeniser.hpp"

namespace wordprob {

// Explicit conditional table over contexts up to a declared Markov order.
// Contexts longer than the order are truncated to their most recent `order`
// ids; lookup then falls back to the longest stored suffix, so a file may
// store fewer, shorter contexts than the declared order implies.
class TabularLM : public ConditionalLM {
 public:
  TabularLM() = default;
  // Rows are linear-space probabilities over V̄ (size vocab+1, eos last).
  // Each row must sum to one within `tolerance`; rows are then renormalised
  // in log space. Throws NotNormalised otherwise.
  TabularLM(std::map<SubwordSequence, Eigen::VectorXd> rows, int vocab_size,
            int order, bool exact, double tolerance = 1e-8);

  int vocab_size() const override { return vocab_size_; }
  const Eigen::VectorXd& next_log_distribution(std::span<const int> context) const override;

  int order() const { return order_; }
  bool exact() const { return exact_; }
  int context_count() const { return static_cast<int>(rows_.size()); }
  const std::map<SubwordSequence, Eigen::VectorXd>& rows() const { return rows_; }

  // The truncated context actually used for lookup.
  SubwordSequence context_key(std::span<const int> context) const;

 private:
  std::map<SubwordSequence, Eigen::VectorXd> rows_;  // log-space after construction
  int vocab_size_ = 0;
  int order_ = 0;
  bool exact_ = false;
};

// Valid-prefix bookkeeping under a tokeniser's image structure. `segment` is
// the open word segment (bow: ids since the last marked subword; eow: the
// trailing mid run); `in_first_word` matters for unmarked-first-word specs.
struct PrefixState {
  SubwordSequence segment;
  bool in_first_word = true;
  bool empty_sequence = true;

  bool operator==(const PrefixState&) const = default;
  bool operator<(const PrefixState& o) const {
    return std::tie(segment, in_first_word, empty_sequence) <
           std::tie(o.segment, o.in_first_word, o.empty_sequence);
  }
};

struct ContextSupport {
  std::vector<int> slots;  // valid non-eos extensions
  bool eos_allowed = false;
};

PrefixState initial_prefix_state();
PrefixState advance_prefix_state(const TokeniserSpec& spec, const PrefixState& state, int slot);
ContextSupport prefix_support(const TokeniserSpec& spec, const PrefixState& state);

// All truncated contexts reachable from the empty sequence along valid
// prefixes, with their prefix states. Requires every image to fit within
// `order` ids so that validity is a function of the truncated context.
std::map<SubwordSequence, PrefixState> reachable_context_keys(const TokeniserSpec& spec,
                                                              int order);

// TSV `context_ids_or_ε<TAB>subword_id_or_EOS<TAB>probability`. When a
// companion spec is given and `exact` is set, every reachable context is
// checked for zero mass on unmapped extensions (SupportViolation otherwise).
TabularLM load_tabular(const std::filesystem::path& path, const MarkedVocabulary& vocab,
                       bool exact = false, const TokeniserSpec* companion = nullptr,
                       double tolerance = 1e-8, int declared_order = 0);

// Verify an existing LM against a companion spec (used by load_tabular).
void check_exactness(const TabularLM& lm, const TokeniserSpec& spec);

// Seeded generator of exact LMs over the spec's image structure: strictly
// positive probabilities on every valid extension, exact zeros elsewhere,
// and eos mass at least `min_eos_mass` wherever a sequence may end.
TabularLM random_exact_lm(std::uint64_t seed, const TokeniserSpec& spec, int order,
                          double min_eos_mass = 0.05);

}  // namespace wordprob

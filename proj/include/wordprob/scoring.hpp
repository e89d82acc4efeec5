#pragma once

#include <span>
#include <string>
#include <vector>

#include "wordprob/lm.hpp"
#include "wordprob/logprob.hpp"
#include "wordprob/tokeniser.hpp"

namespace wordprob {

enum class AppliedFix { none, fix1, fix2, fix3 };
const char* fix_name(AppliedFix fix);

// One scored word: the uncorrected chain product, the boundary correction,
// and the corrected contextual probability, all in natural-log space.
struct ScoredWord {
  std::string word;
  WordSequence context_words;
  LogProb p_buggy;
  LogProb correction;  // log of the fix factor; for fix2, p_fixed - p_buggy
  LogProb p_fixed;
  double surprisal_buggy = 0.0;
  double surprisal_fixed = 0.0;
  AppliedFix applied_fix = AppliedFix::none;
};

// Context words tokenised as non-final words (the scored word follows them).
SubwordSequence tokenise_context(const TokeniserSpec& spec,
                                 std::span<const std::string> words);

// Chain-rule prefix probability: sum of log p(s_t | s_<t). Empty gives 0.
LogProb prefix_logprob(const ConditionalLM& lm, std::span<const int> ids);

// Theorem for eow marking: the plain chain product, no correction factor.
LogProb word_conditional_eow(const ConditionalLM& lm, const TokeniserSpec& spec,
                             std::span<const std::string> context,
                             const std::string& word);

// Theorem for bow marking: chain product times the continuation-mass ratio
// over V̄_bow (the near-instantaneous decodability discount).
ScoredWord word_conditional_bow(const ConditionalLM& lm, const TokeniserSpec& spec,
                                std::span<const std::string> context,
                                const std::string& word);

// Unmarked final words under eow marking: the word is read either from its
// mid form followed by punctuation/eos, or from its marked form. The two
// event masses add; `correction` stores p_fixed - p_buggy.
ScoredWord bugfix_eow_final(const ConditionalLM& lm, const TokeniserSpec& spec,
                            std::span<const std::string> context,
                            const std::string& word);

// Unmarked first words under bow marking, at empty context only.
ScoredWord bugfix_bow_first(const ConditionalLM& lm, const TokeniserSpec& spec,
                            const std::string& word,
                            std::span<const std::string> context = {});

// The uncorrected chain product over the word's actual tokenisation at this
// position, for any scheme.
LogProb word_conditional_buggy(const ConditionalLM& lm, const TokeniserSpec& spec,
                               std::span<const std::string> context,
                               const std::string& word, WordPosition position);

// log p(words): chain through the full tokenisation plus the final eos term.
LogProb sequence_logprob(const ConditionalLM& lm, const TokeniserSpec& spec,
                         std::span<const std::string> words);

// Probability that the sequence ends right after `context`, conditioned on
// the context event; the terminal term of the telescoped decomposition.
LogProb eos_event_logprob(const ConditionalLM& lm, const TokeniserSpec& spec,
                          std::span<const std::string> context);

// Fix selection from (scheme, position, flags).
ScoredWord score_word(const ConditionalLM& lm, const TokeniserSpec& spec,
                      std::span<const std::string> context, const std::string& word,
                      WordPosition position);

struct CorpusScore {
  struct Row {
    int sentence_idx = 0;
    int word_idx = 0;
    ScoredWord scored;
  };
  struct Skip {
    int sentence_idx = 0;
    std::string reason;
  };
  std::vector<Row> rows;
  std::vector<Skip> skipped;  // sentences dropped for unknown words
};

CorpusScore score_corpus(const ConditionalLM& lm, const TokeniserSpec& spec,
                         std::span<const WordSequence> sentences);

}  // namespace wordprob

#include "wordprob/scoring.hpp"

#include <algorithm>

#include "wordprob/errors.hpp"

namespace wordprob {

const char* fix_name(AppliedFix fix) {
  switch (fix) {
    case AppliedFix::none: return "none";
    case AppliedFix::fix1: return "fix1";
    case AppliedFix::fix2: return "fix2";
    case AppliedFix::fix3: return "fix3";
  }
  return "?";
}

namespace {

// log sum of the row's mass over a slot subset, optionally with eos.
LogProb row_mass(const Eigen::VectorXd& row, std::span<const int> slots, bool with_eos,
                 int eos_slot) {
  LogProb acc = LogProb::zero();
  for (int s : slots) acc = log_add(acc, LogProb{row(s)});
  if (with_eos) acc = log_add(acc, LogProb{row(eos_slot)});
  return acc;
}

LogProb chain_logprob(const ConditionalLM& lm, SubwordSequence& context,
                      std::span<const int> ids) {
  LogProb acc = LogProb::one();
  for (int slot : ids) {
    acc *= LogProb{lm.next_log_distribution(context)(slot)};
    context.push_back(slot);
  }
  return acc;
}

ScoredWord finish(ScoredWord sw) {
  sw.surprisal_buggy = -sw.p_buggy.value;
  sw.surprisal_fixed = -sw.p_fixed.value;
  return sw;
}

void require_scheme(const TokeniserSpec& spec, MarkingScheme scheme, const char* op) {
  if (spec.scheme() != scheme)
    throw Error(ErrorCode::SchemeMismatch,
                std::string(op) + " requires a " +
                    scheme_name(scheme) + "-marking tokeniser");
}

}  // namespace

SubwordSequence tokenise_context(const TokeniserSpec& spec,
                                 std::span<const std::string> words) {
  SubwordSequence out;
  for (size_t i = 0; i < words.size(); ++i) {
    const auto& ids = tokenise_word(spec, words[i],
                                    i == 0 ? WordPosition::first : WordPosition::medial);
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

LogProb prefix_logprob(const ConditionalLM& lm, std::span<const int> ids) {
  SubwordSequence context;
  context.reserve(ids.size());
  return chain_logprob(lm, context, ids);
}

LogProb word_conditional_eow(const ConditionalLM& lm, const TokeniserSpec& spec,
                             std::span<const std::string> context,
                             const std::string& word) {
  require_scheme(spec, MarkingScheme::eow, "word_conditional_eow");
  SubwordSequence ctx = tokenise_context(spec, context);
  return chain_logprob(lm, ctx, spec.image(word));
}

ScoredWord word_conditional_bow(const ConditionalLM& lm, const TokeniserSpec& spec,
                                std::span<const std::string> context,
                                const std::string& word) {
  require_scheme(spec, MarkingScheme::bow, "word_conditional_bow");
  if (context.empty() && !spec.mark_first_word())
    throw Error(ErrorCode::FirstWordNeedsFix3,
                "first word of an unmarked-first spec; use bugfix_bow_first");

  const std::vector<int> bow_slots = spec.vocab().marked_slots();
  SubwordSequence ctx = tokenise_context(spec, context);

  ScoredWord sw;
  sw.word = word;
  sw.context_words.assign(context.begin(), context.end());
  sw.applied_fix = AppliedFix::fix1;

  const LogProb denom =
      row_mass(lm.next_log_distribution(ctx), bow_slots, true, lm.eos_slot());
  sw.p_buggy = chain_logprob(lm, ctx, spec.image(word));  // ctx now holds ctx ∘ word
  const LogProb numer =
      row_mass(lm.next_log_distribution(ctx), bow_slots, true, lm.eos_slot());
  sw.correction = LogProb{numer.value - denom.value};
  sw.p_fixed = sw.p_buggy * sw.correction;
  return finish(sw);
}

ScoredWord bugfix_eow_final(const ConditionalLM& lm, const TokeniserSpec& spec,
                            std::span<const std::string> context,
                            const std::string& word) {
  require_scheme(spec, MarkingScheme::eow, "bugfix_eow_final");
  if (spec.mark_final_word())
    throw Error(ErrorCode::SchemeMismatch,
                "bugfix_eow_final applies only when final words are unmarked");

  const std::vector<int> punct = spec.vocab().punct_slots();
  const SubwordSequence base = tokenise_context(spec, context);

  ScoredWord sw;
  sw.word = word;
  sw.context_words.assign(context.begin(), context.end());
  sw.applied_fix = AppliedFix::fix2;

  // Event one: the mid form followed by punctuation or eos.
  SubwordSequence ctx = base;
  const LogProb p_mid = chain_logprob(lm, ctx, spec.mid_image(word));
  const LogProb tail =
      row_mass(lm.next_log_distribution(ctx), punct, true, lm.eos_slot());
  // Event two: the marked form continuing the sequence.
  ctx = base;
  const LogProb p_marked = chain_logprob(lm, ctx, spec.image(word));

  sw.p_buggy = p_mid;  // what the uncorrected chain over the actual tokens gives
  sw.p_fixed = log_add(p_mid * tail, p_marked);
  sw.correction = LogProb{sw.p_fixed.value - sw.p_buggy.value};
  return finish(sw);
}

ScoredWord bugfix_bow_first(const ConditionalLM& lm, const TokeniserSpec& spec,
                            const std::string& word,
                            std::span<const std::string> context) {
  require_scheme(spec, MarkingScheme::bow, "bugfix_bow_first");
  if (spec.mark_first_word())
    throw Error(ErrorCode::SchemeMismatch,
                "bugfix_bow_first applies only when first words are unmarked");
  if (!context.empty())
    throw Error(ErrorCode::NonEmptyContext, "the first word has an empty context");

  const std::vector<int> bow_slots = spec.vocab().marked_slots();
  const std::vector<int> mid_slots = spec.vocab().mid_slots();

  ScoredWord sw;
  sw.word = word;
  sw.applied_fix = AppliedFix::fix3;

  SubwordSequence ctx;
  const LogProb denom =
      row_mass(lm.next_log_distribution(ctx), mid_slots, true, lm.eos_slot());
  sw.p_buggy = chain_logprob(lm, ctx, spec.mid_image(word));
  const LogProb numer =
      row_mass(lm.next_log_distribution(ctx), bow_slots, true, lm.eos_slot());
  sw.correction = LogProb{numer.value - denom.value};
  sw.p_fixed = sw.p_buggy * sw.correction;
  return finish(sw);
}

LogProb word_conditional_buggy(const ConditionalLM& lm, const TokeniserSpec& spec,
                               std::span<const std::string> context,
                               const std::string& word, WordPosition position) {
  SubwordSequence ctx = tokenise_context(spec, context);
  return chain_logprob(lm, ctx, tokenise_word(spec, word, position));
}

LogProb sequence_logprob(const ConditionalLM& lm, const TokeniserSpec& spec,
                         std::span<const std::string> words) {
  SubwordSequence ctx;
  LogProb p = chain_logprob(lm, ctx, tokenise_sequence(spec, words));
  return p * LogProb{lm.next_log_distribution(ctx)(lm.eos_slot())};
}

LogProb eos_event_logprob(const ConditionalLM& lm, const TokeniserSpec& spec,
                          std::span<const std::string> context) {
  const int eos = lm.eos_slot();
  if (spec.scheme() == MarkingScheme::eow) {
    if (spec.mark_final_word() || context.empty()) {
      SubwordSequence ctx = tokenise_context(spec, context);
      return LogProb{lm.next_log_distribution(ctx)(eos)};
    }
    // Unmarked final word: ending here means the context's last word was read
    // in mid form; condition on the fix2 event union for that word.
    std::span<const std::string> head = context.first(context.size() - 1);
    const std::string& last = context.back();
    const ScoredWord last_scored = bugfix_eow_final(lm, spec, head, last);
    SubwordSequence full = tokenise_context(spec, head);
    const LogProb p_mid = chain_logprob(lm, full, spec.mid_image(last));
    const LogProb ends_now = p_mid * LogProb{lm.next_log_distribution(full)(eos)};
    return LogProb{ends_now.value - last_scored.p_fixed.value};
  }
  // bow
  const bool first_unmarked = context.empty() && !spec.mark_first_word();
  SubwordSequence ctx = tokenise_context(spec, context);
  const Eigen::VectorXd& row = lm.next_log_distribution(ctx);
  const std::vector<int> slots =
      first_unmarked ? spec.vocab().mid_slots() : spec.vocab().marked_slots();
  const LogProb denom = row_mass(row, slots, true, eos);
  return LogProb{row(eos) - denom.value};
}

ScoredWord score_word(const ConditionalLM& lm, const TokeniserSpec& spec,
                      std::span<const std::string> context, const std::string& word,
                      WordPosition position) {
  if (spec.scheme() == MarkingScheme::bow) {
    if (position == WordPosition::first && !spec.mark_first_word())
      return bugfix_bow_first(lm, spec, word, context);
    return word_conditional_bow(lm, spec, context, word);
  }
  if (position == WordPosition::final && !spec.mark_final_word())
    return bugfix_eow_final(lm, spec, context, word);
  ScoredWord sw;
  sw.word = word;
  sw.context_words.assign(context.begin(), context.end());
  sw.applied_fix = AppliedFix::none;
  sw.p_buggy = word_conditional_eow(lm, spec, context, word);
  sw.correction = LogProb::one();
  sw.p_fixed = sw.p_buggy;
  return finish(sw);
}

CorpusScore score_corpus(const ConditionalLM& lm, const TokeniserSpec& spec,
                         std::span<const WordSequence> sentences) {
  CorpusScore out;
  for (size_t s = 0; s < sentences.size(); ++s) {
    const WordSequence& words = sentences[s];
    std::vector<CorpusScore::Row> rows;
    try {
      for (size_t i = 0; i < words.size(); ++i) {
        WordPosition pos;
        if (words.size() == 1)
          pos = spec.scheme() == MarkingScheme::bow ? WordPosition::first
                                                    : WordPosition::final;
        else if (i == 0)
          pos = WordPosition::first;
        else if (i + 1 == words.size())
          pos = WordPosition::final;
        else
          pos = WordPosition::medial;
        std::span<const std::string> ctx(words.data(), i);
        rows.push_back({static_cast<int>(s), static_cast<int>(i),
                        score_word(lm, spec, ctx, words[i], pos)});
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::UnknownWord || e.code() == ErrorCode::MissingMidMap) {
        out.skipped.push_back({static_cast<int>(s), e.what()});
        continue;
      }
      throw;
    }
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }
  return out;
}

}  // namespace wordprob

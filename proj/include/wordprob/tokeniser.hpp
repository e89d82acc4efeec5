#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "wordprob/vocabulary.hpp"

namespace wordprob {

using WordSequence = std::vector<std::string>;
using SubwordSequence = std::vector<int>;  // vocabulary slots; eos never appears

// Orthographic segmentation: whitespace splits words, punctuation marks and
// clitics become words of their own. Hyphenated forms stay single words.
struct SegmentationRules {
  std::string punct_chars = ".,;:!?()[]{}\"";
  char clitic_marker = '\'';
};

WordSequence pretokenise(const std::string& text, const SegmentationRules& rules = {});

// `text` reassembled from its own pretokenisation, words joined by single
// spaces. pretokenise is idempotent on this normalised form.
std::string normalise(const std::string& text, const SegmentationRules& rules = {});

enum class WordPosition { first, medial, final };

// Segmentation-aware tokeniser over a closed lexicon. word_map carries the
// scheme-shaped images; mid_map carries the V_mid-only images used at
// unmarked boundaries (final word under eow when mark_final_word is false,
// first word under bow when mark_first_word is false).
class TokeniserSpec {
 public:
  TokeniserSpec() = default;
  TokeniserSpec(MarkedVocabulary vocab,
                std::map<std::string, SubwordSequence> word_map,
                std::map<std::string, SubwordSequence> mid_map = {},
                bool mark_first_word = true, bool mark_final_word = true);

  const MarkedVocabulary& vocab() const { return vocab_; }
  MarkingScheme scheme() const { return vocab_.scheme(); }
  const std::map<std::string, SubwordSequence>& word_map() const { return word_map_; }
  const std::map<std::string, SubwordSequence>& mid_map() const { return mid_map_; }
  bool mark_first_word() const { return mark_first_word_; }
  bool mark_final_word() const { return mark_final_word_; }

  const SubwordSequence& image(const std::string& word) const;      // throws UnknownWord
  const SubwordSequence& mid_image(const std::string& word) const;  // throws MissingMidMap

  bool has_word(const std::string& word) const { return word_map_.count(word) > 0; }
  std::vector<std::string> lexicon() const;

  // Inverse lookups used by detokenisation (and by the oracle's own decoder).
  std::optional<std::string> word_of_image(const SubwordSequence& ids) const;
  std::optional<std::string> word_of_mid_image(const SubwordSequence& ids) const;
  // Is `ids` a proper or full prefix of some word_map (resp. mid_map) image?
  bool is_image_prefix(const SubwordSequence& ids) const;
  bool is_mid_image_prefix(const SubwordSequence& ids) const;

 private:
  MarkedVocabulary vocab_;
  std::map<std::string, SubwordSequence> word_map_;
  std::map<std::string, SubwordSequence> mid_map_;
  bool mark_first_word_ = true;
  bool mark_final_word_ = true;

  std::map<SubwordSequence, std::string> inverse_word_;
  std::map<SubwordSequence, std::string> inverse_mid_;
  std::set<SubwordSequence> image_prefixes_;
  std::set<SubwordSequence> mid_image_prefixes_;
};

// Shape invariants: images match the scheme's form, mid images stay in
// V_mid*, maps are injective, mid_map exists when a boundary flag is false.
ValidationReport validate_tokeniser(const TokeniserSpec& spec);

SubwordSequence tokenise_word(const TokeniserSpec& spec, const std::string& word,
                              WordPosition position);
SubwordSequence tokenise_sequence(const TokeniserSpec& spec,
                                  std::span<const std::string> words);
// Inverse of tokenise_sequence on its image; throws UnmappedSequence outside it.
WordSequence detokenise(const TokeniserSpec& spec, std::span<const int> ids);

struct DecodabilityCertificate {
  enum class Class { instantaneous, near_instantaneous };
  Class decodability = Class::instantaneous;
  // For near-instantaneous codes: a prefix whose word decoding is not yet
  // fixed, plus one continuation subword under which it decodes differently.
  SubwordSequence witness_prefix;
  int witness_continuation = -1;
  std::string note;
};

DecodabilityCertificate certify_decodability(const TokeniserSpec& spec);

// File format: `word<TAB>ids` lines, then an optional `#mid` section with the
// same layout for mid_map entries. Ids are external vocabulary ids.
TokeniserSpec load_tokeniser(const std::filesystem::path& path, MarkedVocabulary vocab,
                             bool mark_first_word = true, bool mark_final_word = true);

}  // namespace wordprob

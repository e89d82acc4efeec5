#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "wordprob/tabular_lm.hpp"
#include "wordprob/tokeniser.hpp"

#ifndef WORDPROB_FIXTURE_DIR
#define WORDPROB_FIXTURE_DIR "fixtures"
#endif

namespace wordprob::testsupport {

inline std::string fixture(const std::string& name) {
  return std::string(WORDPROB_FIXTURE_DIR) + "/" + name;
}

// Seeded toy tokeniser: 2-4 marked subwords, 0-2 mid subwords, a closed
// lexicon of one- and two-subword words. Marking flags stay true; images fit
// in two ids so order-2 LMs represent the support exactly.
inline TokeniserSpec random_toy_spec(std::uint64_t seed, MarkingScheme scheme) {
  std::mt19937_64 rng(seed * 2654435761ULL + 17);
  auto pick = [&](int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };

  const int n_marked = pick(2, 4);
  const int n_mid = (seed % 7 == 3) ? 0 : pick(1, 2);  // sometimes V_mid = ∅
  const char* letters = "abcdefgh";

  std::vector<Subword> subwords;
  for (int i = 0; i < n_marked; ++i) {
    std::string surface = scheme == MarkingScheme::bow
                              ? std::string("_") + letters[i]
                              : std::string(1, letters[i]) + "_";
    subwords.push_back({static_cast<std::int32_t>(subwords.size()), surface,
                        scheme == MarkingScheme::bow ? SubwordRole::bow : SubwordRole::eow});
  }
  for (int i = 0; i < n_mid; ++i) {
    subwords.push_back({static_cast<std::int32_t>(subwords.size()),
                        std::string(1, letters[4 + i]), SubwordRole::mid});
  }
  const int vocab_size = static_cast<int>(subwords.size());
  MarkedVocabulary vocab(std::move(subwords), scheme, vocab_size);

  auto strip = [](std::string s) {
    std::string out;
    for (char c : s)
      if (c != '_') out.push_back(c);
    return out;
  };
  auto word_of = [&](const SubwordSequence& ids) {
    std::string w;
    for (int slot : ids) w += strip(vocab.subword(slot).surface);
    return w;
  };

  std::map<std::string, SubwordSequence> word_map;
  auto add = [&](SubwordSequence ids) { word_map.emplace(word_of(ids), std::move(ids)); };
  for (int m = 0; m < n_marked; ++m) add({m});
  int two_token_words = 0;
  for (int m = 0; m < n_marked && static_cast<int>(word_map.size()) < 6; ++m) {
    for (int x = 0; x < n_mid; ++x) {
      const int mid_slot = n_marked + x;
      if (rng() % 2 == 0 && two_token_words >= 1) continue;
      if (scheme == MarkingScheme::bow)
        add({m, mid_slot});
      else
        add({mid_slot, m});
      ++two_token_words;
      if (static_cast<int>(word_map.size()) >= 6) break;
    }
  }
  return TokeniserSpec(std::move(vocab), std::move(word_map));
}

// All word sequences over the lexicon with length <= max_words.
inline std::vector<WordSequence> all_contexts(const TokeniserSpec& spec, int max_words) {
  std::vector<WordSequence> out{{}};
  std::vector<std::string> lexicon = spec.lexicon();
  size_t tier_begin = 0;
  for (int len = 1; len <= max_words; ++len) {
    const size_t tier_end = out.size();
    for (size_t i = tier_begin; i < tier_end; ++i) {
      for (const auto& w : lexicon) {
        WordSequence ws = out[i];
        ws.push_back(w);
        out.push_back(std::move(ws));
      }
    }
    tier_begin = tier_end;
  }
  return out;
}

}  // namespace wordprob::testsupport

#include "wordprob/tokeniser.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "wordprob/errors.hpp"

namespace wordprob {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

WordSequence pretokenise(const std::string& text, const SegmentationRules& rules) {
  WordSequence words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      words.push_back(cur);
      cur.clear();
    }
  };
  for (char c : text) {
    if (is_space(c)) {
      flush();
    } else if (rules.punct_chars.find(c) != std::string::npos) {
      flush();
      words.push_back(std::string(1, c));
    } else if (c == rules.clitic_marker) {
      // The clitic marker starts a new word that absorbs what follows ('s).
      flush();
      cur.push_back(c);
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return words;
}

std::string normalise(const std::string& text, const SegmentationRules& rules) {
  WordSequence words = pretokenise(text, rules);
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += words[i];
  }
  return out;
}

TokeniserSpec::TokeniserSpec(MarkedVocabulary vocab,
                             std::map<std::string, SubwordSequence> word_map,
                             std::map<std::string, SubwordSequence> mid_map,
                             bool mark_first_word, bool mark_final_word)
    : vocab_(std::move(vocab)),
      word_map_(std::move(word_map)),
      mid_map_(std::move(mid_map)),
      mark_first_word_(mark_first_word),
      mark_final_word_(mark_final_word) {
  for (const auto& [word, ids] : word_map_) {
    inverse_word_.emplace(ids, word);
    for (size_t n = 0; n <= ids.size(); ++n)
      image_prefixes_.insert(SubwordSequence(ids.begin(), ids.begin() + n));
  }
  for (const auto& [word, ids] : mid_map_) {
    inverse_mid_.emplace(ids, word);
    for (size_t n = 0; n <= ids.size(); ++n)
      mid_image_prefixes_.insert(SubwordSequence(ids.begin(), ids.begin() + n));
  }
}

const SubwordSequence& TokeniserSpec::image(const std::string& word) const {
  auto it = word_map_.find(word);
  if (it == word_map_.end())
    throw Error(ErrorCode::UnknownWord, "'" + word + "' is not in the lexicon");
  return it->second;
}

const SubwordSequence& TokeniserSpec::mid_image(const std::string& word) const {
  auto it = mid_map_.find(word);
  if (it == mid_map_.end()) {
    if (word_map_.count(word) == 0)
      throw Error(ErrorCode::UnknownWord, "'" + word + "' is not in the lexicon");
    throw Error(ErrorCode::MissingMidMap, "'" + word + "' has no mid-form image");
  }
  return it->second;
}

std::vector<std::string> TokeniserSpec::lexicon() const {
  std::vector<std::string> words;
  words.reserve(word_map_.size());
  for (const auto& [word, ids] : word_map_) words.push_back(word);
  return words;
}

std::optional<std::string> TokeniserSpec::word_of_image(const SubwordSequence& ids) const {
  auto it = inverse_word_.find(ids);
  if (it == inverse_word_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> TokeniserSpec::word_of_mid_image(const SubwordSequence& ids) const {
  auto it = inverse_mid_.find(ids);
  if (it == inverse_mid_.end()) return std::nullopt;
  return it->second;
}

bool TokeniserSpec::is_image_prefix(const SubwordSequence& ids) const {
  return image_prefixes_.count(ids) > 0;
}

bool TokeniserSpec::is_mid_image_prefix(const SubwordSequence& ids) const {
  return mid_image_prefixes_.count(ids) > 0;
}

ValidationReport validate_tokeniser(const TokeniserSpec& spec) {
  ValidationReport report;
  const MarkedVocabulary& vocab = spec.vocab();
  const bool bow = spec.scheme() == MarkingScheme::bow;

  auto shape_ok = [&](const SubwordSequence& ids) {
    if (ids.empty()) return false;
    if (bow) {
      // V_bow followed by V_mid*
      if (!vocab.is_marked(ids.front())) return false;
      for (size_t i = 1; i < ids.size(); ++i)
        if (vocab.is_marked(ids[i])) return false;
    } else {
      // V_mid* followed by V_eow
      if (!vocab.is_marked(ids.back())) return false;
      for (size_t i = 0; i + 1 < ids.size(); ++i)
        if (vocab.is_marked(ids[i])) return false;
    }
    return true;
  };

  const bool shapes_enforced = bow ? spec.mark_first_word() : spec.mark_final_word();
  std::map<SubwordSequence, std::vector<std::string>> by_image;
  for (const auto& [word, ids] : spec.word_map()) {
    by_image[ids].push_back(word);
    for (int slot : ids)
      if (slot < 0 || slot >= vocab.size()) {
        report.add_error("BadSubwordId", "image of '" + word + "' uses an invalid slot");
        return report;
      }
    if (!shape_ok(ids)) {
      // When the boundary flag is false the marked form is still required for
      // non-boundary positions, so a malformed image is an error either way.
      report.add_error("BadImageShape",
                       "image of '" + word + "' does not match the " +
                           std::string(scheme_name(spec.scheme())) + " form" +
                           (shapes_enforced ? "" : " (marked positions still use it)"));
    }
  }
  for (const auto& [ids, words] : by_image) {
    if (words.size() > 1)
      report.add_error("NotUniquelyDecodable",
                       "'" + words[0] + "' and '" + words[1] + "' share one image");
  }

  std::map<SubwordSequence, std::vector<std::string>> by_mid_image;
  for (const auto& [word, ids] : spec.mid_map()) {
    by_mid_image[ids].push_back(word);
    if (ids.empty()) {
      report.add_error("BadImageShape", "mid image of '" + word + "' is empty");
      continue;
    }
    for (int slot : ids) {
      if (slot < 0 || slot >= vocab.size() || vocab.is_marked(slot)) {
        report.add_error("BadImageShape",
                         "mid image of '" + word + "' leaves V_mid*");
        break;
      }
    }
    if (spec.word_map().count(word) == 0)
      report.add_warning("OrphanMidEntry", "'" + word + "' has a mid image only");
  }
  for (const auto& [ids, words] : by_mid_image) {
    if (words.size() > 1)
      report.add_error("NotUniquelyDecodable",
                       "'" + words[0] + "' and '" + words[1] + "' share one mid image");
  }

  const bool needs_mid = bow ? !spec.mark_first_word() : !spec.mark_final_word();
  if (needs_mid) {
    for (const auto& [word, ids] : spec.word_map())
      if (spec.mid_map().count(word) == 0)
        report.add_warning("MissingMidMap",
                           "'" + word + "' cannot appear at the unmarked boundary");
    if (spec.mid_map().empty())
      report.add_error("MissingMidMap", "boundary flag is false but no mid map was given");
  }
  return report;
}

SubwordSequence tokenise_word(const TokeniserSpec& spec, const std::string& word,
                              WordPosition position) {
  const bool bow = spec.scheme() == MarkingScheme::bow;
  const bool use_mid =
      bow ? (position == WordPosition::first && !spec.mark_first_word())
          : (position == WordPosition::final && !spec.mark_final_word());
  return use_mid ? spec.mid_image(word) : spec.image(word);
}

SubwordSequence tokenise_sequence(const TokeniserSpec& spec,
                                  std::span<const std::string> words) {
  SubwordSequence out;
  const size_t n = words.size();
  for (size_t i = 0; i < n; ++i) {
    WordPosition pos;
    if (n == 1) {
      // A lone word is both first and final; the scheme decides which
      // boundary its tokenisation is sensitive to.
      pos = spec.scheme() == MarkingScheme::bow ? WordPosition::first
                                                : WordPosition::final;
    } else if (i == 0) {
      pos = WordPosition::first;
    } else if (i + 1 == n) {
      pos = WordPosition::final;
    } else {
      pos = WordPosition::medial;
    }
    SubwordSequence ids;
    try {
      ids = tokenise_word(spec, words[i], pos);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::UnknownWord)
        throw Error(ErrorCode::UnknownWord,
                    "'" + words[i] + "' at word index " + std::to_string(i));
      throw;
    }
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

namespace {

[[noreturn]] void unmapped(const std::string& why) {
  throw Error(ErrorCode::UnmappedSequence, why);
}

std::string decode_segment(const TokeniserSpec& spec, const SubwordSequence& seg,
                           bool via_mid) {
  auto word = via_mid ? spec.word_of_mid_image(seg) : spec.word_of_image(seg);
  if (!word) unmapped("segment is not a word image");
  return *word;
}

}  // namespace

WordSequence detokenise(const TokeniserSpec& spec, std::span<const int> ids) {
  WordSequence words;
  if (ids.empty()) return words;
  const MarkedVocabulary& vocab = spec.vocab();
  for (int slot : ids)
    if (slot < 0 || slot >= vocab.size()) unmapped("invalid subword id");

  if (spec.scheme() == MarkingScheme::bow) {
    size_t start = 0;
    if (!spec.mark_first_word()) {
      // Leading V_mid run is the first word's mid-form image.
      size_t end = 0;
      while (end < ids.size() && !vocab.is_marked(ids[end])) ++end;
      if (end == 0) unmapped("first word must be unmarked");
      words.push_back(decode_segment(
          spec, SubwordSequence(ids.begin(), ids.begin() + end), /*via_mid=*/true));
      start = end;
    } else if (!vocab.is_marked(ids[0])) {
      unmapped("sequence starts mid-word");
    }
    while (start < ids.size()) {
      size_t end = start + 1;
      while (end < ids.size() && !vocab.is_marked(ids[end])) ++end;
      words.push_back(decode_segment(
          spec, SubwordSequence(ids.begin() + start, ids.begin() + end), false));
      start = end;
    }
  } else {
    size_t start = 0;
    size_t i = 0;
    for (; i < ids.size(); ++i) {
      if (vocab.is_marked(ids[i])) {
        words.push_back(decode_segment(
            spec, SubwordSequence(ids.begin() + start, ids.begin() + i + 1), false));
        start = i + 1;
      }
    }
    if (!spec.mark_final_word()) {
      if (start == ids.size()) unmapped("final word must be unmarked");
      words.push_back(decode_segment(
          spec, SubwordSequence(ids.begin() + start, ids.end()), /*via_mid=*/true));
    } else if (start != ids.size()) {
      unmapped("trailing subwords do not close a word");
    }
  }
  return words;
}

DecodabilityCertificate certify_decodability(const TokeniserSpec& spec) {
  // Enumerate tokenisations of word sequences up to two words and look for a
  // proper prefix of one inside another with a different word reading.
  std::vector<std::pair<SubwordSequence, WordSequence>> forms;
  std::vector<std::string> words = spec.lexicon();
  if (words.size() > 64) words.resize(64);  // witness search cap for big lexicons
  for (const auto& w : words) {
    WordSequence ws{w};
    forms.emplace_back(tokenise_sequence(spec, ws), ws);
  }
  for (const auto& w1 : words) {
    for (const auto& w2 : words) {
      WordSequence ws{w1, w2};
      forms.emplace_back(tokenise_sequence(spec, ws), ws);
    }
  }

  std::map<SubwordSequence, WordSequence> by_form;
  for (const auto& [ids, ws] : forms) {
    auto [it, inserted] = by_form.emplace(ids, ws);
    if (!inserted && it->second != ws) {
      std::ostringstream os;
      os << "two word sequences share a tokenisation: [";
      for (const auto& w : it->second) os << ' ' << w;
      os << " ] vs [";
      for (const auto& w : ws) os << ' ' << w;
      os << " ]";
      throw Error(ErrorCode::NotUniquelyDecodable, os.str());
    }
  }

  DecodabilityCertificate cert;
  for (const auto& [t1, ws1] : forms) {
    for (const auto& [t2, ws2] : forms) {
      if (t1.size() >= t2.size()) continue;
      if (!std::equal(t1.begin(), t1.end(), t2.begin())) continue;
      const bool same_reading =
          ws1.size() <= ws2.size() &&
          std::equal(ws1.begin(), ws1.end(), ws2.begin());
      if (!same_reading) {
        cert.decodability = DecodabilityCertificate::Class::near_instantaneous;
        cert.witness_prefix = t1;
        cert.witness_continuation = t2[t1.size()];
        cert.note = "prefix decodes to '" + ws1[0] + "' only if not continued by id " +
                    std::to_string(spec.vocab().subword(t2[t1.size()]).id);
        return cert;
      }
    }
  }
  cert.decodability = DecodabilityCertificate::Class::instantaneous;
  cert.note = "every closed prefix has a fixed word reading";
  return cert;
}

TokeniserSpec load_tokeniser(const std::filesystem::path& path, MarkedVocabulary vocab,
                             bool mark_first_word, bool mark_final_word) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::ParseError, "cannot open tokeniser file " + path.string());

  std::map<std::string, SubwordSequence> word_map, mid_map;
  bool in_mid = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "#mid") {
      in_mid = true;
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(lineno) + ": expected word<TAB>ids");
    std::string word = line.substr(0, tab);
    SubwordSequence slots;
    std::stringstream ss(line.substr(tab + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      std::int32_t id;
      try {
        id = static_cast<std::int32_t>(std::stol(tok));
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError,
                    path.string() + ":" + std::to_string(lineno) + ": bad id '" + tok + "'");
      }
      int slot = vocab.slot_of(id);
      if (slot < 0)
        throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) +
                                               ": id " + tok + " not in vocabulary");
      slots.push_back(slot);
    }
    if (slots.empty())
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(lineno) + ": empty image");
    auto& target = in_mid ? mid_map : word_map;
    if (!target.emplace(word, std::move(slots)).second)
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) +
                                             ": duplicate entry for '" + word + "'");
  }
  return TokeniserSpec(std::move(vocab), std::move(word_map), std::move(mid_map),
                       mark_first_word, mark_final_word);
}

}  // namespace wordprob

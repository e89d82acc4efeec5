#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support/fixtures.hpp"
#include "wordprob/errors.hpp"
#include "wordprob/tokeniser.hpp"

using namespace wordprob;
using testsupport::fixture;

TEST_CASE("pretokenise splits whitespace, punctuation and clitics") {
  WordSequence words = pretokenise("How do you compute a word's probability?");
  WordSequence expected{"How", "do", "you", "compute", "a",
                        "word", "'s", "probability", "?"};
  CHECK(words == expected);
}

TEST_CASE("pretokenise of empty input is empty") {
  CHECK(pretokenise("").empty());
  CHECK(pretokenise("   \t ").empty());
}

TEST_CASE("runs of delimiters collapse and normalisation is idempotent") {
  CHECK(pretokenise("a  b") == WordSequence{"a", "b"});
  const std::string text = "He said:  \"editor-in-chief,  really?\"";
  const std::string norm = normalise(text);
  CHECK(pretokenise(norm) == pretokenise(text));
  CHECK(normalise(norm) == norm);
}

TEST_CASE("hyphenated forms stay single words") {
  CHECK(pretokenise("editor-in-chief") == WordSequence{"editor-in-chief"});
}

namespace {

TokeniserSpec toy1() {
  MarkedVocabulary vocab = load_vocabulary(fixture("toy1.vocab.tsv"), MarkingScheme::bow, 3);
  return load_tokeniser(fixture("toy1.tok.tsv"), std::move(vocab));
}

TokeniserSpec eowtoy() {
  MarkedVocabulary vocab = load_vocabulary(fixture("eowtoy.vocab.tsv"), MarkingScheme::eow, 3);
  return load_tokeniser(fixture("eowtoy.tok.tsv"), std::move(vocab));
}

}  // namespace

TEST_CASE("tokenise_word picks word_map or mid_map by position and flags") {
  TokeniserSpec eow = eowtoy();
  CHECK(tokenise_word(eow, "pq", WordPosition::medial) == SubwordSequence{0, 1});

  MarkedVocabulary vocab =
      load_vocabulary(fixture("bowfirst.vocab.tsv"), MarkingScheme::bow, 5);
  TokeniserSpec bow = load_tokeniser(fixture("bowfirst.tok.tsv"), std::move(vocab),
                                     /*mark_first_word=*/false);
  CHECK(tokenise_word(bow, "a", WordPosition::first) == SubwordSequence{2});
  CHECK(tokenise_word(bow, "a", WordPosition::medial) == SubwordSequence{0});
  CHECK_THROWS_AS(tokenise_word(bow, "zzz", WordPosition::first), Error);
}

TEST_CASE("tokenise_sequence concatenates per-word images") {
  TokeniserSpec spec = toy1();
  WordSequence ws{"a", "ac"};
  CHECK(tokenise_sequence(spec, ws) == SubwordSequence{0, 0, 2});
  CHECK(tokenise_sequence(spec, WordSequence{}).empty());
}

TEST_CASE("unknown words carry their index") {
  TokeniserSpec spec = toy1();
  WordSequence ws{"a", "nope"};
  try {
    tokenise_sequence(spec, ws);
    FAIL("expected UnknownWord");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownWord);
    CHECK(std::string(e.what()).find("index 1") != std::string::npos);
  }
}

TEST_CASE("detokenise inverts tokenise_sequence exhaustively up to length 4") {
  TokeniserSpec spec = toy1();
  long checked = 0;
  for (const auto& ws : testsupport::all_contexts(spec, 4)) {
    SubwordSequence ids = tokenise_sequence(spec, ws);
    CHECK(detokenise(spec, ids) == ws);
    ++checked;
  }
  CHECK(checked == 1 + 4 + 16 + 64 + 256);
}

TEST_CASE("tokenise_sequence is injective over sampled sequences") {
  TokeniserSpec spec = toy1();
  std::map<SubwordSequence, WordSequence> seen;
  for (const auto& ws : testsupport::all_contexts(spec, 4)) {
    auto [it, inserted] = seen.emplace(tokenise_sequence(spec, ws), ws);
    CHECK(inserted);
  }
}

TEST_CASE("sequences outside the image are errors, not guesses") {
  TokeniserSpec spec = toy1();
  CHECK_THROWS_AS(detokenise(spec, SubwordSequence{2, 0}), Error);  // starts mid-word
  CHECK_THROWS_AS(detokenise(spec, SubwordSequence{0, 2, 2}), Error);
  CHECK(detokenise(spec, SubwordSequence{}).empty());
}

TEST_CASE("bow shape holds for every tokenised word segment") {
  TokeniserSpec spec = toy1();
  for (const auto& [word, ids] : spec.word_map()) {
    CHECK(spec.vocab().is_marked(ids.front()));
    for (size_t i = 1; i < ids.size(); ++i) CHECK(!spec.vocab().is_marked(ids[i]));
  }
}

TEST_CASE("toggling mark_first_word changes only the first word's segment") {
  MarkedVocabulary v1 = load_vocabulary(fixture("bowfirst.vocab.tsv"), MarkingScheme::bow, 5);
  MarkedVocabulary v2 = v1;
  TokeniserSpec marked = load_tokeniser(fixture("bowfirst.tok.tsv"), std::move(v1), true);
  TokeniserSpec unmarked = load_tokeniser(fixture("bowfirst.tok.tsv"), std::move(v2), false);
  WordSequence ws{"ac", "b", "a"};
  SubwordSequence a = tokenise_sequence(marked, ws);
  SubwordSequence b = tokenise_sequence(unmarked, ws);
  const auto& first_marked = marked.image("ac");
  const auto& first_mid = unmarked.mid_image("ac");
  CHECK(SubwordSequence(a.begin(), a.begin() + first_marked.size()) == first_marked);
  CHECK(SubwordSequence(b.begin(), b.begin() + first_mid.size()) == first_mid);
  CHECK(SubwordSequence(a.begin() + first_marked.size(), a.end()) ==
        SubwordSequence(b.begin() + first_mid.size(), b.end()));
}

TEST_CASE("eow marked specs certify instantaneous decodability") {
  DecodabilityCertificate cert = certify_decodability(eowtoy());
  CHECK(cert.decodability == DecodabilityCertificate::Class::instantaneous);
}

TEST_CASE("bow specs certify near-instantaneous with the TOY-1 witness") {
  DecodabilityCertificate cert = certify_decodability(toy1());
  CHECK(cert.decodability == DecodabilityCertificate::Class::near_instantaneous);
  CHECK(cert.witness_prefix == SubwordSequence{0});  // [A] may still grow into "ac"
  CHECK(cert.witness_continuation == 2);
}

TEST_CASE("two words with one image are not uniquely decodable") {
  MarkedVocabulary vocab({{0, "_a", SubwordRole::bow}, {1, "c", SubwordRole::mid}},
                         MarkingScheme::bow, 2);
  TokeniserSpec spec(vocab, {{"x", {0, 1}}, {"y", {0, 1}}});
  CHECK(!validate_tokeniser(spec).ok());
  CHECK_THROWS_AS(certify_decodability(spec), Error);
}

TEST_CASE("round trips hold for random toy specs in both schemes") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (MarkingScheme scheme : {MarkingScheme::bow, MarkingScheme::eow}) {
      TokeniserSpec spec = testsupport::random_toy_spec(seed, scheme);
      REQUIRE(validate_tokeniser(spec).ok());
      std::mt19937_64 rng(seed);
      std::vector<std::string> lexicon = spec.lexicon();
      for (int trial = 0; trial < 30; ++trial) {
        WordSequence ws;
        const int len = static_cast<int>(rng() % 6);
        for (int i = 0; i < len; ++i) ws.push_back(lexicon[rng() % lexicon.size()]);
        CHECK(detokenise(spec, tokenise_sequence(spec, ws)) == ws);
      }
    }
  }
}

TEST_CASE("tokeniser files reject malformed input") {
  CHECK_THROWS_AS(load_tokeniser(fixture("missing.tok.tsv"),
                                 load_vocabulary(fixture("toy1.vocab.tsv"),
                                                 MarkingScheme::bow, 3)),
                  Error);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "wordprob/errors.hpp"
#include "wordprob/logprob.hpp"
#include "wordprob/vocabulary.hpp"

using namespace wordprob;

TEST_CASE("logsumexp of complementary halves is log 1") {
  std::vector<LogProb> terms{LogProb::from_linear(0.5), LogProb::from_linear(0.5)};
  CHECK(logsumexp(terms).value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("logsumexp of the empty list is the zero sentinel") {
  CHECK(logsumexp(std::span<const LogProb>{}).is_zero());
}

TEST_CASE("logsumexp matches direct linear summation") {
  std::vector<LogProb> terms{LogProb::from_linear(0.2), LogProb::from_linear(0.2),
                             LogProb::from_linear(0.3)};
  CHECK(std::exp(logsumexp(terms).value) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("logsumexp tracks linear sums for random lists") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 12);
    std::vector<LogProb> terms;
    double direct = 0.0;
    for (int i = 0; i < n; ++i) {
      double p = (static_cast<double>(rng() >> 11) * 0x1.0p-53) * 0.999 + 1e-4;
      direct += p;
      terms.push_back(LogProb::from_linear(p));
    }
    CHECK(std::abs(std::exp(logsumexp(terms).value) - direct) <= 1e-12 * direct);
  }
}

TEST_CASE("zero participates in sums and products") {
  LogProb zero = LogProb::zero();
  LogProb half = LogProb::from_linear(0.5);
  CHECK(log_add(zero, half) == half);
  CHECK((zero * half).is_zero());
  std::vector<LogProb> terms{zero, half, zero};
  CHECK(logsumexp(terms).value == doctest::Approx(half.value));
}

TEST_CASE("chained products of 1e4 factors keep relative precision") {
  LogProb acc = LogProb::one();
  const LogProb factor = LogProb::from_linear(0.5);
  for (int i = 0; i < 10000; ++i) acc *= factor;
  const double expected = 10000.0 * std::log(0.5);
  CHECK(std::abs(acc.value - expected) <= 1e-9 * std::abs(expected));
  CHECK(!acc.is_zero());  // ~1e-3010 in linear space: far below double range
}

TEST_CASE("Eigen logsumexp overload agrees with the list form") {
  Eigen::VectorXd v(3);
  v << std::log(0.2), std::log(0.3), std::log(0.5);
  CHECK(logsumexp(v) == doctest::Approx(0.0).epsilon(1e-12));
}

namespace {

MarkedVocabulary toy_vocab() {
  return MarkedVocabulary({{0, "_a", SubwordRole::bow},
                           {1, "_b", SubwordRole::bow},
                           {2, "c", SubwordRole::mid}},
                          MarkingScheme::bow, 3);
}

}  // namespace

TEST_CASE("well-formed bow partition validates") {
  ValidationReport report = validate_vocabulary(toy_vocab());
  CHECK(report.ok());
}

TEST_CASE("duplicate ids are flagged") {
  MarkedVocabulary vocab({{0, "_a", SubwordRole::bow}, {0, "_b", SubwordRole::bow}},
                         MarkingScheme::bow, 3);
  ValidationReport report = validate_vocabulary(vocab);
  CHECK(!report.ok());
  CHECK(report.issues[0].code == "DuplicateId");
}

TEST_CASE("empty marked set is flagged") {
  MarkedVocabulary vocab({{0, "a", SubwordRole::mid}}, MarkingScheme::bow, 3);
  ValidationReport report = validate_vocabulary(vocab);
  CHECK(!report.ok());
  bool found = false;
  for (const auto& issue : report.issues) found |= issue.code == "EmptyMarkedSet";
  CHECK(found);
}

TEST_CASE("empty surfaces and duplicate surfaces are reported") {
  MarkedVocabulary vocab({{0, "", SubwordRole::bow},
                          {1, "a", SubwordRole::bow},
                          {2, "a", SubwordRole::mid}},
                         MarkingScheme::bow, 5);
  ValidationReport report = validate_vocabulary(vocab);
  CHECK(!report.ok());
  bool empty_surface = false, dup_surface = false;
  for (const auto& issue : report.issues) {
    empty_surface |= issue.code == "EmptySurface";
    dup_surface |= issue.code == "DuplicateSurface";
  }
  CHECK(empty_surface);
  CHECK(dup_surface);
}

TEST_CASE("roles from the wrong scheme are flagged") {
  MarkedVocabulary vocab({{0, "a_", SubwordRole::eow}, {1, "_b", SubwordRole::bow}},
                         MarkingScheme::bow, 2);
  ValidationReport report = validate_vocabulary(vocab);
  CHECK(!report.ok());
}

TEST_CASE("role partition is exhaustive and disjoint with eos outside") {
  MarkedVocabulary vocab = toy_vocab();
  auto marked = vocab.marked_slots();
  auto mid = vocab.mid_slots();
  CHECK(marked.size() + mid.size() == static_cast<size_t>(vocab.size()));
  for (int slot : marked) CHECK(vocab.is_marked(slot));
  for (int slot : mid) CHECK(!vocab.is_marked(slot));
  CHECK(vocab.slot_of(vocab.eos_id()) == -1);
  CHECK(vocab.eos_slot() == vocab.size());
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "support/fixtures.hpp"
#include "wordprob/errors.hpp"
#include "wordprob/logprob.hpp"
#include "wordprob/tabular_lm.hpp"

using namespace wordprob;
using testsupport::fixture;

namespace {

TokeniserSpec toy1() {
  MarkedVocabulary vocab = load_vocabulary(fixture("toy1.vocab.tsv"), MarkingScheme::bow, 3);
  return load_tokeniser(fixture("toy1.tok.tsv"), std::move(vocab));
}

std::string write_temp(const std::string& name, const std::string& body) {
  std::string path = std::string("/tmp/") + name;
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("TOY-1 loads with four contexts and the authored rows") {
  TokeniserSpec spec = toy1();
  TabularLM lm = load_tabular(fixture("toy1.lm.tsv"), spec.vocab(), true, &spec, 1e-8, 2);
  CHECK(lm.context_count() == 4);
  CHECK(lm.order() == 2);
  CHECK(lm.vocab_size() == 3);

  const Eigen::VectorXd& root = lm.next_log_distribution(SubwordSequence{});
  CHECK(std::exp(root(0)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::exp(root(1)) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(std::exp(root(2)) == doctest::Approx(0.0));
  CHECK(std::exp(root(3)) == doctest::Approx(0.2).epsilon(1e-12));

  const Eigen::VectorXd& after_a = lm.next_log_distribution(SubwordSequence{0});
  CHECK(std::exp(after_a(0)) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(std::exp(after_a(2)) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(std::exp(after_a(3)) == doctest::Approx(0.3).epsilon(1e-12));

  // Longer contexts truncate and fall back to the longest stored suffix.
  SubwordSequence long_ctx{0, 0, 2};
  const Eigen::VectorXd& after_ac = lm.next_log_distribution(long_ctx);
  CHECK(std::exp(after_ac(0)) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(lm.context_key(long_ctx) == SubwordSequence{0, 2});
}

TEST_CASE("identical contexts give identical distributions") {
  TokeniserSpec spec = toy1();
  TabularLM lm = load_tabular(fixture("toy1.lm.tsv"), spec.vocab(), true, &spec, 1e-8, 2);
  SubwordSequence ctx{0, 2};
  const Eigen::VectorXd a = lm.next_log_distribution(ctx);
  const Eigen::VectorXd b = lm.next_log_distribution(ctx);
  CHECK(a == b);
}

TEST_CASE("rows must sum to one within tolerance") {
  std::string path = write_temp("bad_sum.lm.tsv",
                                "ε\t0\t0.5\n"
                                "ε\tEOS\t0.4\n");
  TokeniserSpec spec = toy1();
  try {
    load_tabular(path, spec.vocab(), false, nullptr, 1e-8, 1);
    FAIL("expected NotNormalised");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotNormalised);
    CHECK(std::string(e.what()).find("0.1") != std::string::npos);  // the deviation
  }
}

TEST_CASE("exact files may not give mid subwords mass at the start") {
  std::string path = write_temp("bad_support.lm.tsv",
                                "ε\t0\t0.4\n"
                                "ε\t1\t0.2\n"
                                "ε\t2\t0.2\n"
                                "ε\tEOS\t0.2\n"
                                "0\t0\t0.5\n"
                                "0\tEOS\t0.5\n"
                                "1\t0\t0.5\n"
                                "1\tEOS\t0.5\n"
                                "2\t0\t0.5\n"
                                "2\tEOS\t0.5\n");
  TokeniserSpec spec = toy1();
  try {
    load_tabular(path, spec.vocab(), true, &spec, 1e-8, 2);
    FAIL("expected SupportViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SupportViolation);
  }
}

TEST_CASE("parse errors carry line numbers") {
  std::string path = write_temp("bad_parse.lm.tsv", "ε\t0\t0.5\nε\tnope\t0.5\n");
  TokeniserSpec spec = toy1();
  try {
    load_tabular(path, spec.vocab(), false);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("reachable context keys cover exactly the valid prefixes of TOY-1") {
  TokeniserSpec spec = toy1();
  auto keys = reachable_context_keys(spec, 2);
  CHECK(keys.size() == 11);               // ε, A, B and eight two-id windows
  CHECK(keys.count(SubwordSequence{2}) == 0);     // no sequence starts mid-word
  CHECK(keys.count(SubwordSequence{2, 2}) == 0);  // c never follows c
  CHECK(keys.count(SubwordSequence{0, 2}) == 1);
}

TEST_CASE("random exact LMs validate and are deterministic in the seed") {
  TokeniserSpec spec = toy1();
  TabularLM a = random_exact_lm(0, spec, 2);
  TabularLM b = random_exact_lm(0, spec, 2);
  TabularLM c = random_exact_lm(1, spec, 2);
  CHECK(a.rows().size() == b.rows().size());
  for (const auto& [key, row] : a.rows()) {
    CHECK(b.rows().count(key) == 1);
    CHECK(row == b.rows().at(key));
    CHECK(std::abs(std::exp(logsumexp(row)) - 1.0) <= 1e-10);
  }
  bool any_differs = false;
  for (const auto& [key, row] : a.rows())
    if (c.rows().count(key) && row != c.rows().at(key)) any_differs = true;
  CHECK(any_differs);
  CHECK_NOTHROW(check_exactness(a, spec));
}

TEST_CASE("generated LMs keep eos mass at least the floor wherever a word may end") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (MarkingScheme scheme : {MarkingScheme::bow, MarkingScheme::eow}) {
      TokeniserSpec spec = testsupport::random_toy_spec(seed, scheme);
      TabularLM lm = random_exact_lm(seed, spec, 2, 0.05);
      auto keys = reachable_context_keys(spec, 2);
      for (const auto& [key, state] : keys) {
        ContextSupport support = prefix_support(spec, state);
        const double p_eos = std::exp(lm.next_log_distribution(key)(lm.eos_slot()));
        if (support.eos_allowed)
          CHECK(p_eos >= 0.05);
        else
          CHECK(p_eos == 0.0);
      }
    }
  }
}

TEST_CASE("enumerable unmapped sequences get exactly zero chain mass") {
  // Walk every id sequence up to length 6; sequences that do not decode must
  // pick up a zero factor somewhere along the chain.
  for (std::uint64_t seed : {0ULL, 5ULL, 9ULL}) {
    TokeniserSpec spec = testsupport::random_toy_spec(seed, MarkingScheme::bow);
    TabularLM lm = random_exact_lm(seed, spec, 2);
    const int V = lm.vocab_size();
    SubwordSequence ids;
    long unmapped_checked = 0;
    auto walk = [&](auto&& self) -> void {
      if (!ids.empty()) {
        bool mapped = true;
        try {
          detokenise(spec, ids);
        } catch (const Error&) {
          mapped = false;
        }
        // Chain the full-sequence probability including the eos step.
        LogProb chain = LogProb::one();
        SubwordSequence ctx;
        for (int slot : ids) {
          chain *= LogProb{lm.next_log_distribution(ctx)(slot)};
          ctx.push_back(slot);
        }
        chain *= LogProb{lm.next_log_distribution(ctx)(lm.eos_slot())};
        if (!mapped) {
          CHECK(chain.is_zero());
          ++unmapped_checked;
        }
      }
      if (ids.size() >= 6) return;
      for (int u = 0; u < V; ++u) {
        ids.push_back(u);
        self(self);
        ids.pop_back();
      }
    };
    walk(walk);
    CHECK(unmapped_checked > 0);
  }
}

TEST_CASE("total completed mass converges monotonically toward one") {
  TokeniserSpec spec = toy1();
  TabularLM lm = load_tabular(fixture("toy1.lm.tsv"), spec.vocab(), true, &spec, 1e-8, 2);
  const int V = lm.vocab_size();
  double previous = 0.0;
  for (int horizon = 1; horizon <= 24; ++horizon) {
    double total = 0.0;
    SubwordSequence ids;
    auto walk = [&](auto&& self, double mass) -> void {
      const Eigen::VectorXd& row = lm.next_log_distribution(ids);
      total += mass * std::exp(row(V));
      if (static_cast<int>(ids.size()) >= horizon) return;
      for (int u = 0; u < V; ++u) {
        const double p = std::exp(row(u));
        if (p <= 0.0) continue;
        ids.push_back(u);
        self(self, mass * p);
        ids.pop_back();
      }
    };
    walk(walk, 1.0);
    CHECK(total >= previous - 1e-15);
    previous = total;
    if (horizon == 24) CHECK(1.0 - total < std::pow(0.8, 24));
  }
}

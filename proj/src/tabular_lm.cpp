#include "wordprob/tabular_lm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <random>
#include <sstream>

#include "wordprob/errors.hpp"
#include "wordprob/logprob.hpp"

namespace wordprob {

namespace {

std::string key_to_string(const MarkedVocabulary& vocab, const SubwordSequence& key) {
  if (key.empty()) return "ε";
  std::string s;
  for (size_t i = 0; i < key.size(); ++i) {
    if (i) s.push_back(',');
    s += std::to_string(vocab.subword(key[i]).id);
  }
  return s;
}

std::string key_to_string(const SubwordSequence& key) {
  if (key.empty()) return "ε";
  std::string s;
  for (size_t i = 0; i < key.size(); ++i) {
    if (i) s.push_back(',');
    s += std::to_string(key[i]);
  }
  return s;
}

double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

TabularLM::TabularLM(std::map<SubwordSequence, Eigen::VectorXd> rows, int vocab_size,
                     int order, bool exact, double tolerance)
    : rows_(std::move(rows)), vocab_size_(vocab_size), order_(order), exact_(exact) {
  for (auto& [key, row] : rows_) {
    if (row.size() != vocab_size_ + 1)
      throw Error(ErrorCode::ParseError,
                  "row for context " + key_to_string(key) + " has wrong arity");
    const double sum = row.sum();
    if (std::abs(sum - 1.0) > tolerance)
      throw Error(ErrorCode::NotNormalised,
                  "context " + key_to_string(key) + " sums to " + std::to_string(sum) +
                      " (deviation " + std::to_string(std::abs(sum - 1.0)) + ")");
    // Move to log space and renormalise away the residual.
    row = row.array().log().matrix();
    row.array() -= logsumexp(row);
  }
}

SubwordSequence TabularLM::context_key(std::span<const int> context) const {
  const size_t n = context.size();
  const size_t keep = std::min<size_t>(n, static_cast<size_t>(order_));
  return SubwordSequence(context.end() - keep, context.end());
}

const Eigen::VectorXd& TabularLM::next_log_distribution(std::span<const int> context) const {
  SubwordSequence key = context_key(context);
  for (;;) {
    auto it = rows_.find(key);
    if (it != rows_.end()) return it->second;
    if (key.empty())
      throw Error(ErrorCode::MissingContext, "no row resolves the queried context");
    key.erase(key.begin());
  }
}

PrefixState initial_prefix_state() { return PrefixState{}; }

PrefixState advance_prefix_state(const TokeniserSpec& spec, const PrefixState& state,
                                 int slot) {
  PrefixState next = state;
  next.empty_sequence = false;
  if (spec.vocab().is_marked(slot)) {
    next.in_first_word = false;
    if (spec.scheme() == MarkingScheme::bow)
      next.segment = {slot};
    else
      next.segment.clear();
  } else {
    next.segment.push_back(slot);
  }
  return next;
}

ContextSupport prefix_support(const TokeniserSpec& spec, const PrefixState& state) {
  const MarkedVocabulary& vocab = spec.vocab();
  const SubwordSequence& seg = state.segment;
  ContextSupport support;

  auto starts_image = [&](int u) { return spec.is_image_prefix({u}); };

  // Is the open segment a complete word right now?
  bool segment_closed;
  if (spec.scheme() == MarkingScheme::bow) {
    const bool first_unmarked = state.in_first_word && !spec.mark_first_word();
    if (first_unmarked)
      segment_closed = !seg.empty() && spec.word_of_mid_image(seg).has_value();
    else
      segment_closed = !seg.empty() && spec.word_of_image(seg).has_value();

    for (int u = 0; u < vocab.size(); ++u) {
      bool ok;
      SubwordSequence ext = seg;
      ext.push_back(u);
      if (vocab.is_marked(u)) {
        ok = (seg.empty() ? !first_unmarked && state.empty_sequence : segment_closed) &&
             starts_image(u);
      } else {
        ok = first_unmarked ? spec.is_mid_image_prefix(ext) : spec.is_image_prefix(ext);
      }
      if (ok) support.slots.push_back(u);
    }
    support.eos_allowed = state.empty_sequence || segment_closed;
  } else {
    // eow: seg is the trailing mid run.
    for (int u = 0; u < vocab.size(); ++u) {
      SubwordSequence ext = seg;
      ext.push_back(u);
      bool ok;
      if (vocab.is_marked(u)) {
        ok = spec.word_of_image(ext).has_value();
      } else {
        ok = spec.is_image_prefix(ext) ||
             (!spec.mark_final_word() && spec.is_mid_image_prefix(ext));
      }
      if (ok) support.slots.push_back(u);
    }
    if (spec.mark_final_word())
      support.eos_allowed = seg.empty();
    else
      support.eos_allowed = state.empty_sequence ||
                            (!seg.empty() && spec.word_of_mid_image(seg).has_value());
  }
  return support;
}

std::map<SubwordSequence, PrefixState> reachable_context_keys(const TokeniserSpec& spec,
                                                              int order) {
  size_t max_image = 0;
  for (const auto& [w, ids] : spec.word_map()) max_image = std::max(max_image, ids.size());
  const bool uses_mid = spec.scheme() == MarkingScheme::bow ? !spec.mark_first_word()
                                                            : !spec.mark_final_word();
  if (uses_mid)
    for (const auto& [w, ids] : spec.mid_map()) max_image = std::max(max_image, ids.size());
  if (max_image > static_cast<size_t>(order))
    throw Error(ErrorCode::ConfigError,
                "image length " + std::to_string(max_image) + " exceeds Markov order " +
                    std::to_string(order) + "; validity is not a function of the context key");

  std::map<SubwordSequence, PrefixState> reached;
  std::deque<SubwordSequence> queue;
  reached.emplace(SubwordSequence{}, initial_prefix_state());
  queue.push_back({});
  while (!queue.empty()) {
    SubwordSequence key = queue.front();
    queue.pop_front();
    const PrefixState state = reached.at(key);
    ContextSupport support = prefix_support(spec, state);
    for (int u : support.slots) {
      SubwordSequence nk = key;
      nk.push_back(u);
      if (nk.size() > static_cast<size_t>(order)) nk.erase(nk.begin());
      PrefixState ns = advance_prefix_state(spec, state, u);
      auto [it, inserted] = reached.emplace(nk, ns);
      if (inserted)
        queue.push_back(nk);
      else if (!(it->second == ns))
        throw Error(ErrorCode::ConfigError,
                    "context key " + key_to_string(nk) +
                        " is reachable with two different segment states");
    }
  }
  return reached;
}

void check_exactness(const TabularLM& lm, const TokeniserSpec& spec) {
  const MarkedVocabulary& vocab = spec.vocab();
  auto keys = reachable_context_keys(spec, lm.order());
  for (const auto& [key, state] : keys) {
    const Eigen::VectorXd* row;
    try {
      row = &lm.next_log_distribution(key);
    } catch (const Error&) {
      throw Error(ErrorCode::MissingContext,
                  "reachable context " + key_to_string(vocab, key) + " has no distribution");
    }
    ContextSupport support = prefix_support(spec, state);
    std::vector<bool> allowed(vocab.size(), false);
    for (int u : support.slots) allowed[u] = true;
    for (int u = 0; u < vocab.size(); ++u) {
      if (!allowed[u] && (*row)(u) > -std::numeric_limits<double>::infinity())
        throw Error(ErrorCode::SupportViolation,
                    "context " + key_to_string(vocab, key) + " gives id " +
                        std::to_string(vocab.subword(u).id) +
                        " positive mass on an unmapped extension");
    }
    if (!support.eos_allowed &&
        (*row)(vocab.size()) > -std::numeric_limits<double>::infinity())
      throw Error(ErrorCode::SupportViolation,
                  "context " + key_to_string(vocab, key) +
                      " gives eos positive mass inside a word");
  }
}

TabularLM load_tabular(const std::filesystem::path& path, const MarkedVocabulary& vocab,
                       bool exact, const TokeniserSpec* companion, double tolerance,
                       int declared_order) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open LM file " + path.string());

  std::map<SubwordSequence, Eigen::VectorXd> rows;
  std::map<SubwordSequence, std::vector<bool>> seen;
  std::string line;
  int lineno = 0;
  size_t max_key = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    {
      std::string cur;
      for (char c : line) {
        if (c == '\t') {
          fields.push_back(cur);
          cur.clear();
        } else {
          cur.push_back(c);
        }
      }
      fields.push_back(cur);
    }
    if (fields.size() != 3)
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");

    SubwordSequence key;
    if (fields[0] != "ε" && !fields[0].empty()) {
      std::stringstream ss(fields[0]);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        int slot;
        try {
          slot = vocab.slot_of(static_cast<std::int32_t>(std::stol(tok)));
        } catch (const std::exception&) {
          slot = -1;
        }
        if (slot < 0)
          throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) +
                                                 ": unknown context id '" + tok + "'");
        key.push_back(slot);
      }
    }
    max_key = std::max(max_key, key.size());

    int symbol;
    if (fields[1] == "EOS" || fields[1] == "eos") {
      symbol = vocab.eos_slot();
    } else {
      try {
        symbol = vocab.slot_of(static_cast<std::int32_t>(std::stol(fields[1])));
      } catch (const std::exception&) {
        symbol = -1;
      }
      if (symbol < 0)
        throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) +
                                               ": unknown subword id '" + fields[1] + "'");
    }

    double p;
    try {
      p = std::stod(fields[2]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) +
                                             ": bad probability '" + fields[2] + "'");
    }
    if (p < 0.0 || p > 1.0 + 1e-12)
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) +
                                             ": probability out of range");

    auto [it, inserted] = rows.emplace(key, Eigen::VectorXd::Zero(vocab.size() + 1));
    auto [sit, sinserted] = seen.emplace(key, std::vector<bool>(vocab.size() + 1, false));
    (void)inserted;
    (void)sinserted;
    if (sit->second[symbol])
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) +
                                             ": duplicate entry for this context/symbol");
    sit->second[symbol] = true;
    it->second(symbol) = p;
  }
  if (rows.empty())
    throw Error(ErrorCode::ParseError, path.string() + ": no rows");

  int order = declared_order > 0 ? declared_order : static_cast<int>(std::max<size_t>(max_key, 1));
  if (max_key > static_cast<size_t>(order))
    throw Error(ErrorCode::ParseError, path.string() + ": context longer than declared order");

  TabularLM lm(std::move(rows), vocab.size(), order, exact, tolerance);
  if (exact && companion != nullptr) check_exactness(lm, *companion);
  return lm;
}

TabularLM random_exact_lm(std::uint64_t seed, const TokeniserSpec& spec, int order,
                          double min_eos_mass) {
  auto keys = reachable_context_keys(spec, order);
  std::mt19937_64 rng(seed);
  std::map<SubwordSequence, Eigen::VectorXd> rows;
  const int V = spec.vocab().size();
  for (const auto& [key, state] : keys) {  // sorted map: deterministic draw order
    ContextSupport support = prefix_support(spec, state);
    Eigen::VectorXd row = Eigen::VectorXd::Zero(V + 1);
    double eos_mass = 0.0;
    if (support.eos_allowed)
      eos_mass = support.slots.empty() ? 1.0 : min_eos_mass + (0.5 - min_eos_mass) * u01(rng);
    if (!support.slots.empty()) {
      double total = 0.0;
      std::vector<double> w(support.slots.size());
      for (auto& x : w) {
        x = 0.1 + 0.9 * u01(rng);
        total += x;
      }
      for (size_t i = 0; i < w.size(); ++i)
        row(support.slots[i]) = (1.0 - eos_mass) * w[i] / total;
    }
    row(V) = eos_mass;
    if (support.slots.empty() && !support.eos_allowed)
      throw Error(ErrorCode::ConfigError,
                  "context " + key_to_string(key) + " has no valid continuation");
    rows.emplace(key, std::move(row));
  }
  return TabularLM(std::move(rows), V, order, /*exact=*/true, 1e-9);
}

}  // namespace wordprob

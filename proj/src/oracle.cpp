#include "wordprob/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <tuple>

#include "wordprob/errors.hpp"

namespace wordprob::oracle {

double EnumerationBudget::residual_bound() const {
  return std::pow(1.0 - min_eos_mass, max_len);
}

void EnumerationBudget::gate() const {
  if (tolerance > 0.0 && residual_bound() >= tolerance)
    throw Error(ErrorCode::BudgetTooSmall,
                "residual bound " + std::to_string(residual_bound()) +
                    " is not below tolerance " + std::to_string(tolerance));
}

Interval interval_quotient(const Interval& num, const Interval& den) {
  if (den.hi <= 0.0)
    throw Error(ErrorCode::ZeroContextMass, "conditioning event has no mass");
  Interval out;
  out.lo = num.lo / den.hi;
  out.hi = den.lo > 0.0 ? num.hi / den.lo : std::numeric_limits<double>::infinity();
  return out;
}

Interval enumerate_event_prob(const ConditionalLM& lm, const SequencePredicate& member,
                              const EnumerationBudget& budget) {
  budget.gate();
  const int V = lm.vocab_size();
  double lo = 0.0;
  double alive = 0.0;
  SubwordSequence prefix;
  auto walk = [&](auto&& self, int depth, double mass) -> void {
    const Eigen::VectorXd& row = lm.next_log_distribution(prefix);
    const double p_eos = std::exp(row(V));
    Eigen::VectorXd linear = row.array().exp();
    if (p_eos > 0.0 && member(prefix)) lo += mass * p_eos;
    for (int u = 0; u < V; ++u) {
      const double p = linear(u);
      if (p <= 0.0) continue;
      if (depth == budget.max_len) {
        alive += mass * p;
        continue;
      }
      prefix.push_back(u);
      self(self, depth + 1, mass * p);
      prefix.pop_back();
    }
  };
  walk(walk, 0, 1.0);
  return {lo, lo + alive};
}

bool automaton_accepts(const EventAutomaton& aut, std::span<const int> ids) {
  int state = aut.start();
  for (int slot : ids) {
    if (state == EventAutomaton::kAcceptAll) return true;
    if (state == EventAutomaton::kRejectAll) return false;
    state = aut.on_symbol(state, slot);
  }
  if (state == EventAutomaton::kAcceptAll) return true;
  if (state == EventAutomaton::kRejectAll) return false;
  return aut.on_eos(state);
}

CylinderEvent CylinderEvent::any_tail(SubwordSequence prefix) {
  CylinderEvent e;
  e.prefix = std::move(prefix);
  e.tail_any = true;
  e.tail_eos = true;
  return e;
}

CylinderEvent CylinderEvent::exact(SubwordSequence prefix) {
  CylinderEvent e;
  e.prefix = std::move(prefix);
  e.tail_eos = true;
  return e;
}

CylinderEvent CylinderEvent::with_tail(SubwordSequence prefix, std::vector<int> slots,
                                       bool eos) {
  CylinderEvent e;
  e.prefix = std::move(prefix);
  e.tail_slots = std::move(slots);
  e.tail_eos = eos;
  return e;
}

bool CylinderEvent::contains(std::span<const int> ids) const {
  if (ids.size() < prefix.size()) return false;
  if (!std::equal(prefix.begin(), prefix.end(), ids.begin())) return false;
  if (ids.size() == prefix.size()) return tail_eos;
  const int next = ids[prefix.size()];
  return tail_any ||
         std::find(tail_slots.begin(), tail_slots.end(), next) != tail_slots.end();
}

namespace {

class CylinderAutomaton : public EventAutomaton {
 public:
  explicit CylinderAutomaton(CylinderEvent event) : event_(std::move(event)) {}

  int start() const override { return 0; }

  int on_symbol(int state, int slot) const override {
    const size_t pos = static_cast<size_t>(state);
    if (pos < event_.prefix.size())
      return event_.prefix[pos] == slot ? state + 1 : kRejectAll;
    // Prefix matched; the first tail symbol decides everything.
    if (event_.tail_any) return kAcceptAll;
    const auto& t = event_.tail_slots;
    return std::find(t.begin(), t.end(), slot) != t.end() ? kAcceptAll : kRejectAll;
  }

  bool on_eos(int state) const override {
    return static_cast<size_t>(state) == event_.prefix.size() && event_.tail_eos;
  }

 private:
  CylinderEvent event_;
};

class UnionAutomaton : public EventAutomaton {
 public:
  explicit UnionAutomaton(std::vector<CylinderEvent> events) {
    for (auto& e : events) parts_.push_back(CylinderAutomaton(std::move(e)));
  }

  int start() const override {
    std::vector<int> sub(parts_.size(), 0);
    for (size_t i = 0; i < parts_.size(); ++i) sub[i] = parts_[i].start();
    return resolve(sub);
  }

  int on_symbol(int state, int slot) const override {
    std::vector<int> sub = states_[state];
    bool any_live = false;
    for (size_t i = 0; i < parts_.size(); ++i) {
      if (sub[i] == kRejectAll) continue;
      sub[i] = parts_[i].on_symbol(sub[i], slot);
      if (sub[i] == kAcceptAll) return kAcceptAll;
      if (sub[i] != kRejectAll) any_live = true;
    }
    if (!any_live) return kRejectAll;
    return intern(sub);
  }

  bool on_eos(int state) const override {
    const std::vector<int>& sub = states_[state];
    for (size_t i = 0; i < parts_.size(); ++i) {
      if (sub[i] == kRejectAll) continue;
      if (sub[i] == kAcceptAll || parts_[i].on_eos(sub[i])) return true;
    }
    return false;
  }

 private:
  int resolve(const std::vector<int>& sub) const {
    bool all_reject = true;
    for (int s : sub) {
      if (s == kAcceptAll) return kAcceptAll;
      if (s != kRejectAll) all_reject = false;
    }
    if (all_reject) return kRejectAll;
    return intern(sub);
  }

  int intern(const std::vector<int>& sub) const {
    auto [it, inserted] = index_.emplace(sub, static_cast<int>(states_.size()));
    if (inserted) states_.push_back(sub);
    return it->second;
  }

  std::vector<CylinderAutomaton> parts_;
  mutable std::vector<std::vector<int>> states_;
  mutable std::map<std::vector<int>, int> index_;
};

// Symbol-by-symbol decoder matching the decoded words against a target
// prefix. Decoding follows the marking structure and the spec's map data
// directly rather than any scoring code.
class WordPrefixAutomaton : public EventAutomaton {
 public:
  WordPrefixAutomaton(const TokeniserSpec& spec, WordSequence targets)
      : spec_(&spec), targets_(std::move(targets)) {}

  int start() const override {
    if (targets_.empty()) return kAcceptAll;
    return intern({0, {}, true});
  }

  int on_symbol(int state, int slot) const override {
    State s = states_[state];
    const bool bow = spec_->scheme() == MarkingScheme::bow;
    if (bow) {
      if (spec_->vocab().is_marked(slot)) {
        if (s.seg.empty()) {
          // Very first symbol of the sequence.
          if (!spec_->mark_first_word()) return kRejectAll;
          if (!spec_->is_image_prefix({slot})) return kRejectAll;
          return intern({s.matched, {slot}, false});
        }
        return close_segment_then_start(s, slot);
      }
      SubwordSequence seg = s.seg;
      seg.push_back(slot);
      const bool first_unmarked = s.in_first && !spec_->mark_first_word();
      if (s.seg.empty() && spec_->mark_first_word()) return kRejectAll;
      const bool ok = first_unmarked ? spec_->is_mid_image_prefix(seg)
                                     : spec_->is_image_prefix(seg);
      if (!ok) return kRejectAll;
      return intern({s.matched, std::move(seg), s.in_first});
    }
    // eow
    SubwordSequence seg = s.seg;
    seg.push_back(slot);
    if (spec_->vocab().is_marked(slot)) {
      auto word = spec_->word_of_image(seg);
      if (!word) return kRejectAll;
      if (*word != targets_[s.matched]) return kRejectAll;
      if (s.matched + 1 == static_cast<int>(targets_.size())) return kAcceptAll;
      return intern({s.matched + 1, {}, false});
    }
    const bool ok = spec_->is_image_prefix(seg) ||
                    (!spec_->mark_final_word() && spec_->is_mid_image_prefix(seg));
    if (!ok) return kRejectAll;
    return intern({s.matched, std::move(seg), false});
  }

  bool on_eos(int state) const override {
    const State& s = states_[state];
    if (s.seg.empty()) return false;  // targets_ is non-empty here
    const bool bow = spec_->scheme() == MarkingScheme::bow;
    std::optional<std::string> word;
    if (bow) {
      const bool first_unmarked = s.in_first && !spec_->mark_first_word();
      word = first_unmarked ? spec_->word_of_mid_image(s.seg)
                            : spec_->word_of_image(s.seg);
    } else {
      if (spec_->mark_final_word()) return false;  // open mid run is unmapped
      word = spec_->word_of_mid_image(s.seg);
    }
    if (!word) return false;
    return s.matched + 1 == static_cast<int>(targets_.size()) &&
           *word == targets_[s.matched];
  }

 private:
  struct State {
    int matched = 0;
    SubwordSequence seg;
    bool in_first = true;

    bool operator<(const State& o) const {
      return std::tie(matched, seg, in_first) < std::tie(o.matched, o.seg, o.in_first);
    }
  };

  int close_segment_then_start(const State& s, int slot) const {
    const bool first_unmarked = s.in_first && !spec_->mark_first_word();
    auto word = first_unmarked ? spec_->word_of_mid_image(s.seg)
                               : spec_->word_of_image(s.seg);
    if (!word) return kRejectAll;
    if (*word != targets_[s.matched]) return kRejectAll;
    const int matched = s.matched + 1;
    if (matched == static_cast<int>(targets_.size())) return kAcceptAll;
    if (!spec_->is_image_prefix({slot})) return kRejectAll;
    return intern({matched, {slot}, false});
  }

  int intern(State s) const {
    auto [it, inserted] = index_.emplace(s, static_cast<int>(states_.size()));
    if (inserted) states_.push_back(std::move(s));
    return it->second;
  }

  const TokeniserSpec* spec_;
  WordSequence targets_;
  mutable std::vector<State> states_;
  mutable std::map<State, int> index_;
};

}  // namespace

std::unique_ptr<EventAutomaton> make_cylinder_automaton(const CylinderEvent& event) {
  return std::make_unique<CylinderAutomaton>(event);
}

std::unique_ptr<EventAutomaton> make_union_automaton(std::vector<CylinderEvent> events) {
  return std::make_unique<UnionAutomaton>(std::move(events));
}

std::unique_ptr<EventAutomaton> make_word_prefix_automaton(const TokeniserSpec& spec,
                                                           WordSequence targets) {
  return std::make_unique<WordPrefixAutomaton>(spec, std::move(targets));
}

std::optional<WordSequence> oracle_decode(const TokeniserSpec& spec,
                                          std::span<const int> ids) {
  WordSequence words;
  if (ids.empty()) return words;
  const MarkedVocabulary& vocab = spec.vocab();
  const bool bow = spec.scheme() == MarkingScheme::bow;

  if (bow) {
    size_t start = 0;
    if (!spec.mark_first_word()) {
      size_t end = 0;
      while (end < ids.size() && !vocab.is_marked(ids[end])) ++end;
      if (end == 0) return std::nullopt;
      auto w = spec.word_of_mid_image(SubwordSequence(ids.begin(), ids.begin() + end));
      if (!w) return std::nullopt;
      words.push_back(*w);
      start = end;
    } else if (!vocab.is_marked(ids[0])) {
      return std::nullopt;
    }
    while (start < ids.size()) {
      size_t end = start + 1;
      while (end < ids.size() && !vocab.is_marked(ids[end])) ++end;
      auto w = spec.word_of_image(SubwordSequence(ids.begin() + start, ids.begin() + end));
      if (!w) return std::nullopt;
      words.push_back(*w);
      start = end;
    }
    return words;
  }

  size_t start = 0;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (vocab.is_marked(ids[i])) {
      auto w = spec.word_of_image(SubwordSequence(ids.begin() + start, ids.begin() + i + 1));
      if (!w) return std::nullopt;
      words.push_back(*w);
      start = i + 1;
    }
  }
  if (!spec.mark_final_word()) {
    if (start == ids.size()) return std::nullopt;
    auto w = spec.word_of_mid_image(SubwordSequence(ids.begin() + start, ids.end()));
    if (!w) return std::nullopt;
    words.push_back(*w);
  } else if (start != ids.size()) {
    return std::nullopt;
  }
  return words;
}

SequencePredicate word_prefix_predicate(const TokeniserSpec& spec, WordSequence targets) {
  return [&spec, targets = std::move(targets)](std::span<const int> ids) {
    auto decoded = oracle_decode(spec, ids);
    if (!decoded) return false;
    if (decoded->size() < targets.size()) return false;
    return std::equal(targets.begin(), targets.end(), decoded->begin());
  };
}

MarkovOracle::MarkovOracle(const TabularLM& lm, int max_len)
    : lm_(&lm), max_len_(max_len) {
  const int V = lm.vocab_size();
  auto intern = [&](const SubwordSequence& key) {
    auto [it, inserted] = key_ids_.emplace(key, static_cast<int>(keys_.size()));
    if (inserted) keys_.push_back(key);
    return it->second;
  };
  intern({});
  for (size_t k = 0; k < keys_.size(); ++k) {  // keys_ grows as we go
    const SubwordSequence key = keys_[k];
    probs_.push_back(lm.next_log_distribution(key).array().exp());
    next_key_.emplace_back(V, -1);
    for (int u = 0; u < V; ++u) {
      if (probs_[k](u) <= 0.0) continue;
      SubwordSequence nk = key;
      nk.push_back(u);
      if (nk.size() > static_cast<size_t>(lm.order())) nk.erase(nk.begin());
      next_key_[k][u] = intern(nk);
    }
  }

  const int n = static_cast<int>(keys_.size());
  completed_ = Eigen::MatrixXd::Zero(n, max_len_ + 1);
  for (int k = 0; k < n; ++k) completed_(k, 0) = probs_[k](V);
  for (int s = 1; s <= max_len_; ++s) {
    for (int k = 0; k < n; ++k) {
      double acc = probs_[k](V);
      for (int u = 0; u < V; ++u) {
        if (next_key_[k][u] >= 0) acc += probs_[k](u) * completed_(next_key_[k][u], s - 1);
      }
      completed_(k, s) = acc;
    }
  }
}

Interval MarkovOracle::event_prob(const EventAutomaton& aut,
                                  const EnumerationBudget& budget) const {
  budget.gate();
  const int V = lm_->vocab_size();
  const int horizon = std::min(budget.max_len, max_len_);

  double lo = 0.0;
  double alive = 0.0;

  const int a0 = aut.start();
  if (a0 == EventAutomaton::kAcceptAll) {
    lo = completed_(0, horizon);
    return {lo, lo + (1.0 - completed_(0, horizon))};
  }
  if (a0 == EventAutomaton::kRejectAll) return {0.0, 0.0};

  std::map<std::pair<int, int>, double> front;  // (key, automaton state) -> mass
  front[{0, a0}] = 1.0;

  for (int t = 0; t <= horizon && !front.empty(); ++t) {
    std::map<std::pair<int, int>, double> next;
    for (const auto& [state, mass] : front) {
      const auto [k, a] = state;
      const Eigen::VectorXd& p = probs_[k];
      if (p(V) > 0.0 && aut.on_eos(a)) lo += mass * p(V);
      if (t == horizon) {
        alive += mass * (1.0 - p(V));
        continue;
      }
      for (int u = 0; u < V; ++u) {
        if (p(u) <= 0.0) continue;
        const int na = aut.on_symbol(a, u);
        if (na == EventAutomaton::kRejectAll) continue;
        const int nk = next_key_[k][u];
        if (na == EventAutomaton::kAcceptAll) {
          const int left = horizon - (t + 1);
          lo += mass * p(u) * completed_(nk, left);
          alive += mass * p(u) * (1.0 - completed_(nk, left));
          continue;
        }
        next[{nk, na}] += mass * p(u);
      }
    }
    front.swap(next);
  }
  return {lo, lo + alive};
}

Interval oracle_word_conditional(const MarkovOracle& oracle, const TokeniserSpec& spec,
                                 std::span<const std::string> context,
                                 const std::string& word,
                                 const EnumerationBudget& budget) {
  WordSequence num_targets(context.begin(), context.end());
  num_targets.push_back(word);
  WordSequence den_targets(context.begin(), context.end());
  Interval num =
      oracle.event_prob(*make_word_prefix_automaton(spec, std::move(num_targets)), budget);
  Interval den =
      oracle.event_prob(*make_word_prefix_automaton(spec, std::move(den_targets)), budget);
  return interval_quotient(num, den);
}

Interval unmapped_mass(const ConditionalLM& lm, const TokeniserSpec& spec,
                       const EnumerationBudget& budget) {
  return enumerate_event_prob(
      lm,
      [&spec](std::span<const int> ids) { return !oracle_decode(spec, ids).has_value(); },
      budget);
}

SetEquivalenceReport check_set_equivalence(const TokeniserSpec& spec,
                                           const WordPrefixEvent& word_event,
                                           const CylinderEvent& subword_event,
                                           const EnumerationBudget& budget) {
  SetEquivalenceReport report;
  const size_t max_len = static_cast<size_t>(budget.max_len);
  constexpr size_t kMaxCounterexamples = 5;

  const bool prefix_known =
      !word_event.empty_event &&
      std::all_of(word_event.prefix.begin(), word_event.prefix.end(),
                  [&](const std::string& w) { return spec.has_word(w); });

  // Word event -> subword event.
  if (prefix_known) {
    std::vector<std::string> lexicon = spec.lexicon();
    WordSequence ws = word_event.prefix;
    auto visit = [&](auto&& self) -> void {
      SubwordSequence ids = tokenise_sequence(spec, ws);
      if (ids.size() > max_len) return;
      ++report.words_checked;
      if (!subword_event.contains(ids)) {
        report.equivalent = false;
        if (report.word_counterexamples.size() < kMaxCounterexamples)
          report.word_counterexamples.push_back(ws);
      }
      for (const auto& w : lexicon) {
        ws.push_back(w);
        // A longer suffix only grows the image, so pruning here is safe.
        if (tokenise_sequence(spec, ws).size() <= max_len) self(self);
        ws.pop_back();
      }
    };
    visit(visit);
  }

  // Subword event -> word event (over mapped sequences only).
  auto in_word_event = [&](const WordSequence& decoded) {
    if (word_event.empty_event) return false;
    if (decoded.size() < word_event.prefix.size()) return false;
    return std::equal(word_event.prefix.begin(), word_event.prefix.end(), decoded.begin());
  };
  auto check_member = [&](const SubwordSequence& ids) {
    ++report.subwords_checked;
    auto decoded = oracle_decode(spec, ids);
    if (!decoded) return;  // unmapped members carry no probability
    if (!in_word_event(*decoded)) {
      report.equivalent = false;
      if (report.subword_counterexamples.size() < kMaxCounterexamples)
        report.subword_counterexamples.push_back(ids);
    }
  };

  if (subword_event.prefix.size() <= max_len) {
    if (subword_event.tail_eos) check_member(subword_event.prefix);
    std::vector<int> firsts;
    if (subword_event.tail_any) {
      for (int u = 0; u < spec.vocab().size(); ++u) firsts.push_back(u);
    } else {
      firsts = subword_event.tail_slots;
    }
    SubwordSequence ids = subword_event.prefix;
    auto extend = [&](auto&& self) -> void {
      check_member(ids);
      if (ids.size() >= max_len) return;
      for (int u = 0; u < spec.vocab().size(); ++u) {
        ids.push_back(u);
        self(self);
        ids.pop_back();
      }
    };
    for (int u : firsts) {
      if (ids.size() + 1 > max_len) break;
      ids.push_back(u);
      extend(extend);
      ids.pop_back();
    }
  }
  return report;
}

}  // namespace wordprob::oracle

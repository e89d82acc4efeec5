#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "wordprob/tabular_lm.hpp"
#include "wordprob/tokeniser.hpp"

namespace wordprob::oracle {

// Enumeration horizon. residual_bound() is the a-priori tail estimate used to
// gate comparisons; the intervals themselves carry the exact mass still alive
// at the horizon, which is what makes them sound.
struct EnumerationBudget {
  int max_len = 2000;
  double min_eos_mass = 0.05;
  double tolerance = 0.0;  // gate: residual_bound() must stay below it (0 = off)

  double residual_bound() const;
  void gate() const;  // throws BudgetTooSmall when the bound misses tolerance
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  double midpoint() const { return 0.5 * (lo + hi); }
  bool contains(double x, double tol = 0.0) const {
    return x >= lo - tol && x <= hi + tol;
  }
};

// Quotient with outward rounding; [0,0] denominators raise ZeroContextMass.
Interval interval_quotient(const Interval& num, const Interval& den);

// Membership of a complete subword sequence in an event.
using SequencePredicate = std::function<bool(std::span<const int>)>;

// Depth-first enumeration over the LM's support: lo sums the in-event
// sequences completing within max_len symbols, hi adds the mass still alive.
Interval enumerate_event_prob(const ConditionalLM& lm, const SequencePredicate& member,
                              const EnumerationBudget& budget);

// Incremental event recogniser over subword symbols. on_symbol may resolve a
// prefix for good: kAcceptAll means every completion is in the event (valid
// for exact LMs, whose unmapped extensions carry no mass), kRejectAll none.
class EventAutomaton {
 public:
  static constexpr int kAcceptAll = -1;
  static constexpr int kRejectAll = -2;

  virtual ~EventAutomaton() = default;
  virtual int start() const = 0;
  virtual int on_symbol(int state, int slot) const = 0;
  virtual bool on_eos(int state) const = 0;
};

bool automaton_accepts(const EventAutomaton& aut, std::span<const int> ids);

// Cylinder event: prefix ∘ admissible-tail. tail_eos admits the bare prefix
// as a complete sequence; tail_any admits every continuation symbol.
struct CylinderEvent {
  SubwordSequence prefix;
  std::vector<int> tail_slots;
  bool tail_eos = false;
  bool tail_any = false;

  static CylinderEvent any_tail(SubwordSequence prefix);                  // prefix ∘ V*
  static CylinderEvent exact(SubwordSequence prefix);                     // {prefix}
  static CylinderEvent with_tail(SubwordSequence prefix, std::vector<int> slots,
                                 bool eos);
  bool contains(std::span<const int> ids) const;
};

std::unique_ptr<EventAutomaton> make_cylinder_automaton(const CylinderEvent& event);
std::unique_ptr<EventAutomaton> make_union_automaton(std::vector<CylinderEvent> events);

// Recogniser of "the decoded word sequence extends `targets`", with the
// decoding done symbol by symbol from the tokeniser's map data. This is the
// oracle's own decoder; it shares no code with the scoring formulas.
std::unique_ptr<EventAutomaton> make_word_prefix_automaton(const TokeniserSpec& spec,
                                                           WordSequence targets);

// Oracle-side decoder used for predicates and set checks.
std::optional<WordSequence> oracle_decode(const TokeniserSpec& spec,
                                          std::span<const int> ids);
SequencePredicate word_prefix_predicate(const TokeniserSpec& spec, WordSequence targets);

// Event evaluation by recursion over (context key, recogniser state) pairs.
// Exact per-step arithmetic; the interval width is the mass alive at the
// horizon. Build once per LM and reuse across events.
class MarkovOracle {
 public:
  explicit MarkovOracle(const TabularLM& lm, int max_len = 2000);

  Interval event_prob(const EventAutomaton& aut, const EnumerationBudget& budget) const;
  const TabularLM& lm() const { return *lm_; }

 private:
  int key_index(const SubwordSequence& key);
  const TabularLM* lm_;
  int max_len_;
  std::vector<SubwordSequence> keys_;
  std::map<SubwordSequence, int> key_ids_;
  std::vector<Eigen::VectorXd> probs_;        // linear rows per key
  std::vector<std::vector<int>> next_key_;    // [key][slot] -> key, -1 off support
  Eigen::MatrixXd completed_;                 // [key](s): completion mass within s steps
};

// Eq.-3 quotient for a word in context, evaluated through the decoder
// automata. ZeroContextMass when the context event carries no mass.
Interval oracle_word_conditional(const MarkovOracle& oracle, const TokeniserSpec& spec,
                                 std::span<const std::string> context,
                                 const std::string& word, const EnumerationBudget& budget);

// Probability mass on unmapped subword sequences (≈0 for exact LMs).
Interval unmapped_mass(const ConditionalLM& lm, const TokeniserSpec& spec,
                       const EnumerationBudget& budget);

// Word-prefix event for the set-equivalence check.
struct WordPrefixEvent {
  WordSequence prefix;
  bool empty_event = false;  // the event with no members
};

struct SetEquivalenceReport {
  bool equivalent = true;
  long words_checked = 0;
  long subwords_checked = 0;
  // Word sequences in the word event whose image leaves the subword event.
  std::vector<WordSequence> word_counterexamples;
  // Mapped members of the subword event whose decoding leaves the word event.
  std::vector<SubwordSequence> subword_counterexamples;
};

// Exhaustive two-direction membership check up to budget.max_len subwords.
SetEquivalenceReport check_set_equivalence(const TokeniserSpec& spec,
                                           const WordPrefixEvent& word_event,
                                           const CylinderEvent& subword_event,
                                           const EnumerationBudget& budget);

}  // namespace wordprob::oracle

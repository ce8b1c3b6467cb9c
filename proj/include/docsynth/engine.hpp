#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "docsynth/facts.hpp"
#include "docsynth/term.hpp"

namespace docsynth {

// Variable store with a trail, used during SLD resolution.
class Bindings {
 public:
  explicit Bindings(int initial = 0) : slots_(initial) {}

  // Reserves n fresh variables and returns the id of the first one.
  int fresh(int n);
  int size() const { return static_cast<int>(slots_.size()); }

  // Dereferences a variable chain (shallow).
  Term walk(const Term& t) const;
  // Applies all bindings recursively.
  Term resolve(const Term& t) const;
  Atom resolve(const Atom& a) const;

  // Unification with occurs check. On failure some bindings may remain;
  // callers undo to a mark.
  bool unify(const Term& a, const Term& b);

  std::size_t mark() const { return trail_.size(); }
  void undo(std::size_t mark);

 private:
  bool occurs(int var, const Term& t) const;
  void bind(int var, const Term& t);

  std::vector<std::optional<Term>> slots_;
  std::vector<int> trail_;
};

// Intensional clauses indexed by predicate/arity. Clauses must be range
// restricted: every head variable occurs in the body.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  explicit KnowledgeBase(std::vector<Clause> clauses);

  // Throws LogicError for clauses that are not range restricted.
  void add(Clause c);
  const std::vector<Clause>* find(std::string_view predicate, std::size_t arity) const;
  const std::vector<Clause>& clauses() const { return all_; }

 private:
  std::vector<Clause> all_;
  std::map<std::pair<std::string, std::size_t>, std::vector<Clause>, std::less<>> by_key_;
};

bool is_range_restricted(const Clause& c);

// ---------------------------------------------------------------------------
// Transition system. A transition is a predicate
//     name(Slot_1, ..., Slot_k, ConfigIn, ConfigOut)
// whose slots are constants learned during synthesis (a keyword, a datatype
// tag, a proximity index). Configurations are lists such as [Doc],
// [Doc,Line,Word], [Doc,line(L)], [Doc,block(B)], or the final [Value].

enum class SlotKind {
  Keyword,       // text of a <word>-typed token in the document
  Delimiter,     // keyword or a line/block boundary sentinel
  DataTypeTag,   // e.g. '<date>'
  DelimiterType, // datatype tag or a boundary sentinel
  Index,         // non-negative integer
};

enum class TransitionRole { Anchor, Navigate, Terminal };

struct TransitionDef {
  std::string name;
  std::vector<SlotKind> slots;
  TransitionRole role = TransitionRole::Navigate;
  // Plain-language reading. {0}.. are slot values, {in} and {out} the
  // configuration variable names.
  std::string interpretation;

  bool terminal() const { return role == TransitionRole::Terminal; }
  std::size_t arity() const { return slots.size() + 2; }
};

struct TransitionSystem {
  KnowledgeBase rules;
  std::vector<TransitionDef> transitions;  // enumeration priority order
  std::string source_text;                 // rules text it was loaded from

  const TransitionDef* find(std::string_view name) const;
};

// Slot values must be admissible for the document before a transition
// instance may appear in a proof.
bool slots_admissible(const TransitionDef& def, std::span<const Term> slot_values,
                      const DocumentFacts& facts);

// ---------------------------------------------------------------------------
// SLD resolution.

struct SolveOptions {
  std::size_t max_solutions = 10000;
};

struct SolveResult {
  // Bindings for the goal variables (ids 0..n-1 of the goal list), one per
  // distinct solution up to variable renaming, in SLD order.
  std::vector<Substitution> solutions;
  bool truncated = false;  // max_solutions reached
};

// Resolves goals against program clauses and the document's primitive
// relations. A goal ts(Ci, Cf) is proved by the depth-bounded transition
// system: at most `depth` transitions, a terminal transition only in last
// position, slot values admissible. Unknown predicates throw LogicError.
SolveResult solve(const std::vector<Atom>& goals, const KnowledgeBase& program,
                  const DocumentFacts& facts, int depth,
                  const TransitionSystem* system = nullptr, SolveOptions options = {});

// Low-level engine used by solve, the meta-interpreter and program runs.
class Solver {
 public:
  Solver(const KnowledgeBase& program, const DocumentFacts& facts,
         const TransitionSystem* system = nullptr);

  // Runs goals whose variables are ids below bindings.size(). on_solution
  // returns false to stop the search. Returns false if stopped.
  bool run(const std::vector<Atom>& goals, Bindings& bindings, int ts_depth,
           const std::function<bool(Bindings&)>& on_solution);

 private:
  struct Goal;
  using GoalList = std::shared_ptr<const Goal>;

  bool step(const GoalList& goals, Bindings& b, const std::function<bool(Bindings&)>& k);
  bool call_relation(const Relation& rel, const Atom& goal, const GoalList& rest, Bindings& b,
                     const std::function<bool(Bindings&)>& k);
  bool call_clauses(const std::vector<Clause>& clauses, const Atom& goal, const GoalList& rest,
                    Bindings& b, const std::function<bool(Bindings&)>& k);
  bool call_ts(const Goal& g, const GoalList& rest, Bindings& b,
               const std::function<bool(Bindings&)>& k);

  const KnowledgeBase& program_;
  const DocumentFacts& facts_;
  const TransitionSystem* system_;
};

// ---------------------------------------------------------------------------
// Meta-interpretation: proofs of ts((input, output)) with their trace.

struct ProofTrace {
  std::vector<Atom> steps;  // ground transition literals t_1..t_k
  int depth_used = 0;
  Term final_config;
};

struct MetaOptions {
  std::size_t max_traces = 10000;
};

struct MetaResult {
  std::vector<ProofTrace> traces;
  bool truncated = false;
};

// Every proof of output from input using at most depth transitions, in the
// order the depth-bounded interpreter finds them. Proofs that revisit a
// configuration are skipped (a shorter proof without the loop exists).
// Successor sets are tabled per configuration; a configuration is expanded
// only if the output is still reachable from it within the remaining depth.
MetaResult meta_prove(const Term& input, const Term& output, const TransitionSystem& system,
                      const DocumentFacts& facts, int depth, MetaOptions options = {});

// One transition instance applied to a configuration.
struct TransitionStep {
  Atom literal;  // ground transition literal
  Term next;     // output configuration
};

// All admissible groundings of def's slots from config, in SLD order.
std::vector<TransitionStep> enumerate_instantiations(const TransitionDef& def,
                                                     const TransitionSystem& system,
                                                     const DocumentFacts& facts,
                                                     const Term& config);

// Replaces remaining variables by constants sk_0, sk_1, ... in order of
// first occurrence across the steps.
void skolemize(std::vector<Atom>& steps);

// True iff some substitution maps h's head onto g's head and every body
// literal of h onto a body literal of g.
bool theta_subsumes(const Clause& h, const Clause& g);

}  // namespace docsynth

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace docsynth {

// Immutable first-order term. Copies share structure.
//
// Kinds:
//   Var       numbered logic variable (numbering is per clause or per solve)
//   Symbol    atomic constant, e.g. 'Please' or word
//   Int       integer constant (ids, proximity and occurrence indices)
//   Compound  functor(args...)
//   List      proper list [a, b, c]
class Term {
 public:
  enum class Kind : std::uint8_t { Var, Symbol, Int, Compound, List };

  Term();  // the symbol '[]'-free empty list

  static Term var(int id);
  static Term symbol(std::string text);
  static Term integer(std::int64_t value);
  static Term compound(std::string functor, std::vector<Term> args);
  static Term list(std::vector<Term> elements);

  Kind kind() const;
  bool is_var() const { return kind() == Kind::Var; }
  bool is_symbol() const { return kind() == Kind::Symbol; }
  bool is_int() const { return kind() == Kind::Int; }
  bool is_compound() const { return kind() == Kind::Compound; }
  bool is_list() const { return kind() == Kind::List; }
  bool is_atomic() const { return is_symbol() || is_int(); }

  int var_id() const;
  // Symbol text or compound functor.
  const std::string& name() const;
  std::int64_t int_value() const;
  // Compound arguments or list elements.
  std::span<const Term> args() const;

  bool is_ground() const;
  std::size_t hash() const;
  // Largest variable id occurring in the term, or -1.
  int max_var() const;

  friend bool operator==(const Term& a, const Term& b);
  friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }
  // Total order used for deterministic sorting; not the Prolog standard order.
  friend bool operator<(const Term& a, const Term& b);

 private:
  struct Node;
  explicit Term(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct TermHash {
  std::size_t operator()(const Term& t) const { return t.hash(); }
};

// predicate(args...)
struct Atom {
  std::string predicate;
  std::vector<Term> args;

  std::size_t arity() const { return args.size(); }
  bool is_ground() const;
  int max_var() const;

  friend bool operator==(const Atom&, const Atom&) = default;
};

// head :- body. Variables are numbered 0..var_count()-1; var_names holds
// their display names (same index).
struct Clause {
  Atom head;
  std::vector<Atom> body;
  std::vector<std::string> var_names;

  bool is_fact() const { return body.empty(); }
  int var_count() const { return static_cast<int>(var_names.size()); }

  friend bool operator==(const Clause& a, const Clause& b) {
    return a.head == b.head && a.body == b.body;
  }
};

// Finite map Variable -> Term, kept fully resolved (idempotent).
class Substitution {
 public:
  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }
  const std::map<int, Term>& bindings() const { return map_; }
  std::optional<Term> lookup(int var) const;

  Term apply(const Term& t) const;
  Atom apply(const Atom& a) const;

  // Adds var -> value and re-resolves existing bindings. The caller
  // guarantees value does not contain var.
  void bind(int var, const Term& value);

  friend bool operator==(const Substitution&, const Substitution&) = default;

 private:
  std::map<int, Term> map_;
};

// Most general unifier with occurs check, or nullopt.
std::optional<Substitution> unify(const Term& a, const Term& b);
std::optional<Substitution> unify(const Atom& a, const Atom& b);

// Shifts every variable id by offset.
Term rename(const Term& t, int offset);
Atom rename(const Atom& a, int offset);

}  // namespace docsynth

template <>
struct std::hash<docsynth::Term> {
  std::size_t operator()(const docsynth::Term& t) const { return t.hash(); }
};

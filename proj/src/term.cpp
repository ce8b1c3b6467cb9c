#include "docsynth/term.hpp"

#include <algorithm>
#include <cassert>

namespace docsynth {

struct Term::Node {
  Kind kind;
  int var = -1;
  std::int64_t value = 0;
  std::string text;
  std::vector<Term> children;
  std::size_t hash = 0;
  bool ground = true;
  int max_var = -1;
};

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

}  // namespace

Term::Term() : Term(list({})) {}

Term Term::var(int id) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Var;
  n->var = id;
  n->hash = mix(1, static_cast<std::size_t>(id));
  n->ground = false;
  n->max_var = id;
  return Term(std::move(n));
}

Term Term::symbol(std::string text) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Symbol;
  n->hash = mix(2, std::hash<std::string>{}(text));
  n->text = std::move(text);
  return Term(std::move(n));
}

Term Term::integer(std::int64_t value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Int;
  n->value = value;
  n->hash = mix(3, std::hash<std::int64_t>{}(value));
  return Term(std::move(n));
}

Term Term::compound(std::string functor, std::vector<Term> args) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Compound;
  std::size_t h = mix(4, std::hash<std::string>{}(functor));
  for (const auto& a : args) {
    h = mix(h, a.hash());
    n->ground = n->ground && a.is_ground();
    n->max_var = std::max(n->max_var, a.max_var());
  }
  n->hash = h;
  n->text = std::move(functor);
  n->children = std::move(args);
  return Term(std::move(n));
}

Term Term::list(std::vector<Term> elements) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::List;
  std::size_t h = 5;
  for (const auto& a : elements) {
    h = mix(h, a.hash());
    n->ground = n->ground && a.is_ground();
    n->max_var = std::max(n->max_var, a.max_var());
  }
  n->hash = h;
  n->children = std::move(elements);
  return Term(std::move(n));
}

Term::Kind Term::kind() const { return node_->kind; }
int Term::var_id() const { return node_->var; }
const std::string& Term::name() const { return node_->text; }
std::int64_t Term::int_value() const { return node_->value; }
std::span<const Term> Term::args() const { return node_->children; }
bool Term::is_ground() const { return node_->ground; }
std::size_t Term::hash() const { return node_->hash; }
int Term::max_var() const { return node_->max_var; }

bool operator==(const Term& a, const Term& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.hash != y.hash || x.kind != y.kind) return false;
  switch (x.kind) {
    case Term::Kind::Var:
      return x.var == y.var;
    case Term::Kind::Symbol:
      return x.text == y.text;
    case Term::Kind::Int:
      return x.value == y.value;
    case Term::Kind::Compound:
      if (x.text != y.text) return false;
      [[fallthrough]];
    case Term::Kind::List:
      return x.children == y.children;
  }
  return false;
}

bool operator<(const Term& a, const Term& b) {
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.kind != y.kind) return x.kind < y.kind;
  switch (x.kind) {
    case Term::Kind::Var:
      return x.var < y.var;
    case Term::Kind::Symbol:
      return x.text < y.text;
    case Term::Kind::Int:
      return x.value < y.value;
    case Term::Kind::Compound:
      if (x.text != y.text) return x.text < y.text;
      [[fallthrough]];
    case Term::Kind::List:
      return std::lexicographical_compare(x.children.begin(), x.children.end(),
                                          y.children.begin(), y.children.end());
  }
  return false;
}

bool Atom::is_ground() const {
  return std::all_of(args.begin(), args.end(),
                     [](const Term& t) { return t.is_ground(); });
}

int Atom::max_var() const {
  int m = -1;
  for (const auto& a : args) m = std::max(m, a.max_var());
  return m;
}

std::optional<Term> Substitution::lookup(int var) const {
  auto it = map_.find(var);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

Term Substitution::apply(const Term& t) const {
  if (t.is_ground() || map_.empty()) return t;
  switch (t.kind()) {
    case Term::Kind::Var: {
      auto it = map_.find(t.var_id());
      return it == map_.end() ? t : it->second;
    }
    case Term::Kind::Compound:
    case Term::Kind::List: {
      std::vector<Term> out;
      out.reserve(t.args().size());
      for (const auto& a : t.args()) out.push_back(apply(a));
      return t.is_list() ? Term::list(std::move(out))
                         : Term::compound(t.name(), std::move(out));
    }
    default:
      return t;
  }
}

Atom Substitution::apply(const Atom& a) const {
  Atom out{a.predicate, {}};
  out.args.reserve(a.args.size());
  for (const auto& t : a.args) out.args.push_back(apply(t));
  return out;
}

void Substitution::bind(int var, const Term& value) {
  Substitution single;
  single.map_.emplace(var, value);
  for (auto& [k, v] : map_) v = single.apply(v);
  map_.insert_or_assign(var, value);
}

namespace {

bool occurs(int var, const Term& t, const Substitution& s) {
  if (t.is_ground()) return false;
  if (t.is_var()) {
    if (t.var_id() == var) return true;
    auto b = s.lookup(t.var_id());
    return b && occurs(var, *b, s);
  }
  for (const auto& a : t.args())
    if (occurs(var, a, s)) return true;
  return false;
}

bool unify_into(const Term& a0, const Term& b0, Substitution& s) {
  Term a = s.apply(a0);
  Term b = s.apply(b0);
  if (a == b) return true;
  if (a.is_var()) {
    if (occurs(a.var_id(), b, s)) return false;
    s.bind(a.var_id(), b);
    return true;
  }
  if (b.is_var()) return unify_into(b, a, s);
  if (a.kind() != b.kind()) return false;
  if (a.is_compound() && a.name() != b.name()) return false;
  if (!a.is_compound() && !a.is_list()) return false;  // distinct constants
  if (a.args().size() != b.args().size()) return false;
  for (std::size_t i = 0; i < a.args().size(); ++i)
    if (!unify_into(a.args()[i], b.args()[i], s)) return false;
  return true;
}

}  // namespace

std::optional<Substitution> unify(const Term& a, const Term& b) {
  Substitution s;
  if (!unify_into(a, b, s)) return std::nullopt;
  return s;
}

std::optional<Substitution> unify(const Atom& a, const Atom& b) {
  if (a.predicate != b.predicate || a.arity() != b.arity()) return std::nullopt;
  Substitution s;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!unify_into(a.args[i], b.args[i], s)) return std::nullopt;
  return s;
}

Term rename(const Term& t, int offset) {
  if (t.is_ground() || offset == 0) return t;
  if (t.is_var()) return Term::var(t.var_id() + offset);
  std::vector<Term> out;
  out.reserve(t.args().size());
  for (const auto& a : t.args()) out.push_back(rename(a, offset));
  return t.is_list() ? Term::list(std::move(out))
                     : Term::compound(t.name(), std::move(out));
}

Atom rename(const Atom& a, int offset) {
  Atom out{a.predicate, {}};
  out.args.reserve(a.args.size());
  for (const auto& t : a.args) out.args.push_back(rename(t, offset));
  return out;
}

}  // namespace docsynth

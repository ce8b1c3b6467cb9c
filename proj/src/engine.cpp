#include "docsynth/engine.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "docsynth/error.hpp"
#include "docsynth/syntax.hpp"

namespace docsynth {

// ---------------------------------------------------------------------------
// Bindings

int Bindings::fresh(int n) {
  int first = size();
  slots_.resize(slots_.size() + n);
  return first;
}

Term Bindings::walk(const Term& t) const {
  Term cur = t;
  while (cur.is_var()) {
    int id = cur.var_id();
    if (id < 0 || id >= size() || !slots_[id]) break;
    cur = *slots_[id];
  }
  return cur;
}

Term Bindings::resolve(const Term& t) const {
  if (t.is_ground()) return t;
  Term w = walk(t);
  if (w.is_var() || w.is_ground()) return w;
  std::vector<Term> out;
  out.reserve(w.args().size());
  for (const auto& a : w.args()) out.push_back(resolve(a));
  return w.is_list() ? Term::list(std::move(out)) : Term::compound(w.name(), std::move(out));
}

Atom Bindings::resolve(const Atom& a) const {
  Atom out{a.predicate, {}};
  out.args.reserve(a.args.size());
  for (const auto& t : a.args) out.args.push_back(resolve(t));
  return out;
}

bool Bindings::occurs(int var, const Term& t) const {
  if (t.is_ground()) return false;
  Term w = walk(t);
  if (w.is_var()) return w.var_id() == var;
  for (const auto& a : w.args())
    if (occurs(var, a)) return true;
  return false;
}

void Bindings::bind(int var, const Term& t) {
  slots_[var] = t;
  trail_.push_back(var);
}

bool Bindings::unify(const Term& a0, const Term& b0) {
  Term a = walk(a0);
  Term b = walk(b0);
  if (a.is_var() && b.is_var() && a.var_id() == b.var_id()) return true;
  if (a.is_var()) {
    if (occurs(a.var_id(), b)) return false;
    bind(a.var_id(), b);
    return true;
  }
  if (b.is_var()) {
    if (occurs(b.var_id(), a)) return false;
    bind(b.var_id(), a);
    return true;
  }
  if (a.is_ground() && b.is_ground()) return a == b;
  if (a.kind() != b.kind()) return false;
  if (a.is_compound() && a.name() != b.name()) return false;
  if (!a.is_compound() && !a.is_list()) return a == b;
  if (a.args().size() != b.args().size()) return false;
  for (std::size_t i = 0; i < a.args().size(); ++i)
    if (!unify(a.args()[i], b.args()[i])) return false;
  return true;
}

void Bindings::undo(std::size_t mark) {
  while (trail_.size() > mark) {
    slots_[trail_.back()].reset();
    trail_.pop_back();
  }
}

// ---------------------------------------------------------------------------
// KnowledgeBase

namespace {

void collect_vars(const Term& t, std::set<int>& out) {
  if (t.is_ground()) return;
  if (t.is_var()) {
    out.insert(t.var_id());
    return;
  }
  for (const auto& a : t.args()) collect_vars(a, out);
}

}  // namespace

bool is_range_restricted(const Clause& c) {
  std::set<int> head, body;
  for (const auto& a : c.head.args) collect_vars(a, head);
  for (const auto& lit : c.body)
    for (const auto& a : lit.args) collect_vars(a, body);
  return std::includes(body.begin(), body.end(), head.begin(), head.end());
}

KnowledgeBase::KnowledgeBase(std::vector<Clause> clauses) {
  for (auto& c : clauses) add(std::move(c));
}

void KnowledgeBase::add(Clause c) {
  if (!is_range_restricted(c))
    throw LogicError("clause is not range restricted: " + to_string(c));
  by_key_[{c.head.predicate, c.head.arity()}].push_back(c);
  all_.push_back(std::move(c));
}

const std::vector<Clause>* KnowledgeBase::find(std::string_view predicate,
                                               std::size_t arity) const {
  auto it = by_key_.find(std::make_pair(std::string(predicate), arity));
  return it == by_key_.end() ? nullptr : &it->second;
}

const TransitionDef* TransitionSystem::find(std::string_view name) const {
  for (const auto& t : transitions)
    if (t.name == name) return &t;
  return nullptr;
}

bool slots_admissible(const TransitionDef& def, std::span<const Term> slot_values,
                      const DocumentFacts& facts) {
  if (slot_values.size() != def.slots.size()) return false;
  for (std::size_t i = 0; i < def.slots.size(); ++i) {
    const Term& v = slot_values[i];
    switch (def.slots[i]) {
      case SlotKind::Keyword:
        if (!v.is_symbol() || !facts.is_keyword_candidate(v.name())) return false;
        break;
      case SlotKind::Delimiter:
        if (!v.is_symbol()) return false;
        if (v.name() != kLineStart && v.name() != kLineEnd && !facts.is_keyword_candidate(v.name()))
          return false;
        break;
      case SlotKind::DataTypeTag:
        if (!v.is_symbol() || !datatype_from_tag(v.name())) return false;
        break;
      case SlotKind::DelimiterType:
        if (!v.is_symbol()) return false;
        if (v.name() != kLineStart && v.name() != kLineEnd && !datatype_from_tag(v.name()))
          return false;
        break;
      case SlotKind::Index:
        if (!v.is_int() || v.int_value() < 0) return false;
        break;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Solver

struct Solver::Goal {
  enum class Kind { Call, Ts, Check };
  Kind kind = Kind::Call;
  Atom atom;
  int budget = 0;
  int state = 0;  // Ts: 0 before any step, 1 after a navigation, 2 after a terminal
  const TransitionDef* def = nullptr;
  GoalList next;
};

Solver::Solver(const KnowledgeBase& program, const DocumentFacts& facts,
               const TransitionSystem* system)
    : program_(program), facts_(facts), system_(system) {}

bool Solver::run(const std::vector<Atom>& goals, Bindings& bindings, int ts_depth,
                 const std::function<bool(Bindings&)>& on_solution) {
  GoalList list;
  for (auto it = goals.rbegin(); it != goals.rend(); ++it) {
    auto g = std::make_shared<Goal>();
    g->atom = *it;
    if (system_ && it->predicate == "ts" && it->arity() == 2) {
      g->kind = Goal::Kind::Ts;
      g->budget = ts_depth;
    }
    g->next = list;
    list = std::move(g);
  }
  return step(list, bindings, on_solution);
}

bool Solver::step(const GoalList& goals, Bindings& b, const std::function<bool(Bindings&)>& k) {
  if (!goals) return k(b);
  const Goal& g = *goals;
  switch (g.kind) {
    case Goal::Kind::Ts:
      return call_ts(g, goals->next, b, k);
    case Goal::Kind::Check: {
      std::vector<Term> slots;
      for (std::size_t i = 0; i < g.def->slots.size(); ++i) slots.push_back(b.resolve(g.atom.args[i]));
      if (!slots_admissible(*g.def, slots, facts_)) return true;
      return step(goals->next, b, k);
    }
    case Goal::Kind::Call:
      break;
  }
  const Atom& atom = g.atom;
  if (const Relation* rel = facts_.relation(atom.predicate)) {
    if (rel->arity() != atom.arity())
      throw LogicError("relation " + atom.predicate + " has arity " +
                       std::to_string(rel->arity()) + ", called with " +
                       std::to_string(atom.arity()));
    return call_relation(*rel, atom, goals->next, b, k);
  }
  if (const auto* clauses = program_.find(atom.predicate, atom.arity()))
    return call_clauses(*clauses, atom, goals->next, b, k);
  throw LogicError("unknown predicate " + atom.predicate + "/" + std::to_string(atom.arity()));
}

bool Solver::call_relation(const Relation& rel, const Atom& goal, const GoalList& rest,
                           Bindings& b, const std::function<bool(Bindings&)>& k) {
  std::vector<Term> args;
  args.reserve(goal.args.size());
  for (const auto& a : goal.args) args.push_back(b.resolve(a));

  std::span<const std::uint32_t> best;
  bool indexed = false;
  for (std::size_t c = 0; c < args.size(); ++c) {
    if (!args[c].is_ground()) continue;
    auto p = rel.postings(c, args[c]);
    if (!indexed || p.size() < best.size()) {
      best = p;
      indexed = true;
    }
    if (best.empty()) return true;
  }

  auto try_row = [&](std::size_t r) {
    const auto& row = rel.row(r);
    auto m = b.mark();
    bool ok = true;
    for (std::size_t c = 0; c < args.size() && ok; ++c)
      ok = args[c].is_ground() ? args[c] == row[c] : b.unify(args[c], row[c]);
    bool cont = true;
    if (ok) cont = step(rest, b, k);
    b.undo(m);
    return cont;
  };

  if (indexed) {
    for (auto r : best)
      if (!try_row(r)) return false;
  } else {
    for (std::size_t r = 0; r < rel.size(); ++r)
      if (!try_row(r)) return false;
  }
  return true;
}

bool Solver::call_clauses(const std::vector<Clause>& clauses, const Atom& goal,
                          const GoalList& rest, Bindings& b,
                          const std::function<bool(Bindings&)>& k) {
  for (const auto& c : clauses) {
    int offset = b.fresh(c.var_count());
    auto m = b.mark();
    bool ok = true;
    for (std::size_t i = 0; i < goal.args.size() && ok; ++i)
      ok = b.unify(goal.args[i], rename(c.head.args[i], offset));
    bool cont = true;
    if (ok) {
      GoalList list = rest;
      for (auto it = c.body.rbegin(); it != c.body.rend(); ++it) {
        auto g = std::make_shared<Goal>();
        g->atom = rename(*it, offset);
        g->next = list;
        list = std::move(g);
      }
      cont = step(list, b, k);
    }
    b.undo(m);
    if (!cont) return false;
  }
  return true;
}

bool Solver::call_ts(const Goal& g, const GoalList& rest, Bindings& b,
                     const std::function<bool(Bindings&)>& k) {
  const Term& from = g.atom.args[0];
  const Term& to = g.atom.args[1];
  if (g.state != 1) {
    auto m = b.mark();
    bool cont = true;
    if (b.unify(from, to)) cont = step(rest, b, k);
    b.undo(m);
    if (!cont) return false;
  }
  if (g.state == 2 || g.budget < 1) return true;
  for (const auto& def : system_->transitions) {
    const int k_slots = static_cast<int>(def.slots.size());
    int base = b.fresh(k_slots + 1);
    Atom call{def.name, {}};
    for (int i = 0; i < k_slots; ++i) call.args.push_back(Term::var(base + i));
    Term mid = Term::var(base + k_slots);
    call.args.push_back(from);
    call.args.push_back(mid);

    auto next_ts = std::make_shared<Goal>();
    next_ts->kind = Goal::Kind::Ts;
    next_ts->atom = Atom{"ts", {mid, to}};
    next_ts->budget = g.budget - 1;
    next_ts->state = def.terminal() ? 2 : 1;
    next_ts->next = rest;
    auto check = std::make_shared<Goal>();
    check->kind = Goal::Kind::Check;
    check->atom = call;
    check->def = &def;
    check->next = next_ts;
    auto head = std::make_shared<Goal>();
    head->atom = call;
    head->next = check;
    if (!step(head, b, k)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// solve

namespace {

Term normalize_vars(const Term& t, std::map<int, int>& ids) {
  if (t.is_ground()) return t;
  if (t.is_var()) {
    auto [it, _] = ids.emplace(t.var_id(), static_cast<int>(ids.size()));
    return Term::var(it->second);
  }
  std::vector<Term> out;
  for (const auto& a : t.args()) out.push_back(normalize_vars(a, ids));
  return t.is_list() ? Term::list(std::move(out)) : Term::compound(t.name(), std::move(out));
}

}  // namespace

SolveResult solve(const std::vector<Atom>& goals, const KnowledgeBase& program,
                  const DocumentFacts& facts, int depth, const TransitionSystem* system,
                  SolveOptions options) {
  int nvars = 0;
  for (const auto& g : goals) nvars = std::max(nvars, g.max_var() + 1);
  Bindings b(nvars);
  SolveResult result;
  std::set<std::string> seen;
  Solver solver(program, facts, system);
  solver.run(goals, b, depth, [&](Bindings& bb) {
    std::vector<Term> values;
    for (int v = 0; v < nvars; ++v) values.push_back(bb.resolve(Term::var(v)));
    std::map<int, int> ids;
    auto key = to_string(normalize_vars(Term::list(values), ids));
    if (!seen.insert(key).second) return true;
    if (result.solutions.size() >= options.max_solutions) {
      result.truncated = true;
      return false;
    }
    Substitution s;
    for (int v = 0; v < nvars; ++v)
      if (!(values[v].is_var() && values[v].var_id() == v)) s.bind(v, values[v]);
    result.solutions.push_back(std::move(s));
    return true;
  });
  return result;
}

// ---------------------------------------------------------------------------
// Meta-interpretation

namespace {

std::vector<TransitionStep> instantiate(Solver& solver, const TransitionDef& def,
                                        const DocumentFacts& facts, const Term& config,
                                        const std::optional<Term>& out) {
  const int k = static_cast<int>(def.slots.size());
  Bindings b(k + 1);
  Atom call{def.name, {}};
  for (int i = 0; i < k; ++i) call.args.push_back(Term::var(i));
  call.args.push_back(config);
  call.args.push_back(out ? *out : Term::var(k));
  std::vector<TransitionStep> steps;
  std::unordered_set<std::string> seen;
  solver.run({call}, b, 0, [&](Bindings& bb) {
    Atom lit = bb.resolve(call);
    if (!slots_admissible(def, std::span<const Term>(lit.args).first(k), facts)) return true;
    if (!seen.insert(to_string(lit)).second) return true;
    Term next = lit.args.back();
    steps.push_back({std::move(lit), std::move(next)});
    return true;
  });
  return steps;
}

class MetaProver {
 public:
  MetaProver(const TransitionSystem& system, const DocumentFacts& facts, const Term& target,
             MetaOptions options)
      : system_(system),
        facts_(facts),
        solver_(system.rules, facts),
        target_(target),
        options_(options) {}

  MetaResult run(const Term& input, int depth) {
    if (input == target_) emit();
    if (!result_.truncated) dfs(input, depth);
    return std::move(result_);
  }

 private:
  struct Tables {
    std::vector<std::optional<std::vector<TransitionStep>>> steps;  // per transition
    std::vector<int> reach;  // per remaining depth; -1 unknown
  };

  Tables& tables(const Term& c) {
    auto it = tables_.find(c);
    if (it == tables_.end()) {
      Tables t;
      t.steps.resize(system_.transitions.size());
      it = tables_.emplace(c, std::move(t)).first;
    }
    return it->second;
  }

  // Navigation successors, or terminal steps that reach the target.
  const std::vector<TransitionStep>& steps(const Term& c, std::size_t def_index) {
    auto& slot = tables(c).steps[def_index];
    if (!slot) {
      const auto& def = system_.transitions[def_index];
      slot = instantiate(solver_, def, facts_, c,
                         def.terminal() ? std::optional<Term>(target_) : std::nullopt);
    }
    return *slot;
  }

  bool reachable(const Term& c, int remaining) {
    if (remaining < 1) return false;
    {
      auto& t = tables(c);
      if (static_cast<int>(t.reach.size()) <= remaining) t.reach.resize(remaining + 1, -1);
      if (t.reach[remaining] >= 0) return t.reach[remaining] == 1;
    }
    bool ok = false;
    for (std::size_t d = 0; d < system_.transitions.size() && !ok; ++d) {
      if (system_.transitions[d].terminal()) {
        ok = !steps(c, d).empty();
      } else if (remaining >= 2) {
        for (const auto& s : steps(c, d))
          if (reachable(s.next, remaining - 1)) {
            ok = true;
            break;
          }
      }
    }
    tables(c).reach[remaining] = ok ? 1 : 0;
    return ok;
  }

  void dfs(const Term& c, int remaining) {
    if (remaining < 1) return;
    path_configs_.push_back(c);
    for (std::size_t d = 0; d < system_.transitions.size() && !result_.truncated; ++d) {
      if (system_.transitions[d].terminal()) {
        for (const auto& s : steps(c, d)) {
          path_.push_back(s.literal);
          emit();
          path_.pop_back();
          if (result_.truncated) break;
        }
        continue;
      }
      if (remaining < 2) continue;
      // Copy: recursion may rehash the table that owns the step list.
      auto succ = steps(c, d);
      for (const auto& s : succ) {
        if (std::find(path_configs_.begin(), path_configs_.end(), s.next) != path_configs_.end())
          continue;
        if (!reachable(s.next, remaining - 1)) continue;
        path_.push_back(s.literal);
        dfs(s.next, remaining - 1);
        path_.pop_back();
        if (result_.truncated) break;
      }
    }
    path_configs_.pop_back();
  }

  void emit() {
    if (result_.traces.size() >= options_.max_traces) {
      result_.truncated = true;
      return;
    }
    ProofTrace t;
    t.steps = path_;
    skolemize(t.steps);
    t.depth_used = static_cast<int>(t.steps.size());
    t.final_config = target_;
    result_.traces.push_back(std::move(t));
  }

  const TransitionSystem& system_;
  const DocumentFacts& facts_;
  Solver solver_;
  Term target_;
  MetaOptions options_;
  std::unordered_map<Term, Tables, TermHash> tables_;
  std::vector<Atom> path_;
  std::vector<Term> path_configs_;
  MetaResult result_;
};

}  // namespace

MetaResult meta_prove(const Term& input, const Term& output, const TransitionSystem& system,
                      const DocumentFacts& facts, int depth, MetaOptions options) {
  MetaProver prover(system, facts, output, options);
  return prover.run(input, depth);
}

std::vector<TransitionStep> enumerate_instantiations(const TransitionDef& def,
                                                     const TransitionSystem& system,
                                                     const DocumentFacts& facts,
                                                     const Term& config) {
  Solver solver(system.rules, facts);
  return instantiate(solver, def, facts, config, std::nullopt);
}

void skolemize(std::vector<Atom>& steps) {
  Substitution sk;
  int n = 0;
  std::function<void(const Term&)> visit = [&](const Term& t) {
    if (t.is_ground()) return;
    if (t.is_var()) {
      if (!sk.lookup(t.var_id())) sk.bind(t.var_id(), Term::symbol("sk_" + std::to_string(n++)));
      return;
    }
    for (const auto& a : t.args()) visit(a);
  };
  for (const auto& s : steps)
    for (const auto& a : s.args) visit(a);
  if (sk.empty()) return;
  for (auto& s : steps) s = sk.apply(s);
}

// ---------------------------------------------------------------------------
// theta-subsumption

namespace {

Term freeze(const Term& t) {
  if (t.is_ground()) return t;
  if (t.is_var()) return Term::symbol("$frozen_" + std::to_string(t.var_id()));
  std::vector<Term> out;
  for (const auto& a : t.args()) out.push_back(freeze(a));
  return t.is_list() ? Term::list(std::move(out)) : Term::compound(t.name(), std::move(out));
}

Atom freeze(const Atom& a) {
  Atom out{a.predicate, {}};
  for (const auto& t : a.args) out.args.push_back(freeze(t));
  return out;
}

bool unify_atoms(Bindings& b, const Atom& x, const Atom& y) {
  if (x.predicate != y.predicate || x.arity() != y.arity()) return false;
  for (std::size_t i = 0; i < x.args.size(); ++i)
    if (!b.unify(x.args[i], y.args[i])) return false;
  return true;
}

bool map_body(Bindings& b, const Clause& h, std::size_t i, const std::vector<Atom>& g_body) {
  if (i == h.body.size()) return true;
  for (const auto& target : g_body) {
    auto m = b.mark();
    if (unify_atoms(b, h.body[i], target) && map_body(b, h, i + 1, g_body)) return true;
    b.undo(m);
  }
  return false;
}

}  // namespace

bool theta_subsumes(const Clause& h, const Clause& g) {
  int nvars = h.var_count();
  nvars = std::max(nvars, h.head.max_var() + 1);
  for (const auto& lit : h.body) nvars = std::max(nvars, lit.max_var() + 1);
  Bindings b(nvars);
  Atom g_head = freeze(g.head);
  std::vector<Atom> g_body;
  for (const auto& lit : g.body) g_body.push_back(freeze(lit));
  if (!unify_atoms(b, h.head, g_head)) return false;
  return map_body(b, h, 0, g_body);
}

}  // namespace docsynth

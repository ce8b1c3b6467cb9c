#include "docsynth/synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <unordered_map>

#include "docsynth/error.hpp"
#include "docsynth/syntax.hpp"

namespace docsynth {

const ExtractionProgram* ProgramSet::find(const std::string& canonical) const {
  auto it = index_.find(canonical);
  return it == index_.end() ? nullptr : &programs_[it->second];
}

bool ProgramSet::add(ExtractionProgram p) {
  auto it = index_.find(p.canonical);
  if (it != index_.end()) {
    auto& prov = programs_[it->second].provenance;
    for (auto& s : p.provenance)
      if (std::find(prov.begin(), prov.end(), s) == prov.end()) prov.push_back(std::move(s));
    return false;
  }
  index_.emplace(p.canonical, programs_.size());
  programs_.push_back(std::move(p));
  return true;
}

std::string normalize_space(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
    } else {
      if (pending) out += ' ';
      pending = false;
      out += c;
    }
  }
  return out;
}

namespace {

std::string var_name(int i) {
  std::string s(1, static_cast<char>('A' + i % 26));
  if (i >= 26) s += std::to_string(i / 26);
  return s;
}

bool is_skolem(const Term& t) { return t.is_symbol() && t.name().rfind("sk_", 0) == 0; }

// Replaces whole terms found in `lift` (and Skolem constants) by variables.
Term lift_term(const Term& t, std::unordered_map<Term, int, TermHash>& vars, bool whole) {
  if (whole || is_skolem(t)) {
    auto [it, _] = vars.emplace(t, static_cast<int>(vars.size()));
    return Term::var(it->second);
  }
  if (t.is_compound() || t.is_list()) {
    std::vector<Term> out;
    for (const auto& a : t.args()) out.push_back(lift_term(a, vars, false));
    return t.is_list() ? Term::list(std::move(out)) : Term::compound(t.name(), std::move(out));
  }
  return t;
}

Term rename_vars(const Term& t, std::map<int, int>& ids) {
  if (t.is_ground()) return t;
  if (t.is_var()) {
    auto [it, _] = ids.emplace(t.var_id(), static_cast<int>(ids.size()));
    return Term::var(it->second);
  }
  std::vector<Term> out;
  for (const auto& a : t.args()) out.push_back(rename_vars(a, ids));
  return t.is_list() ? Term::list(std::move(out)) : Term::compound(t.name(), std::move(out));
}

void vars_of(const Term& t, std::set<int>& out) {
  if (t.is_ground()) return;
  if (t.is_var()) {
    out.insert(t.var_id());
    return;
  }
  for (const auto& a : t.args()) vars_of(a, out);
}

}  // namespace

Clause ground_explanation(const std::string& entity, const DocumentFacts& facts,
                          const std::string& value, const ProofTrace& trace) {
  Clause g;
  g.head = Atom{entity, {Term::list({facts.doc_term()}), Term::list({Term::symbol(value)})}};
  g.body = trace.steps;
  return g;
}

Clause generalize(const Clause& ground, const TransitionSystem& system) {
  std::unordered_map<Term, int, TermHash> vars;
  Clause h;
  h.head.predicate = ground.head.predicate;
  for (const auto& a : ground.head.args) h.head.args.push_back(lift_term(a, vars, true));
  for (const auto& lit : ground.body) {
    Atom out{lit.predicate, {}};
    const bool is_transition = system.find(lit.predicate) != nullptr;
    const std::size_t n = lit.args.size();
    for (std::size_t i = 0; i < n; ++i) {
      const bool config = is_transition && i + 2 >= n;
      out.args.push_back(lift_term(lit.args[i], vars, config));
    }
    h.body.push_back(std::move(out));
  }
  h.var_names.resize(vars.size());
  for (std::size_t i = 0; i < h.var_names.size(); ++i) h.var_names[i] = var_name(static_cast<int>(i));
  return canonicalize(h, system);
}

Clause canonicalize(const Clause& c, const TransitionSystem& system) {
  (void)system;
  // Data-flow order: a literal is ready once the variables of its input
  // configuration (second-to-last argument) are bound.
  std::set<int> bound;
  if (!c.head.args.empty()) vars_of(c.head.args.front(), bound);
  std::vector<bool> placed(c.body.size(), false);
  std::vector<Atom> ordered;
  for (std::size_t round = 0; round < c.body.size(); ++round) {
    std::size_t pick = c.body.size();
    for (std::size_t i = 0; i < c.body.size() && pick == c.body.size(); ++i) {
      if (placed[i]) continue;
      const auto& lit = c.body[i];
      std::set<int> need;
      if (lit.args.size() >= 2) vars_of(lit.args[lit.args.size() - 2], need);
      if (std::includes(bound.begin(), bound.end(), need.begin(), need.end())) pick = i;
    }
    if (pick == c.body.size())
      pick = static_cast<std::size_t>(std::find(placed.begin(), placed.end(), false) - placed.begin());
    placed[pick] = true;
    for (const auto& a : c.body[pick].args) vars_of(a, bound);
    ordered.push_back(c.body[pick]);
  }

  std::map<int, int> ids;
  Clause out;
  out.head.predicate = c.head.predicate;
  for (const auto& a : c.head.args) out.head.args.push_back(rename_vars(a, ids));
  for (const auto& lit : ordered) {
    Atom r{lit.predicate, {}};
    for (const auto& a : lit.args) r.args.push_back(rename_vars(a, ids));
    out.body.push_back(std::move(r));
  }
  out.var_names.resize(ids.size());
  for (std::size_t i = 0; i < out.var_names.size(); ++i) out.var_names[i] = var_name(static_cast<int>(i));
  return out;
}

std::string canonical_form(const Clause& c, const TransitionSystem& system) {
  return to_string(canonicalize(c, system));
}

ExtractionProgram make_program(const std::string& entity, const Clause& c,
                               const TransitionSystem& system) {
  ExtractionProgram p;
  p.entity = entity;
  p.clause = canonicalize(c, system);
  p.clause.head.predicate = entity;
  p.canonical = to_string(p.clause);
  return p;
}

namespace {

// Runs the program body with A = [doc]; calls k with the output value.
template <typename F>
void for_each_output(const ExtractionProgram& p, const DocumentFacts& facts,
                     const TransitionSystem& system, F&& k) {
  const Clause& c = p.clause;
  if (c.head.args.size() != 2) throw LogicError("program head must have two arguments");
  int nvars = c.var_count();
  nvars = std::max(nvars, c.head.max_var() + 1);
  for (const auto& lit : c.body) nvars = std::max(nvars, lit.max_var() + 1);
  Bindings b(nvars);
  if (!b.unify(c.head.args[0], Term::list({facts.doc_term()}))) return;
  Solver solver(system.rules, facts);
  solver.run(c.body, b, 0, [&](Bindings& bb) {
    Term out = bb.resolve(c.head.args[1]);
    std::string value;
    if (out.is_list() && out.args().size() == 1 && out.args()[0].is_symbol())
      value = out.args()[0].name();
    else
      value = to_string(out);
    return k(value);
  });
}

}  // namespace

std::vector<std::string> program_outputs(const ExtractionProgram& p, const DocumentFacts& facts,
                                         const TransitionSystem& system, std::size_t limit) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for_each_output(p, facts, system, [&](const std::string& v) {
    if (seen.insert(v).second) out.push_back(v);
    return out.size() < limit;
  });
  return out;
}

std::optional<std::string> run_program(const ExtractionProgram& p, const DocumentFacts& facts,
                                       const TransitionSystem& system) {
  std::optional<std::string> first;
  for_each_output(p, facts, system, [&](const std::string& v) {
    first = v;
    return false;
  });
  return first;
}

bool check_soundness(const ExtractionProgram& p, const DocumentFacts& facts,
                     const TransitionSystem& system, const std::string& value) {
  bool found = false;
  for_each_output(p, facts, system, [&](const std::string& v) {
    found = v == value;
    return !found;
  });
  return found;
}

bool check_completeness(const ExtractionProgram& p, const DocumentFacts& facts,
                        const TransitionSystem& system, const std::string& value) {
  bool any = false, only = true;
  for_each_output(p, facts, system, [&](const std::string& v) {
    any = true;
    only = v == value;
    return only;
  });
  return any && only;
}

MipResult mip(std::shared_ptr<const DocumentFacts> facts, const TransitionSystem& system,
              const std::string& entity, const std::string& value, MipOptions options) {
  MipResult result;
  result.programs = ProgramSet(entity);
  result.programs.add_witness({facts, value});
  if (value.empty()) return result;

  const Term input = Term::list({facts->doc_term()});
  const Term output = Term::list({Term::symbol(value)});
  auto meta = meta_prove(input, output, system, *facts, options.depth, {options.max_traces});
  result.traces = meta.traces.size();
  result.truncated = meta.truncated;

  std::set<std::string> rejected;
  for (std::size_t i = 0; i < meta.traces.size(); ++i) {
    const auto& trace = meta.traces[i];
    if (trace.steps.empty()) continue;  // input = output: nothing to extract
    Clause g = ground_explanation(entity, *facts, value, trace);
    ExtractionProgram p = make_program(entity, generalize(g, system), system);
    p.provenance.push_back(facts->doc_id() + " trace " + std::to_string(i));
    if (result.programs.contains(p.canonical)) {
      result.programs.add(std::move(p));
      continue;
    }
    if (rejected.contains(p.canonical)) continue;
    // Soundness holds for a program derived from a proof; completeness
    // rejects programs with spurious bindings.
    if (check_soundness(p, *facts, system, value) &&
        check_completeness(p, *facts, system, value)) {
      result.programs.add(std::move(p));
    } else {
      rejected.insert(p.canonical);
    }
  }
  return result;
}

ProgramSet filter(const ProgramSet& set, std::shared_ptr<const DocumentFacts> facts,
                  const std::string& value, const TransitionSystem& system) {
  ProgramSet out(set.entity());
  for (const auto& w : set.witnesses()) out.add_witness(w);
  out.add_witness({facts, value});
  for (const auto& p : set.programs())
    if (check_completeness(p, *facts, system, value)) out.add(p);
  return out;
}

ProgramSet intersect(const std::vector<ProgramSet>& sets, const TransitionSystem& system) {
  ProgramSet out(sets.empty() ? std::string() : sets.front().entity());
  std::vector<Witness> witnesses;
  for (const auto& s : sets)
    for (const auto& w : s.witnesses()) {
      bool dup = false;
      for (const auto& e : witnesses) dup = dup || (e.facts == w.facts && e.value == w.value);
      if (!dup) witnesses.push_back(w);
    }
  for (const auto& w : witnesses) out.add_witness(w);

  // Candidates in canonical order so the result does not depend on set order.
  std::map<std::string, ExtractionProgram> candidates;
  for (const auto& s : sets)
    for (const auto& p : s.programs()) {
      auto [it, fresh] = candidates.emplace(p.canonical, p);
      if (!fresh)
        for (const auto& pr : p.provenance)
          if (std::find(it->second.provenance.begin(), it->second.provenance.end(), pr) ==
              it->second.provenance.end())
            it->second.provenance.push_back(pr);
    }
  for (auto& [canon, p] : candidates) {
    bool ok = true;
    for (const auto& w : witnesses) {
      ok = check_completeness(p, *w.facts, system, w.value);
      if (!ok) break;
    }
    if (ok) out.add(p);
  }
  return out;
}

std::string program_set_text(const ProgramSet& set) {
  std::ostringstream os;
  os << "% entity: " << set.entity() << "\n";
  os << "% programs: " << set.size() << "\n";
  if (!set.witnesses().empty()) {
    os << "% verified on:";
    for (const auto& w : set.witnesses()) os << " " << w.facts->doc_id();
    os << "\n";
  }
  for (const auto& p : set.programs()) {
    os << "% from";
    for (std::size_t i = 0; i < p.provenance.size(); ++i) os << (i ? "; " : " ") << p.provenance[i];
    os << "\n" << p.canonical << "\n";
  }
  return os.str();
}

ProgramSet parse_program_set(std::string_view text, const std::string& entity,
                             const TransitionSystem& system, const std::string& source) {
  ProgramSet set(entity);
  std::vector<std::string> pending;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("% from", 0) == 0) {
      pending.clear();
      std::string rest = line.substr(6);
      std::size_t pos = 0;
      while (pos <= rest.size()) {
        auto semi = rest.find(';', pos);
        auto item = normalize_space(rest.substr(pos, semi == std::string::npos ? std::string::npos : semi - pos));
        if (!item.empty()) pending.push_back(item);
        if (semi == std::string::npos) break;
        pos = semi + 1;
      }
      continue;
    }
    if (line[0] == '%') continue;
    Clause c;
    try {
      c = parse_clause(line);
    } catch (const ParseError& e) {
      throw ParseError(source + ":" + std::to_string(lineno), e.what());
    }
    if (c.head.predicate != entity || c.head.arity() != 2)
      throw ParseError(source + ":" + std::to_string(lineno),
                       "expected a clause for " + entity + "/2");
    for (const auto& lit : c.body)
      if (!system.find(lit.predicate))
        throw ParseError(source + ":" + std::to_string(lineno),
                         "unknown transition " + lit.predicate);
    ExtractionProgram p = make_program(entity, c, system);
    p.provenance = pending;
    pending.clear();
    set.add(std::move(p));
  }
  return set;
}

}  // namespace docsynth

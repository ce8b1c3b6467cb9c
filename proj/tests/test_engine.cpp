#include <gtest/gtest.h>

#include <set>

#include "docsynth/background.hpp"
#include "docsynth/engine.hpp"
#include "docsynth/error.hpp"
#include "docsynth/syntax.hpp"
#include "fixtures.hpp"

using namespace docsynth;

namespace {

std::set<std::string> outputs_at(int depth) {
  auto facts = fixtures::running_example();
  std::vector<std::string> names;
  auto goals = parse_goals("ts([d1], [X]).", &names);
  auto r = solve(goals, default_catalog().rules, *facts, depth, &default_catalog(), {.max_solutions = 1000000});
  EXPECT_FALSE(r.truncated);
  std::set<std::string> out;
  for (const auto& s : r.solutions) out.insert(to_string(s.apply(Term::var(0))));
  return out;
}

}  // namespace

TEST(Engine, TransitionSolutionsGrowWithDepth) {
  std::set<std::string> prev;
  for (int d = 1; d <= 4; ++d) {
    auto cur = outputs_at(d);
    for (const auto& v : prev) EXPECT_TRUE(cur.contains(v)) << v << " lost at depth " << d;
    EXPECT_GE(cur.size(), prev.size());
    prev = std::move(cur);
  }
  EXPECT_TRUE(prev.contains("'186FDBC1802472'"));
}

TEST(Engine, ZeroDepthOnlyProvesIdentity) { EXPECT_EQ(outputs_at(0), std::set<std::string>{"d1"}); }

TEST(Engine, EveryMetaProofReplaysThroughSolve) {
  auto facts = fixtures::running_example();
  const auto& sys = default_catalog();
  const Term in = Term::list({Term::symbol("d1")});
  const Term out = Term::list({Term::symbol("186FDBC1802472")});
  auto r = meta_prove(in, out, sys, *facts, 4);
  ASSERT_FALSE(r.traces.empty());
  std::set<std::string> seen;
  for (const auto& t : r.traces) {
    EXPECT_LE(static_cast<int>(t.steps.size()), 4);
    EXPECT_EQ(t.final_config, out);
    std::string key;
    for (const auto& s : t.steps) key += to_string(s) + ";";
    EXPECT_TRUE(seen.insert(key).second) << "duplicate trace " << key;
    // Only the last step may be terminal.
    for (std::size_t i = 0; i + 1 < t.steps.size(); ++i)
      EXPECT_FALSE(sys.find(t.steps[i].predicate)->terminal()) << key;
    EXPECT_TRUE(sys.find(t.steps.back().predicate)->terminal()) << key;
    // Chained configurations: the output of step i is the input of step i+1.
    EXPECT_EQ(t.steps.front().args[t.steps.front().arity() - 2], in);
    EXPECT_EQ(t.steps.back().args.back(), out);
    for (std::size_t i = 0; i + 1 < t.steps.size(); ++i)
      EXPECT_EQ(t.steps[i].args.back(), t.steps[i + 1].args[t.steps[i + 1].arity() - 2]);
    // Each ground step is provable on its own.
    for (const auto& s : t.steps) {
      auto sol = solve({s}, sys.rules, *facts, 1, &sys);
      EXPECT_FALSE(sol.solutions.empty()) << to_string(s);
    }
  }
}

TEST(Engine, MetaProofsGrowWithDepth) {
  auto facts = fixtures::running_example();
  const Term in = Term::list({Term::symbol("d1")});
  const Term out = Term::list({Term::symbol("186FDBC1802472")});
  std::size_t prev = 0;
  for (int d = 1; d <= 4; ++d) {
    auto n = meta_prove(in, out, default_catalog(), *facts, d).traces.size();
    EXPECT_GE(n, prev);
    prev = n;
  }
  EXPECT_GT(prev, 0u);
}

TEST(Engine, SkolemizeNumbersInFirstOccurrenceOrder) {
  std::vector<Atom> steps{{"a", {Term::var(5), Term::symbol("x")}}, {"b", {Term::var(2), Term::var(5)}}};
  skolemize(steps);
  EXPECT_EQ(steps[0].args[0], Term::symbol("sk_0"));
  EXPECT_EQ(steps[1].args[0], Term::symbol("sk_1"));
  EXPECT_EQ(steps[1].args[1], Term::symbol("sk_0"));
}

TEST(Engine, ThetaSubsumption) {
  auto g = parse_clause("p(a,b) :- q(a,c), r(c,b).");
  EXPECT_TRUE(theta_subsumes(parse_clause("p(X,Y) :- q(X,Z), r(Z,Y)."), g));
  EXPECT_TRUE(theta_subsumes(parse_clause("p(X,Y) :- q(X,Z)."), g));
  EXPECT_FALSE(theta_subsumes(parse_clause("p(X,X) :- q(X,Z)."), g));
  EXPECT_FALSE(theta_subsumes(parse_clause("p(X,Y) :- q(Y,Z)."), g));
  EXPECT_FALSE(theta_subsumes(g, parse_clause("p(X,Y) :- q(X,Z), r(Z,Y).")));
}

TEST(Engine, RejectsClausesThatAreNotRangeRestricted) {
  KnowledgeBase kb;
  EXPECT_THROW(kb.add(parse_clause("p(X,Y) :- q(X).")), LogicError);
  EXPECT_NO_THROW(kb.add(parse_clause("p(X) :- q(X).")));
}

TEST(Engine, UnknownPredicateIsAnError) {
  auto facts = fixtures::running_example();
  std::vector<std::string> names;
  EXPECT_THROW(solve(parse_goals("nope(X).", &names), {}, *facts, 1), LogicError);
}

TEST(Engine, BindingsUndoRestoresState) {
  Bindings b(3);
  auto m = b.mark();
  ASSERT_TRUE(b.unify(Term::var(0), Term::compound("f", {Term::var(1)})));
  ASSERT_TRUE(b.unify(Term::var(1), Term::symbol("a")));
  EXPECT_EQ(b.resolve(Term::var(0)), Term::compound("f", {Term::symbol("a")}));
  b.undo(m);
  EXPECT_EQ(b.resolve(Term::var(0)), Term::var(0));
  EXPECT_FALSE(b.unify(Term::var(0), Term::compound("f", {Term::var(0)})));
}

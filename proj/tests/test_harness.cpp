#include <gtest/gtest.h>

#include <json.hpp>

#include "docsynth/background.hpp"
#include "docsynth/error.hpp"
#include "docsynth/harness.hpp"
#include "docsynth/syntax.hpp"
#include "fixtures.hpp"

using namespace docsynth;

namespace {

using Lines = std::vector<std::pair<int, std::vector<std::string>>>;

std::shared_ptr<const DocumentFacts> make_doc(const std::string& id, const Lines& lines) {
  std::vector<SourceToken> toks;
  for (const auto& [y, words] : lines) {
    int x = 50;
    for (const auto& w : words) {
      toks.push_back({w, {x, y, x + 40, y + 12}});
      x += 50;
    }
  }
  return std::make_shared<const DocumentFacts>(DocumentFacts::build(id, {800, 600}, toks, fixtures::lexicons()));
}

EntityModel entity(const std::string& name, const std::vector<std::string>& clauses) {
  EntityModel e;
  e.entity = name;
  e.programs = ProgramSet(name);
  for (const auto& c : clauses) e.programs.add(make_program(name, parse_clause(c), default_catalog()));
  e.training_docs = {"t"};
  return e;
}

// Three test documents and one training document. Expected outcomes,
// worked out by hand from the two programs per entity:
//   code:  a -> X1/X1 correct, b -> Y2/Z3 tie -> Y2 correct, c -> NULL/NULL
//   place: a -> Hamburg/Bremen tie -> Bremen incorrect, b -> Kiel/NULL -> Kiel
//          correct, c -> Ulm/Ulm correct
struct Toy {
  TemplateModel model;
  std::vector<std::shared_ptr<const DocumentFacts>> docs;
  std::vector<TruthRecord> truth;

  Toy() {
    model.template_id = "toy";
    model.mode = "os";
    model.entities.push_back(entity("code", {"code(A,B) :- has_keyword('Ref',A,C), has_line_below(C,B).",
                                             "code(A,B) :- has_keyword('Code',A,C), has_line_below(C,B)."}));
    model.entities.push_back(entity("place", {"place(A,B) :- word_to_right('City',A,B).",
                                              "place(A,B) :- word_to_right('Town',A,B)."}));
    docs.push_back(make_doc("a", {{50, {"Ref", "Code"}}, {66, {"X1"}}, {300, {"City", "Hamburg", "Town", "Bremen"}}}));
    docs.push_back(make_doc("b", {{50, {"Ref"}}, {66, {"Y2"}}, {200, {"Code"}}, {216, {"Z3"}}, {300, {"City", "Kiel"}}}));
    docs.push_back(make_doc("c", {{50, {"Note"}}, {66, {"W4"}}, {300, {"City", "Ulm"}}, {400, {"Town", "Ulm"}}}));
    docs.push_back(make_doc("t", {{50, {"Ref"}}, {66, {"Q9"}}}));
    truth = {{"a", "code", "X1", {}},  {"a", "place", "Hamburg", {}}, {"b", "code", "Y2", {}},
             {"b", "place", "Kiel", {}}, {"c", "code", "W4", {}},     {"c", "place", "Ulm", {}}};
  }
};

const CaseRecord& case_of(const EvalReport& r, const std::string& doc, const std::string& entity) {
  for (const auto& c : r.cases)
    if (c.doc_id == doc && c.entity == entity) return c;
  throw std::runtime_error("no case " + doc + "/" + entity);
}

}  // namespace

TEST(Evaluate, MatchesHandComputedOracle) {
  Toy toy;
  auto r = evaluate(toy.model, toy.docs, toy.truth);
  EXPECT_EQ(r.training_docs, std::vector<std::string>{"t"});
  EXPECT_EQ(r.test_docs, (std::vector<std::string>{"a", "b", "c"}));

  struct Want {
    const char* doc;
    const char* entity;
    CaseStatus status;
    Output predicted;
    double correctness;
    double entropy;
  };
  const Want want[] = {
      {"a", "code", CaseStatus::Correct, "X1", 1.0, 0.0},
      {"b", "code", CaseStatus::Correct, "Y2", 0.5, 1.0},
      {"c", "code", CaseStatus::Null, std::nullopt, 0.0, 0.0},
      {"a", "place", CaseStatus::Incorrect, "Bremen", 0.5, 1.0},
      {"b", "place", CaseStatus::Correct, "Kiel", 0.5, 1.0},
      {"c", "place", CaseStatus::Correct, "Ulm", 1.0, 0.0},
  };
  for (const auto& w : want) {
    const auto& c = case_of(r, w.doc, w.entity);
    EXPECT_EQ(c.status, w.status) << w.doc << "/" << w.entity;
    EXPECT_EQ(c.predicted, w.predicted) << w.doc << "/" << w.entity;
    EXPECT_DOUBLE_EQ(c.correctness, w.correctness) << w.doc << "/" << w.entity;
    EXPECT_NEAR(c.entropy, w.entropy, 1e-12) << w.doc << "/" << w.entity;
    EXPECT_EQ(c.confident, w.entropy <= 0.9) << w.doc << "/" << w.entity;
    EXPECT_EQ(c.programs, 2u);
  }

  ASSERT_EQ(r.entities.size(), 2u);
  const auto& code = r.entities[0];
  EXPECT_EQ(code.documents, 3u);
  EXPECT_EQ(code.correct, 2u);
  EXPECT_EQ(code.incorrect, 0u);
  EXPECT_EQ(code.nulls, 1u);
  EXPECT_NEAR(code.accuracy, 200.0 / 3.0, 1e-9);
  EXPECT_NEAR(code.correctness, 0.5, 1e-12);
  const auto& place = r.entities[1];
  EXPECT_EQ(place.correct, 2u);
  EXPECT_EQ(place.incorrect, 1u);
  EXPECT_EQ(place.nulls, 0u);
  EXPECT_NEAR(place.correctness, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.mean_accuracy, 200.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.mean_correctness, (0.5 + 2.0 / 3.0) / 2, 1e-12);

  const auto csv = report_csv(r);
  EXPECT_NE(csv.find("code,3,66.666667,2.000000,0.500000,2,0,1,0,0\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find("place,3,66.666667,2.000000,0.666667,2,1,0,0,0\n"), std::string::npos) << csv;
  const auto cases = cases_csv(r);
  EXPECT_NE(cases.find("a,place,incorrect,1.000000,0,2,0.500000,Bremen,Hamburg\n"), std::string::npos) << cases;

  auto j = nlohmann::json::parse(report_json(r));
  EXPECT_EQ(j["template_id"], "toy");
  EXPECT_EQ(j["entities"][0]["null"], 1);
  bool saw_null = false;
  for (const auto& c : j["cases"])
    if (c["doc_id"] == "c" && c["entity"] == "code") saw_null = c["predicted"].is_null();
  EXPECT_TRUE(saw_null);
}

TEST(Evaluate, ReportsAreDeterministic) {
  Toy toy;
  const auto a = evaluate(toy.model, toy.docs, toy.truth);
  for (int i = 0; i < 5; ++i) {
    const auto b = evaluate(toy.model, toy.docs, toy.truth);
    EXPECT_EQ(report_json(a), report_json(b));
    EXPECT_EQ(cases_csv(a), cases_csv(b));
  }
}

TEST(Evaluate, MissingTruthIsListed) {
  Toy toy;
  std::erase_if(toy.truth, [](const TruthRecord& r) { return r.doc_id == "c" && r.entity == "place"; });
  try {
    evaluate(toy.model, toy.docs, toy.truth);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("missing truth records for: c"), std::string::npos) << e.what();
  }
}

TEST(Evaluate, WhitespaceInTruthIsNormalized) {
  Toy toy;
  for (auto& r : toy.truth)
    if (r.doc_id == "b" && r.entity == "code") r.value = "  Y2 ";
  auto r = evaluate(toy.model, toy.docs, toy.truth);
  EXPECT_EQ(case_of(r, "b", "code").status, CaseStatus::Correct);
}

TEST(Sweep, CoversEveryCombination) {
  const auto& g = fixtures::corpus("patent", 6, 3);
  Corpus corpus{g.docs, g.truth};
  SweepOptions o;
  o.pool = 3;
  o.sizes = {1, 2, 3};
  o.modes = {"raw", "os"};
  o.train.template_id = "patent";
  auto rep = sweep(corpus, fixtures::lexicons(), o);
  EXPECT_EQ(rep.pool_docs.size(), 3u);
  EXPECT_EQ(rep.test_docs.size(), 3u);
  EXPECT_EQ(rep.template_id, "patent");
  const std::size_t entities = fixtures::builtin_template("patent").entities.size();
  ASSERT_EQ(rep.rows.size(), 2 * 3 * entities);
  for (const auto& row : rep.rows) {
    const std::size_t want = row.n == 3 ? 1 : 3;
    EXPECT_EQ(row.combinations, want) << row.mode << " " << row.n;
    EXPECT_GE(row.correctness, 0.0);
    EXPECT_LE(row.correctness, 1.0);
  }
  EXPECT_EQ(sweep_csv(rep), sweep_csv(sweep(corpus, fixtures::lexicons(), o)));
  o.modes = {"bogus"};
  EXPECT_THROW(sweep(corpus, fixtures::lexicons(), o), ValidationError);
}

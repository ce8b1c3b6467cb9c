#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include <unistd.h>

#include "docsynth/docgen.hpp"
#include "docsynth/error.hpp"
#include "docsynth/training.hpp"
#include "fixtures.hpp"

using namespace docsynth;

namespace {

const char* kSmall = R"({
  "template_id": "small",
  "page": {"width": 600, "height": 400},
  "entities": [
    {"name": "total", "example": "12.50", "dtype": "amount"},
    {"name": "city", "example": "Hamburg", "dtype": "city"}
  ],
  "lines": [
    {"y": 40, "x": 40, "items": ["Invoice total", {"entity": "total", "x": 200}]},
    {"y": 80, "x": 40, "items": ["Amount", {"decoy": "total", "x": 200}]},
    {"y": 120, "x": 40, "items": ["Paid", {"decoy": "total", "x": 200}, "today"]},
    {"y": 160, "x": 40, "items": ["Place", {"entity": "city", "x": 200}]}
  ],
  "ambiguity": [{"entity": "total", "k": 3, "agree_prob": 0.5}]
})";

TemplateSpec small() { return parse_template(kSmall, "small.json", fixtures::lexicons()); }

std::string replace(std::string s, const std::string& from, const std::string& to) {
  auto pos = s.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return s.replace(pos, from.size(), to);
}

// Occurrences of value as consecutive tokens of one line, by direct scan.
std::vector<Location> scan(const std::vector<SourceToken>& toks, const std::string& value) {
  const auto L = analyze_layout(toks, fixtures::lexicons());
  std::vector<std::string> words;
  for (std::size_t a = 0, b; a < value.size(); a = b + 1) {
    b = value.find(' ', a);
    if (b == std::string::npos) b = value.size();
    words.push_back(value.substr(a, b - a));
  }
  std::vector<Location> out;
  for (const auto& line : L.lines)
    for (std::size_t s = 0; s + words.size() <= line.tokens.size(); ++s) {
      bool ok = true;
      for (std::size_t k = 0; k < words.size() && ok; ++k) ok = L.tokens[line.tokens[s + k]].text == words[k];
      if (ok) out.push_back({line.id, static_cast<int>(s), static_cast<int>(s + words.size() - 1)});
    }
  return out;
}

bool same_tokens(const GeneratedDocument& a, const GeneratedDocument& b) {
  if (a.tokens.size() != b.tokens.size()) return false;
  for (std::size_t i = 0; i < a.tokens.size(); ++i)
    if (a.tokens[i].text != b.tokens[i].text || !(a.tokens[i].box == b.tokens[i].box)) return false;
  return true;
}

NoiseProfile noisy() {
  NoiseProfile n;
  n.box_jitter = 1.0;
  n.token_drop_prob = 0.2;
  n.keyword_variant_prob = 0.2;
  n.line_shift_prob = 0.2;
  return n;
}

}  // namespace

TEST(Docgen, SameSeedSameDocument) {
  for (const auto& path : builtin_template_paths()) {
    auto spec = load_template(path, fixtures::lexicons());
    for (std::uint64_t seed : {1u, 99u}) {
      for (const auto& noise : {NoiseProfile{}, noisy()}) {
        auto a = generate_document(spec, seed, noise, fixtures::lexicons(), "x");
        auto b = generate_document(spec, seed, noise, fixtures::lexicons(), "x");
        EXPECT_TRUE(same_tokens(a, b)) << spec.template_id;
        EXPECT_EQ(truth_json(a.truth), truth_json(b.truth));
      }
    }
    auto a = generate_document(spec, 1, {}, fixtures::lexicons(), "x");
    auto b = generate_document(spec, 2, {}, fixtures::lexicons(), "x");
    EXPECT_FALSE(same_tokens(a, b)) << spec.template_id;
  }
}

TEST(Docgen, CorpusFilesAreReproducible) {
  const auto root = std::filesystem::temp_directory_path() / ("docsynth_gen_test_" + std::to_string(::getpid()));
  std::filesystem::remove_all(root);
  const auto& spec = fixtures::builtin_template("patent");
  auto ids = generate_corpus(spec, 4, 3, noisy(), fixtures::lexicons(), root / "a");
  generate_corpus(spec, 4, 3, noisy(), fixtures::lexicons(), root / "b");
  ASSERT_EQ(ids.size(), 4u);
  EXPECT_EQ(ids[2], "patent_0002");
  EXPECT_EQ(read_text_file(root / "a" / "truth.json"), read_text_file(root / "b" / "truth.json"));
  for (const auto& id : ids) {
    const auto name = id + ".json";
    EXPECT_EQ(read_text_file(root / "a" / "docs" / name), read_text_file(root / "b" / "docs" / name));
    auto f = load_fact_file(root / "a" / "docs" / name, fixtures::lexicons());
    EXPECT_EQ(f.doc_id(), id);
  }
  EXPECT_EQ(load_truth(root / "a" / "truth.json").size(), 4 * spec.entities.size());
  std::filesystem::remove_all(root);
}

TEST(Docgen, CollisionNamesBothFields) {
  auto text = replace(kSmall, R"("Invoice total", {"entity": "total", "x": 200})",
                      R"("Invoice total amount payable now", {"entity": "total", "x": 100})");
  auto spec = parse_template(text, "collide.json", fixtures::lexicons());
  try {
    generate_document(spec, 1, {}, fixtures::lexicons(), "c");
    FAIL() << "expected a collision";
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("collides"), std::string::npos) << what;
    EXPECT_NE(what.find("Invoice total amount payable now"), std::string::npos) << what;
    EXPECT_NE(what.find("entity total"), std::string::npos) << what;
  }
}

TEST(Docgen, TemplateValidation) {
  const auto& lex = fixtures::lexicons();
  EXPECT_THROW(parse_template(replace(kSmall, R"({"entity": "city", "x": 200})", R"("nothing")"), "t", lex),
               ValidationError);
  EXPECT_THROW(parse_template(replace(kSmall, R"("k": 3)", R"("k": 2)"), "t", lex), ValidationError);
  EXPECT_THROW(parse_template(replace(kSmall, R"("agree_prob": 0.5)", R"("agree_prob": 1.5)"), "t", lex),
               std::exception);
  EXPECT_THROW(parse_template("{", "t", lex), ParseError);
  NoiseProfile bad;
  bad.token_drop_prob = 2;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = {};
  bad.box_jitter = -1;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Docgen, AmbiguousEntityAppearsOnceOrKTimes) {
  const auto spec = small();
  std::size_t agree = 0, differ = 0;
  for (std::uint64_t i = 0; i < 60; ++i) {
    auto g = generate_document(spec, document_seed(5, i), {}, fixtures::lexicons(), "s");
    const auto& rec = g.truth[0];
    ASSERT_EQ(rec.entity, "total");
    auto found = scan(g.tokens, rec.value);
    EXPECT_EQ(rec.locations, found);
    if (found.size() == 3) {
      ++agree;
    } else {
      EXPECT_EQ(found.size(), 1u);
      ++differ;
    }
    auto facts = DocumentFacts::build("s", g.page, g.tokens, fixtures::lexicons());
    EXPECT_EQ(find_occurrences(facts, rec.value), found);
  }
  EXPECT_GT(agree, 10u);
  EXPECT_GT(differ, 10u);
}

TEST(Docgen, TruthLocationsMatchTokenScan) {
  for (const auto& name : {"doctor1", "doctor2", "patent"}) {
    const auto& spec = fixtures::builtin_template(name);
    for (std::uint64_t i = 0; i < 10; ++i) {
      auto g = generate_document(spec, document_seed(21, i), noisy(), fixtures::lexicons(), "t");
      ASSERT_EQ(g.truth.size(), spec.entities.size());
      for (const auto& r : g.truth) {
        auto found = scan(g.tokens, r.value);
        EXPECT_FALSE(r.locations.empty()) << name << " " << r.entity;
        for (const auto& loc : r.locations)
          EXPECT_NE(std::find(found.begin(), found.end(), loc), found.end()) << name << " " << r.entity;
      }
    }
  }
}

TEST(Docgen, FullTokenDropKeepsOnlyValues) {
  const auto spec = small();
  NoiseProfile drop;
  drop.token_drop_prob = 1.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto clean = generate_document(spec, i, {}, fixtures::lexicons(), "d");
    auto g = generate_document(spec, i, drop, fixtures::lexicons(), "d");
    std::set<std::string> boiler{"Invoice", "total", "Amount", "Paid", "today", "Place"};
    for (const auto& t : g.tokens) EXPECT_FALSE(boiler.contains(t.text)) << t.text;
    // 3 amounts (value and two decoys) plus the city.
    EXPECT_EQ(g.tokens.size(), 4u);
    for (std::size_t k = 0; k < g.truth.size(); ++k) EXPECT_EQ(g.truth[k].value, clean.truth[k].value);
  }
}

TEST(Docgen, JitterKeepsBoxesValid) {
  NoiseProfile n;
  n.box_jitter = 1.0;
  const auto& spec = fixtures::builtin_template("doctor2");
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto g = generate_document(spec, i, n, fixtures::lexicons(), "j");
    for (const auto& t : g.tokens) EXPECT_TRUE(t.box.valid()) << t.text;
  }
}

TEST(Docgen, ValuesHaveTheDeclaredDatatype) {
  for (const auto& name : {"doctor1", "doctor2", "patent"}) {
    const auto& spec = fixtures::builtin_template(name);
    for (std::uint64_t i = 0; i < 10; ++i) {
      auto g = generate_document(spec, i, {}, fixtures::lexicons(), "v");
      for (std::size_t k = 0; k < g.truth.size(); ++k) {
        const auto& e = spec.entities[k];
        std::size_t a = 0;
        const auto& v = g.truth[k].value;
        while (a < v.size()) {
          auto b = v.find(' ', a);
          if (b == std::string::npos) b = v.size();
          auto dt = datatype_of(v.substr(a, b - a), fixtures::lexicons());
          EXPECT_NE(std::find(e.dtypes.begin(), e.dtypes.end(), dt), e.dtypes.end())
              << name << " " << e.name << " " << v;
          a = b + 1;
        }
      }
    }
  }
}

TEST(Docgen, SampleLikeKeepsShape) {
  std::mt19937_64 rng(3);
  const auto& lex = fixtures::lexicons();
  for (const std::string ex : {"12.03.2018", "2018-07-23", "85.50", "20184471", "F16K31", "Hamburg"}) {
    const auto dt = datatype_of(ex, lex);
    for (int i = 0; i < 20; ++i) {
      auto s = sample_like(ex, dt, rng, lex);
      ASSERT_TRUE(s) << ex;
      EXPECT_EQ(datatype_of(*s, lex), dt) << ex << " -> " << *s;
    }
  }
}

TEST(Docgen, TruthAndAnnotationFilesRoundTrip) {
  auto g = generate_document(small(), 4, {}, fixtures::lexicons(), "r");
  auto back = parse_truth(truth_json(g.truth), "mem");
  EXPECT_EQ(truth_json(back), truth_json(g.truth));
  std::vector<Annotation> anns{{"total", "12.50"}, {"city", "Hamburg"}};
  auto a = parse_annotations(annotations_json(anns), "mem");
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[1].value, "Hamburg");
  EXPECT_THROW(parse_truth("[{\"doc_id\": 1}]", "bad"), std::exception);
}

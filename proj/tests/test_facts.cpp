#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "docsynth/error.hpp"
#include "docsynth/facts.hpp"
#include "docsynth/syntax.hpp"
#include "fixtures.hpp"

using namespace docsynth;

namespace {

using Rows = std::multiset<std::string>;

std::string row_key(const std::vector<Term>& row) {
  std::string s;
  for (const auto& t : row) s += to_string(t) + "|";
  return s;
}

Rows rows_of(const DocumentFacts& f, const std::string& name) {
  Rows out;
  for (const auto& r : f.relation(name)->rows()) out.insert(row_key(r));
  return out;
}

Term S(const std::string& s) { return Term::symbol(s); }
Term I(std::int64_t v) { return Term::integer(v); }

// Random single-page documents with at most 20 tokens on a coarse grid, so
// that lines and blocks actually form.
std::vector<SourceToken> random_tokens(std::mt19937_64& rng) {
  static const std::vector<std::string> words{"Total", "Date", "12.03.2018", "Hamburg", "42",
                                              "A17B", "Please", "note", "EUR", "3.50"};
  std::uniform_int_distribution<int> count(1, 20), word(0, static_cast<int>(words.size()) - 1),
      col(0, 5), row(0, 7), jitter(-2, 2);
  std::vector<SourceToken> toks;
  std::set<std::pair<int, int>> used;
  const int n = count(rng);
  while (static_cast<int>(toks.size()) < n) {
    int c = col(rng), r = row(rng);
    if (!used.insert({c, r}).second) continue;
    int x0 = 40 + c * 90 + jitter(rng), y0 = 50 + r * (r % 3 == 0 ? 40 : 16) + jitter(rng);
    toks.push_back({words[word(rng)], {x0, y0, x0 + 60, y0 + 12}});
  }
  return toks;
}

// Independent recomputation of every relation from the recovered layout.
std::map<std::string, Rows> oracle(const std::string& doc_id, const Layout& L) {
  std::map<std::string, Rows> R;
  const Term doc = S(doc_id);
  const int nl = static_cast<int>(L.lines.size()), nb = static_cast<int>(L.blocks.size());

  for (const auto& t : L.tokens)
    R["word_in_line"].insert(row_key({doc, I(t.block_id), S(std::string(datatype_tag(t.dtype))),
                                      I(t.seq), I(t.line_id), S(t.text), I(t.word_id)}));
  for (const auto& l : L.lines) {
    R["page_lines_master"].insert(row_key({doc, I(l.id), S(l.text)}));
    R["text_blocks_master"].insert(row_key({doc, I(l.block_id), I(l.id)}));
  }
  for (const auto& a : L.tokens)
    for (const auto& b : L.tokens)
      if (a.line_id == b.line_id && b.word_id == a.word_id + 1)
        R["word_right_left"].insert(row_key({doc, I(a.line_id), S(a.text),
                                             S(std::string(datatype_tag(a.dtype))), I(a.word_id),
                                             S(b.text), S(std::string(datatype_tag(b.dtype))),
                                             I(b.word_id)}));
  for (const auto& t : L.tokens)
    for (const auto& l : L.lines)
      if (l.block_id == t.block_id && l.id > t.line_id)
        R["lines_below_block_word"].insert(
            row_key({doc, I(t.line_id), I(t.word_id), I(l.id), I(l.id - t.line_id - 1)}));

  auto vertical = [&](int n, const std::string& above, const std::string& below) {
    R[above];
    R[below];
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (a < b) {
          R[above].insert(row_key({doc, I(a), I(b), I(b - a - 1)}));
          R[below].insert(row_key({doc, I(b), I(a), I(b - a - 1)}));
        }
  };
  vertical(nl, "above_line", "below_line");
  vertical(nb, "above_block", "below_block");

  // prox = number of strictly closer candidates (ties broken by id).
  auto horizontal = [&](const std::vector<BoundingBox>& boxes, const std::string& left,
                        const std::string& right) {
    R[left];
    R[right];
    const int n = static_cast<int>(boxes.size());
    auto before = [&](int l, int r) { return l != r && boxes[l].x1 <= boxes[r].x0; };
    for (int l = 0; l < n; ++l)
      for (int r = 0; r < n; ++r) {
        if (!before(l, r)) continue;
        int gap = boxes[r].x0 - boxes[l].x1;
        int pl = 0, pr = 0;
        for (int o = 0; o < n; ++o) {
          if (before(o, r)) {
            int g = boxes[r].x0 - boxes[o].x1;
            pl += g < gap || (g == gap && o < l);
          }
          if (before(l, o)) {
            int g = boxes[o].x0 - boxes[l].x1;
            pr += g < gap || (g == gap && o < r);
          }
        }
        R[left].insert(row_key({doc, I(l), I(r), I(pl)}));
        R[right].insert(row_key({doc, I(r), I(l), I(pr)}));
      }
  };
  std::vector<BoundingBox> lb, bb;
  for (const auto& l : L.lines) lb.push_back(l.box);
  for (const auto& b : L.blocks) bb.push_back(b.box);
  horizontal(lb, "left_line", "right_line");
  horizontal(bb, "left_block", "right_block");

  // Substrings: occurrence = number of earlier (i, j) pairs, in (i, j)
  // order, with the same delimiter pair.
  auto substrings = [&](int container, const std::vector<int>& toks, const std::string& by_text,
                        const std::string& by_type) {
    R[by_text];
    R[by_type];
    const int n = static_cast<int>(toks.size());
    auto text = [&](int i) {
      return i == 0 ? std::string(kLineStart) : i == n + 1 ? std::string(kLineEnd) : L.tokens[toks[i - 1]].text;
    };
    auto tag = [&](int i) {
      return i == 0       ? std::string(kLineStart)
             : i == n + 1 ? std::string(kLineEnd)
                          : std::string(datatype_tag(L.tokens[toks[i - 1]].dtype));
    };
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i <= n + 1; ++i)
      for (int j = i + 2; j <= n + 1; ++j) pairs.emplace_back(i, j);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      auto [i, j] = pairs[p];
      std::string between;
      for (int k = i + 1; k < j; ++k) between += (k > i + 1 ? " " : "") + L.tokens[toks[k - 1]].text;
      int ot = 0, og = 0;
      for (std::size_t q = 0; q < p; ++q) {
        auto [a, b] = pairs[q];
        ot += text(a) == text(i) && text(b) == text(j);
        og += tag(a) == tag(i) && tag(b) == tag(j);
      }
      R[by_text].insert(row_key({doc, I(container), S(text(i)), S(text(j)), I(ot), S(between)}));
      R[by_type].insert(row_key({doc, I(container), S(tag(i)), S(tag(j)), I(og), S(between)}));
    }
  };
  for (const auto& l : L.lines) substrings(l.id, l.tokens, "line_to_substring", "line_to_substring_dtype");
  for (const auto& b : L.blocks) {
    std::vector<int> toks;
    for (int l : b.lines) toks.insert(toks.end(), L.lines[l].tokens.begin(), L.lines[l].tokens.end());
    substrings(b.id, toks, "block_to_substring", "block_to_substring_dtype");
  }
  return R;
}

}  // namespace

TEST(Facts, RelationsMatchBruteForceOracleOnRandomLayouts) {
  std::mt19937_64 rng(2024);
  for (int doc = 0; doc < 100; ++doc) {
    const auto toks = random_tokens(rng);
    const std::string id = "rnd" + std::to_string(doc);
    auto f = DocumentFacts::build(id, {800, 1000}, toks, fixtures::lexicons());
    const auto expected = oracle(id, f.layout());
    ASSERT_EQ(f.relations().size(), relation_schemas().size());
    for (const auto& s : relation_schemas()) {
      const std::string name(s.name);
      auto it = expected.find(name);
      const Rows want = it == expected.end() ? Rows{} : it->second;
      EXPECT_EQ(rows_of(f, name), want) << "relation " << name << " in document " << doc;
    }
  }
}

TEST(Facts, LayoutInvariantsOnRandomLayouts) {
  std::mt19937_64 rng(77);
  for (int doc = 0; doc < 100; ++doc) {
    const auto toks = random_tokens(rng);
    const auto L = analyze_layout(toks, fixtures::lexicons());
    ASSERT_EQ(L.tokens.size(), toks.size());
    std::size_t covered = 0;
    for (const auto& line : L.lines) {
      covered += line.tokens.size();
      for (std::size_t w = 0; w < line.tokens.size(); ++w) {
        const auto& t = L.tokens[line.tokens[w]];
        EXPECT_EQ(t.line_id, line.id);
        EXPECT_EQ(t.word_id, static_cast<int>(w));
        EXPECT_EQ(t.text, toks[line.tokens[w]].text);
        if (w) {
          EXPECT_LE(L.tokens[line.tokens[w - 1]].box.x0, t.box.x0);
        }
      }
      if (line.id) {
        EXPECT_LT(L.lines[line.id - 1].box.center_y(), line.box.center_y() + 1e-9);
      }
    }
    EXPECT_EQ(covered, toks.size());
    // Blocks partition the lines into consecutive runs.
    int next = 0;
    for (const auto& b : L.blocks)
      for (int l : b.lines) EXPECT_EQ(l, next++);
    EXPECT_EQ(next, static_cast<int>(L.lines.size()));
    std::vector<int> seqs;
    for (int idx : L.reading_order) seqs.push_back(L.tokens[idx].seq);
    for (std::size_t i = 0; i < seqs.size(); ++i) EXPECT_EQ(seqs[i], static_cast<int>(i));
  }
}

TEST(Facts, RunningExampleLayout) {
  auto f = fixtures::running_example();
  const auto& lines = f->layout().lines;
  auto line_with = [&](const std::string& text) {
    for (const auto& l : lines)
      if (l.text == text) return l.id;
    return -1;
  };
  int please = line_with("Please quote for correspondence");
  int code = line_with("186FDBC1802472");
  ASSERT_GE(please, 0);
  ASSERT_GE(code, 0);
  EXPECT_EQ(lines[please].block_id, lines[code].block_id);
  auto rows = f->query("lines_below_block_word", {std::nullopt, I(please), I(0), I(code), std::nullopt});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].args[4], I(0));
}

TEST(Facts, Datatypes) {
  const auto& lex = fixtures::lexicons();
  EXPECT_EQ(datatype_of("12.03.2018", lex), DataType::Date);
  EXPECT_EQ(datatype_of("2018-03-12", lex), DataType::Date);
  EXPECT_EQ(datatype_of("85.50", lex), DataType::Amount);
  EXPECT_EQ(datatype_of("42", lex), DataType::Number);
  EXPECT_EQ(datatype_of("186FDBC1802472", lex), DataType::Alphanumeric);
  EXPECT_EQ(datatype_of("Hamburg", lex), DataType::City);
  EXPECT_EQ(datatype_of("Please", lex), DataType::Word);
}

TEST(Facts, QueryValidatesPatterns) {
  auto f = fixtures::running_example();
  EXPECT_THROW(f->query("no_such_relation", {}), LogicError);
  EXPECT_THROW(f->query("page_lines_master", {std::nullopt}), LogicError);
  auto all = f->query("page_lines_master", {std::nullopt, std::nullopt, std::nullopt});
  EXPECT_EQ(all.size(), f->layout().lines.size());
}

TEST(Facts, RejectsBadTokens) {
  const auto& lex = fixtures::lexicons();
  EXPECT_THROW(DocumentFacts::build("d", {100, 100}, {{"", {0, 0, 5, 5}}}, lex), ValidationError);
  EXPECT_THROW(DocumentFacts::build("d", {100, 100}, {{"a", {5, 0, 5, 5}}}, lex), ValidationError);
  EXPECT_THROW(DocumentFacts::build("d", {100, 100}, {{"a", {0, 0, 5, 5}}, {"b", {0, 0, 5, 5}}}, lex),
               ValidationError);
  EXPECT_THROW(parse_fact_file("{\"doc_id\": 3}", "x.json", lex), ParseError);
  EXPECT_THROW(parse_fact_file("not json", "x.json", lex), ParseError);
}

TEST(Facts, FactFileRoundTrip) {
  auto f = fixtures::running_example();
  auto back = parse_fact_file(fact_file_json(*f), "mem", fixtures::lexicons());
  EXPECT_EQ(back.doc_id(), f->doc_id());
  EXPECT_EQ(back.atom_count(), f->atom_count());
  EXPECT_EQ(fact_file_json(back), fact_file_json(*f));
}

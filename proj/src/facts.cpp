#include "docsynth/facts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "docsynth/error.hpp"

namespace docsynth {

using nlohmann::json;

BoundingBox BoundingBox::united(const BoundingBox& o) const {
  return {std::min(x0, o.x0), std::min(y0, o.y0), std::max(x1, o.x1), std::max(y1, o.y1)};
}

namespace {

struct DataTypeInfo {
  DataType type;
  std::string_view name;
  std::string_view tag;
};

constexpr DataTypeInfo kDataTypes[] = {
    {DataType::Word, "word", "<word>"},
    {DataType::Alphanumeric, "alphanumeric", "<alphanumeric>"},
    {DataType::Number, "number", "<number>"},
    {DataType::Amount, "amount", "<amount>"},
    {DataType::Date, "date", "<date>"},
    {DataType::Name, "name", "<name>"},
    {DataType::City, "city", "<city>"},
    {DataType::MedicalTerm, "medical_term", "<medical_term>"},
};

std::set<std::string> read_lexicon(const std::filesystem::path& path) {
  std::set<std::string> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) out.insert(line);
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

std::string_view datatype_tag(DataType t) { return kDataTypes[static_cast<int>(t)].tag; }
std::string_view datatype_name(DataType t) { return kDataTypes[static_cast<int>(t)].name; }

std::optional<DataType> datatype_from_name(std::string_view name) {
  for (const auto& d : kDataTypes)
    if (d.name == name) return d.type;
  return std::nullopt;
}

std::optional<DataType> datatype_from_tag(std::string_view tag) {
  for (const auto& d : kDataTypes)
    if (d.tag == tag) return d.type;
  return std::nullopt;
}

Lexicons Lexicons::load_dir(const std::filesystem::path& dir) {
  Lexicons lx;
  lx.names = read_lexicon(dir / "name.txt");
  lx.cities = read_lexicon(dir / "city.txt");
  lx.medical_terms = read_lexicon(dir / "medical_term.txt");
  return lx;
}

DataType datatype_of(std::string_view text, const Lexicons& lexicons) {
  static const std::regex date_patterns[] = {
      std::regex(R"(\d{2}\.\d{2}\.\d{4})"), std::regex(R"(\d{2}/\d{2}/\d{4})"),
      std::regex(R"(\d{2}-\d{2}-\d{4})"),   std::regex(R"(\d{4}-\d{2}-\d{2})"),
      std::regex(R"(\d{2}\.\d{2}\.\d{2})"),
  };
  static const std::regex amount(R"(\d{1,9}[.,]\d{2})");
  static const std::regex number(R"(\d+)");
  static const std::regex alnum(R"((?=.*[A-Za-z])(?=.*\d)[A-Za-z0-9/-]+)");

  const std::string s(text);
  for (const auto& re : date_patterns)
    if (std::regex_match(s, re)) return DataType::Date;
  if (std::regex_match(s, amount)) return DataType::Amount;
  if (std::regex_match(s, number)) return DataType::Number;
  if (std::regex_match(s, alnum)) return DataType::Alphanumeric;
  if (lexicons.names.contains(s)) return DataType::Name;
  if (lexicons.cities.contains(s)) return DataType::City;
  if (lexicons.medical_terms.contains(s)) return DataType::MedicalTerm;
  return DataType::Word;
}

Layout analyze_layout(std::span<const SourceToken> tokens, const Lexicons& lexicons) {
  Layout layout;
  const int n = static_cast<int>(tokens.size());
  layout.tokens.resize(n);
  if (n == 0) return layout;

  std::vector<double> heights;
  for (int i = 0; i < n; ++i) {
    auto& t = layout.tokens[i];
    t.text = tokens[i].text;
    t.box = tokens[i].box;
    t.dtype = datatype_of(t.text, lexicons);
    heights.push_back(t.box.height());
  }
  layout.median_token_height = median(heights);
  const double line_tol = 0.4 * layout.median_token_height;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ba = tokens[a].box;
    const auto& bb = tokens[b].box;
    if (ba.center_y() != bb.center_y()) return ba.center_y() < bb.center_y();
    if (ba.x0 != bb.x0) return ba.x0 < bb.x0;
    return a < b;
  });

  std::vector<std::vector<int>> groups;
  double prev_cy = 0;
  for (int idx : order) {
    double cy = tokens[idx].box.center_y();
    if (groups.empty() || cy - prev_cy > line_tol) groups.emplace_back();
    groups.back().push_back(idx);
    prev_cy = cy;
  }

  std::vector<double> line_heights;
  for (auto& g : groups) {
    std::sort(g.begin(), g.end(), [&](int a, int b) {
      const auto& ba = tokens[a].box;
      const auto& bb = tokens[b].box;
      if (ba.x0 != bb.x0) return ba.x0 < bb.x0;
      if (ba.x1 != bb.x1) return ba.x1 < bb.x1;
      if (ba.y0 != bb.y0) return ba.y0 < bb.y0;
      return a < b;
    });
    PageLine line;
    line.id = static_cast<int>(layout.lines.size());
    line.box = tokens[g.front()].box;
    for (std::size_t w = 0; w < g.size(); ++w) {
      auto& t = layout.tokens[g[w]];
      t.line_id = line.id;
      t.word_id = static_cast<int>(w);
      line.box = line.box.united(t.box);
      if (w) line.text += ' ';
      line.text += t.text;
    }
    line.tokens = g;
    line_heights.push_back(line.box.height());
    layout.lines.push_back(std::move(line));
  }
  layout.median_line_height = median(line_heights);
  const double h = layout.median_line_height;

  for (auto& line : layout.lines) {
    bool join = false;
    if (line.id > 0) {
      const auto& prev = layout.lines[line.id - 1];
      join = std::abs(line.box.x0 - prev.box.x0) <= 0.5 * h &&
             (line.box.y0 - prev.box.y1) <= 2.0 * h;
    }
    if (!join) {
      TextBlock b;
      b.id = static_cast<int>(layout.blocks.size());
      b.box = line.box;
      layout.blocks.push_back(b);
    }
    auto& block = layout.blocks.back();
    block.lines.push_back(line.id);
    block.box = block.box.united(line.box);
    line.block_id = block.id;
  }

  int seq = 0;
  for (const auto& line : layout.lines) {
    for (int idx : line.tokens) {
      auto& t = layout.tokens[idx];
      t.block_id = line.block_id;
      t.seq = seq++;
      layout.reading_order.push_back(idx);
    }
  }
  return layout;
}

namespace {

constexpr RelationSchema kSchemas[] = {
    {"text_blocks_master", 3},       {"page_lines_master", 3},
    {"lines_below_block_word", 5},   {"word_in_line", 7},
    {"above_block", 4},              {"below_block", 4},
    {"above_line", 4},               {"below_line", 4},
    {"word_right_left", 8},          {"right_block", 4},
    {"left_block", 4},               {"right_line", 4},
    {"left_line", 4},                {"block_to_substring", 6},
    {"block_to_substring_dtype", 6}, {"line_to_substring", 6},
    {"line_to_substring_dtype", 6},
};

Term sym(std::string_view s) { return Term::symbol(std::string(s)); }
Term num(std::int64_t v) { return Term::integer(v); }

// Vertical neighbours of ordered items: above(upper, lower, prox) and
// below(lower, upper, prox); prox 0 is the nearest.
void vertical(const Term& doc, int count, std::vector<std::vector<Term>>& above,
              std::vector<std::vector<Term>>& below) {
  for (int lower = 0; lower < count; ++lower)
    for (int upper = lower - 1; upper >= 0; --upper)
      above.push_back({doc, num(upper), num(lower), num(lower - upper - 1)});
  for (int upper = 0; upper < count; ++upper)
    for (int lower = upper + 1; lower < count; ++lower)
      below.push_back({doc, num(lower), num(upper), num(lower - upper - 1)});
}

// left(l, r, prox): l ends before r starts; prox ranks by horizontal gap
// among everything left of r. right(r, l, prox) symmetric.
void horizontal(const Term& doc, const std::vector<BoundingBox>& boxes,
                std::vector<std::vector<Term>>& left, std::vector<std::vector<Term>>& right) {
  const int n = static_cast<int>(boxes.size());
  for (int r = 0; r < n; ++r) {
    std::vector<std::pair<int, int>> cands;
    for (int l = 0; l < n; ++l)
      if (l != r && boxes[l].x1 <= boxes[r].x0) cands.emplace_back(boxes[r].x0 - boxes[l].x1, l);
    std::sort(cands.begin(), cands.end());
    for (std::size_t p = 0; p < cands.size(); ++p)
      left.push_back({doc, num(cands[p].second), num(r), num(static_cast<int>(p))});
  }
  for (int l = 0; l < n; ++l) {
    std::vector<std::pair<int, int>> cands;
    for (int r = 0; r < n; ++r)
      if (l != r && boxes[l].x1 <= boxes[r].x0) cands.emplace_back(boxes[r].x0 - boxes[l].x1, r);
    std::sort(cands.begin(), cands.end());
    for (std::size_t p = 0; p < cands.size(); ++p)
      right.push_back({doc, num(cands[p].second), num(l), num(static_cast<int>(p))});
  }
}

// Every (left delimiter, right delimiter) pair over [<start>, tokens..., <end>]
// with at least one token strictly between. Occurrence indices count per
// delimiter-key pair in (left, right) position order.
void substrings(const Term& doc, const Term& container, const Layout& layout,
                const std::vector<int>& toks, std::vector<std::vector<Term>>& by_text,
                std::vector<std::vector<Term>>& by_type) {
  const int n = static_cast<int>(toks.size());
  auto text_at = [&](int i) -> std::string {
    if (i == 0) return std::string(kLineStart);
    if (i == n + 1) return std::string(kLineEnd);
    return layout.tokens[toks[i - 1]].text;
  };
  auto tag_at = [&](int i) -> std::string {
    if (i == 0) return std::string(kLineStart);
    if (i == n + 1) return std::string(kLineEnd);
    return std::string(datatype_tag(layout.tokens[toks[i - 1]].dtype));
  };
  std::map<std::pair<std::string, std::string>, int> text_count, type_count;
  for (int i = 0; i <= n + 1; ++i) {
    std::string between;
    for (int j = i + 1; j <= n + 1; ++j) {
      if (j - i >= 2) {
        auto lt = text_at(i), rt = text_at(j);
        int& ti = text_count[{lt, rt}];
        by_text.push_back({doc, container, sym(lt), sym(rt), num(ti++), sym(between)});
        auto lg = tag_at(i), rg = tag_at(j);
        int& gi = type_count[{lg, rg}];
        by_type.push_back({doc, container, sym(lg), sym(rg), num(gi++), sym(between)});
      }
      if (j <= n) {
        if (!between.empty()) between += ' ';
        between += layout.tokens[toks[j - 1]].text;
      }
    }
  }
}

}  // namespace

std::span<const RelationSchema> relation_schemas() { return kSchemas; }

std::optional<std::size_t> relation_arity(std::string_view name) {
  for (const auto& s : kSchemas)
    if (s.name == name) return s.arity;
  return std::nullopt;
}

RelationSet derive_relations(const std::string& doc_id, const Layout& layout) {
  RelationSet rel;
  for (const auto& s : kSchemas) rel[std::string(s.name)];
  const Term doc = sym(doc_id);

  for (int idx : layout.reading_order) {
    const auto& t = layout.tokens[idx];
    rel["word_in_line"].push_back({doc, num(t.block_id), sym(datatype_tag(t.dtype)), num(t.seq),
                                   num(t.line_id), sym(t.text), num(t.word_id)});
  }

  for (const auto& line : layout.lines) {
    rel["page_lines_master"].push_back({doc, num(line.id), sym(line.text)});
    for (std::size_t w = 1; w < line.tokens.size(); ++w) {
      const auto& l = layout.tokens[line.tokens[w - 1]];
      const auto& r = layout.tokens[line.tokens[w]];
      rel["word_right_left"].push_back({doc, num(line.id), sym(l.text), sym(datatype_tag(l.dtype)),
                                        num(l.word_id), sym(r.text), sym(datatype_tag(r.dtype)),
                                        num(r.word_id)});
    }
  }

  for (const auto& block : layout.blocks)
    for (int l : block.lines) rel["text_blocks_master"].push_back({doc, num(block.id), num(l)});

  for (const auto& line : layout.lines) {
    const auto& block = layout.blocks[line.block_id];
    for (std::size_t w = 0; w < line.tokens.size(); ++w)
      for (int below : block.lines)
        if (below > line.id)
          rel["lines_below_block_word"].push_back({doc, num(line.id), num(static_cast<int>(w)),
                                                   num(below), num(below - line.id - 1)});
  }

  vertical(doc, static_cast<int>(layout.lines.size()), rel["above_line"], rel["below_line"]);
  vertical(doc, static_cast<int>(layout.blocks.size()), rel["above_block"], rel["below_block"]);

  std::vector<BoundingBox> line_boxes, block_boxes;
  for (const auto& l : layout.lines) line_boxes.push_back(l.box);
  for (const auto& b : layout.blocks) block_boxes.push_back(b.box);
  horizontal(doc, line_boxes, rel["left_line"], rel["right_line"]);
  horizontal(doc, block_boxes, rel["left_block"], rel["right_block"]);

  for (const auto& line : layout.lines)
    substrings(doc, num(line.id), layout, line.tokens, rel["line_to_substring"],
               rel["line_to_substring_dtype"]);
  for (const auto& block : layout.blocks) {
    std::vector<int> toks;
    for (int l : block.lines)
      toks.insert(toks.end(), layout.lines[l].tokens.begin(), layout.lines[l].tokens.end());
    substrings(doc, num(block.id), layout, toks, rel["block_to_substring"],
               rel["block_to_substring_dtype"]);
  }
  return rel;
}

RelationSet derive_relations(const std::string& doc_id, std::span<const SourceToken> tokens,
                             const Lexicons& lexicons) {
  return derive_relations(doc_id, analyze_layout(tokens, lexicons));
}

Relation::Relation(std::string name, std::size_t arity, std::vector<std::vector<Term>> rows)
    : name_(std::move(name)), arity_(arity), rows_(std::move(rows)), index_(arity) {
  for (std::uint32_t i = 0; i < rows_.size(); ++i)
    for (std::size_t c = 0; c < arity_; ++c) index_[c][rows_[i][c]].push_back(i);
}

std::span<const std::uint32_t> Relation::postings(std::size_t col, const Term& value) const {
  const auto& idx = index_[col];
  auto it = idx.find(value);
  if (it == idx.end()) return {};
  return it->second;
}

DocumentFacts DocumentFacts::build(std::string doc_id, PageSize page,
                                   std::vector<SourceToken> tokens, const Lexicons& lexicons) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].text.empty())
      throw ValidationError("token " + std::to_string(i) + ": empty text");
    if (!tokens[i].box.valid())
      throw ValidationError("token " + std::to_string(i) + " ('" + tokens[i].text +
                            "'): invalid box");
  }
  for (std::size_t i = 0; i < tokens.size(); ++i)
    for (std::size_t j = i + 1; j < tokens.size(); ++j)
      if (tokens[i].box == tokens[j].box && tokens[i].text != tokens[j].text)
        throw ValidationError("tokens " + std::to_string(i) + " and " + std::to_string(j) +
                              " share a box but differ in text ('" + tokens[i].text + "' vs '" +
                              tokens[j].text + "')");

  DocumentFacts f;
  f.doc_id_ = std::move(doc_id);
  f.page_ = page;
  f.source_ = std::move(tokens);
  f.layout_ = analyze_layout(f.source_, lexicons);
  auto rel = derive_relations(f.doc_id_, f.layout_);
  for (auto& [name, rows] : rel) {
    auto arity = *relation_arity(name);
    f.relations_.emplace(name, Relation(name, arity, std::move(rows)));
  }
  for (const auto& t : f.layout_.tokens)
    if (t.dtype == DataType::Word) f.keyword_candidates_.insert(t.text);
  return f;
}

const Relation* DocumentFacts::relation(std::string_view name) const {
  auto it = relations_.find(name);
  return it == relations_.end() ? nullptr : &it->second;
}

std::size_t DocumentFacts::atom_count() const {
  std::size_t n = 0;
  for (const auto& [_, r] : relations_) n += r.size();
  return n;
}

std::vector<Atom> DocumentFacts::query(std::string_view name,
                                       const std::vector<std::optional<Term>>& pattern) const {
  const Relation* r = relation(name);
  if (!r) throw LogicError("unknown relation: " + std::string(name));
  if (pattern.size() != r->arity())
    throw LogicError("pattern for " + std::string(name) + " has " +
                     std::to_string(pattern.size()) + " fields, expected " +
                     std::to_string(r->arity()));
  std::vector<Atom> out;
  for (const auto& row : r->rows()) {
    bool ok = true;
    for (std::size_t c = 0; c < row.size() && ok; ++c)
      if (pattern[c] && !unify(*pattern[c], row[c])) ok = false;
    if (ok) out.push_back(Atom{r->name(), row});
  }
  return out;
}

bool DocumentFacts::is_keyword_candidate(std::string_view text) const {
  return keyword_candidates_.find(text) != keyword_candidates_.end();
}

int DocumentFacts::token_index(int line_id, int word_id) const {
  if (line_id < 0 || line_id >= static_cast<int>(layout_.lines.size())) return -1;
  const auto& toks = layout_.lines[line_id].tokens;
  if (word_id < 0 || word_id >= static_cast<int>(toks.size())) return -1;
  return toks[word_id];
}

DocumentFacts parse_fact_file(std::string_view json_text, const std::string& source,
                              const Lexicons& lexicons) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, e.what());
  }
  auto field_error = [&](const std::string& field, const std::string& what) {
    return ParseError(source + ": " + field, what);
  };
  if (!j.is_object()) throw field_error("<root>", "expected an object");
  if (!j.contains("doc_id") || !j["doc_id"].is_string())
    throw field_error("doc_id", "missing or not a string");
  PageSize page;
  if (j.contains("page")) {
    const auto& p = j["page"];
    if (!p.is_object() || !p.contains("width") || !p.contains("height") ||
        !p["width"].is_number_integer() || !p["height"].is_number_integer())
      throw field_error("page", "expected {width:int, height:int}");
    page = {p["width"].get<int>(), p["height"].get<int>()};
  }
  if (!j.contains("tokens") || !j["tokens"].is_array())
    throw field_error("tokens", "missing or not an array");
  std::vector<SourceToken> tokens;
  const auto& arr = j["tokens"];
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string at = "tokens[" + std::to_string(i) + "]";
    const auto& t = arr[i];
    if (!t.is_object() || !t.contains("text") || !t["text"].is_string())
      throw field_error(at + ".text", "missing or not a string");
    if (!t.contains("box") || !t["box"].is_array() || t["box"].size() != 4)
      throw field_error(at + ".box", "expected [x0,y0,x1,y1]");
    for (const auto& v : t["box"])
      if (!v.is_number_integer()) throw field_error(at + ".box", "coordinates must be integers");
    SourceToken tok{t["text"].get<std::string>(),
                    {t["box"][0].get<int>(), t["box"][1].get<int>(), t["box"][2].get<int>(),
                     t["box"][3].get<int>()}};
    tokens.push_back(std::move(tok));
  }
  try {
    return DocumentFacts::build(j["doc_id"].get<std::string>(), page, std::move(tokens), lexicons);
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

DocumentFacts load_fact_file(const std::filesystem::path& path, const Lexicons& lexicons) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open fact file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_fact_file(ss.str(), path.string(), lexicons);
}

std::string fact_file_json(const std::string& doc_id, PageSize page,
                           std::span<const SourceToken> tokens) {
  // Written by hand so the token section has one stable line per token.
  std::string out = "{\n  \"doc_id\": " + json(doc_id).dump() + ",\n  \"page\": {\"width\": " +
                    std::to_string(page.width) + ", \"height\": " + std::to_string(page.height) +
                    "},\n  \"tokens\": [";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    out += i ? ",\n    " : "\n    ";
    out += "{\"text\": " + json(t.text).dump() + ", \"box\": [" + std::to_string(t.box.x0) + ", " +
           std::to_string(t.box.y0) + ", " + std::to_string(t.box.x1) + ", " +
           std::to_string(t.box.y1) + "]}";
  }
  out += tokens.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

std::string fact_file_json(const DocumentFacts& facts) {
  return fact_file_json(facts.doc_id(), facts.page(), facts.source_tokens());
}

}  // namespace docsynth

#include "docsynth/docgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "docsynth/error.hpp"

namespace docsynth {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void NoiseProfile::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0 && p <= 1))
      throw ValidationError(std::string(name) + " must be within [0,1]");
  };
  prob(token_drop_prob, "token_drop_prob");
  prob(keyword_variant_prob, "keyword_variant_prob");
  prob(line_shift_prob, "line_shift_prob");
  if (!(box_jitter >= 0)) throw ValidationError("box_jitter must be >= 0");
}

namespace {

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  return s;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

char random_digit(std::mt19937_64& rng, bool nonzero = false) {
  return static_cast<char>('0' + uniform_int(rng, nonzero ? 1 : 0, 9));
}

std::string two_digits(int v) {
  std::string s = std::to_string(v);
  return s.size() < 2 ? "0" + s : s;
}

std::string draw_date(std::string_view ex, std::mt19937_64& rng) {
  const int y = uniform_int(rng, 1990, 2029), m = uniform_int(rng, 1, 12), d = uniform_int(rng, 1, 28);
  if (ex.size() == 10 && ex[4] == '-') return std::to_string(y) + "-" + two_digits(m) + "-" + two_digits(d);
  const char sep = ex.size() > 2 ? ex[2] : '.';
  const std::string year = ex.size() == 8 ? two_digits(y % 100) : std::to_string(y);
  return two_digits(d) + sep + two_digits(m) + sep + year;
}

std::string draw_amount(std::string_view ex, std::mt19937_64& rng) {
  const auto sep_pos = ex.find_last_of(".,");
  const std::size_t int_len = sep_pos == std::string_view::npos ? 1 : std::max<std::size_t>(sep_pos, 1);
  const char sep = sep_pos == std::string_view::npos ? '.' : ex[sep_pos];
  std::string s;
  for (std::size_t i = 0; i < int_len; ++i) s += random_digit(rng, i == 0 && int_len > 1);
  s += sep;
  s += random_digit(rng);
  s += random_digit(rng);
  return s;
}

std::string draw_number(std::string_view ex, std::mt19937_64& rng) {
  std::string s;
  const bool lead = ex.size() > 1 || (!ex.empty() && ex[0] != '0');
  for (std::size_t i = 0; i < std::max<std::size_t>(ex.size(), 1); ++i)
    s += random_digit(rng, i == 0 && lead);
  return s;
}

std::string draw_alnum(std::string_view ex, std::mt19937_64& rng) {
  std::string s;
  for (char c : ex) {
    if (std::isdigit(static_cast<unsigned char>(c)))
      s += random_digit(rng);
    else if (std::isupper(static_cast<unsigned char>(c)))
      s += static_cast<char>('A' + uniform_int(rng, 0, 25));
    else if (std::islower(static_cast<unsigned char>(c)))
      s += static_cast<char>('a' + uniform_int(rng, 0, 25));
    else
      s += c;
  }
  return s;
}

std::string pick(const std::set<std::string>& set, std::mt19937_64& rng) {
  if (set.empty()) return {};
  auto it = set.begin();
  std::advance(it, uniform_int(rng, 0, static_cast<int>(set.size()) - 1));
  return *it;
}

std::string match_case(std::string w, std::string_view ex) {
  const bool upper = !ex.empty() && std::all_of(ex.begin(), ex.end(), [](char c) {
    return !std::isalpha(static_cast<unsigned char>(c)) || std::isupper(static_cast<unsigned char>(c));
  });
  const bool cap = !ex.empty() && std::isupper(static_cast<unsigned char>(ex[0]));
  for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (upper && ex.size() > 1)
    for (auto& c : w) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  else if (cap && !w.empty())
    w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

std::string draw_word(std::string_view ex, std::mt19937_64& rng, std::span<const std::string> vocab) {
  if (!vocab.empty()) return match_case(vocab[uniform_int(rng, 0, static_cast<int>(vocab.size()) - 1)], ex);
  static const char* consonants = "bcdfghklmnprstvz";
  static const char* vowels = "aeiou";
  const int len = std::clamp(static_cast<int>(ex.size()), 4, 10);
  std::string w;
  for (int i = 0; i < len; ++i)
    w += i % 2 ? vowels[uniform_int(rng, 0, 4)] : consonants[uniform_int(rng, 0, 15)];
  return match_case(w, ex);
}

}  // namespace

std::optional<std::string> sample_like(std::string_view exemplar, DataType dtype,
                                       std::mt19937_64& rng, const Lexicons& lexicons,
                                       std::span<const std::string> vocabulary) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::string c;
    switch (dtype) {
      case DataType::Date: c = draw_date(exemplar, rng); break;
      case DataType::Amount: c = draw_amount(exemplar, rng); break;
      case DataType::Number: c = draw_number(exemplar, rng); break;
      case DataType::Alphanumeric: c = draw_alnum(exemplar, rng); break;
      case DataType::Name: c = pick(lexicons.names, rng); break;
      case DataType::City: c = pick(lexicons.cities, rng); break;
      case DataType::MedicalTerm: c = pick(lexicons.medical_terms, rng); break;
      case DataType::Word: c = draw_word(exemplar, rng, vocabulary); break;
    }
    if (!c.empty() && datatype_of(c, lexicons) == dtype) return c;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Template specs

const EntitySpec* TemplateSpec::entity(std::string_view name) const {
  for (const auto& e : entities)
    if (e.name == name) return &e;
  return nullptr;
}

const AmbiguitySpec* TemplateSpec::ambiguity_for(std::string_view name) const {
  for (const auto& a : ambiguity)
    if (a.entity == name) return &a;
  return nullptr;
}

std::vector<std::string> TemplateSpec::boilerplate_words() const {
  std::vector<std::string> out;
  for (const auto& l : lines)
    for (const auto& it : l.items)
      if (it.kind == LineItem::Kind::Text)
        for (auto& w : split_words(it.text)) out.push_back(std::move(w));
  return out;
}

TemplateSpec parse_template(std::string_view json_text, const std::string& source,
                            const Lexicons& lexicons) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, e.what());
  }
  auto fail = [&](const std::string& where, const std::string& what) -> ParseError {
    return ParseError(source + ": " + where, what);
  };
  auto number = [&](const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_number()) throw fail(where + "." + key, "expected a number");
    return obj[key].get<double>();
  };
  auto string = [&](const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_string()) throw fail(where + "." + key, "expected a string");
    return obj[key].get<std::string>();
  };

  if (!j.is_object()) throw fail("<root>", "expected an object");
  TemplateSpec t;
  t.template_id = string(j, "template_id", "<root>");
  if (!j.contains("page") || !j["page"].is_object()) throw fail("page", "expected an object");
  t.page.width = static_cast<int>(number(j["page"], "width", "page"));
  t.page.height = static_cast<int>(number(j["page"], "height", "page"));
  if (j.contains("line_height")) t.line_height = number(j, "line_height", "<root>");
  if (j.contains("char_width")) t.char_width = number(j, "char_width", "<root>");
  if (t.line_height <= 0 || t.char_width <= 0) throw fail("<root>", "line_height and char_width must be positive");

  if (!j.contains("entities") || !j["entities"].is_array()) throw fail("entities", "expected an array");
  for (std::size_t i = 0; i < j["entities"].size(); ++i) {
    const auto& e = j["entities"][i];
    const std::string where = "entities[" + std::to_string(i) + "]";
    EntitySpec spec;
    spec.name = string(e, "name", where);
    spec.example = string(e, "example", where);
    auto words = split_words(spec.example);
    if (words.empty()) throw fail(where + ".example", "must contain at least one token");
    for (const auto& w : words) spec.dtypes.push_back(datatype_of(w, lexicons));
    if (e.contains("dtype")) {
      auto declared = datatype_from_name(string(e, "dtype", where));
      if (!declared) throw fail(where + ".dtype", "unknown datatype");
      for (auto d : spec.dtypes)
        if (d != *declared)
          throw fail(where + ".example", "token datatype differs from declared dtype");
    }
    if (t.entity(spec.name)) throw fail(where + ".name", "duplicate entity " + spec.name);
    t.entities.push_back(std::move(spec));
  }

  if (!j.contains("lines") || !j["lines"].is_array()) throw fail("lines", "expected an array");
  for (std::size_t i = 0; i < j["lines"].size(); ++i) {
    const auto& l = j["lines"][i];
    const std::string where = "lines[" + std::to_string(i) + "]";
    LineSpec line;
    line.y = number(l, "y", where);
    line.x = number(l, "x", where);
    if (!l.contains("items") || !l["items"].is_array()) throw fail(where + ".items", "expected an array");
    for (std::size_t k = 0; k < l["items"].size(); ++k) {
      const auto& it = l["items"][k];
      const std::string iw = where + ".items[" + std::to_string(k) + "]";
      LineItem item;
      if (it.is_string()) {
        item.text = it.get<std::string>();
      } else if (it.is_object()) {
        if (it.contains("text")) {
          item.text = string(it, "text", iw);
        } else if (it.contains("entity")) {
          item.kind = LineItem::Kind::Entity;
          item.entity = string(it, "entity", iw);
        } else if (it.contains("decoy")) {
          item.kind = LineItem::Kind::Decoy;
          item.entity = string(it, "decoy", iw);
        } else {
          throw fail(iw, "expected text, entity or decoy");
        }
        if (it.contains("x")) item.x = number(it, "x", iw);
      } else {
        throw fail(iw, "expected a string or an object");
      }
      if (item.kind == LineItem::Kind::Text && split_words(item.text).empty())
        throw fail(iw, "empty text");
      if (item.kind != LineItem::Kind::Text && !t.entity(item.entity))
        throw fail(iw, "unknown entity " + item.entity);
      line.items.push_back(std::move(item));
    }
    t.lines.push_back(std::move(line));
  }

  if (j.contains("ambiguity")) {
    for (std::size_t i = 0; i < j["ambiguity"].size(); ++i) {
      const auto& a = j["ambiguity"][i];
      const std::string where = "ambiguity[" + std::to_string(i) + "]";
      AmbiguitySpec spec;
      spec.entity = string(a, "entity", where);
      spec.k = static_cast<int>(number(a, "k", where));
      spec.agree_prob = a.contains("agree_prob") ? number(a, "agree_prob", where) : 1.0;
      if (!t.entity(spec.entity)) throw fail(where + ".entity", "unknown entity " + spec.entity);
      if (spec.k < 2) throw fail(where + ".k", "must be at least 2");
      if (spec.agree_prob < 0 || spec.agree_prob > 1) throw fail(where + ".agree_prob", "must be within [0,1]");
      t.ambiguity.push_back(spec);
    }
  }
  if (j.contains("variants")) {
    if (!j["variants"].is_object()) throw fail("variants", "expected an object");
    for (const auto& [word, syns] : j["variants"].items())
      t.variants[word] = syns.get<std::vector<std::string>>();
  }
  if (j.contains("vocabulary")) t.vocabulary = j["vocabulary"].get<std::vector<std::string>>();

  for (const auto& e : t.entities) {
    int placed = 0, decoys = 0;
    for (const auto& l : t.lines)
      for (const auto& it : l.items) {
        placed += it.kind == LineItem::Kind::Entity && it.entity == e.name;
        decoys += it.kind == LineItem::Kind::Decoy && it.entity == e.name;
      }
    if (placed != 1)
      throw ValidationError(source + ": entity " + e.name + " must be placed exactly once");
    const auto* amb = t.ambiguity_for(e.name);
    const int expected = amb ? amb->k - 1 : 0;
    if (decoys != expected)
      throw ValidationError(source + ": entity " + e.name + " has " + std::to_string(decoys) +
                            " decoys, expected " + std::to_string(expected));
  }
  return t;
}

TemplateSpec load_template(const std::filesystem::path& path, const Lexicons& lexicons) {
  return parse_template(read_text_file(path), path.string(), lexicons);
}

std::vector<std::filesystem::path> builtin_template_paths() {
  std::vector<std::filesystem::path> out;
  const std::filesystem::path dir = std::filesystem::path(DOCSYNTH_DATA_DIR) / "templates";
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec))
    if (entry.path().extension() == ".json") out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Generation

std::uint64_t document_seed(std::uint64_t corpus_seed, std::uint64_t index) {
  std::uint64_t x = corpus_seed + index + 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string corpus_doc_id(const std::string& template_id, std::size_t index) {
  std::string n = std::to_string(index);
  if (n.size() < 4) n.insert(0, 4 - n.size(), '0');
  return template_id + "_" + n;
}

namespace {

struct Occurrence {
  std::string entity;
  std::vector<int> tokens;  // indices into the emitted tokens
};

std::string corrupt(std::string w, std::mt19937_64& rng) {
  std::vector<std::size_t> letters;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (std::isalpha(static_cast<unsigned char>(w[i]))) letters.push_back(i);
  if (letters.empty()) return w + "'";
  const std::size_t pos = letters[uniform_int(rng, 0, static_cast<int>(letters.size()) - 1)];
  const bool upper = std::isupper(static_cast<unsigned char>(w[pos]));
  char c;
  do {
    c = static_cast<char>((upper ? 'A' : 'a') + uniform_int(rng, 0, 25));
  } while (c == w[pos]);
  w[pos] = c;
  return w;
}

int px(double v) { return static_cast<int>(std::lround(v)); }

std::string field_name(const LineItem& it) {
  switch (it.kind) {
    case LineItem::Kind::Entity: return "entity " + it.entity;
    case LineItem::Kind::Decoy: return "decoy of " + it.entity;
    default: return "text '" + it.text + "'";
  }
}

}  // namespace

GeneratedDocument generate_document(const TemplateSpec& spec, std::uint64_t seed,
                                    const NoiseProfile& noise, const Lexicons& lexicons,
                                    const std::string& doc_id) {
  noise.validate();
  std::mt19937_64 rng(seed);

  std::set<std::string> reserved;
  for (auto& w : spec.boilerplate_words()) reserved.insert(std::move(w));
  for (const auto& [w, syns] : spec.variants) reserved.insert(syns.begin(), syns.end());
  std::vector<std::string> vocab;
  for (const auto& w : spec.vocabulary)
    if (!reserved.contains(w)) vocab.push_back(w);

  auto sample_value = [&](const EntitySpec& e) {
    const auto words = split_words(e.example);
    for (int attempt = 0; attempt < 100; ++attempt) {
      std::vector<std::string> cand;
      bool ok = true;
      for (std::size_t i = 0; i < words.size() && ok; ++i) {
        auto w = sample_like(words[i], e.dtypes[i], rng, lexicons, vocab);
        ok = w && !reserved.contains(*w) &&
             std::find(cand.begin(), cand.end(), *w) == cand.end();
        if (ok) cand.push_back(*w);
      }
      if (!ok) continue;
      reserved.insert(cand.begin(), cand.end());
      return cand;
    }
    throw ValidationError(spec.template_id + ": cannot sample a value for entity " + e.name);
  };

  std::map<std::string, std::vector<std::string>> values;
  for (const auto& e : spec.entities) values[e.name] = sample_value(e);

  std::map<std::string, bool> agree;
  for (const auto& a : spec.ambiguity) agree[a.entity] = uniform01(rng) < a.agree_prob;

  GeneratedDocument doc;
  doc.doc_id = doc_id;
  doc.page = spec.page;
  std::vector<Occurrence> occurrences;

  for (std::size_t li = 0; li < spec.lines.size(); ++li) {
    const auto& line = spec.lines[li];
    double shift = 0;
    if (noise.line_shift_prob > 0 && uniform01(rng) < noise.line_shift_prob)
      shift = std::uniform_real_distribution<double>(-3.0, 3.0)(rng) * spec.char_width;
    double cursor = line.x + shift;
    std::string prev = "line start";
    for (const auto& it : line.items) {
      const std::string field = field_name(it);
      if (it.x) {
        const double x = *it.x + shift;
        if (cursor > x + 1e-9)
          throw ValidationError(spec.template_id + ": line " + std::to_string(li) + ": " + prev +
                                " collides with " + field);
        cursor = x;
      }
      std::vector<std::string> words;
      if (it.kind == LineItem::Kind::Text) {
        words = split_words(it.text);
      } else if (it.kind == LineItem::Kind::Entity || agree[it.entity]) {
        words = values[it.entity];
      } else {
        words = sample_value(*spec.entity(it.entity));
      }
      const bool value_item = it.kind == LineItem::Kind::Entity ||
                              (it.kind == LineItem::Kind::Decoy && agree[it.entity]);
      Occurrence occ{it.entity, {}};
      for (const auto& w : words) {
        const double width = spec.char_width * static_cast<double>(w.size());
        BoundingBox box{px(cursor), px(line.y), px(cursor + width), px(line.y + spec.line_height)};
        cursor += width + spec.char_width;
        if (box.x1 > spec.page.width || box.y1 > spec.page.height)
          throw ValidationError(spec.template_id + ": line " + std::to_string(li) + ": " + field +
                                " exceeds the page");
        std::string text = w;
        if (it.kind == LineItem::Kind::Text) {
          if (noise.token_drop_prob > 0 && uniform01(rng) < noise.token_drop_prob) continue;
          if (noise.keyword_variant_prob > 0 && uniform01(rng) < noise.keyword_variant_prob) {
            auto v = spec.variants.find(w);
            if (v != spec.variants.end() && !v->second.empty())
              text = v->second[uniform_int(rng, 0, static_cast<int>(v->second.size()) - 1)];
            else
              text = corrupt(w, rng);
          }
        }
        if (value_item) occ.tokens.push_back(static_cast<int>(doc.tokens.size()));
        doc.tokens.push_back({text, box});
      }
      if (value_item) occurrences.push_back(std::move(occ));
      prev = field;
    }
  }

  if (noise.box_jitter > 0) {
    std::normal_distribution<double> jitter(0.0, noise.box_jitter);
    for (auto& t : doc.tokens) {
      auto& b = t.box;
      b.x0 = std::max(0, b.x0 + px(jitter(rng)));
      b.y0 = std::max(0, b.y0 + px(jitter(rng)));
      b.x1 += px(jitter(rng));
      b.y1 += px(jitter(rng));
      if (b.x1 < b.x0 + 1) b.x1 = b.x0 + 1;
      if (b.y1 < b.y0 + 1) b.y1 = b.y0 + 1;
    }
  }

  const Layout layout = analyze_layout(doc.tokens, lexicons);
  for (const auto& e : spec.entities) {
    TruthRecord r{doc_id, e.name, join(values[e.name]), {}};
    for (const auto& occ : occurrences) {
      if (occ.entity != e.name) continue;
      const auto& first = layout.tokens[occ.tokens.front()];
      const auto& last = layout.tokens[occ.tokens.back()];
      if (first.line_id != last.line_id || last.word_id - first.word_id + 1 != static_cast<int>(occ.tokens.size()))
        throw ValidationError(spec.template_id + ": value of entity " + e.name +
                              " is not contiguous within one line");
      r.locations.push_back({first.line_id, first.word_id, last.word_id});
    }
    std::sort(r.locations.begin(), r.locations.end());
    doc.truth.push_back(std::move(r));
  }
  return doc;
}

std::vector<std::string> generate_corpus(const TemplateSpec& spec, std::size_t n,
                                         std::uint64_t seed, const NoiseProfile& noise,
                                         const Lexicons& lexicons,
                                         const std::filesystem::path& out_dir) {
  if (n < 1) throw ValidationError("corpus size must be at least 1");
  std::vector<std::string> ids;
  std::vector<TruthRecord> truth;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = corpus_doc_id(spec.template_id, i);
    auto doc = generate_document(spec, document_seed(seed, i), noise, lexicons, id);
    write_text_file(out_dir / "docs" / (id + ".json"), fact_file_json(id, doc.page, doc.tokens));
    truth.insert(truth.end(), doc.truth.begin(), doc.truth.end());
    ids.push_back(id);
  }
  write_text_file(out_dir / "truth.json", truth_json(truth));
  return ids;
}

// ---------------------------------------------------------------------------
// Truth and annotation files

std::string truth_json(std::span<const TruthRecord> records) {
  std::string out = "[\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    json locs = json::array();
    for (const auto& l : r.locations) locs.push_back({l.line_id, l.word_start, l.word_end});
    out += "  {\"doc_id\": " + json(r.doc_id).dump() + ", \"entity\": " + json(r.entity).dump() +
           ", \"value\": " + json(r.value).dump() + ", \"locations\": " + locs.dump() + "}";
    out += i + 1 < records.size() ? ",\n" : "\n";
  }
  return out + "]\n";
}

std::vector<TruthRecord> parse_truth(std::string_view json_text, const std::string& source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, e.what());
  }
  if (!j.is_array()) throw ParseError(source, "expected an array of truth records");
  std::vector<TruthRecord> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& r = j[i];
    const std::string where = source + ": [" + std::to_string(i) + "]";
    try {
      TruthRecord t;
      t.doc_id = r.at("doc_id").get<std::string>();
      t.entity = r.at("entity").get<std::string>();
      t.value = r.at("value").get<std::string>();
      if (r.contains("locations"))
        for (const auto& l : r["locations"]) {
          auto v = l.get<std::vector<int>>();
          if (v.size() != 3) throw ParseError(where + ".locations", "expected [line, start, end]");
          t.locations.push_back({v[0], v[1], v[2]});
        }
      out.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw ParseError(where, e.what());
    }
  }
  return out;
}

std::vector<TruthRecord> load_truth(const std::filesystem::path& path) {
  return parse_truth(read_text_file(path), path.string());
}

std::string annotations_json(std::span<const Annotation> annotations) {
  std::string out = "[\n";
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    out += "  {\"entity\": " + json(annotations[i].entity).dump() +
           ", \"value\": " + json(annotations[i].value).dump() + "}";
    out += i + 1 < annotations.size() ? ",\n" : "\n";
  }
  return out + "]\n";
}

std::vector<Annotation> parse_annotations(std::string_view json_text, const std::string& source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, e.what());
  }
  if (!j.is_array()) throw ParseError(source, "expected an array of annotations");
  std::vector<Annotation> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = source + ": [" + std::to_string(i) + "]";
    if (!j[i].is_object() || !j[i].contains("entity") || !j[i]["entity"].is_string())
      throw ParseError(where + ".entity", "expected a string");
    if (!j[i].contains("value") || !j[i]["value"].is_string())
      throw ParseError(where + ".value", "expected a string");
    out.push_back({j[i]["entity"].get<std::string>(), j[i]["value"].get<std::string>()});
  }
  return out;
}

std::vector<Annotation> load_annotations(const std::filesystem::path& path) {
  return parse_annotations(read_text_file(path), path.string());
}

}  // namespace docsynth

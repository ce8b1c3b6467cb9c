#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "docsynth/term.hpp"

namespace docsynth {

// Pixel box, top-left origin, y grows downward.
struct BoundingBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  double center_y() const { return (y0 + y1) / 2.0; }
  bool valid() const { return x0 >= 0 && y0 >= 0 && x0 < x1 && y0 < y1; }
  BoundingBox united(const BoundingBox& o) const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

enum class DataType : std::uint8_t {
  Word,
  Alphanumeric,
  Number,
  Amount,
  Date,
  Name,
  City,
  MedicalTerm,
};

// "<date>", "<word>", ... as used inside relations and programs.
std::string_view datatype_tag(DataType t);
// "date", "word", ... as used in JSON files.
std::string_view datatype_name(DataType t);
std::optional<DataType> datatype_from_name(std::string_view name);
std::optional<DataType> datatype_from_tag(std::string_view tag);

// Token lists backing the lexicon tags. One token per line on disk.
struct Lexicons {
  std::set<std::string> names;
  std::set<std::string> cities;
  std::set<std::string> medical_terms;

  // Reads name.txt, city.txt and medical_term.txt; missing files are empty.
  static Lexicons load_dir(const std::filesystem::path& dir);
};

// Precedence: date > amount > number > alphanumeric > name > city >
// medical_term > word. First match wins.
DataType datatype_of(std::string_view text, const Lexicons& lexicons);

// A token as supplied by a fact file: text and geometry only.
struct SourceToken {
  std::string text;
  BoundingBox box;
};

struct WordToken {
  int word_id = 0;   // ordinal within line
  int line_id = 0;   // ordinal within page
  int block_id = 0;
  int seq = 0;       // reading-order index over the page
  std::string text;
  DataType dtype = DataType::Word;
  BoundingBox box;
};

struct PageLine {
  int id = 0;
  int block_id = 0;
  BoundingBox box;
  std::vector<int> tokens;  // indices into Layout::tokens, left to right
  std::string text;         // token texts joined by single spaces
};

struct TextBlock {
  int id = 0;
  BoundingBox box;
  std::vector<int> lines;
};

struct PageSize {
  int width = 0;
  int height = 0;
};

// Lines and blocks recovered from token geometry. tokens[] keeps the
// source order; ids refer to the derived structure.
struct Layout {
  std::vector<WordToken> tokens;
  std::vector<PageLine> lines;
  std::vector<TextBlock> blocks;
  std::vector<int> reading_order;  // token indices ordered by seq
  double median_token_height = 0;
  double median_line_height = 0;
};

// Tokens whose vertical centres are within 0.4 x median token height chain
// into one page line. Consecutive lines whose x0 differ by at most
// 0.5 x median line height and whose vertical gap is at most twice the
// median line height share a text block.
Layout analyze_layout(std::span<const SourceToken> tokens, const Lexicons& lexicons);

// Ground rows per relation name, in deterministic document order.
using RelationSet = std::map<std::string, std::vector<std::vector<Term>>>;

struct RelationSchema {
  std::string_view name;
  std::size_t arity;
};

// The 17 primitive relations with their arities.
std::span<const RelationSchema> relation_schemas();
std::optional<std::size_t> relation_arity(std::string_view name);

inline constexpr std::string_view kLineStart = "<start>";
inline constexpr std::string_view kLineEnd = "<end>";

RelationSet derive_relations(const std::string& doc_id, const Layout& layout);
RelationSet derive_relations(const std::string& doc_id, std::span<const SourceToken> tokens,
                             const Lexicons& lexicons);

// One indexed relation. Rows are ground.
class Relation {
 public:
  Relation(std::string name, std::size_t arity, std::vector<std::vector<Term>> rows);

  const std::string& name() const { return name_; }
  std::size_t arity() const { return arity_; }
  std::size_t size() const { return rows_.size(); }
  const std::vector<Term>& row(std::size_t i) const { return rows_[i]; }
  const std::vector<std::vector<Term>>& rows() const { return rows_; }

  // Row indices (ascending) whose column `col` equals value.
  std::span<const std::uint32_t> postings(std::size_t col, const Term& value) const;

 private:
  std::string name_;
  std::size_t arity_;
  std::vector<std::vector<Term>> rows_;
  std::vector<std::unordered_map<Term, std::vector<std::uint32_t>, TermHash>> index_;
};

// The fact database D of one single-page document. Immutable once built;
// relations are always derived from the tokens.
class DocumentFacts {
 public:
  static DocumentFacts build(std::string doc_id, PageSize page,
                             std::vector<SourceToken> tokens, const Lexicons& lexicons);

  const std::string& doc_id() const { return doc_id_; }
  Term doc_term() const { return Term::symbol(doc_id_); }
  PageSize page() const { return page_; }
  const std::vector<SourceToken>& source_tokens() const { return source_; }
  const Layout& layout() const { return layout_; }
  const std::vector<WordToken>& tokens() const { return layout_.tokens; }

  // nullptr when name is not one of the primitive relations.
  const Relation* relation(std::string_view name) const;
  const std::map<std::string, Relation, std::less<>>& relations() const { return relations_; }
  std::size_t atom_count() const;

  // Ground atoms of `name` matching pattern; nullopt entries are wildcards.
  // Throws LogicError on an unknown relation or a wrong pattern length.
  std::vector<Atom> query(std::string_view name,
                          const std::vector<std::optional<Term>>& pattern) const;

  // True when some token with this text carries the <word> datatype.
  bool is_keyword_candidate(std::string_view text) const;

  // Token indices (reading order) of the line/word position, or -1.
  int token_index(int line_id, int word_id) const;

 private:
  std::string doc_id_;
  PageSize page_;
  std::vector<SourceToken> source_;
  Layout layout_;
  std::map<std::string, Relation, std::less<>> relations_;
  std::set<std::string, std::less<>> keyword_candidates_;
};

// Fact-file ingestion and export (JSON, UTF-8):
//   { "doc_id": str, "page": {"width": int, "height": int},
//     "tokens": [{"text": str, "box": [x0,y0,x1,y1]}] }
// Any other keys (e.g. stale relations) are ignored.
DocumentFacts parse_fact_file(std::string_view json_text, const std::string& source,
                              const Lexicons& lexicons);
DocumentFacts load_fact_file(const std::filesystem::path& path, const Lexicons& lexicons);
std::string fact_file_json(const DocumentFacts& facts);
std::string fact_file_json(const std::string& doc_id, PageSize page,
                           std::span<const SourceToken> tokens);

}  // namespace docsynth

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "docsynth/facts.hpp"

namespace docsynth {

// An entity value as annotated by a human or recorded as ground truth.
struct Annotation {
  std::string entity;
  std::string value;  // tokens joined by single spaces
};

// Inclusive word span within one page line.
struct Location {
  int line_id = 0;
  int word_start = 0;
  int word_end = 0;

  friend bool operator==(const Location&, const Location&) = default;
  friend auto operator<=>(const Location&, const Location&) = default;
};

struct TruthRecord {
  std::string doc_id;
  std::string entity;
  std::string value;
  std::vector<Location> locations;
};

struct NoiseProfile {
  double box_jitter = 0;            // std-dev in pixels
  double token_drop_prob = 0;       // boilerplate tokens only
  double keyword_variant_prob = 0;  // synonym or one-letter corruption
  double line_shift_prob = 0;       // horizontal shift of a whole line

  bool zero() const {
    return box_jitter == 0 && token_drop_prob == 0 && keyword_variant_prob == 0 &&
           line_shift_prob == 0;
  }
  // Throws ValidationError when a probability is outside [0,1] or jitter < 0.
  void validate() const;
};

struct EntitySpec {
  std::string name;
  std::string example;            // shape of the value, e.g. "12.03.2018"
  std::vector<DataType> dtypes;   // per token of example
};

struct LineItem {
  enum class Kind { Text, Entity, Decoy };
  Kind kind = Kind::Text;
  std::string text;    // Text
  std::string entity;  // Entity, Decoy
  std::optional<double> x;  // minimum left position
};

struct LineSpec {
  double y = 0;
  double x = 0;
  std::vector<LineItem> items;
};

// Entity value repeated at k locations: the entity item plus k-1 decoys.
// Each document repeats the value everywhere with probability agree_prob;
// otherwise every decoy carries its own fresh value.
struct AmbiguitySpec {
  std::string entity;
  int k = 2;
  double agree_prob = 1.0;
};

// Template spec file (JSON):
//   { "template_id": str, "page": {"width", "height"},
//     "line_height": num, "char_width": num,
//     "entities": [{"name": str, "example": str, "dtype"?: str}],
//     "lines": [{"y": num, "x": num, "items": [ITEM, ...]}],
//     "ambiguity"?: [{"entity": str, "k": int, "agree_prob": num}],
//     "variants"?: {word: [synonym, ...]},
//     "vocabulary"?: [word, ...] }
//   ITEM = "boilerplate words" | {"text": str, "x": num}
//        | {"entity": name, "x"?: num} | {"decoy": name, "x"?: num}
struct TemplateSpec {
  std::string template_id;
  PageSize page;
  double line_height = 12;
  double char_width = 7;
  std::vector<EntitySpec> entities;
  std::vector<LineSpec> lines;
  std::vector<AmbiguitySpec> ambiguity;
  std::map<std::string, std::vector<std::string>> variants;
  std::vector<std::string> vocabulary;

  const EntitySpec* entity(std::string_view name) const;
  const AmbiguitySpec* ambiguity_for(std::string_view entity) const;
  std::vector<std::string> boilerplate_words() const;
};

TemplateSpec parse_template(std::string_view json_text, const std::string& source,
                            const Lexicons& lexicons);
TemplateSpec load_template(const std::filesystem::path& path, const Lexicons& lexicons);
// Built-in templates shipped in the data directory.
std::vector<std::filesystem::path> builtin_template_paths();

struct GeneratedDocument {
  std::string doc_id;
  PageSize page;
  std::vector<SourceToken> tokens;
  std::vector<TruthRecord> truth;  // one per entity, in template order
};

// Per-document seed derived from the corpus seed.
std::uint64_t document_seed(std::uint64_t corpus_seed, std::uint64_t index);

// Deterministic for fixed (spec, seed, noise). Throws ValidationError on a
// placement collision, naming the fields involved.
GeneratedDocument generate_document(const TemplateSpec& spec, std::uint64_t seed,
                                    const NoiseProfile& noise, const Lexicons& lexicons,
                                    const std::string& doc_id);

std::string corpus_doc_id(const std::string& template_id, std::size_t index);

// Writes <out>/docs/<doc_id>.json and <out>/truth.json; returns the doc ids.
std::vector<std::string> generate_corpus(const TemplateSpec& spec, std::size_t n,
                                         std::uint64_t seed, const NoiseProfile& noise,
                                         const Lexicons& lexicons,
                                         const std::filesystem::path& out_dir);

// Truth file: [{doc_id, entity, value, locations: [[line, start, end]]}]
std::string truth_json(std::span<const TruthRecord> records);
std::vector<TruthRecord> parse_truth(std::string_view json_text, const std::string& source);
std::vector<TruthRecord> load_truth(const std::filesystem::path& path);

// Annotation file: [{entity, value}]
std::string annotations_json(std::span<const Annotation> annotations);
std::vector<Annotation> parse_annotations(std::string_view json_text, const std::string& source);
std::vector<Annotation> load_annotations(const std::filesystem::path& path);

// A fresh token with the same datatype and shape as exemplar: dates keep
// their pattern, amounts their integer width and separator, numbers their
// length, alphanumerics their letter/digit pattern, lexicon types draw from
// the lexicon, words keep their capitalization. Returns nullopt when no
// candidate with the right datatype is found in 100 draws.
std::optional<std::string> sample_like(std::string_view exemplar, DataType dtype,
                                       std::mt19937_64& rng, const Lexicons& lexicons,
                                       std::span<const std::string> vocabulary = {});

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace docsynth

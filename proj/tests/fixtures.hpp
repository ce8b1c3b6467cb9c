#pragma once

#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "docsynth/docgen.hpp"
#include "docsynth/facts.hpp"

namespace fixtures {

inline const docsynth::Lexicons& lexicons() {
  static const docsynth::Lexicons lex =
      docsynth::Lexicons::load_dir(std::string(DOCSYNTH_DATA_DIR) + "/lexicons");
  return lex;
}

inline std::shared_ptr<const docsynth::DocumentFacts> running_example() {
  static const auto facts = std::make_shared<const docsynth::DocumentFacts>(
      docsynth::load_fact_file(std::string(DOCSYNTH_DATA_DIR) + "/examples/d1.json", lexicons()));
  return facts;
}

inline const docsynth::TemplateSpec& builtin_template(const std::string& name) {
  static std::map<std::string, docsynth::TemplateSpec> cache;
  auto it = cache.find(name);
  if (it == cache.end())
    it = cache.emplace(name, docsynth::load_template(std::string(DOCSYNTH_DATA_DIR) + "/templates/" +
                                                         name + ".json",
                                                     lexicons()))
             .first;
  return it->second;
}

struct GeneratedCorpus {
  std::vector<std::shared_ptr<const docsynth::DocumentFacts>> docs;
  std::vector<docsynth::TruthRecord> truth;

  std::vector<docsynth::Annotation> annotations(std::size_t i) const {
    std::vector<docsynth::Annotation> out;
    for (const auto& r : truth)
      if (r.doc_id == docs[i]->doc_id()) out.push_back({r.entity, r.value});
    return out;
  }
  std::string value(std::size_t i, const std::string& entity) const {
    for (const auto& r : truth)
      if (r.doc_id == docs[i]->doc_id() && r.entity == entity) return r.value;
    return {};
  }
};

// In-memory corpus, built the same way generate_corpus builds files.
inline const GeneratedCorpus& corpus(const std::string& name, std::size_t n, std::uint64_t seed,
                                     const docsynth::NoiseProfile& noise = {}) {
  static std::map<std::tuple<std::string, std::size_t, std::uint64_t, double, double, double, double>,
                  GeneratedCorpus>
      cache;
  auto key = std::make_tuple(name, n, seed, noise.box_jitter, noise.token_drop_prob,
                             noise.keyword_variant_prob, noise.line_shift_prob);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  GeneratedCorpus c;
  const auto& spec = builtin_template(name);
  for (std::size_t i = 0; i < n; ++i) {
    auto g = docsynth::generate_document(spec, docsynth::document_seed(seed, i), noise, lexicons(),
                                         docsynth::corpus_doc_id(spec.template_id, i));
    c.docs.push_back(std::make_shared<const docsynth::DocumentFacts>(
        docsynth::DocumentFacts::build(g.doc_id, g.page, g.tokens, lexicons())));
    c.truth.insert(c.truth.end(), g.truth.begin(), g.truth.end());
  }
  return cache.emplace(key, std::move(c)).first->second;
}

}  // namespace fixtures

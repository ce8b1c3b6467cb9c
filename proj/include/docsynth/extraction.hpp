#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "docsynth/facts.hpp"
#include "docsynth/training.hpp"

namespace docsynth {

// nullopt stands for NULL (the program returned nothing).
using Output = std::optional<std::string>;

struct OutputCount {
  Output value;
  std::size_t count = 0;
};

struct ExtractionResult {
  std::string entity;
  Output value;                           // the voted winner
  std::vector<OutputCount> distribution;  // most frequent first
  std::vector<Output> outputs;            // per program, in model order
  double entropy = 0;                     // bits
  bool confident = true;
  bool untrained = false;  // empty program set
};

struct ExtractOptions {
  double entropy_threshold = 0.9;
  bool entropy_includes_null = true;
};

// Shannon entropy in bits of the relative frequencies. Zero counts are
// ignored; an all-zero input has entropy 0.
double entropy(std::span<const std::size_t> counts);

// Distinct outputs ordered by count (descending); ties put non-NULL first,
// then the lexicographically smaller value.
std::vector<OutputCount> output_distribution(std::span<const Output> outputs);

// Majority vote: the most frequent output; if that is NULL the runner-up;
// NULL when every output is NULL or there are none.
Output vote(std::span<const Output> outputs);

ExtractionResult extract(const TemplateModel& model, const DocumentFacts& facts,
                         const std::string& entity, const ExtractOptions& options = {});

struct DocumentExtraction {
  std::string doc_id;
  std::vector<ExtractionResult> results;  // model entity order
};

DocumentExtraction extract_document(const TemplateModel& model, const DocumentFacts& facts,
                                    const ExtractOptions& options = {});

// {doc_id, results:[{entity, value, distribution, entropy, confident, ...}]}
std::string extraction_json(const DocumentExtraction& doc);

}  // namespace docsynth

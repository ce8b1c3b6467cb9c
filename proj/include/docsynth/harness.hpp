#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "docsynth/docgen.hpp"
#include "docsynth/extraction.hpp"
#include "docsynth/training.hpp"

namespace docsynth {

// A generated or hand-made corpus directory: docs/*.json plus truth.json.
struct Corpus {
  std::vector<std::shared_ptr<const DocumentFacts>> docs;  // sorted by doc id
  std::vector<TruthRecord> truth;

  static Corpus load(const std::filesystem::path& dir, const Lexicons& lexicons);

  std::shared_ptr<const DocumentFacts> find(std::string_view doc_id) const;
  // Truth annotations of one document, in truth-file order.
  std::vector<Annotation> annotations(std::string_view doc_id) const;
};

enum class CaseStatus { Correct, Incorrect, Null };
std::string_view case_status_name(CaseStatus s);

// One (document, entity) extraction in an evaluation.
struct CaseRecord {
  std::string doc_id;
  std::string entity;
  std::string truth;
  Output predicted;
  double entropy = 0;
  bool confident = true;
  std::size_t programs = 0;
  double correctness = 0;  // share of programs whose own output is right
  CaseStatus status = CaseStatus::Null;
};

struct EntityMetrics {
  std::string entity;
  std::size_t documents = 0;
  std::size_t correct = 0;
  std::size_t incorrect = 0;  // non-NULL and wrong
  std::size_t nulls = 0;
  double accuracy = 0;       // percent
  double mean_programs = 0;
  double correctness = 0;    // in [0,1], averaged over documents
  bool ambiguous = false;
  bool untrainable = false;
};

struct EvalReport {
  std::string template_id;
  std::string mode;
  int depth = 0;
  std::uint64_t seed = 0;
  double entropy_threshold = 0.9;
  std::vector<std::string> training_docs;
  std::vector<std::string> test_docs;
  std::vector<EntityMetrics> entities;
  std::vector<CaseRecord> cases;
  double mean_accuracy = 0;
  double mean_correctness = 0;
};

// Runs the model on every document that was not used for training and
// compares with the truth after whitespace normalization. A (document,
// entity) pair without a truth record is an error listing the documents.
EvalReport evaluate(const TemplateModel& model,
                    const std::vector<std::shared_ptr<const DocumentFacts>>& docs,
                    const std::vector<TruthRecord>& truth, const ExtractOptions& options = {});

std::string report_json(const EvalReport& report);
// entity,documents,accuracy,mean_programs,correctness,...
std::string report_csv(const EvalReport& report);
// doc_id,entity,status,entropy,... one row per case
std::string cases_csv(const EvalReport& report);

struct SweepOptions {
  std::vector<int> sizes{1, 2, 3, 4, 5};
  std::vector<std::string> modes{"raw", "os", "ns"};
  std::size_t pool = 5;  // the first `pool` documents; the rest are test documents
  TrainOptions train;
  ExtractOptions extract;
};

struct SweepRow {
  std::string mode;
  int n = 0;
  std::string entity;
  std::size_t combinations = 0;
  double accuracy = 0;
  double mean_programs = 0;
  double correctness = 0;
  double mean_k = 0;  // supplementary annotations (ns)
};

struct SweepReport {
  std::string template_id;
  std::vector<std::string> pool_docs;
  std::vector<std::string> test_docs;
  std::vector<SweepRow> rows;
};

// Trains on every size-n combination of pool documents and averages the
// metrics per entity. raw: MIP on the first document filtered by the rest;
// os: TrainOS on the first document, then filtered by the rest; ns: TrainNS
// on the first document with the rest as the pool, answered from the truth.
SweepReport sweep(const Corpus& corpus, const Lexicons& lexicons, const SweepOptions& options);

std::string sweep_json(const SweepReport& report);
std::string sweep_csv(const SweepReport& report);

}  // namespace docsynth

#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "docsynth/docgen.hpp"
#include "docsynth/engine.hpp"
#include "docsynth/facts.hpp"
#include "docsynth/synthesis.hpp"

namespace docsynth {

// Every start position of value as a contiguous token sequence inside one
// line, in reading order. Overlapping occurrences are all reported.
std::vector<Location> find_occurrences(const DocumentFacts& facts, std::string_view value);

struct AmbiguityReport {
  std::string entity;
  std::vector<Location> locations;
  std::size_t count() const { return locations.size(); }
};

// A report when the annotated value occurs at two or more locations.
std::optional<AmbiguityReport> detect_ambiguity(const DocumentFacts& facts, const Annotation& a);

struct CloneResult {
  std::shared_ptr<const DocumentFacts> facts;
  std::vector<Annotation> annotations;
};

// Same-template copy with every annotated value replaced, at all of its
// locations, by a fresh value of the same datatype and token count that
// occurs nowhere else in the document. Boilerplate and geometry are kept.
CloneResult noisy_clone(const DocumentFacts& facts, const std::vector<Annotation>& annotations,
                        std::uint64_t seed, const Lexicons& lexicons);

struct EntityModel {
  std::string entity;
  ProgramSet programs;
  std::vector<std::string> training_docs;  // documents the programs were checked on
  std::vector<std::string> supplementary;  // annotated pool documents, in order
  int k = 0;                               // supplementary annotations used
  std::vector<Location> ambiguity;         // occurrences in the training document, if >= 2
  std::size_t traces = 0;
  bool truncated = false;    // the proof enumeration hit its cap
  bool untrainable = false;  // no program survived
  bool ambiguous = false;    // ambiguity not resolved
  bool aborted = false;      // the annotator aborted the session
};

struct TemplateModel {
  std::string template_id;
  std::string mode;  // "os", "ns" or "raw"
  int depth = 4;
  std::uint64_t seed = 0;
  std::size_t pool_size = 0;
  std::shared_ptr<const TransitionSystem> background;
  std::vector<EntityModel> entities;

  const EntityModel* find(std::string_view entity) const;
  const TransitionSystem& system() const;
};

struct TrainOptions {
  int depth = 4;
  std::uint64_t seed = 1;
  std::size_t max_traces = 10000;
  std::string template_id;
  std::shared_ptr<const TransitionSystem> background;  // default catalog when null
};

// Intersection of MIP over the training document and over its noisy clone.
TemplateModel train_os(std::shared_ptr<const DocumentFacts> facts,
                       const std::vector<Annotation>& annotations, const Lexicons& lexicons,
                       const TrainOptions& options);

// MIP over the first document filtered by the others; no cloning.
TemplateModel train_raw(const std::vector<std::shared_ptr<const DocumentFacts>>& docs,
                        const std::vector<std::vector<Annotation>>& annotations,
                        const TrainOptions& options);

// ---------------------------------------------------------------------------
// Human-in-the-loop annotation.

struct CandidateOutput {
  std::string value;
  std::size_t programs = 0;  // how many surviving programs produce it
  std::vector<Location> locations;
};

struct AnnotationRequest {
  std::string entity;
  std::string doc_id;
  std::shared_ptr<const DocumentFacts> facts;
  std::vector<CandidateOutput> candidates;  // most supported first
  std::vector<Location> training_locations;
  int round = 0;  // 0-based index of this request for the entity
};

struct AnnotationResponse {
  enum class Kind { Accept, Skip, Abort };
  Kind kind = Kind::Skip;
  std::string value;

  static AnnotationResponse accept(std::string v) { return {Kind::Accept, std::move(v)}; }
  static AnnotationResponse skip() { return {Kind::Skip, {}}; }
  static AnnotationResponse abort() { return {Kind::Abort, {}}; }
};

class Annotator {
 public:
  virtual ~Annotator() = default;
  virtual AnnotationResponse annotate(const AnnotationRequest& request) = 0;
};

// Answers from a table of known values; skips documents on which all
// candidates agree (they cannot disambiguate) when skip_uninformative.
class ScriptedAnnotator : public Annotator {
 public:
  explicit ScriptedAnnotator(std::map<std::pair<std::string, std::string>, std::string> values,
                             bool skip_uninformative = true);
  static ScriptedAnnotator from_truth(const std::vector<TruthRecord>& truth,
                                      bool skip_uninformative = true);

  AnnotationResponse annotate(const AnnotationRequest& request) override;
  std::size_t calls() const { return calls_; }

 private:
  std::map<std::pair<std::string, std::string>, std::string> values_;  // (doc, entity)
  bool skip_uninformative_;
  std::size_t calls_ = 0;
};

// Prompts on a text stream: a number picks a candidate, "s" skips, "q"
// aborts, anything else is taken as the typed value.
class TerminalAnnotator : public Annotator {
 public:
  TerminalAnnotator(std::istream& in, std::ostream& out) : in_(in), out_(out) {}
  AnnotationResponse annotate(const AnnotationRequest& request) override;

 private:
  std::istream& in_;
  std::ostream& out_;
};

class CallbackAnnotator : public Annotator {
 public:
  explicit CallbackAnnotator(std::function<AnnotationResponse(const AnnotationRequest&)> fn)
      : fn_(std::move(fn)) {}
  AnnotationResponse annotate(const AnnotationRequest& request) override { return fn_(request); }

 private:
  std::function<AnnotationResponse(const AnnotationRequest&)> fn_;
};

// Hands requests to another thread (e.g. an HTTP handler) and blocks the
// training worker until resolve() is called with the answer.
class SessionAnnotator : public Annotator {
 public:
  AnnotationResponse annotate(const AnnotationRequest& request) override;

  // The request currently waiting for an answer.
  std::optional<AnnotationRequest> pending() const;
  // Answers the pending request; false when nothing is pending or the
  // entity/document do not match.
  bool resolve(const std::string& entity, const std::string& doc_id, AnnotationResponse response);
  // Aborts the pending and all future requests.
  void close();
  std::size_t resolved() const;

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::optional<AnnotationRequest> pending_;
  std::optional<AnnotationResponse> answer_;
  std::size_t resolved_ = 0;
  bool closed_ = false;
};

// TrainOS, then for each entity whose training value occurs at several
// locations, supplementary annotations are requested on pool documents in
// order. Each accepted annotation filters the entity's programs; the
// entity is resolved once an annotated document holds its value at exactly
// one location. With an empty pool the result equals train_os.
TemplateModel train_ns(std::shared_ptr<const DocumentFacts> facts,
                       const std::vector<Annotation>& annotations,
                       const std::vector<std::shared_ptr<const DocumentFacts>>& pool,
                       Annotator& annotator, const Lexicons& lexicons,
                       const TrainOptions& options);

// Candidate outputs of a program set on a document, most supported first
// (ties by value).
std::vector<CandidateOutput> candidate_outputs(const ProgramSet& set, const DocumentFacts& facts,
                                               const TransitionSystem& system);

// Model directory: model.json, programs/<entity>.pl and background.pl.
void save_model(const TemplateModel& model, const std::filesystem::path& dir);
TemplateModel load_model(const std::filesystem::path& dir);
std::string model_json(const TemplateModel& model);

}  // namespace docsynth

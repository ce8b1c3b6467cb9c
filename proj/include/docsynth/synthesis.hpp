#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "docsynth/engine.hpp"
#include "docsynth/facts.hpp"

namespace docsynth {

// A generalized extraction clause entity(A,B) :- t_1, ..., t_k where A is
// the document configuration [Doc] and B the output configuration [Value].
struct ExtractionProgram {
  std::string entity;
  Clause clause;
  std::string canonical;                // canonical_form(clause)
  std::vector<std::string> provenance;  // e.g. "doc_0001 trace 4"
};

// A (document, expected value) pair a program set has been checked against.
struct Witness {
  std::shared_ptr<const DocumentFacts> facts;
  std::string value;
};

// Programs for one entity, unique by canonical form, in discovery order.
class ProgramSet {
 public:
  ProgramSet() = default;
  explicit ProgramSet(std::string entity) : entity_(std::move(entity)) {}

  const std::string& entity() const { return entity_; }
  const std::vector<ExtractionProgram>& programs() const { return programs_; }
  std::size_t size() const { return programs_.size(); }
  bool empty() const { return programs_.empty(); }
  bool contains(const std::string& canonical) const { return index_.contains(canonical); }
  const ExtractionProgram* find(const std::string& canonical) const;

  // Returns false (and merges provenance) when the canonical form exists.
  bool add(ExtractionProgram p);

  const std::vector<Witness>& witnesses() const { return witnesses_; }
  void add_witness(Witness w) { witnesses_.push_back(std::move(w)); }

 private:
  std::string entity_;
  std::vector<ExtractionProgram> programs_;
  std::map<std::string, std::size_t> index_;
  std::vector<Witness> witnesses_;
};

struct MipOptions {
  int depth = 4;
  std::size_t max_traces = 10000;
};

struct MipResult {
  ProgramSet programs;
  std::size_t traces = 0;
  bool truncated = false;  // the trace cap was reached; programs are partial
};

// Meta-interpretive program synthesis for one training example: every
// proof of ts(([doc],[value])) becomes a ground explanation, is generalized,
// and kept if it is sound and complete on the document.
MipResult mip(std::shared_ptr<const DocumentFacts> facts, const TransitionSystem& system,
              const std::string& entity, const std::string& value, MipOptions options = {});

// entity([doc],[value]) :- trace.
Clause ground_explanation(const std::string& entity, const DocumentFacts& facts,
                          const std::string& value, const ProofTrace& trace);

// Lifts configurations (document id, line/word/block positions) and Skolem
// constants to variables; keywords, datatype tags and indices stay.
Clause generalize(const Clause& ground, const TransitionSystem& system);

// Body in data-flow order from A to B, variables renamed A, B, C, ... in
// first-use order.
Clause canonicalize(const Clause& c, const TransitionSystem& system);
std::string canonical_form(const Clause& c, const TransitionSystem& system);

ExtractionProgram make_program(const std::string& entity, const Clause& c,
                               const TransitionSystem& system);

// Distinct output values of the program on a document, in SLD order.
std::vector<std::string> program_outputs(const ExtractionProgram& p, const DocumentFacts& facts,
                                         const TransitionSystem& system,
                                         std::size_t limit = 1000);
// First output in SLD order, or nullopt (NULL).
std::optional<std::string> run_program(const ExtractionProgram& p, const DocumentFacts& facts,
                                       const TransitionSystem& system);

// value is among the outputs.
bool check_soundness(const ExtractionProgram& p, const DocumentFacts& facts,
                     const TransitionSystem& system, const std::string& value);
// The outputs are exactly {value}.
bool check_completeness(const ExtractionProgram& p, const DocumentFacts& facts,
                        const TransitionSystem& system, const std::string& value);

// Keeps the programs sound and complete on (facts, value); records the witness.
ProgramSet filter(const ProgramSet& set, std::shared_ptr<const DocumentFacts> facts,
                  const std::string& value, const TransitionSystem& system);

// Semantic intersection: a program from any input set survives iff it is
// sound and complete on every witness of every input set.
ProgramSet intersect(const std::vector<ProgramSet>& sets, const TransitionSystem& system);

// .pl text: one clause per line, provenance in '%' comments.
std::string program_set_text(const ProgramSet& set);
ProgramSet parse_program_set(std::string_view text, const std::string& entity,
                             const TransitionSystem& system, const std::string& source);

// Whitespace-normalized text: runs of whitespace become one space, trimmed.
std::string normalize_space(std::string_view s);

}  // namespace docsynth

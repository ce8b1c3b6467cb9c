#include "docsynth/training.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "docsynth/background.hpp"
#include "docsynth/error.hpp"
#include "parallel.hpp"

namespace docsynth {

using nlohmann::ordered_json;

namespace {

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::shared_ptr<const TransitionSystem> system_of(const TrainOptions& options) {
  if (options.background) return options.background;
  return std::shared_ptr<const TransitionSystem>(&default_catalog(), [](const TransitionSystem*) {});
}

void check_unique(const std::vector<Annotation>& annotations) {
  std::set<std::string> seen;
  for (const auto& a : annotations)
    if (!seen.insert(a.entity).second) throw ValidationError("duplicate annotation for entity " + a.entity);
}

}  // namespace

std::vector<Location> find_occurrences(const DocumentFacts& facts, std::string_view value) {
  const auto words = split_words(value);
  std::vector<Location> out;
  if (words.empty()) return out;
  const auto& layout = facts.layout();
  for (const auto& line : layout.lines) {
    const std::size_t n = line.tokens.size();
    for (std::size_t start = 0; start + words.size() <= n; ++start) {
      bool match = true;
      for (std::size_t k = 0; k < words.size() && match; ++k)
        match = layout.tokens[line.tokens[start + k]].text == words[k];
      if (match)
        out.push_back({line.id, static_cast<int>(start), static_cast<int>(start + words.size() - 1)});
    }
  }
  return out;
}

std::optional<AmbiguityReport> detect_ambiguity(const DocumentFacts& facts, const Annotation& a) {
  auto locs = find_occurrences(facts, a.value);
  if (locs.size() < 2) return std::nullopt;
  return AmbiguityReport{a.entity, std::move(locs)};
}

CloneResult noisy_clone(const DocumentFacts& facts, const std::vector<Annotation>& annotations,
                        std::uint64_t seed, const Lexicons& lexicons) {
  std::mt19937_64 rng(seed);
  std::vector<SourceToken> tokens = facts.source_tokens();
  const auto& layout = facts.layout();

  std::set<std::string> reserved;
  for (const auto& t : tokens) reserved.insert(t.text);

  CloneResult result;
  for (const auto& a : annotations) {
    const auto locations = find_occurrences(facts, a.value);
    if (locations.empty())
      throw ValidationError("value of entity " + a.entity + " does not occur in " + facts.doc_id());
    const auto words = split_words(a.value);
    std::optional<std::vector<std::string>> fresh;
    for (int attempt = 0; attempt < 100 && !fresh; ++attempt) {
      std::vector<std::string> cand;
      for (const auto& w : words) {
        auto s = sample_like(w, datatype_of(w, lexicons), rng, lexicons);
        if (!s || reserved.contains(*s) || std::find(cand.begin(), cand.end(), *s) != cand.end()) break;
        cand.push_back(*s);
      }
      if (cand.size() == words.size()) fresh = std::move(cand);
    }
    if (!fresh) throw ValidationError("cannot sample a fresh value for entity " + a.entity);
    reserved.insert(fresh->begin(), fresh->end());
    for (const auto& loc : locations) {
      const auto& line = layout.lines[loc.line_id];
      for (int w = loc.word_start; w <= loc.word_end; ++w)
        tokens[line.tokens[w]].text = (*fresh)[w - loc.word_start];
    }
    std::string joined;
    for (const auto& w : *fresh) joined += (joined.empty() ? "" : " ") + w;
    result.annotations.push_back({a.entity, joined});
  }
  result.facts = std::make_shared<const DocumentFacts>(
      DocumentFacts::build(facts.doc_id() + "_clone", facts.page(), std::move(tokens), lexicons));
  return result;
}

const EntityModel* TemplateModel::find(std::string_view entity) const {
  for (const auto& e : entities)
    if (e.entity == entity) return &e;
  return nullptr;
}

const TransitionSystem& TemplateModel::system() const {
  return background ? *background : default_catalog();
}

TemplateModel train_os(std::shared_ptr<const DocumentFacts> facts,
                       const std::vector<Annotation>& annotations, const Lexicons& lexicons,
                       const TrainOptions& options) {
  check_unique(annotations);
  TemplateModel model;
  model.template_id = options.template_id;
  model.mode = "os";
  model.depth = options.depth;
  model.seed = options.seed;
  model.background = system_of(options);
  const auto& sys = *model.background;

  const CloneResult clone = noisy_clone(*facts, annotations, options.seed, lexicons);
  model.entities.resize(annotations.size());
  detail::parallel_for(annotations.size(), [&](std::size_t i) {
    const auto& a = annotations[i];
    auto& em = model.entities[i];
    em.entity = a.entity;
    auto r = mip(facts, sys, a.entity, a.value, {options.depth, options.max_traces});
    em.traces = r.traces;
    em.truncated = r.truncated;
    em.programs = filter(r.programs, clone.facts, clone.annotations[i].value, sys);
    em.training_docs = {facts->doc_id(), clone.facts->doc_id()};
    if (auto amb = detect_ambiguity(*facts, a)) {
      em.ambiguity = amb->locations;
      em.ambiguous = true;
    }
    em.untrainable = em.programs.empty();
  });
  return model;
}

TemplateModel train_raw(const std::vector<std::shared_ptr<const DocumentFacts>>& docs,
                        const std::vector<std::vector<Annotation>>& annotations,
                        const TrainOptions& options) {
  if (docs.empty() || docs.size() != annotations.size())
    throw ValidationError("train_raw needs one annotation list per document");
  check_unique(annotations.front());
  TemplateModel model;
  model.template_id = options.template_id;
  model.mode = "raw";
  model.depth = options.depth;
  model.seed = options.seed;
  model.background = system_of(options);
  const auto& sys = *model.background;

  const auto& first = annotations.front();
  model.entities.resize(first.size());
  detail::parallel_for(first.size(), [&](std::size_t i) {
    auto& em = model.entities[i];
    em.entity = first[i].entity;
    auto r = mip(docs.front(), sys, em.entity, first[i].value, {options.depth, options.max_traces});
    em.traces = r.traces;
    em.truncated = r.truncated;
    em.programs = std::move(r.programs);
    em.training_docs = {docs.front()->doc_id()};
    for (std::size_t d = 1; d < docs.size(); ++d) {
      auto it = std::find_if(annotations[d].begin(), annotations[d].end(),
                             [&](const Annotation& a) { return a.entity == em.entity; });
      if (it == annotations[d].end())
        throw ValidationError("no annotation for entity " + em.entity + " on " + docs[d]->doc_id());
      em.programs = filter(em.programs, docs[d], it->value, sys);
      em.training_docs.push_back(docs[d]->doc_id());
    }
    if (auto amb = detect_ambiguity(*docs.front(), first[i])) {
      em.ambiguity = amb->locations;
      em.ambiguous = true;
    }
    em.untrainable = em.programs.empty();
  });
  return model;
}

std::vector<CandidateOutput> candidate_outputs(const ProgramSet& set, const DocumentFacts& facts,
                                               const TransitionSystem& system) {
  std::map<std::string, std::size_t> counts;
  for (const auto& p : set.programs())
    if (auto v = run_program(p, facts, system)) ++counts[*v];
  std::vector<CandidateOutput> out;
  for (const auto& [value, n] : counts) out.push_back({value, n, find_occurrences(facts, value)});
  std::stable_sort(out.begin(), out.end(),
                   [](const CandidateOutput& a, const CandidateOutput& b) { return a.programs > b.programs; });
  return out;
}

TemplateModel train_ns(std::shared_ptr<const DocumentFacts> facts,
                       const std::vector<Annotation>& annotations,
                       const std::vector<std::shared_ptr<const DocumentFacts>>& pool,
                       Annotator& annotator, const Lexicons& lexicons,
                       const TrainOptions& options) {
  TemplateModel model = train_os(facts, annotations, lexicons, options);
  model.mode = "ns";
  model.pool_size = pool.size();
  const auto& sys = model.system();

  bool session_aborted = false;
  for (auto& em : model.entities) {
    if (!em.ambiguous) continue;
    if (session_aborted) {
      em.aborted = true;
      continue;
    }
    int round = 0;
    for (const auto& doc : pool) {
      AnnotationRequest req{em.entity, doc->doc_id(), doc, candidate_outputs(em.programs, *doc, sys),
                            em.ambiguity, round++};
      const AnnotationResponse resp = annotator.annotate(req);
      if (resp.kind == AnnotationResponse::Kind::Abort) {
        em.aborted = session_aborted = true;
        break;
      }
      if (resp.kind == AnnotationResponse::Kind::Skip) continue;
      const std::string value = normalize_space(resp.value);
      const auto occurrences = find_occurrences(*doc, value);
      // A value that is not in the document cannot be checked; ignore it.
      if (occurrences.empty()) continue;
      em.programs = filter(em.programs, doc, value, sys);
      em.k++;
      em.supplementary.push_back(doc->doc_id());
      em.training_docs.push_back(doc->doc_id());
      if (occurrences.size() == 1) {
        em.ambiguous = false;
        break;
      }
    }
    em.untrainable = em.programs.empty();
  }
  return model;
}

// ---------------------------------------------------------------------------
// Annotators

ScriptedAnnotator::ScriptedAnnotator(std::map<std::pair<std::string, std::string>, std::string> values,
                                     bool skip_uninformative)
    : values_(std::move(values)), skip_uninformative_(skip_uninformative) {}

ScriptedAnnotator ScriptedAnnotator::from_truth(const std::vector<TruthRecord>& truth,
                                                bool skip_uninformative) {
  std::map<std::pair<std::string, std::string>, std::string> values;
  for (const auto& r : truth) values[{r.doc_id, r.entity}] = r.value;
  return ScriptedAnnotator(std::move(values), skip_uninformative);
}

AnnotationResponse ScriptedAnnotator::annotate(const AnnotationRequest& request) {
  if (skip_uninformative_ && request.candidates.size() <= 1) return AnnotationResponse::skip();
  auto it = values_.find({request.doc_id, request.entity});
  if (it == values_.end()) return AnnotationResponse::skip();
  ++calls_;
  return AnnotationResponse::accept(it->second);
}

namespace {

std::string location_text(const std::vector<Location>& locs) {
  std::string s;
  for (const auto& l : locs)
    s += (s.empty() ? "" : ", ") + std::string("line ") + std::to_string(l.line_id) + " words " +
         std::to_string(l.word_start) + "-" + std::to_string(l.word_end);
  return s;
}

}  // namespace

AnnotationResponse TerminalAnnotator::annotate(const AnnotationRequest& request) {
  out_ << "\nEntity '" << request.entity << "' is ambiguous in the training document ("
       << location_text(request.training_locations) << ").\n";
  out_ << "Document " << request.doc_id << ", candidate values:\n";
  for (std::size_t i = 0; i < request.candidates.size(); ++i) {
    const auto& c = request.candidates[i];
    out_ << "  [" << i + 1 << "] " << c.value << "  (" << c.programs << " programs; "
         << location_text(c.locations) << ")\n";
  }
  out_ << "Pick a number, type the value, 's' to skip, 'q' to abort: " << std::flush;
  std::string line;
  if (!std::getline(in_, line)) return AnnotationResponse::abort();
  line = normalize_space(line);
  if (line.empty() || line == "s") return AnnotationResponse::skip();
  if (line == "q") return AnnotationResponse::abort();
  if (std::all_of(line.begin(), line.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    const std::size_t pick = std::stoul(line);
    if (pick >= 1 && pick <= request.candidates.size())
      return AnnotationResponse::accept(request.candidates[pick - 1].value);
  }
  return AnnotationResponse::accept(line);
}

AnnotationResponse SessionAnnotator::annotate(const AnnotationRequest& request) {
  std::unique_lock lock(mutex_);
  if (closed_) return AnnotationResponse::abort();
  pending_ = request;
  answer_.reset();
  cv_.notify_all();
  cv_.wait(lock, [&] { return answer_.has_value() || closed_; });
  pending_.reset();
  if (!answer_) return AnnotationResponse::abort();
  AnnotationResponse a = std::move(*answer_);
  answer_.reset();
  ++resolved_;
  return a;
}

std::optional<AnnotationRequest> SessionAnnotator::pending() const {
  std::lock_guard lock(mutex_);
  if (!pending_ || answer_ || closed_) return std::nullopt;
  return pending_;
}

bool SessionAnnotator::resolve(const std::string& entity, const std::string& doc_id,
                               AnnotationResponse response) {
  std::lock_guard lock(mutex_);
  if (!pending_ || answer_ || closed_) return false;
  if (pending_->entity != entity || pending_->doc_id != doc_id) return false;
  answer_ = std::move(response);
  cv_.notify_all();
  return true;
}

void SessionAnnotator::close() {
  std::lock_guard lock(mutex_);
  closed_ = true;
  cv_.notify_all();
}

std::size_t SessionAnnotator::resolved() const {
  std::lock_guard lock(mutex_);
  return resolved_;
}

// ---------------------------------------------------------------------------
// Model directory

std::string model_json(const TemplateModel& model) {
  ordered_json j;
  j["template_id"] = model.template_id;
  j["mode"] = model.mode;
  j["depth"] = model.depth;
  j["seed"] = model.seed;
  j["pool_size"] = model.pool_size;
  j["entities"] = ordered_json::array();
  for (const auto& e : model.entities) {
    ordered_json locs = ordered_json::array();
    for (const auto& l : e.ambiguity) locs.push_back({l.line_id, l.word_start, l.word_end});
    j["entities"].push_back({{"name", e.entity},
                             {"programs", e.programs.size()},
                             {"file", "programs/" + e.entity + ".pl"},
                             {"training_docs", e.training_docs},
                             {"supplementary", e.supplementary},
                             {"k", e.k},
                             {"ambiguity_locations", locs},
                             {"traces", e.traces},
                             {"truncated", e.truncated},
                             {"untrainable", e.untrainable},
                             {"ambiguous", e.ambiguous},
                             {"aborted", e.aborted}});
  }
  return j.dump(2) + "\n";
}

void save_model(const TemplateModel& model, const std::filesystem::path& dir) {
  write_text_file(dir / "model.json", model_json(model));
  for (const auto& e : model.entities)
    write_text_file(dir / "programs" / (e.entity + ".pl"), program_set_text(e.programs));
  write_text_file(dir / "background.pl", model.system().source_text);
}

TemplateModel load_model(const std::filesystem::path& dir) {
  const auto path = dir / "model.json";
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(path));
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(path.string(), e.what());
  }
  TemplateModel model;
  try {
    model.template_id = j.at("template_id").get<std::string>();
    model.mode = j.at("mode").get<std::string>();
    model.depth = j.at("depth").get<int>();
    model.seed = j.at("seed").get<std::uint64_t>();
    model.pool_size = j.value("pool_size", std::size_t{0});
  } catch (const ordered_json::exception& e) {
    throw ParseError(path.string(), e.what());
  }
  const auto rules = dir / "background.pl";
  model.background = std::filesystem::exists(rules)
                         ? std::make_shared<const TransitionSystem>(load_catalog_file(rules.string()))
                         : std::shared_ptr<const TransitionSystem>(&default_catalog(),
                                                                   [](const TransitionSystem*) {});
  for (std::size_t i = 0; i < j.at("entities").size(); ++i) {
    const auto& e = j["entities"][i];
    const std::string where = path.string() + ": entities[" + std::to_string(i) + "]";
    EntityModel em;
    try {
      em.entity = e.at("name").get<std::string>();
      em.training_docs = e.value("training_docs", std::vector<std::string>{});
      em.supplementary = e.value("supplementary", std::vector<std::string>{});
      em.k = e.value("k", 0);
      for (const auto& l : e.value("ambiguity_locations", ordered_json::array())) {
        auto v = l.get<std::vector<int>>();
        if (v.size() == 3) em.ambiguity.push_back({v[0], v[1], v[2]});
      }
      em.traces = e.value("traces", std::size_t{0});
      em.truncated = e.value("truncated", false);
      em.untrainable = e.value("untrainable", false);
      em.ambiguous = e.value("ambiguous", false);
      em.aborted = e.value("aborted", false);
    } catch (const ordered_json::exception& ex) {
      throw ParseError(where, ex.what());
    }
    const auto file = dir / "programs" / (em.entity + ".pl");
    em.programs = parse_program_set(read_text_file(file), em.entity, *model.background, file.string());
    model.entities.push_back(std::move(em));
  }
  return model;
}

}  // namespace docsynth

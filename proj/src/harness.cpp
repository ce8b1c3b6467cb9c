#include "docsynth/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "docsynth/error.hpp"
#include "parallel.hpp"

namespace docsynth {

using nlohmann::ordered_json;

Corpus Corpus::load(const std::filesystem::path& dir, const Lexicons& lexicons) {
  Corpus c;
  const auto docs_dir = dir / "docs";
  if (!std::filesystem::is_directory(docs_dir)) throw IoError("no docs directory in " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(docs_dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  c.docs.resize(files.size());
  detail::parallel_for(files.size(), [&](std::size_t i) {
    c.docs[i] = std::make_shared<const DocumentFacts>(load_fact_file(files[i], lexicons));
  });
  std::sort(c.docs.begin(), c.docs.end(),
            [](const auto& a, const auto& b) { return a->doc_id() < b->doc_id(); });
  const auto truth = dir / "truth.json";
  if (std::filesystem::exists(truth)) c.truth = load_truth(truth);
  return c;
}

std::shared_ptr<const DocumentFacts> Corpus::find(std::string_view doc_id) const {
  for (const auto& d : docs)
    if (d->doc_id() == doc_id) return d;
  return nullptr;
}

std::vector<Annotation> Corpus::annotations(std::string_view doc_id) const {
  std::vector<Annotation> out;
  for (const auto& r : truth)
    if (r.doc_id == doc_id) out.push_back({r.entity, r.value});
  return out;
}

std::string_view case_status_name(CaseStatus s) {
  switch (s) {
    case CaseStatus::Correct: return "correct";
    case CaseStatus::Incorrect: return "incorrect";
    default: return "null";
  }
}

EvalReport evaluate(const TemplateModel& model,
                    const std::vector<std::shared_ptr<const DocumentFacts>>& docs,
                    const std::vector<TruthRecord>& truth, const ExtractOptions& options) {
  EvalReport rep;
  rep.template_id = model.template_id;
  rep.mode = model.mode;
  rep.depth = model.depth;
  rep.seed = model.seed;
  rep.entropy_threshold = options.entropy_threshold;

  std::set<std::string> training;
  for (const auto& e : model.entities) training.insert(e.training_docs.begin(), e.training_docs.end());
  rep.training_docs.assign(training.begin(), training.end());

  std::map<std::pair<std::string, std::string>, std::string> expected;
  for (const auto& r : truth) expected[{r.doc_id, r.entity}] = normalize_space(r.value);

  std::vector<std::shared_ptr<const DocumentFacts>> test;
  std::vector<std::string> missing;
  for (const auto& d : docs) {
    if (training.contains(d->doc_id())) continue;
    test.push_back(d);
    for (const auto& e : model.entities)
      if (!expected.contains({d->doc_id(), e.entity})) {
        missing.push_back(d->doc_id());
        break;
      }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw ValidationError("missing truth records for: " + list);
  }
  for (const auto& d : test) rep.test_docs.push_back(d->doc_id());

  std::vector<DocumentExtraction> extractions(test.size());
  detail::parallel_for(test.size(), [&](std::size_t i) {
    extractions[i] = extract_document(model, *test[i], options);
  });

  for (const auto& e : model.entities) {
    EntityMetrics m;
    m.entity = e.entity;
    m.ambiguous = e.ambiguous;
    m.untrainable = e.untrainable;
    rep.entities.push_back(m);
  }
  for (std::size_t i = 0; i < test.size(); ++i) {
    for (std::size_t k = 0; k < model.entities.size(); ++k) {
      const auto& r = extractions[i].results[k];
      const std::string& want = expected[{test[i]->doc_id(), r.entity}];
      CaseRecord c;
      c.doc_id = test[i]->doc_id();
      c.entity = r.entity;
      c.truth = want;
      c.predicted = r.value;
      c.entropy = r.entropy;
      c.confident = r.confident;
      c.programs = r.outputs.size();
      std::size_t right = 0;
      for (const auto& o : r.outputs) right += o && normalize_space(*o) == want;
      c.correctness = r.outputs.empty() ? 0.0 : static_cast<double>(right) / r.outputs.size();
      if (!r.value)
        c.status = CaseStatus::Null;
      else
        c.status = normalize_space(*r.value) == want ? CaseStatus::Correct : CaseStatus::Incorrect;

      auto& m = rep.entities[k];
      ++m.documents;
      m.correct += c.status == CaseStatus::Correct;
      m.incorrect += c.status == CaseStatus::Incorrect;
      m.nulls += c.status == CaseStatus::Null;
      m.mean_programs += static_cast<double>(c.programs);
      m.correctness += c.correctness;
      rep.cases.push_back(std::move(c));
    }
  }
  for (auto& m : rep.entities) {
    if (m.documents) {
      m.accuracy = 100.0 * static_cast<double>(m.correct) / m.documents;
      m.mean_programs /= m.documents;
      m.correctness /= m.documents;
    }
    rep.mean_accuracy += m.accuracy;
    rep.mean_correctness += m.correctness;
  }
  if (!rep.entities.empty()) {
    rep.mean_accuracy /= rep.entities.size();
    rep.mean_correctness /= rep.entities.size();
  }
  return rep;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Fixed-precision numbers keep reports byte-stable across platforms.
ordered_json num(double v) { return ordered_json::parse(fmt(v)); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string report_json(const EvalReport& r) {
  ordered_json j;
  j["template_id"] = r.template_id;
  j["config"] = {{"mode", r.mode},
                 {"depth", r.depth},
                 {"seed", r.seed},
                 {"entropy_threshold", num(r.entropy_threshold)},
                 {"training_docs", r.training_docs}};
  j["test_docs"] = r.test_docs;
  j["mean_accuracy"] = num(r.mean_accuracy);
  j["mean_correctness"] = num(r.mean_correctness);
  j["entities"] = ordered_json::array();
  for (const auto& m : r.entities)
    j["entities"].push_back({{"entity", m.entity},
                             {"documents", m.documents},
                             {"accuracy", num(m.accuracy)},
                             {"mean_programs", num(m.mean_programs)},
                             {"correctness", num(m.correctness)},
                             {"correct", m.correct},
                             {"incorrect", m.incorrect},
                             {"null", m.nulls},
                             {"ambiguous", m.ambiguous},
                             {"untrainable", m.untrainable}});
  j["cases"] = ordered_json::array();
  for (const auto& c : r.cases)
    j["cases"].push_back({{"doc_id", c.doc_id},
                          {"entity", c.entity},
                          {"status", case_status_name(c.status)},
                          {"truth", c.truth},
                          {"predicted", c.predicted ? ordered_json(*c.predicted) : ordered_json(nullptr)},
                          {"entropy", num(c.entropy)},
                          {"confident", c.confident},
                          {"programs", c.programs},
                          {"correctness", num(c.correctness)}});
  return j.dump(2) + "\n";
}

std::string report_csv(const EvalReport& r) {
  std::string out = "entity,documents,accuracy,mean_programs,correctness,correct,incorrect,null,ambiguous,untrainable\n";
  for (const auto& m : r.entities)
    out += csv_field(m.entity) + "," + std::to_string(m.documents) + "," + fmt(m.accuracy) + "," +
           fmt(m.mean_programs) + "," + fmt(m.correctness) + "," + std::to_string(m.correct) + "," +
           std::to_string(m.incorrect) + "," + std::to_string(m.nulls) + "," +
           (m.ambiguous ? "1" : "0") + "," + (m.untrainable ? "1" : "0") + "\n";
  return out;
}

std::string cases_csv(const EvalReport& r) {
  std::string out = "doc_id,entity,status,entropy,confident,programs,correctness,predicted,truth\n";
  for (const auto& c : r.cases)
    out += csv_field(c.doc_id) + "," + csv_field(c.entity) + "," + std::string(case_status_name(c.status)) +
           "," + fmt(c.entropy) + "," + (c.confident ? "1" : "0") + "," + std::to_string(c.programs) +
           "," + fmt(c.correctness) + "," + csv_field(c.predicted.value_or("")) + "," +
           csv_field(c.truth) + "\n";
  return out;
}

namespace {

void combinations(std::size_t n, std::size_t k, std::vector<std::vector<std::size_t>>& out) {
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  if (k > n) return;
  while (true) {
    out.push_back(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

SweepReport sweep(const Corpus& corpus, const Lexicons& lexicons, const SweepOptions& options) {
  if (corpus.docs.size() <= options.pool)
    throw ValidationError("corpus needs more documents than the training pool (" +
                          std::to_string(options.pool) + ")");
  SweepReport rep;
  std::vector<std::shared_ptr<const DocumentFacts>> pool(corpus.docs.begin(),
                                                         corpus.docs.begin() + options.pool);
  std::vector<std::shared_ptr<const DocumentFacts>> test(corpus.docs.begin() + options.pool,
                                                         corpus.docs.end());
  for (const auto& d : pool) rep.pool_docs.push_back(d->doc_id());
  for (const auto& d : test) rep.test_docs.push_back(d->doc_id());
  auto annotator = ScriptedAnnotator::from_truth(corpus.truth);

  for (const auto& mode : options.modes) {
    if (mode != "raw" && mode != "os" && mode != "ns") throw ValidationError("unknown sweep mode " + mode);
    for (int n : options.sizes) {
      if (n < 1 || static_cast<std::size_t>(n) > options.pool) continue;
      std::vector<std::vector<std::size_t>> combos;
      combinations(options.pool, static_cast<std::size_t>(n), combos);
      std::map<std::string, SweepRow> rows;
      std::vector<std::string> order;
      for (const auto& combo : combos) {
        std::vector<std::shared_ptr<const DocumentFacts>> docs;
        std::vector<std::vector<Annotation>> anns;
        for (auto i : combo) {
          docs.push_back(pool[i]);
          anns.push_back(corpus.annotations(pool[i]->doc_id()));
        }
        TemplateModel model;
        if (mode == "raw") {
          model = train_raw(docs, anns, options.train);
        } else if (mode == "os") {
          model = train_os(docs.front(), anns.front(), lexicons, options.train);
          for (auto& em : model.entities)
            for (std::size_t d = 1; d < docs.size(); ++d) {
              auto it = std::find_if(anns[d].begin(), anns[d].end(),
                                     [&](const Annotation& a) { return a.entity == em.entity; });
              if (it == anns[d].end()) continue;
              em.programs = filter(em.programs, docs[d], it->value, model.system());
              em.training_docs.push_back(docs[d]->doc_id());
            }
        } else {
          std::vector<std::shared_ptr<const DocumentFacts>> rest(docs.begin() + 1, docs.end());
          model = train_ns(docs.front(), anns.front(), rest, annotator, lexicons, options.train);
        }
        const auto report = evaluate(model, test, corpus.truth, options.extract);
        for (std::size_t k = 0; k < report.entities.size(); ++k) {
          const auto& m = report.entities[k];
          auto [it, fresh] = rows.try_emplace(m.entity);
          if (fresh) order.push_back(m.entity);
          auto& row = it->second;
          row.mode = mode;
          row.n = n;
          row.entity = m.entity;
          ++row.combinations;
          row.accuracy += m.accuracy;
          row.mean_programs += m.mean_programs;
          row.correctness += m.correctness;
          row.mean_k += model.entities[k].k;
        }
      }
      for (const auto& name : order) {
        auto row = rows[name];
        const double c = static_cast<double>(row.combinations);
        row.accuracy /= c;
        row.mean_programs /= c;
        row.correctness /= c;
        row.mean_k /= c;
        rep.rows.push_back(row);
      }
    }
  }
  if (!corpus.docs.empty()) {
    const auto& id = corpus.docs.front()->doc_id();
    rep.template_id = id.substr(0, id.rfind('_'));
  }
  return rep;
}

std::string sweep_json(const SweepReport& r) {
  ordered_json j;
  j["template_id"] = r.template_id;
  j["pool_docs"] = r.pool_docs;
  j["test_docs"] = r.test_docs;
  j["rows"] = ordered_json::array();
  for (const auto& row : r.rows)
    j["rows"].push_back({{"mode", row.mode},
                         {"n", row.n},
                         {"entity", row.entity},
                         {"combinations", row.combinations},
                         {"accuracy", num(row.accuracy)},
                         {"mean_programs", num(row.mean_programs)},
                         {"correctness", num(row.correctness)},
                         {"mean_k", num(row.mean_k)}});
  return j.dump(2) + "\n";
}

std::string sweep_csv(const SweepReport& r) {
  std::string out = "mode,n,entity,combinations,accuracy,mean_programs,correctness,mean_k\n";
  for (const auto& row : r.rows)
    out += row.mode + "," + std::to_string(row.n) + "," + csv_field(row.entity) + "," +
           std::to_string(row.combinations) + "," + fmt(row.accuracy) + "," + fmt(row.mean_programs) +
           "," + fmt(row.correctness) + "," + fmt(row.mean_k) + "\n";
  return out;
}

}  // namespace docsynth

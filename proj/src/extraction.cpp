#include "docsynth/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "docsynth/error.hpp"
#include "parallel.hpp"

namespace docsynth {

using nlohmann::ordered_json;

double entropy(std::span<const std::size_t> counts) {
  double total = 0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total <= 0) return 0;
  double h = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h <= 0 ? 0.0 : h;
}

std::vector<OutputCount> output_distribution(std::span<const Output> outputs) {
  std::map<std::string, std::size_t> counts;
  std::size_t nulls = 0;
  for (const auto& o : outputs) {
    if (o)
      ++counts[*o];
    else
      ++nulls;
  }
  std::vector<OutputCount> out;
  for (const auto& [v, n] : counts) out.push_back({v, n});
  if (nulls) out.push_back({std::nullopt, nulls});
  // Map order already puts smaller values first and NULL last.
  std::stable_sort(out.begin(), out.end(),
                   [](const OutputCount& a, const OutputCount& b) { return a.count > b.count; });
  return out;
}

Output vote(std::span<const Output> outputs) {
  const auto dist = output_distribution(outputs);
  if (dist.empty()) return std::nullopt;
  if (dist[0].value) return dist[0].value;
  return dist.size() > 1 ? dist[1].value : std::nullopt;
}

ExtractionResult extract(const TemplateModel& model, const DocumentFacts& facts,
                         const std::string& entity, const ExtractOptions& options) {
  const EntityModel* em = model.find(entity);
  if (!em) throw ValidationError("unknown entity " + entity);
  ExtractionResult r;
  r.entity = entity;
  if (em->programs.empty()) {
    r.untrained = true;
    r.confident = false;
    return r;
  }
  const auto& sys = model.system();
  for (const auto& p : em->programs.programs()) r.outputs.push_back(run_program(p, facts, sys));
  r.distribution = output_distribution(r.outputs);
  r.value = vote(r.outputs);
  std::vector<std::size_t> counts;
  for (const auto& d : r.distribution)
    if (d.value || options.entropy_includes_null) counts.push_back(d.count);
  r.entropy = entropy(counts);
  r.confident = r.entropy <= options.entropy_threshold;
  return r;
}

DocumentExtraction extract_document(const TemplateModel& model, const DocumentFacts& facts,
                                    const ExtractOptions& options) {
  DocumentExtraction doc;
  doc.doc_id = facts.doc_id();
  doc.results.resize(model.entities.size());
  detail::parallel_for(model.entities.size(), [&](std::size_t i) {
    doc.results[i] = extract(model, facts, model.entities[i].entity, options);
  });
  return doc;
}

std::string extraction_json(const DocumentExtraction& doc) {
  ordered_json j;
  j["doc_id"] = doc.doc_id;
  j["results"] = ordered_json::array();
  for (const auto& r : doc.results) {
    ordered_json dist = ordered_json::array();
    for (const auto& d : r.distribution)
      dist.push_back({{"value", d.value ? ordered_json(*d.value) : ordered_json(nullptr)},
                      {"count", d.count}});
    j["results"].push_back({{"entity", r.entity},
                            {"value", r.value ? ordered_json(*r.value) : ordered_json(nullptr)},
                            {"distribution", dist},
                            {"entropy", r.entropy},
                            {"confident", r.confident},
                            {"programs", r.outputs.size()},
                            {"untrained", r.untrained}});
  }
  return j.dump(2) + "\n";
}

}  // namespace docsynth

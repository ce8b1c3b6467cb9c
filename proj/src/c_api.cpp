#include "docsynth/docsynth.h"

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>

#include <json.hpp>

#include "docsynth/background.hpp"
#include "docsynth/docgen.hpp"
#include "docsynth/error.hpp"
#include "docsynth/extraction.hpp"
#include "docsynth/harness.hpp"
#include "docsynth/server.hpp"
#include "docsynth/training.hpp"

using namespace docsynth;
using nlohmann::ordered_json;

struct ds_facts {
  std::shared_ptr<const DocumentFacts> facts;
};

struct ds_model {
  TemplateModel model;
};

struct ds_server {
  std::unique_ptr<Server> server;
  std::thread thread;
};

namespace {

thread_local std::string last_error;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class F>
ds_status guarded(F&& fn) {
  try {
    last_error.clear();
    fn();
    return DS_OK;
  } catch (const UsageError& e) {
    last_error = e.what();
    return DS_ERR_USAGE;
  } catch (const ParseError& e) {
    last_error = e.what();
    return DS_ERR_DATA;
  } catch (const ValidationError& e) {
    last_error = e.what();
    return DS_ERR_DATA;
  } catch (const LogicError& e) {
    last_error = e.what();
    return DS_ERR_DATA;
  } catch (const IoError& e) {
    last_error = e.what();
    return DS_ERR_DATA;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DS_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return DS_ERR_INTERNAL;
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

bool given(const char* s) { return s && *s; }

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

Lexicons lexicons_from(const char* dir) {
  return Lexicons::load_dir(given(dir) ? std::filesystem::path(dir)
                                       : std::filesystem::path(ds_default_lexicon_dir()));
}

std::vector<std::string> split_list(const char* s) {
  std::vector<std::string> out;
  if (!given(s)) return out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!(item = normalize_space(item)).empty()) out.push_back(item);
  return out;
}

ExtractOptions extract_options(const ds_extract_options* o) {
  ExtractOptions out;
  if (o) {
    require(o->entropy_threshold >= 0, "entropy_threshold must be >= 0");
    out.entropy_threshold = o->entropy_threshold;
    out.entropy_includes_null = o->entropy_includes_null != 0;
  }
  return out;
}

std::string template_of(const std::string& doc_id) {
  auto pos = doc_id.rfind('_');
  return pos == std::string::npos ? doc_id : doc_id.substr(0, pos);
}

ordered_json locations_json(const std::vector<Location>& locs) {
  ordered_json a = ordered_json::array();
  for (const auto& l : locs) a.push_back({l.line_id, l.word_start, l.word_end});
  return a;
}

std::string request_json(const AnnotationRequest& r) {
  ordered_json cands = ordered_json::array();
  for (const auto& c : r.candidates)
    cands.push_back({{"value", c.value}, {"programs", c.programs}, {"locations", locations_json(c.locations)}});
  return ordered_json{{"entity", r.entity},
                      {"doc_id", r.doc_id},
                      {"round", r.round},
                      {"candidates", cands},
                      {"training_locations", locations_json(r.training_locations)}}
      .dump();
}

TrainOptions train_options(int depth, std::uint64_t seed, const char* background) {
  TrainOptions t;
  require(depth >= 1, "depth must be >= 1");
  t.depth = depth;
  t.seed = seed;
  if (given(background))
    t.background = std::make_shared<const TransitionSystem>(load_catalog_file(background));
  return t;
}

ServeConfig serve_config(const ds_serve_options* o) {
  require(o && given(o->corpus_dir), "corpus_dir is required");
  require(o->port >= 0 && o->port < 65536, "port out of range");
  require(given(o->model_dir) != given(o->train_doc), "give exactly one of model_dir and train_doc");
  ServeConfig c;
  if (given(o->host)) c.host = o->host;
  c.port = o->port;
  c.corpus_dir = o->corpus_dir;
  if (given(o->model_dir)) c.model_dir = o->model_dir;
  if (given(o->train_doc)) c.train_doc = o->train_doc;
  c.pool_docs = split_list(o->pool);
  if (given(o->annotations_path)) c.annotations = o->annotations_path;
  if (given(o->save_model_to)) c.save_model_to = o->save_model_to;
  c.train = train_options(o->depth, o->seed, nullptr);
  c.train.template_id = template_of(c.train_doc);
  c.extract = extract_options(&o->extract);
  return c;
}

}  // namespace

extern "C" {

const char* ds_version(void) { return "1.0.0"; }
const char* ds_last_error(void) { return last_error.c_str(); }
void ds_string_free(char* s) { std::free(s); }
const char* ds_default_lexicon_dir(void) { return DOCSYNTH_DATA_DIR "/lexicons"; }

ds_status ds_facts_load(const char* path, const char* lexicon_dir, ds_facts** out) {
  return guarded([&] {
    require(path && out, "path and out are required");
    auto f = std::make_unique<ds_facts>();
    f->facts = std::make_shared<const DocumentFacts>(load_fact_file(path, lexicons_from(lexicon_dir)));
    *out = f.release();
  });
}

void ds_facts_free(ds_facts* facts) { delete facts; }

ds_status ds_facts_doc_id(const ds_facts* facts, char** out) {
  return guarded([&] {
    require(facts && out, "facts and out are required");
    *out = dup(facts->facts->doc_id());
  });
}

ds_status ds_facts_query(const ds_facts* facts, const char* relation, const char* pattern_json,
                         char** out_json) {
  return guarded([&] {
    require(facts && relation && out_json, "facts, relation and out_json are required");
    const auto arity = relation_arity(relation);
    require(arity.has_value(), std::string("unknown relation ") + relation);
    std::vector<std::optional<Term>> pattern;
    if (given(pattern_json)) {
      ordered_json p;
      try {
        p = ordered_json::parse(pattern_json);
      } catch (const std::exception& e) {
        throw UsageError(std::string("pattern is not JSON: ") + e.what());
      }
      require(p.is_array(), "pattern must be a JSON array");
      for (const auto& v : p) {
        if (v.is_null())
          pattern.emplace_back();
        else if (v.is_string())
          pattern.emplace_back(Term::symbol(v.get<std::string>()));
        else if (v.is_number_integer())
          pattern.emplace_back(Term::integer(v.get<std::int64_t>()));
        else
          throw UsageError("pattern entries must be null, strings or integers");
      }
      require(pattern.size() == *arity, std::string(relation) + " has " + std::to_string(*arity) + " columns");
    } else {
      pattern.resize(*arity);
    }
    ordered_json rows = ordered_json::array();
    for (const auto& atom : facts->facts->query(relation, pattern)) {
      ordered_json row = ordered_json::array();
      for (const auto& t : atom.args) {
        if (t.is_int())
          row.push_back(t.int_value());
        else
          row.push_back(t.name());
      }
      rows.push_back(row);
    }
    *out_json = dup(rows.dump());
  });
}

ds_status ds_gen_corpus(const char* template_path, const char* out_dir, size_t n, uint64_t seed,
                        const ds_noise* noise, const char* lexicon_dir) {
  return guarded([&] {
    require(template_path && out_dir, "template_path and out_dir are required");
    require(n > 0, "n must be positive");
    const auto lex = lexicons_from(lexicon_dir);
    NoiseProfile profile;
    if (noise) {
      profile.box_jitter = noise->box_jitter;
      profile.token_drop_prob = noise->token_drop_prob;
      profile.keyword_variant_prob = noise->keyword_variant_prob;
      profile.line_shift_prob = noise->line_shift_prob;
    }
    try {
      profile.validate();
    } catch (const ValidationError& e) {
      throw UsageError(e.what());
    }
    generate_corpus(load_template(template_path, lex), n, seed, profile, lex, out_dir);
  });
}

void ds_train_options_init(ds_train_options* o) {
  if (!o) return;
  std::memset(o, 0, sizeof *o);
  o->mode = DS_TRAIN_OS;
  o->depth = 4;
  o->seed = 1;
  o->annotator = DS_ANNOTATOR_TRUTH;
}

ds_status ds_train(const ds_train_options* o, ds_model** out) {
  return guarded([&] {
    require(o && out, "options and out are required");
    require(given(o->corpus_dir), "corpus_dir is required");
    const auto ids = split_list(o->doc_ids);
    require(!ids.empty(), "doc_ids is required");
    require(o->mode == DS_TRAIN_OS || o->mode == DS_TRAIN_NS || o->mode == DS_TRAIN_RAW, "unknown mode");
    require(o->mode == DS_TRAIN_RAW || ids.size() == 1, "os and ns modes take one training document");
    require(o->annotator >= DS_ANNOTATOR_TRUTH && o->annotator <= DS_ANNOTATOR_CALLBACK,
            "unknown annotator");
    require(o->annotator != DS_ANNOTATOR_CALLBACK || o->callback, "callback annotator needs a callback");

    const auto lex = lexicons_from(o->lexicon_dir);
    const auto corpus = Corpus::load(o->corpus_dir, lex);
    auto opts = train_options(o->depth, o->seed, o->background_path);
    opts.template_id = given(o->template_id) ? std::string(o->template_id) : template_of(ids.front());

    std::vector<std::shared_ptr<const DocumentFacts>> docs;
    std::vector<std::vector<Annotation>> anns;
    for (const auto& id : ids) {
      auto d = corpus.find(id);
      if (!d) throw ValidationError("unknown document " + id);
      docs.push_back(d);
      anns.push_back(corpus.annotations(id));
    }
    if (given(o->annotations_path)) anns.front() = load_annotations(o->annotations_path);
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (anns[i].empty()) throw ValidationError("no annotations for " + ids[i]);

    auto m = std::make_unique<ds_model>();
    if (o->mode == DS_TRAIN_RAW) {
      m->model = train_raw(docs, anns, opts);
    } else if (o->mode == DS_TRAIN_OS) {
      m->model = train_os(docs.front(), anns.front(), lex, opts);
    } else {
      std::vector<std::shared_ptr<const DocumentFacts>> pool;
      for (const auto& id : split_list(o->pool)) {
        auto d = corpus.find(id);
        if (!d) throw ValidationError("unknown pool document " + id);
        pool.push_back(d);
      }
      std::unique_ptr<Annotator> annotator;
      if (o->annotator == DS_ANNOTATOR_TRUTH) {
        annotator = std::make_unique<ScriptedAnnotator>(ScriptedAnnotator::from_truth(corpus.truth));
      } else if (o->annotator == DS_ANNOTATOR_TERMINAL) {
        annotator = std::make_unique<TerminalAnnotator>(std::cin, std::cout);
      } else {
        annotator = std::make_unique<CallbackAnnotator>([o](const AnnotationRequest& r) {
          std::string buf(4096, '\0');
          const auto kind = o->callback(o->user, request_json(r).c_str(), buf.data(), buf.size());
          if (kind == DS_ANNOTATE_ABORT) return AnnotationResponse::abort();
          if (kind != DS_ANNOTATE_ACCEPT) return AnnotationResponse::skip();
          buf[buf.size() - 1] = '\0';
          return AnnotationResponse::accept(normalize_space(buf.c_str()));
        });
      }
      m->model = train_ns(docs.front(), anns.front(), pool, *annotator, lex, opts);
    }
    *out = m.release();
  });
}

ds_status ds_model_save(const ds_model* model, const char* dir) {
  return guarded([&] {
    require(model && given(dir), "model and dir are required");
    save_model(model->model, dir);
  });
}

ds_status ds_model_load(const char* dir, ds_model** out) {
  return guarded([&] {
    require(given(dir) && out, "dir and out are required");
    auto m = std::make_unique<ds_model>();
    m->model = load_model(dir);
    *out = m.release();
  });
}

void ds_model_free(ds_model* model) { delete model; }

ds_status ds_model_json(const ds_model* model, char** out_json) {
  return guarded([&] {
    require(model && out_json, "model and out_json are required");
    *out_json = dup(model_json(model->model));
  });
}

ds_status ds_model_programs(const ds_model* model, const char* entity, char** out_text) {
  return guarded([&] {
    require(model && entity && out_text, "model, entity and out_text are required");
    const auto* em = model->model.find(entity);
    if (!em) throw UsageError(std::string("unknown entity ") + entity);
    *out_text = dup(program_set_text(em->programs));
  });
}

void ds_extract_options_init(ds_extract_options* o) {
  if (!o) return;
  ExtractOptions d;
  o->entropy_threshold = d.entropy_threshold;
  o->entropy_includes_null = d.entropy_includes_null ? 1 : 0;
}

ds_status ds_extract(const ds_model* model, const ds_facts* facts, const ds_extract_options* options,
                     char** out_json) {
  return guarded([&] {
    require(model && facts && out_json, "model, facts and out_json are required");
    *out_json = dup(extraction_json(extract_document(model->model, *facts->facts, extract_options(options))));
  });
}

ds_status ds_evaluate(const ds_model* model, const char* corpus_dir, const char* lexicon_dir,
                      const ds_extract_options* options, char** out_json, char** out_csv,
                      char** out_cases_csv) {
  return guarded([&] {
    require(model && given(corpus_dir), "model and corpus_dir are required");
    const auto opts = extract_options(options);
    const auto corpus = Corpus::load(corpus_dir, lexicons_from(lexicon_dir));
    const auto report = evaluate(model->model, corpus.docs, corpus.truth, opts);
    std::string json = report_json(report), csv = report_csv(report), cases = cases_csv(report);
    put(out_json, json);
    put(out_csv, csv);
    put(out_cases_csv, cases);
  });
}

void ds_sweep_options_init(ds_sweep_options* o) {
  if (!o) return;
  std::memset(o, 0, sizeof *o);
  o->pool = 5;
  o->depth = 4;
  o->seed = 1;
  ds_extract_options_init(&o->extract);
}

ds_status ds_sweep(const ds_sweep_options* o, char** out_json, char** out_csv) {
  return guarded([&] {
    require(o && given(o->corpus_dir), "corpus_dir is required");
    require(o->pool >= 1, "pool must be >= 1");
    SweepOptions s;
    s.pool = o->pool;
    s.train = train_options(o->depth, o->seed, nullptr);
    s.extract = extract_options(&o->extract);
    if (given(o->sizes)) {
      s.sizes.clear();
      for (const auto& v : split_list(o->sizes)) {
        try {
          s.sizes.push_back(std::stoi(v));
        } catch (const std::exception&) {
          throw UsageError("bad size " + v);
        }
      }
    }
    if (given(o->modes)) s.modes = split_list(o->modes);
    for (const auto& m : s.modes) require(m == "raw" || m == "os" || m == "ns", "modes must be raw, os or ns");
    const auto lex = lexicons_from(o->lexicon_dir);
    const auto report = sweep(Corpus::load(o->corpus_dir, lex), lex, s);
    std::string json = sweep_json(report), csv = sweep_csv(report);
    put(out_json, json);
    put(out_csv, csv);
  });
}

void ds_serve_options_init(ds_serve_options* o) {
  if (!o) return;
  std::memset(o, 0, sizeof *o);
  o->host = "127.0.0.1";
  o->port = 8080;
  o->depth = 4;
  o->seed = 1;
  ds_extract_options_init(&o->extract);
}

ds_status ds_server_start(const ds_serve_options* options, ds_server** out, int* bound_port) {
  return guarded([&] {
    require(out != nullptr, "out is required");
    auto config = serve_config(options);
    auto s = std::make_unique<ds_server>();
    s->server = std::make_unique<Server>(std::move(config), lexicons_from(options->lexicon_dir));
    const int port = s->server->bind();
    if (bound_port) *bound_port = port;
    Server* raw = s->server.get();
    s->thread = std::thread([raw] { raw->run(); });
    *out = s.release();
  });
}

ds_status ds_server_wait_model(ds_server* server) {
  return guarded([&] {
    require(server != nullptr, "server is required");
    if (!server->server->wait_for_model()) throw ValidationError("training session did not produce a model");
  });
}

void ds_server_stop(ds_server* server) {
  if (server) server->server->stop();
}

void ds_server_free(ds_server* server) {
  if (!server) return;
  server->server->stop();
  if (server->thread.joinable()) server->thread.join();
  delete server;
}

ds_status ds_serve(const ds_serve_options* options) {
  return guarded([&] {
    Server server(serve_config(options), lexicons_from(options->lexicon_dir));
    server.bind();
    server.run();
  });
}

}  // extern "C"

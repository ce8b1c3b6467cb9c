#include "docsynth/server.hpp"

#include <condition_variable>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "docsynth/background.hpp"
#include "docsynth/error.hpp"
#include "docsynth/harness.hpp"
#include "docsynth/syntax.hpp"

namespace docsynth {

using nlohmann::ordered_json;

namespace {

ordered_json locations_json(const std::vector<Location>& locs) {
  ordered_json a = ordered_json::array();
  for (const auto& l : locs) a.push_back({l.line_id, l.word_start, l.word_end});
  return a;
}

void send(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send(res, status, ordered_json{{"error", message}});
}

}  // namespace

struct Server::Impl {
  ServeConfig config;
  Lexicons lexicons;
  Corpus corpus;
  httplib::Server http;
  bool bound = false;

  mutable std::mutex mutex;
  std::condition_variable done_cv;
  std::shared_ptr<const TemplateModel> model;
  std::string state = "idle";  // idle, training, done, failed
  std::string error;
  SessionAnnotator annotator;
  std::thread session;

  Impl(ServeConfig c, Lexicons l) : config(std::move(c)), lexicons(std::move(l)) {}

  std::shared_ptr<const TemplateModel> current_model() const {
    std::lock_guard lock(mutex);
    return model;
  }

  void start_session() {
    auto doc = corpus.find(config.train_doc);
    if (!doc) throw ValidationError("unknown training document " + config.train_doc);
    std::vector<std::shared_ptr<const DocumentFacts>> pool;
    for (const auto& id : config.pool_docs) {
      auto d = corpus.find(id);
      if (!d) throw ValidationError("unknown pool document " + id);
      pool.push_back(d);
    }
    auto annotations = config.annotations ? load_annotations(*config.annotations)
                                          : corpus.annotations(config.train_doc);
    if (annotations.empty()) throw ValidationError("no annotations for " + config.train_doc);
    {
      std::lock_guard lock(mutex);
      state = "training";
    }
    session = std::thread([this, doc, pool, annotations] {
      try {
        auto m = std::make_shared<const TemplateModel>(
            train_ns(doc, annotations, pool, annotator, lexicons, config.train));
        if (config.save_model_to) save_model(*m, *config.save_model_to);
        std::lock_guard lock(mutex);
        model = std::move(m);
        state = "done";
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex);
        state = "failed";
        error = e.what();
      }
      done_cv.notify_all();
    });
  }

  void routes() {
    http.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      send(res, 200, {{"status", "ok"}});
    });

    http.Get("/templates", [this](const httplib::Request&, httplib::Response& res) {
      ordered_json out = ordered_json::array();
      const auto paths = config.templates.empty() ? builtin_template_paths() : config.templates;
      for (const auto& p : paths) {
        try {
          auto t = load_template(p, lexicons);
          ordered_json ents = ordered_json::array();
          for (const auto& e : t.entities) ents.push_back(e.name);
          ordered_json amb = ordered_json::array();
          for (const auto& a : t.ambiguity) amb.push_back({{"entity", a.entity}, {"k", a.k}});
          out.push_back({{"template_id", t.template_id}, {"entities", ents}, {"ambiguity", amb}});
        } catch (const std::exception& e) {
          out.push_back({{"file", p.string()}, {"error", e.what()}});
        }
      }
      send(res, 200, out);
    });

    http.Get(R"(/doc/([^/]+)/layout)", [this](const httplib::Request& req, httplib::Response& res) {
      auto doc = corpus.find(req.matches[1].str());
      if (!doc) return send_error(res, 404, "unknown document " + req.matches[1].str());
      const auto& layout = doc->layout();
      ordered_json toks = ordered_json::array();
      for (const auto& t : layout.tokens)
        toks.push_back({{"text", t.text},
                        {"box", {t.box.x0, t.box.y0, t.box.x1, t.box.y1}},
                        {"line", t.line_id},
                        {"word", t.word_id},
                        {"block", t.block_id},
                        {"dtype", datatype_name(t.dtype)}});
      ordered_json lines = ordered_json::array();
      for (const auto& l : layout.lines)
        lines.push_back({{"line", l.id}, {"block", l.block_id}, {"text", l.text},
                         {"box", {l.box.x0, l.box.y0, l.box.x1, l.box.y1}}});
      send(res, 200, {{"doc_id", doc->doc_id()},
                      {"page", {{"width", doc->page().width}, {"height", doc->page().height}}},
                      {"tokens", toks},
                      {"lines", lines}});
    });

    http.Get("/session/pending", [this](const httplib::Request&, httplib::Response& res) {
      ordered_json reqs = ordered_json::array();
      if (auto p = annotator.pending()) {
        ordered_json cands = ordered_json::array();
        for (const auto& c : p->candidates)
          cands.push_back({{"value", c.value}, {"programs", c.programs},
                           {"locations", locations_json(c.locations)}});
        reqs.push_back({{"entity", p->entity},
                        {"doc_id", p->doc_id},
                        {"round", p->round},
                        {"candidates", cands},
                        {"training_locations", locations_json(p->training_locations)}});
      }
      send(res, 200, {{"requests", reqs}});
    });

    http.Post("/session/annotate", [this](const httplib::Request& req, httplib::Response& res) {
      ordered_json body;
      try {
        body = ordered_json::parse(req.body);
      } catch (const std::exception&) {
        return send_error(res, 400, "body must be JSON");
      }
      if (!body.is_object() || !body.contains("entity") || !body["entity"].is_string() ||
          !body.contains("doc_id") || !body["doc_id"].is_string())
        return send_error(res, 400, "entity and doc_id are required");
      const std::string entity = body["entity"], doc_id = body["doc_id"];
      AnnotationResponse response;
      if (body.value("abort", false)) {
        response = AnnotationResponse::abort();
      } else if (body.value("skip", false)) {
        response = AnnotationResponse::skip();
      } else {
        if (!body.contains("value") || !body["value"].is_string())
          return send_error(res, 400, "value is required unless skip or abort is set");
        auto doc = corpus.find(doc_id);
        const std::string value = normalize_space(body["value"].get<std::string>());
        if (doc && find_occurrences(*doc, value).empty())
          return send_error(res, 422, "value does not occur in " + doc_id);
        response = AnnotationResponse::accept(value);
      }
      if (!annotator.resolve(entity, doc_id, response))
        return send_error(res, 409, "no pending request for " + entity + " on " + doc_id);
      send(res, 200, {{"resolved", true}});
    });

    http.Get("/session/status", [this](const httplib::Request&, httplib::Response& res) {
      std::shared_ptr<const TemplateModel> m;
      std::string st, err;
      {
        std::lock_guard lock(mutex);
        m = model;
        st = state;
        err = error;
      }
      if (st == "training" && annotator.pending()) st = "waiting";
      ordered_json out{{"state", st}, {"resolved", annotator.resolved()}};
      if (!err.empty()) out["error"] = err;
      if (m) {
        ordered_json ents = ordered_json::array();
        for (const auto& e : m->entities)
          ents.push_back({{"entity", e.entity},
                          {"programs", e.programs.size()},
                          {"k", e.k},
                          {"ambiguous", e.ambiguous},
                          {"untrainable", e.untrainable},
                          {"aborted", e.aborted}});
        out["template_id"] = m->template_id;
        out["entities"] = ents;
      }
      send(res, 200, out);
    });

    http.Get(R"(/programs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto m = current_model();
      if (!m) return send_error(res, 503, "no model available yet");
      const auto* em = m->find(req.matches[1].str());
      if (!em) return send_error(res, 404, "unknown entity " + req.matches[1].str());
      ordered_json progs = ordered_json::array();
      for (const auto& p : em->programs.programs()) {
        ordered_json lines = ordered_json::array();
        for (const auto& lit : p.clause.body)
          if (const auto* def = m->system().find(lit.predicate))
            lines.push_back(interpret(*def, lit, p.clause.var_names));
        progs.push_back({{"clause", p.canonical}, {"interpretation", lines}, {"provenance", p.provenance}});
      }
      send(res, 200, {{"entity", em->entity}, {"programs", progs}, {"text", program_set_text(em->programs)}});
    });

    http.Post("/extract", [this](const httplib::Request& req, httplib::Response& res) {
      auto m = current_model();
      if (!m) return send_error(res, 503, "no model available yet");
      ordered_json body;
      try {
        body = ordered_json::parse(req.body);
      } catch (const std::exception&) {
        return send_error(res, 400, "body must be JSON");
      }
      if (!body.is_object() || !body.contains("doc_id") || !body["doc_id"].is_string())
        return send_error(res, 400, "doc_id is required");
      auto doc = corpus.find(body["doc_id"].get<std::string>());
      if (!doc) return send_error(res, 404, "unknown document " + body["doc_id"].get<std::string>());
      res.status = 200;
      res.set_content(extraction_json(extract_document(*m, *doc, config.extract)), "application/json");
    });

    http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string what = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      send_error(res, 500, what);
    });
  }
};

Server::Server(ServeConfig config, Lexicons lexicons)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(lexicons))) {
  impl_->corpus = Corpus::load(impl_->config.corpus_dir, impl_->lexicons);
  if (impl_->config.model_dir) {
    impl_->model = std::make_shared<const TemplateModel>(load_model(*impl_->config.model_dir));
    impl_->state = "done";
  }
  impl_->routes();
}

Server::~Server() {
  stop();
  if (impl_->session.joinable()) impl_->session.join();
}

int Server::bind() {
  int port = impl_->config.port;
  if (port == 0) {
    port = impl_->http.bind_to_any_port(impl_->config.host);
    if (port < 0) throw IoError("cannot bind " + impl_->config.host);
  } else if (!impl_->http.bind_to_port(impl_->config.host, port)) {
    throw IoError("cannot bind " + impl_->config.host + ":" + std::to_string(port) + " (port busy?)");
  }
  impl_->bound = true;
  if (!impl_->config.model_dir && !impl_->config.train_doc.empty()) impl_->start_session();
  return port;
}

void Server::run() {
  if (!impl_->bound) throw IoError("server is not bound");
  impl_->http.listen_after_bind();
}

void Server::stop() {
  impl_->annotator.close();
  impl_->http.stop();
}

bool Server::wait_for_model() {
  std::unique_lock lock(impl_->mutex);
  impl_->done_cv.wait(lock, [&] { return impl_->state != "training"; });
  return impl_->model != nullptr;
}

}  // namespace docsynth

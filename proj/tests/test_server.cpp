#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <thread>

#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "docsynth/docgen.hpp"
#include "docsynth/harness.hpp"
#include "docsynth/server.hpp"
#include "fixtures.hpp"

using namespace docsynth;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

// doctor1 with seed 7: doctor1_0001 repeats one amount, so training on it
// needs annotations.
const fs::path& corpus_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("docsynth_server_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    generate_corpus(fixtures::builtin_template("doctor1"), 6, 7, {}, fixtures::lexicons(), d);
    return d;
  }();
  return dir;
}

class Running {
 public:
  explicit Running(ServeConfig cfg) : server_(std::move(cfg), fixtures::lexicons()) {
    port_ = server_.bind();
    thread_ = std::thread([this] { server_.run(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(30, 0);
  }
  ~Running() {
    server_.stop();
    thread_.join();
  }
  Server& server() { return server_; }

  std::pair<int, json> get(const std::string& path) {
    auto r = client_->Get(path);
    if (!r) throw std::runtime_error("GET " + path + " failed");
    return {r->status, json::parse(r->body)};
  }
  std::pair<int, json> post(const std::string& path, const std::string& body) {
    auto r = client_->Post(path, body, "application/json");
    if (!r) throw std::runtime_error("POST " + path + " failed");
    return {r->status, json::parse(r->body)};
  }

 private:
  Server server_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

ServeConfig session_config() {
  ServeConfig cfg;
  cfg.port = 0;
  cfg.corpus_dir = corpus_dir();
  cfg.train_doc = "doctor1_0001";
  cfg.pool_docs = {"doctor1_0002", "doctor1_0003", "doctor1_0004"};
  cfg.train.template_id = "doctor1";
  return cfg;
}

std::string truth_value(const Corpus& c, const std::string& doc, const std::string& entity) {
  for (const auto& a : c.annotations(doc))
    if (a.entity == entity) return a.value;
  throw std::runtime_error("no truth for " + doc + "/" + entity);
}

}  // namespace

TEST(Server, BasicEndpoints) {
  Running s(session_config());
  auto [code, health] = s.get("/health");
  EXPECT_EQ(code, 200);
  EXPECT_EQ(health["status"], "ok");

  auto [tcode, templates] = s.get("/templates");
  EXPECT_EQ(tcode, 200);
  ASSERT_TRUE(templates.is_array());
  EXPECT_EQ(templates.size(), builtin_template_paths().size());
  bool doctor1 = false;
  for (const auto& t : templates) doctor1 = doctor1 || t["template_id"] == "doctor1";
  EXPECT_TRUE(doctor1);

  auto [lcode, layout] = s.get("/doc/doctor1_0000/layout");
  EXPECT_EQ(lcode, 200);
  EXPECT_EQ(layout["doc_id"], "doctor1_0000");
  EXPECT_FALSE(layout["tokens"].empty());
  EXPECT_EQ(s.get("/doc/nope/layout").first, 404);

  EXPECT_EQ(s.post("/session/annotate", "not json").first, 400);
  EXPECT_EQ(s.post("/session/annotate", R"({"entity": "x"})").first, 400);
  EXPECT_EQ(s.post("/session/annotate", R"({"entity": "x", "doc_id": "doctor1_0002", "skip": true})").first, 409);
}

TEST(Server, AnnotationSessionEndToEnd) {
  Running s(session_config());
  const auto corpus = Corpus::load(corpus_dir(), fixtures::lexicons());
  std::size_t answered = 0;
  bool checked_errors = false;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
  for (;;) {
    ASSERT_LT(std::chrono::steady_clock::now(), deadline) << "session did not finish";
    auto [_, status] = s.get("/session/status");
    if (status["state"] == "done" || status["state"] == "failed") break;
    auto [pcode, pending] = s.get("/session/pending");
    ASSERT_EQ(pcode, 200);
    if (pending["requests"].empty()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      continue;
    }
    const auto& r = pending["requests"][0];
    const std::string entity = r["entity"], doc = r["doc_id"];
    EXPECT_GE(r["candidates"].size(), 1u);
    if (!checked_errors) {
      EXPECT_EQ(s.get("/programs/" + entity).first, 503);
      EXPECT_EQ(s.post("/extract", R"({"doc_id": "doctor1_0005"})").first, 503);
      json bad{{"entity", entity}, {"doc_id", doc}, {"value", "no such value anywhere"}};
      EXPECT_EQ(s.post("/session/annotate", bad.dump()).first, 422);
      json wrong{{"entity", "other"}, {"doc_id", doc}, {"value", truth_value(corpus, doc, entity)}};
      EXPECT_EQ(s.post("/session/annotate", wrong.dump()).first, 409);
      checked_errors = true;
    }
    json ok{{"entity", entity}, {"doc_id", doc}, {"value", truth_value(corpus, doc, entity)}};
    auto [acode, ack] = s.post("/session/annotate", ok.dump());
    ASSERT_EQ(acode, 200) << ack.dump();
    ++answered;
  }
  EXPECT_TRUE(s.server().wait_for_model());
  EXPECT_GT(answered, 0u);

  auto [_, status] = s.get("/session/status");
  EXPECT_EQ(status["state"], "done");
  EXPECT_EQ(status["template_id"], "doctor1");
  EXPECT_EQ(status["resolved"], answered);
  for (const auto& e : status["entities"]) EXPECT_FALSE(e["aborted"].get<bool>()) << e.dump();

  auto [pcode, programs] = s.get("/programs/amount2");
  EXPECT_EQ(pcode, 200);
  EXPECT_FALSE(programs["programs"].empty());
  EXPECT_NE(programs["text"].get<std::string>().find("amount2("), std::string::npos);
  EXPECT_EQ(s.get("/programs/nope").first, 404);

  auto [ecode, extraction] = s.post("/extract", R"({"doc_id": "doctor1_0005"})");
  ASSERT_EQ(ecode, 200);
  EXPECT_EQ(extraction["doc_id"], "doctor1_0005");
  for (const auto& r : extraction["results"])
    EXPECT_EQ(r["value"], truth_value(corpus, "doctor1_0005", r["entity"])) << r.dump();
  EXPECT_EQ(s.post("/extract", R"({"doc_id": "nope"})").first, 404);
  EXPECT_EQ(s.post("/extract", "[]").first, 400);
}

TEST(Server, AbortEndsTheSession) {
  Running s(session_config());
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
  bool aborted = false;
  while (!aborted) {
    ASSERT_LT(std::chrono::steady_clock::now(), deadline);
    auto [_, pending] = s.get("/session/pending");
    if (pending["requests"].empty()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      continue;
    }
    const auto& r = pending["requests"][0];
    json body{{"entity", r["entity"]}, {"doc_id", r["doc_id"]}, {"abort", true}};
    EXPECT_EQ(s.post("/session/annotate", body.dump()).first, 200);
    aborted = true;
  }
  EXPECT_TRUE(s.server().wait_for_model());
  auto [_, status] = s.get("/session/status");
  bool any = false;
  for (const auto& e : status["entities"]) any = any || e["aborted"].get<bool>();
  EXPECT_TRUE(any);
}

TEST(Server, ServesASavedModel) {
  const auto dir = fs::temp_directory_path() / ("docsynth_server_model_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  {
    auto cfg = session_config();
    cfg.pool_docs.clear();
    cfg.save_model_to = dir;
    Running s(cfg);
    ASSERT_TRUE(s.server().wait_for_model());
  }
  ServeConfig cfg;
  cfg.port = 0;
  cfg.corpus_dir = corpus_dir();
  cfg.model_dir = dir;
  Running s(cfg);
  auto [_, status] = s.get("/session/status");
  EXPECT_EQ(status["state"], "done");
  auto [code, programs] = s.get("/programs/doctor");
  EXPECT_EQ(code, 200);
  EXPECT_FALSE(programs["programs"].empty());
  fs::remove_all(dir);
}

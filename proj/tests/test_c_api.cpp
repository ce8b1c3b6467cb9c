#include <gtest/gtest.h>

#include <atomic>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "docsynth/docsynth.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Owns a library string.
std::string take(char* s) {
  std::string out = s ? s : "";
  ds_string_free(s);
  return out;
}

const fs::path& corpus() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("docsynth_c_api_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    const auto tpl = fs::path(DOCSYNTH_TEMPLATE_DIR) / "doctor1.json";
    EXPECT_EQ(ds_gen_corpus(tpl.c_str(), d.c_str(), 6, 7, nullptr, nullptr), DS_OK) << ds_last_error();
    return d;
  }();
  return dir;
}

std::string doc_path(const std::string& id) { return (corpus() / "docs" / (id + ".json")).string(); }

std::map<std::string, std::string> truth_of(const std::string& doc) {
  std::ifstream in(corpus() / "truth.json");
  std::map<std::string, std::string> out;
  for (const auto& r : json::parse(in))
    if (r["doc_id"] == doc) out[r["entity"]] = r["value"];
  return out;
}

struct CallbackState {
  std::map<std::string, std::string> answers;  // doc/entity -> value
  std::atomic<int> calls{0};
  bool abort = false;
};

ds_annotation answer(void* user, const char* request, char* buf, size_t cap) {
  auto* st = static_cast<CallbackState*>(user);
  ++st->calls;
  if (st->abort) return DS_ANNOTATE_ABORT;
  const auto r = json::parse(request);
  auto it = st->answers.find(r["doc_id"].get<std::string>() + "/" + r["entity"].get<std::string>());
  if (it == st->answers.end() || it->second.size() + 1 > cap) return DS_ANNOTATE_SKIP;
  std::memcpy(buf, it->second.c_str(), it->second.size() + 1);
  return DS_ANNOTATE_ACCEPT;
}

}  // namespace

TEST(CApi, VersionAndErrors) {
  EXPECT_STREQ(ds_version(), "1.0.0");
  ds_facts* f = nullptr;
  EXPECT_EQ(ds_facts_load(nullptr, nullptr, &f), DS_ERR_USAGE);
  EXPECT_STRNE(ds_last_error(), "");
  EXPECT_EQ(ds_facts_load("/nonexistent/doc.json", nullptr, &f), DS_ERR_DATA);
  EXPECT_EQ(f, nullptr);

  const auto bad = fs::temp_directory_path() / ("docsynth_bad_" + std::to_string(::getpid()) + ".json");
  std::ofstream(bad) << "{ not json";
  EXPECT_EQ(ds_facts_load(bad.c_str(), nullptr, &f), DS_ERR_DATA);
  fs::remove(bad);

  ds_model* m = nullptr;
  EXPECT_EQ(ds_model_load("/nonexistent", &m), DS_ERR_DATA);
  ds_train_options o;
  ds_train_options_init(&o);
  EXPECT_EQ(ds_train(&o, &m), DS_ERR_USAGE);
  o.corpus_dir = corpus().c_str();
  o.doc_ids = "doctor1_0000";
  o.mode = 17;
  EXPECT_EQ(ds_train(&o, &m), DS_ERR_USAGE);
  ds_facts_free(nullptr);
  ds_model_free(nullptr);
  ds_string_free(nullptr);
}

TEST(CApi, FactsQuery) {
  ds_facts* f = nullptr;
  ASSERT_EQ(ds_facts_load(doc_path("doctor1_0000").c_str(), nullptr, &f), DS_OK) << ds_last_error();
  char* id = nullptr;
  ASSERT_EQ(ds_facts_doc_id(f, &id), DS_OK);
  EXPECT_EQ(take(id), "doctor1_0000");

  char* rows = nullptr;
  ASSERT_EQ(ds_facts_query(f, "page_lines_master", nullptr, &rows), DS_OK) << ds_last_error();
  auto all = json::parse(take(rows));
  ASSERT_FALSE(all.empty());
  for (const auto& r : all) EXPECT_EQ(r.size(), 3u);

  const json pattern{nullptr, all[0][1], nullptr};
  ASSERT_EQ(ds_facts_query(f, "page_lines_master", pattern.dump().c_str(), &rows), DS_OK);
  auto some = json::parse(take(rows));
  EXPECT_EQ(some.size(), 1u);

  EXPECT_EQ(ds_facts_query(f, "no_such_relation", nullptr, &rows), DS_ERR_USAGE);
  EXPECT_EQ(ds_facts_query(f, "page_lines_master", "[1]", &rows), DS_ERR_USAGE);
  EXPECT_EQ(ds_facts_query(f, "page_lines_master", "{", &rows), DS_ERR_USAGE);
  ds_facts_free(f);
}

TEST(CApi, TrainExtractEvaluate) {
  ds_train_options o;
  ds_train_options_init(&o);
  o.corpus_dir = corpus().c_str();
  o.doc_ids = "doctor1_0000";
  o.mode = DS_TRAIN_OS;
  ds_model* m = nullptr;
  ASSERT_EQ(ds_train(&o, &m), DS_OK) << ds_last_error();

  char* text = nullptr;
  ASSERT_EQ(ds_model_programs(m, "doctor", &text), DS_OK);
  EXPECT_NE(take(text).find("doctor("), std::string::npos);
  EXPECT_EQ(ds_model_programs(m, "nope", &text), DS_ERR_USAGE);

  ds_facts* f = nullptr;
  ASSERT_EQ(ds_facts_load(doc_path("doctor1_0005").c_str(), nullptr, &f), DS_OK);
  char* out = nullptr;
  ASSERT_EQ(ds_extract(m, f, nullptr, &out), DS_OK) << ds_last_error();
  auto ex = json::parse(take(out));
  auto truth = truth_of("doctor1_0005");
  for (const auto& r : ex["results"])
    if (r["entity"] != "amount2") {
      EXPECT_EQ(r["value"], truth[r["entity"]]) << r.dump();
    }

  const auto dir = fs::temp_directory_path() / ("docsynth_c_api_model_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  ASSERT_EQ(ds_model_save(m, dir.c_str()), DS_OK) << ds_last_error();
  ds_model* back = nullptr;
  ASSERT_EQ(ds_model_load(dir.c_str(), &back), DS_OK) << ds_last_error();
  char *a = nullptr, *b = nullptr;
  ds_model_json(m, &a);
  ds_model_json(back, &b);
  EXPECT_EQ(take(a), take(b));

  char *rep1 = nullptr, *csv = nullptr, *cases = nullptr, *rep2 = nullptr;
  ASSERT_EQ(ds_evaluate(m, corpus().c_str(), nullptr, nullptr, &rep1, &csv, &cases), DS_OK) << ds_last_error();
  ASSERT_EQ(ds_evaluate(back, corpus().c_str(), nullptr, nullptr, &rep2, nullptr, nullptr), DS_OK);
  const auto r1 = take(rep1);
  EXPECT_EQ(r1, take(rep2));
  EXPECT_EQ(json::parse(r1)["test_docs"].size(), 5u);
  EXPECT_EQ(take(csv).rfind("entity,", 0), 0u);
  EXPECT_FALSE(take(cases).empty());

  ds_facts_free(f);
  ds_model_free(back);
  ds_model_free(m);
  fs::remove_all(dir);
}

TEST(CApi, CallbackAnnotator) {
  CallbackState st;
  for (const auto& doc : {"doctor1_0001", "doctor1_0002", "doctor1_0003", "doctor1_0004"})
    for (const auto& [e, v] : truth_of(doc)) st.answers[std::string(doc) + "/" + e] = v;

  ds_train_options o;
  ds_train_options_init(&o);
  o.corpus_dir = corpus().c_str();
  o.doc_ids = "doctor1_0001";
  o.pool = "doctor1_0002,doctor1_0003,doctor1_0004";
  o.mode = DS_TRAIN_NS;
  o.annotator = DS_ANNOTATOR_CALLBACK;
  o.callback = answer;
  o.user = &st;
  ds_model* m = nullptr;
  ASSERT_EQ(ds_train(&o, &m), DS_OK) << ds_last_error();
  EXPECT_GT(st.calls.load(), 0);
  char* mj = nullptr;
  ASSERT_EQ(ds_model_json(m, &mj), DS_OK);
  auto model = json::parse(take(mj));
  EXPECT_EQ(model["mode"], "ns");
  ds_model_free(m);

  CallbackState quit;
  quit.abort = true;
  o.user = &quit;
  ASSERT_EQ(ds_train(&o, &m), DS_OK) << ds_last_error();
  EXPECT_EQ(quit.calls.load(), 1);
  ASSERT_EQ(ds_model_json(m, &mj), DS_OK);
  bool aborted = false;
  const auto aborted_model = json::parse(take(mj));
  for (const auto& e : aborted_model["entities"]) aborted = aborted || e.value("aborted", false);
  EXPECT_TRUE(aborted);
  ds_model_free(m);

  o.callback = nullptr;
  EXPECT_EQ(ds_train(&o, &m), DS_ERR_USAGE);
}

TEST(CApi, ServerLifecycle) {
  ds_serve_options o;
  ds_serve_options_init(&o);
  o.port = 0;
  o.corpus_dir = corpus().c_str();
  o.train_doc = "doctor1_0000";
  ds_server* s = nullptr;
  int port = 0;
  ASSERT_EQ(ds_server_start(&o, &s, &port), DS_OK) << ds_last_error();
  EXPECT_GT(port, 0);
  ASSERT_EQ(ds_server_wait_model(s), DS_OK) << ds_last_error();
  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  res = client.Post("/extract", R"({"doc_id": "doctor1_0003"})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  ds_server_stop(s);
  ds_server_free(s);

  o.model_dir = "/somewhere";
  EXPECT_EQ(ds_server_start(&o, &s, &port), DS_ERR_USAGE);
}

// Command-line front end. Talks to the library through the C API only.
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <pthread.h>

#include <CLI11.hpp>

#include "docsynth/docsynth.h"

namespace {

// Owns a char* returned by the library.
struct Text {
  char* p = nullptr;
  ~Text() { ds_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

int fail(ds_status s) {
  std::cerr << "docsynth: " << ds_last_error() << "\n";
  return static_cast<int>(s);
}

int usage(const std::string& msg) {
  std::cerr << "docsynth: " << msg << "\n";
  return DS_ERR_USAGE;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

bool write_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

int emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return 0;
  }
  if (!write_file(out, text)) return usage("cannot write " + out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Template document extraction by program synthesis"};
  app.require_subcommand(1);
  std::string lexicons;
  app.add_option("--lexicons", lexicons, "Lexicon directory")->default_str(ds_default_lexicon_dir());
  app.set_version_flag("--version", ds_version());

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic corpus from a template");
  std::string tmpl, gen_out;
  std::size_t gen_n = 20;
  std::uint64_t gen_seed = 1;
  ds_noise noise{0, 0, 0, 0};
  gen->add_option("--template", tmpl, "Template JSON file")->required();
  gen->add_option("-n,--count", gen_n, "Number of documents")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--jitter", noise.box_jitter, "Box jitter std-dev (pixels)");
  gen->add_option("--drop", noise.token_drop_prob, "Boilerplate token drop probability");
  gen->add_option("--variant", noise.keyword_variant_prob, "Keyword variant probability");
  gen->add_option("--shift", noise.line_shift_prob, "Line shift probability");

  // train
  auto* train = app.add_subcommand("train", "Synthesize extraction programs");
  ds_train_options topt;
  ds_train_options_init(&topt);
  std::string corpus, mode = "os", annotations, annotator = "truth", background, model_out, template_id;
  std::vector<std::string> docs, pool;
  train->add_option("--corpus", corpus, "Corpus directory (docs/, truth.json)")->required();
  train->add_option("--doc", docs, "Training document id (raw: several)")->required()->delimiter(',');
  train->add_option("--mode", mode, "os, ns or raw")
      ->check(CLI::IsMember({"os", "ns", "raw"}))
      ->capture_default_str();
  train->add_option("--depth", topt.depth, "Maximum proof depth")->capture_default_str();
  train->add_option("--seed", topt.seed, "Seed of the noisy clone")->capture_default_str();
  train->add_option("--pool", pool, "Pool document ids (ns)")->delimiter(',');
  train->add_option("--annotations", annotations, "Annotation file of the training document");
  train->add_option("--annotator", annotator, "truth or terminal (ns)")
      ->check(CLI::IsMember({"truth", "terminal"}))
      ->capture_default_str();
  train->add_option("--background", background, "Rules file replacing the built-in catalog");
  train->add_option("--template-id", template_id, "Template id stored in the model");
  train->add_option("--out", model_out, "Model directory")->required();

  // extract
  auto* ext = app.add_subcommand("extract", "Extract entities from one document");
  std::string model_dir, doc_file, ext_out;
  ds_extract_options eopt;
  ds_extract_options_init(&eopt);
  bool exclude_null = false;
  ext->add_option("--model", model_dir, "Model directory")->required();
  ext->add_option("--doc", doc_file, "Fact file")->required()->check(CLI::ExistingFile);
  ext->add_option("--threshold", eopt.entropy_threshold, "Entropy threshold (bits)")->capture_default_str();
  ext->add_flag("--exclude-null", exclude_null, "Leave NULL outputs out of the entropy");
  ext->add_option("--out", ext_out, "Output file (default stdout)");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Evaluate a model on a corpus");
  std::string ev_out;
  ev->add_option("--model", model_dir, "Model directory")->required();
  ev->add_option("--corpus", corpus, "Corpus directory")->required();
  ev->add_option("--threshold", eopt.entropy_threshold, "Entropy threshold (bits)")->capture_default_str();
  ev->add_flag("--exclude-null", exclude_null, "Leave NULL outputs out of the entropy");
  ev->add_option("--out", ev_out, "Report directory (report.json, report.csv, cases.csv)");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Train on every subset of a document pool and evaluate");
  ds_sweep_options sopt;
  ds_sweep_options_init(&sopt);
  std::string sizes = "1,2,3,4,5", modes = "raw,os,ns", sw_out;
  sw->add_option("--corpus", corpus, "Corpus directory")->required();
  sw->add_option("--sizes", sizes, "Training set sizes")->capture_default_str();
  sw->add_option("--modes", modes, "Training modes")->capture_default_str();
  sw->add_option("--pool", sopt.pool, "Pool size (first documents)")->capture_default_str();
  sw->add_option("--depth", sopt.depth, "Maximum proof depth")->capture_default_str();
  sw->add_option("--seed", sopt.seed, "Seed of the noisy clone")->capture_default_str();
  sw->add_option("--out", sw_out, "Report directory (sweep.json, sweep.csv)");

  // serve
  auto* sv = app.add_subcommand("serve", "Run the HTTP annotation and extraction service");
  ds_serve_options vopt;
  ds_serve_options_init(&vopt);
  std::string host = "127.0.0.1", train_doc, save_to;
  sv->add_option("--corpus", corpus, "Corpus directory")->required();
  sv->add_option("--host", host, "Bind address")->capture_default_str();
  sv->add_option("--port", vopt.port, "Port (0 picks a free one)")->capture_default_str();
  auto* m_opt = sv->add_option("--model", model_dir, "Serve this model");
  auto* t_opt = sv->add_option("--train-doc", train_doc, "Run a TrainNS session on this document");
  m_opt->excludes(t_opt);
  sv->add_option("--pool", pool, "Pool document ids")->delimiter(',');
  sv->add_option("--annotations", annotations, "Annotation file of the training document");
  sv->add_option("--save-model", save_to, "Write the trained model here");
  sv->add_option("--depth", vopt.depth, "Maximum proof depth")->capture_default_str();
  sv->add_option("--seed", vopt.seed, "Seed of the noisy clone")->capture_default_str();
  sv->add_option("--threshold", vopt.extract.entropy_threshold, "Entropy threshold (bits)");

  // facts
  auto* fq = app.add_subcommand("facts", "Query the relations of one document");
  std::string relation, pattern;
  fq->add_option("--doc", doc_file, "Fact file")->required()->check(CLI::ExistingFile);
  fq->add_option("--relation", relation, "Relation name")->required();
  fq->add_option("--pattern", pattern, "JSON array of null, strings and integers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return DS_ERR_USAGE;
  }
  const char* lex = opt(lexicons);
  eopt.entropy_includes_null = exclude_null ? 0 : 1;

  if (gen->parsed()) {
    ds_status s = ds_gen_corpus(tmpl.c_str(), gen_out.c_str(), gen_n, gen_seed, &noise, lex);
    if (s != DS_OK) return fail(s);
    std::cerr << "wrote " << gen_n << " documents to " << gen_out << "\n";
    return 0;
  }

  if (train->parsed()) {
    const std::string doc_list = join(docs), pool_list = join(pool);
    topt.corpus_dir = corpus.c_str();
    topt.doc_ids = doc_list.c_str();
    topt.pool = opt(pool_list);
    topt.annotations_path = opt(annotations);
    topt.background_path = opt(background);
    topt.template_id = opt(template_id);
    topt.lexicon_dir = lex;
    topt.mode = mode == "os" ? DS_TRAIN_OS : mode == "ns" ? DS_TRAIN_NS : DS_TRAIN_RAW;
    topt.annotator = annotator == "terminal" ? DS_ANNOTATOR_TERMINAL : DS_ANNOTATOR_TRUTH;
    ds_model* model = nullptr;
    ds_status s = ds_train(&topt, &model);
    if (s != DS_OK) return fail(s);
    s = ds_model_save(model, model_out.c_str());
    ds_model_free(model);
    if (s != DS_OK) return fail(s);
    std::cerr << "model written to " << model_out << "\n";
    return 0;
  }

  if (ext->parsed()) {
    ds_model* model = nullptr;
    ds_status s = ds_model_load(model_dir.c_str(), &model);
    if (s != DS_OK) return fail(s);
    ds_facts* facts = nullptr;
    s = ds_facts_load(doc_file.c_str(), lex, &facts);
    Text json;
    if (s == DS_OK) s = ds_extract(model, facts, &eopt, &json.p);
    ds_facts_free(facts);
    ds_model_free(model);
    if (s != DS_OK) return fail(s);
    return emit(ext_out, json.str());
  }

  if (ev->parsed()) {
    ds_model* model = nullptr;
    ds_status s = ds_model_load(model_dir.c_str(), &model);
    if (s != DS_OK) return fail(s);
    Text json, csv, cases;
    s = ds_evaluate(model, corpus.c_str(), lex, &eopt, &json.p, &csv.p, &cases.p);
    ds_model_free(model);
    if (s != DS_OK) return fail(s);
    if (ev_out.empty()) {
      std::cout << json.str();
      return 0;
    }
    const std::filesystem::path dir(ev_out);
    if (!write_file(dir / "report.json", json.str()) || !write_file(dir / "report.csv", csv.str()) ||
        !write_file(dir / "cases.csv", cases.str()))
      return usage("cannot write reports to " + ev_out);
    std::cout << csv.str();
    return 0;
  }

  if (sw->parsed()) {
    sopt.corpus_dir = corpus.c_str();
    sopt.lexicon_dir = lex;
    sopt.sizes = sizes.c_str();
    sopt.modes = modes.c_str();
    sopt.extract = eopt;
    Text json, csv;
    ds_status s = ds_sweep(&sopt, &json.p, &csv.p);
    if (s != DS_OK) return fail(s);
    if (sw_out.empty()) {
      std::cout << csv.str();
      return 0;
    }
    const std::filesystem::path dir(sw_out);
    if (!write_file(dir / "sweep.json", json.str()) || !write_file(dir / "sweep.csv", csv.str()))
      return usage("cannot write reports to " + sw_out);
    std::cout << csv.str();
    return 0;
  }

  if (sv->parsed()) {
    if (model_dir.empty() == train_doc.empty()) return usage("serve needs exactly one of --model and --train-doc");
    const std::string pool_list = join(pool);
    vopt.host = host.c_str();
    vopt.corpus_dir = corpus.c_str();
    vopt.model_dir = opt(model_dir);
    vopt.train_doc = opt(train_doc);
    vopt.pool = opt(pool_list);
    vopt.annotations_path = opt(annotations);
    vopt.save_model_to = opt(save_to);
    vopt.lexicon_dir = lex;
    // Server threads inherit the mask, so the signals arrive at sigwait below.
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
    ds_server* server = nullptr;
    int port = 0;
    ds_status s = ds_server_start(&vopt, &server, &port);
    if (s != DS_OK) return fail(s);
    std::cerr << "listening on http://" << host << ":" << port << std::endl;
    int sig = 0;
    sigwait(&stop_signals, &sig);
    ds_server_free(server);
    return 0;
  }

  if (fq->parsed()) {
    ds_facts* facts = nullptr;
    ds_status s = ds_facts_load(doc_file.c_str(), lex, &facts);
    if (s != DS_OK) return fail(s);
    Text rows;
    s = ds_facts_query(facts, relation.c_str(), opt(pattern), &rows.p);
    ds_facts_free(facts);
    if (s != DS_OK) return fail(s);
    std::cout << rows.str() << "\n";
    return 0;
  }
  return DS_ERR_USAGE;
}

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "docsynth/extraction.hpp"
#include "docsynth/training.hpp"

namespace docsynth {

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path corpus_dir;  // docs/ and truth.json
  // Serve a trained model...
  std::optional<std::filesystem::path> model_dir;
  // ...or run a TrainNS session on train_doc with the pool documents.
  std::string train_doc;
  std::vector<std::string> pool_docs;
  std::optional<std::filesystem::path> annotations;  // default: truth of train_doc
  std::optional<std::filesystem::path> save_model_to;
  TrainOptions train;
  ExtractOptions extract;
  std::vector<std::filesystem::path> templates;  // GET /templates; default built-ins
};

// HTTP/JSON service:
//   GET  /health, /templates, /doc/{id}/layout, /session/pending,
//        /session/status, /programs/{entity}
//   POST /session/annotate {entity, doc_id, value, skip?, abort?}
//   POST /extract {doc_id}
// Reads run concurrently; session mutations go through one annotator.
class Server {
 public:
  Server(ServeConfig config, Lexicons lexicons);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds the socket and starts the training session, if any. Returns the
  // bound port. Throws IoError when the port cannot be bound.
  int bind();
  // Serves until stop(). bind() must have succeeded.
  void run();
  void stop();

  // Blocks until the training session is finished (or failed); true when a
  // model is available.
  bool wait_for_model();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace docsynth

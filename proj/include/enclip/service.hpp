/**
 * @file service.hpp
 * @brief Request handling and the HTTP front end over a loaded ModelSet.
 *
 * Endpoints:
 *   GET  /health            store summary (z, dim, corpus size)
 *   GET  /models            model ids and epochs in ensemble order
 *   POST /search            SearchRequest -> ranked result document
 *   POST /eval              starts an evaluation job, returns its id
 *   GET  /eval/{job_id}     job progress, and the report once finished
 *   GET  /images/{item_id}  image bytes from the configured directory
 */

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "enclip/corpus.hpp"
#include "enclip/evalkit.hpp"
#include "enclip/pipeline.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace enclip::service {

/// Malformed or unsatisfiable request (HTTP 400).
class RequestError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// The text encoder failed or was unreachable (HTTP 502).
class UpstreamError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Client for the external text encoder. Sends
/// {"model_id", "modality": "text", "payload"} and expects {"vec": [...]}.
class EncoderClient {
public:
  explicit EncoderClient(std::string url);

  std::vector<float> encode(const std::string& model_id, const std::string& text) const;
  const std::string& url() const noexcept { return url_; }

private:
  std::string url_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
};

struct SearchRequest {
  std::optional<std::string> text;
  std::map<std::string, std::vector<float>> query_vectors;
  std::size_t top_k_per_model = search::kDefaultTopK;
  std::size_t n = 10;
  int k_min = cluster::kDefaultKMin;
  int k_max = cluster::kDefaultKMax;
  std::uint64_t seed = 0;
  ranker::RankingVariant comparator = ranker::RankingVariant::FreqThenWs;
  bool include_diagnostics = false;
};

SearchRequest parse_search_request(const nlohmann::json& body);

struct EngineOptions {
  std::optional<std::string> encoder_url;
  std::optional<std::filesystem::path> images_dir;
};

/// Stateless request handling over an immutable ModelSet; safe to share
/// between threads.
class Engine {
public:
  Engine(corpus::ModelSet set, EngineOptions options = {});

  const corpus::ModelSet& models() const noexcept { return set_; }

  nlohmann::json health() const;
  nlohmann::json model_list() const;

  /// Per-model query vectors for a request, calling the encoder concurrently
  /// when only text is given.
  std::vector<std::vector<float>> resolve(const SearchRequest& req) const;

  nlohmann::json handle_search(const SearchRequest& req) const;

  evalkit::EvalReport handle_eval(const std::vector<evalkit::QueryRecord>& queries,
                                  const std::vector<evalkit::RelevanceJudgment>& qrels,
                                  const evalkit::EvalConfig& config, const evalkit::ProgressFn& progress = {}) const;

  /// File inside the images directory for an item, or nullopt when absent,
  /// unconfigured or outside the directory.
  std::optional<std::filesystem::path> image_path(const std::string& item_id) const;

  evalkit::TextEncoder text_encoder() const;

private:
  corpus::ModelSet set_;
  std::optional<EncoderClient> encoder_;
  std::optional<std::filesystem::path> images_dir_;
};

/// Renders a ranked result as the /search response document.
nlohmann::json to_json(const ranker::RankedResult& result, const corpus::ModelSet& set, const SearchRequest& req);

/// Parses an /eval body: {"queries": path, "qrels": path, "k", "n", "top_k_per_model",
/// "k_min", "k_max", "seed", "comparator", "denominator"}.
evalkit::EvalConfig parse_eval_config(const nlohmann::json& body);

class Server {
public:
  explicit Server(std::shared_ptr<const Engine> engine);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and serves on a background thread. Port 0 picks a free port.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

private:
  struct Job {
    std::atomic<std::size_t> done{0};
    std::atomic<std::size_t> total{0};
    std::atomic<int> state{0};  // 0 running, 1 done, 2 failed
    std::mutex mutex;
    nlohmann::json report;
    std::string error;
    std::thread worker;
  };

  void routes();
  std::string submit(std::vector<evalkit::QueryRecord> queries, std::vector<evalkit::RelevanceJudgment> qrels,
                     evalkit::EvalConfig config);
  nlohmann::json job_status(const std::string& id);

  std::shared_ptr<const Engine> engine_;
  std::unique_ptr<httplib::Server> http_;
  std::thread listener_;
  std::mutex jobs_mutex_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::uint64_t next_job_ = 1;
};

}  // namespace enclip::service

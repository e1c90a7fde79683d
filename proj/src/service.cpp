#include "enclip/service.hpp"

#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

#include "httplib.h"

namespace enclip::service {

namespace {

template <typename T>
T field(const nlohmann::json& body, const char* key, T fallback) {
  if (!body.contains(key) || body[key].is_null()) return fallback;
  try {
    return body[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw RequestError(std::string("field '") + key + "' has the wrong type");
  }
}

std::size_t positive(const nlohmann::json& body, const char* key, std::size_t fallback) {
  if (!body.contains(key) || body[key].is_null()) return fallback;
  if (!body[key].is_number_integer() || body[key].get<std::int64_t>() < 1) {
    throw RequestError(std::string("field '") + key + "' must be a positive integer");
  }
  return body[key].get<std::size_t>();
}

void check_k_range(int k_min, int k_max) {
  if (k_min < 1 || k_max < k_min) throw RequestError("need 1 <= k_min <= k_max");
}

nlohmann::json error_body(const std::string& kind, const std::string& message) {
  return {{"error", {{"kind", kind}, {"message", message}}}};
}

std::string content_type(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".png") return "image/png";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  if (ext == ".bmp") return "image/bmp";
  return "application/octet-stream";
}

PipelineConfig pipeline_config(const SearchRequest& req) {
  PipelineConfig c;
  c.top_k_per_model = req.top_k_per_model;
  c.n = req.n;
  c.k_min = req.k_min;
  c.k_max = req.k_max;
  c.seed = req.seed;
  c.variant = req.comparator;
  return c;
}

}  // namespace

SearchRequest parse_search_request(const nlohmann::json& body) {
  if (!body.is_object()) throw RequestError("search request must be a JSON object");
  SearchRequest req;
  if (body.contains("text") && !body["text"].is_null()) {
    if (!body["text"].is_string()) throw RequestError("field 'text' must be a string");
    req.text = body["text"].get<std::string>();
  }
  if (body.contains("query_vectors") && !body["query_vectors"].is_null()) {
    if (!body["query_vectors"].is_object()) throw RequestError("field 'query_vectors' must map model ids to vectors");
    for (const auto& [model, vec] : body["query_vectors"].items()) {
      try {
        req.query_vectors[model] = vec.get<std::vector<float>>();
      } catch (const nlohmann::json::exception&) {
        throw RequestError("query vector for " + model + " must be an array of numbers");
      }
    }
  }
  if (req.text.has_value() == !req.query_vectors.empty()) {
    throw RequestError("give exactly one of 'text' or 'query_vectors'");
  }
  req.top_k_per_model = positive(body, "top_k_per_model", req.top_k_per_model);
  req.n = positive(body, "n", req.n);
  req.k_min = field<int>(body, "k_min", req.k_min);
  req.k_max = field<int>(body, "k_max", req.k_max);
  check_k_range(req.k_min, req.k_max);
  req.seed = field<std::uint64_t>(body, "seed", req.seed);
  if (body.contains("comparator") && !body["comparator"].is_null()) {
    try {
      req.comparator = ranker::parse_variant(field<std::string>(body, "comparator", ""));
    } catch (const ranker::RankerError& e) {
      throw RequestError(e.what());
    }
  }
  req.include_diagnostics = field<bool>(body, "include_diagnostics", false);
  return req;
}

evalkit::EvalConfig parse_eval_config(const nlohmann::json& body) {
  evalkit::EvalConfig c;
  c.k = positive(body, "k", c.k);
  c.pipeline.n = positive(body, "n", std::max(c.pipeline.n, c.k));
  c.pipeline.top_k_per_model = positive(body, "top_k_per_model", c.pipeline.top_k_per_model);
  c.pipeline.k_min = field<int>(body, "k_min", c.pipeline.k_min);
  c.pipeline.k_max = field<int>(body, "k_max", c.pipeline.k_max);
  check_k_range(c.pipeline.k_min, c.pipeline.k_max);
  c.pipeline.seed = field<std::uint64_t>(body, "seed", c.pipeline.seed);
  try {
    if (body.contains("comparator")) c.pipeline.variant = ranker::parse_variant(field<std::string>(body, "comparator", ""));
    if (body.contains("denominator")) c.denominator = evalkit::parse_denominator(field<std::string>(body, "denominator", ""));
  } catch (const std::invalid_argument& e) {
    throw RequestError(e.what());
  }
  return c;
}

Engine::Engine(corpus::ModelSet set, EngineOptions options) : set_(std::move(set)) {
  if (options.encoder_url && !options.encoder_url->empty()) encoder_.emplace(*options.encoder_url);
  if (options.images_dir) {
    images_dir_ = std::filesystem::weakly_canonical(*options.images_dir);
  }
}

nlohmann::json Engine::health() const {
  return {{"status", "ok"}, {"z", set_.z()}, {"dim", set_.dim()}, {"corpus_size", set_.corpus_size()},
          {"encoder", encoder_ ? encoder_->url() : ""}, {"images", images_dir_.has_value()}};
}

nlohmann::json Engine::model_list() const {
  auto models = nlohmann::json::array();
  for (std::size_t n = 0; n < set_.z(); ++n) {
    const auto& m = set_.model(n);
    models.push_back({{"index", n}, {"model_id", m.model_id()}, {"epoch", m.epoch()},
                      {"weight", 0.1 * std::ldexp(1.0, static_cast<int>(n))}});
  }
  return {{"models", models}};
}

evalkit::TextEncoder Engine::text_encoder() const {
  if (!encoder_) return {};
  const EncoderClient* client = &*encoder_;
  return [client](const std::string& model_id, const std::string& text) { return client->encode(model_id, text); };
}

std::vector<std::vector<float>> Engine::resolve(const SearchRequest& req) const {
  std::vector<std::vector<float>> out(set_.z());
  if (!req.query_vectors.empty()) {
    for (const auto& [model, vec] : req.query_vectors) {
      const auto n = set_.index_of(model);
      if (!n) throw RequestError("unknown model_id in query_vectors: " + model);
      if (vec.size() != set_.dim()) {
        throw RequestError("query vector for " + model + " has " + std::to_string(vec.size()) +
                           " components, expected " + std::to_string(set_.dim()));
      }
      out[*n] = vec;
    }
    for (std::size_t n = 0; n < set_.z(); ++n) {
      if (out[n].empty()) throw RequestError("missing query vector for model " + set_.model(n).model_id());
    }
    return out;
  }
  if (!encoder_) {
    throw RequestError("text query needs a text encoder; configure --encoder-url or ENCLIP_ENCODER_URL");
  }
  std::vector<std::future<std::vector<float>>> calls;
  for (std::size_t n = 0; n < set_.z(); ++n) {
    calls.push_back(std::async(std::launch::async, [this, n, &req] {
      return encoder_->encode(set_.model(n).model_id(), *req.text);
    }));
  }
  for (auto& call : calls) call.wait();
  for (std::size_t n = 0; n < set_.z(); ++n) {
    out[n] = calls[n].get();
    if (out[n].size() != set_.dim()) {
      throw UpstreamError("encoder returned " + std::to_string(out[n].size()) + " components for " +
                          set_.model(n).model_id() + ", store dim is " + std::to_string(set_.dim()));
    }
  }
  return out;
}

nlohmann::json to_json(const ranker::RankedResult& result, const corpus::ModelSet& set, const SearchRequest& req) {
  nlohmann::json j;
  auto items = nlohmann::json::array();
  for (std::size_t i = 0; i < result.items.size(); ++i) {
    const auto& it = result.items[i];
    items.push_back({{"rank", i + 1}, {"item_id", it.item_id}, {"frequency", it.frequency},
                     {"weighted_score", it.weighted_score}, {"best_similarity", it.best_similarity}});
  }
  j["items"] = items;
  j["head_sequence"] = result.head_sequence;
  j["short_result"] = result.short_result;
  j["request"] = {{"n", req.n}, {"top_k_per_model", req.top_k_per_model}, {"k_min", req.k_min},
                  {"k_max", req.k_max}, {"seed", req.seed}, {"comparator", std::string(ranker::to_string(req.comparator))}};
  if (req.include_diagnostics) {
    const auto& d = result.diagnostics;
    auto points = nlohmann::json::array();
    for (std::size_t p = 0; p < d.points.size(); ++p) {
      const auto& info = d.points[p];
      const auto& model = set.model(info.model_index);
      points.push_back({{"item_id", info.item_id}, {"model_index", info.model_index},
                        {"model_id", model.model_id()}, {"epoch", model.epoch()},
                        {"similarity", info.similarity}, {"x", d.coords.at(p)[0]}, {"y", d.coords.at(p)[1]},
                        {"label", d.labels.at(p)}});
    }
    auto heads = nlohmann::json::array();
    for (const auto& s : d.steps) heads.push_back({{"head", s.head}, {"clusters", s.clusters}, {"added", s.added}});
    j["diagnostics"] = {{"k", d.k}, {"silhouette", d.silhouette}, {"points", points}, {"heads", heads},
                        {"warnings", d.warnings}};
  }
  return j;
}

nlohmann::json Engine::handle_search(const SearchRequest& req) const {
  const auto vectors = resolve(req);
  try {
    return to_json(run_pipeline(set_, vectors, pipeline_config(req)), set_, req);
  } catch (const search::SearchError& e) {
    throw RequestError(e.what());
  }
}

evalkit::EvalReport Engine::handle_eval(const std::vector<evalkit::QueryRecord>& queries,
                                        const std::vector<evalkit::RelevanceJudgment>& qrels,
                                        const evalkit::EvalConfig& config, const evalkit::ProgressFn& progress) const {
  return evalkit::run_eval(set_, queries, qrels, config, text_encoder(), progress);
}

std::optional<std::filesystem::path> Engine::image_path(const std::string& item_id) const {
  if (!images_dir_ || item_id.empty() || item_id == "." || item_id == ".." ||
      item_id.find_first_of("/\\") != std::string::npos || item_id.find('\0') != std::string::npos) {
    return std::nullopt;
  }
  static const char* kExtensions[] = {"", ".jpg", ".jpeg", ".png", ".webp", ".gif", ".bmp"};
  for (const char* ext : kExtensions) {
    const auto candidate = std::filesystem::weakly_canonical(*images_dir_ / (item_id + ext));
    const auto rel = candidate.lexically_relative(*images_dir_);
    if (rel.empty() || *rel.begin() == "..") continue;
    if (std::filesystem::is_regular_file(candidate)) return candidate;
  }
  return std::nullopt;
}

Server::Server(std::shared_ptr<const Engine> engine)
    : engine_(std::move(engine)), http_(std::make_unique<httplib::Server>()) {
  routes();
}

Server::~Server() {
  stop();
  std::lock_guard lock(jobs_mutex_);
  for (auto& [_, job] : jobs_) {
    if (job->worker.joinable()) job->worker.join();
  }
}

void Server::routes() {
  auto reply = [](httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };
  auto guarded = [reply](auto handler) {
    return [handler, reply](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const RequestError& e) {
        reply(res, 400, error_body("request", e.what()));
      } catch (const evalkit::EvalError& e) {
        reply(res, 400, error_body("request", e.what()));
      } catch (const nlohmann::json::exception& e) {
        reply(res, 400, error_body("request", std::string("invalid JSON: ") + e.what()));
      } catch (const UpstreamError& e) {
        reply(res, 502, error_body("upstream", e.what()));
      } catch (const std::exception& e) {
        reply(res, 500, error_body("internal", e.what()));
      }
    };
  };

  http_->Get("/health", guarded([this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, engine_->health());
  }));
  http_->Get("/models", guarded([this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, engine_->model_list());
  }));
  http_->Post("/search", guarded([this, reply](const httplib::Request& req, httplib::Response& res) {
    const auto request = parse_search_request(nlohmann::json::parse(req.body));
    reply(res, 200, engine_->handle_search(request));
  }));
  http_->Post("/eval", guarded([this, reply](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const auto queries_path = field<std::string>(body, "queries", "");
    const auto qrels_path = field<std::string>(body, "qrels", "");
    if (queries_path.empty() || qrels_path.empty()) throw RequestError("'queries' and 'qrels' paths are required");
    auto config = parse_eval_config(body);
    auto queries = evalkit::read_queries(queries_path);
    if (queries.empty()) throw RequestError("no queries");
    auto qrels = evalkit::read_qrels(qrels_path);
    const auto id = submit(std::move(queries), std::move(qrels), config);
    reply(res, 202, {{"job_id", id}, {"status", "/eval/" + id}});
  }));
  http_->Get(R"(/eval/([A-Za-z0-9-]+))", guarded([this, reply](const httplib::Request& req, httplib::Response& res) {
    const auto status = job_status(req.matches[1]);
    reply(res, status.is_null() ? 404 : 200, status.is_null() ? error_body("request", "unknown job") : status);
  }));
  http_->Get(R"(/images/(.+))", guarded([this, reply](const httplib::Request& req, httplib::Response& res) {
    const auto path = engine_->image_path(req.matches[1]);
    if (!path) {
      reply(res, 404, error_body("request", "no image for item"));
      return;
    }
    std::ifstream in(*path, std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    res.status = 200;
    res.set_content(bytes.str(), content_type(*path));
  }));
}

std::string Server::submit(std::vector<evalkit::QueryRecord> queries, std::vector<evalkit::RelevanceJudgment> qrels,
                           evalkit::EvalConfig config) {
  auto job = std::make_shared<Job>();
  job->total = queries.size();
  std::string id;
  {
    std::lock_guard lock(jobs_mutex_);
    id = "job-" + std::to_string(next_job_++);
    jobs_[id] = job;
  }
  job->worker = std::thread([engine = engine_, job, queries = std::move(queries), qrels = std::move(qrels), config] {
    try {
      auto report = engine->handle_eval(queries, qrels, config, [&](std::size_t done, std::size_t) { job->done = done; });
      auto doc = evalkit::to_json(report);
      doc["table"] = evalkit::format_table(report);
      std::lock_guard lock(job->mutex);
      job->report = std::move(doc);
      job->state = 1;
    } catch (const std::exception& e) {
      std::lock_guard lock(job->mutex);
      job->error = e.what();
      job->state = 2;
    }
  });
  return id;
}

nlohmann::json Server::job_status(const std::string& id) {
  std::shared_ptr<Job> job;
  {
    std::lock_guard lock(jobs_mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) return nullptr;
    job = it->second;
  }
  static const char* kStates[] = {"running", "done", "failed"};
  nlohmann::json out{{"job_id", id}, {"state", kStates[job->state.load()]}, {"done", job->done.load()},
                     {"total", job->total.load()}};
  std::lock_guard lock(job->mutex);
  if (job->state == 1) out["report"] = job->report;
  if (job->state == 2) out["error"] = job->error;
  return out;
}

int Server::start(const std::string& host, int port) {
  const int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  listener_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return bound;
}

void Server::run(const std::string& host, int port) {
  if (!http_->listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

void Server::stop() {
  if (http_) http_->stop();
  if (listener_.joinable()) listener_.join();
}

}  // namespace enclip::service

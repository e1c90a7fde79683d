/**
 * @file evalkit.hpp
 * @brief Batch evaluation over query and relevance files, plus a synthetic
 *        multi-checkpoint fixture with planted per-model blind spots.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "enclip/corpus.hpp"
#include "enclip/metrics.hpp"
#include "enclip/pipeline.hpp"
#include "json.hpp"

namespace enclip::evalkit {

class EvalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct QueryRecord {
  std::string query_id;
  std::optional<std::string> text;
  std::map<std::string, std::vector<float>> vectors;  ///< model_id -> query embedding
  std::string category;                                ///< optional grouping for the report table
};

struct RelevanceJudgment {
  std::string query_id;
  std::vector<std::string> relevant;
};

std::vector<QueryRecord> read_queries(const std::filesystem::path& path);
std::vector<RelevanceJudgment> read_qrels(const std::filesystem::path& path);
void write_queries(const std::vector<QueryRecord>& queries, const std::filesystem::path& path);
void write_qrels(const std::vector<RelevanceJudgment>& qrels, const std::filesystem::path& path);

QueryRecord query_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QueryRecord& q);

/// Embeds query text with one model. Supplied by the service layer.
using TextEncoder = std::function<std::vector<float>(const std::string& model_id, const std::string& text)>;

/// Query vectors in ModelSet order: taken from the record when it has one for
/// every model, otherwise produced by `encoder` from the text.
std::vector<std::vector<float>> resolve_query_vectors(const corpus::ModelSet& set, const QueryRecord& query,
                                                      const TextEncoder& encoder = {});

struct EvalConfig {
  std::size_t k = 10;
  ApDenominator denominator = ApDenominator::MinRelevantK;
  PipelineConfig pipeline{};
};

struct QueryScore {
  double prec_at_k = 0.0;
  double avg_prec_at_k = 0.0;
};

struct SystemScores {
  std::string name;
  std::map<std::string, QueryScore> per_query;
  double map_score = 0.0;
};

struct EvalReport {
  EvalConfig config;
  std::vector<std::string> query_ids;            ///< input order
  std::map<std::string, std::string> categories;  ///< query_id -> category
  SystemScores enclip;
  std::vector<SystemScores> baselines;  ///< one per model, plain cosine ranking
  std::vector<std::string> warnings;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

EvalReport run_eval(const corpus::ModelSet& set, const std::vector<QueryRecord>& queries,
                    const std::vector<RelevanceJudgment>& qrels, const EvalConfig& config,
                    const TextEncoder& encoder = {}, const ProgressFn& progress = {});

nlohmann::json to_json(const EvalReport& report);

/// Plain-text grid: one row per category plus an overall row, one mAP column
/// per baseline model and a final ENCLIP column.
std::string format_table(const EvalReport& report);

struct SynthSpec {
  std::size_t items = 2000;
  std::size_t groups = 20;
  std::size_t models = 5;
  std::size_t dim = 64;
  std::size_t queries_per_group = 5;
  double item_noise = 0.35;        ///< per-coordinate spread of items around their group center
  double model_noise = 0.35;       ///< per-model perturbation of every item
  double query_noise = 0.2;        ///< spread of queries around their group center
  double model_query_noise = 0.05;  ///< per-model perturbation of every query
  double blind_fraction = 0.1;     ///< share of each group a model misplaces; models * fraction <= 1
  double decoy_noise = 0.3;        ///< spread of misplaced items around the wrong group's center
};

struct SynthFixture {
  std::vector<corpus::EmbeddingMatrix> stores;  ///< ascending epoch
  std::vector<QueryRecord> queries;
  std::vector<RelevanceJudgment> qrels;
};

/// Items belong to ground-truth groups. Each model sees the shared group
/// structure plus its own noise, and misplaces its own disjoint slice of each
/// group next to a different group's center. The union of the models
/// therefore covers what any single model misses.
SynthFixture synth_fixture(std::uint64_t seed, const SynthSpec& spec = {});

/// Writes model-<id>.encb stores plus queries.jsonl and qrels.jsonl.
void write_fixture(const SynthFixture& fixture, const std::filesystem::path& dir);

}  // namespace enclip::evalkit

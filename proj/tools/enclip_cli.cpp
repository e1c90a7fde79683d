// enclip: command-line front end for ingesting stores, querying, evaluating,
// generating synthetic fixtures and serving the HTTP API.

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "enclip/corpus.hpp"
#include "enclip/evalkit.hpp"
#include "enclip/service.hpp"

namespace {

using namespace enclip;

struct QueryOptions {
  std::string stores;
  std::string text;
  std::string qvec_file;
  std::string query_id;
  std::string encoder_url;
  std::size_t n = 10;
  std::size_t topk = search::kDefaultTopK;
  int k_min = cluster::kDefaultKMin;
  int k_max = cluster::kDefaultKMax;
  std::uint64_t seed = 0;
  std::string comparator = "freq_then_ws";
  bool json = false;
  bool diagnostics = false;
};

int run_query(const QueryOptions& o) {
  service::EngineOptions engine_options;
  if (!o.encoder_url.empty()) engine_options.encoder_url = o.encoder_url;
  const service::Engine engine(corpus::open_model_dir(o.stores), engine_options);

  service::SearchRequest req;
  req.n = o.n;
  req.top_k_per_model = o.topk;
  req.k_min = o.k_min;
  req.k_max = o.k_max;
  req.seed = o.seed;
  req.comparator = ranker::parse_variant(o.comparator);
  req.include_diagnostics = o.diagnostics;
  if (!o.text.empty()) {
    req.text = o.text;
  } else {
    const auto queries = evalkit::read_queries(o.qvec_file);
    const evalkit::QueryRecord* chosen = nullptr;
    for (const auto& q : queries) {
      if (o.query_id.empty() || q.query_id == o.query_id) {
        chosen = &q;
        break;
      }
    }
    if (!chosen) {
      throw std::runtime_error(o.query_id.empty() ? "no queries in " + o.qvec_file
                                                  : "query " + o.query_id + " not found in " + o.qvec_file);
    }
    if (chosen->vectors.empty()) throw std::runtime_error("query " + chosen->query_id + " carries no vectors");
    req.query_vectors = chosen->vectors;
  }

  const auto doc = engine.handle_search(req);
  if (o.json) {
    std::cout << doc.dump(2) << '\n';
    return 0;
  }
  std::cout << std::left << std::setw(6) << "rank" << std::setw(24) << "item_id" << std::setw(11) << "frequency"
            << "weighted_score\n";
  for (const auto& item : doc["items"]) {
    std::cout << std::left << std::setw(6) << item["rank"].get<int>() << std::setw(24)
              << item["item_id"].get<std::string>() << std::setw(11) << item["frequency"].get<int>() << std::fixed
              << std::setprecision(1) << item["weighted_score"].get<double>() << '\n';
  }
  if (doc["short_result"].get<bool>()) {
    std::cout << "(only " << doc["items"].size() << " of " << o.n << " requested items were reachable)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble multimodal search over fine-tuned embedding checkpoints"};
  app.require_subcommand(1);

  // ingest
  std::string input, model_id, out_store;
  std::uint32_t epoch = 0;
  auto* ingest = app.add_subcommand("ingest", "Convert a line-delimited JSON embedding export into a binary store");
  ingest->add_option("--input", input, "Interchange file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--model-id", model_id, "Checkpoint identifier")->required();
  ingest->add_option("--epoch", epoch, "Training epochs of the checkpoint")->required();
  ingest->add_option("--out", out_store, "Output store path")->required();

  // serve
  std::string serve_stores, encoder_url, images_dir, host = "0.0.0.0";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--stores", serve_stores, "Directory of .encb stores")->envname("ENCLIP_STORES")->required();
  serve->add_option("--port", port, "Listen port")->envname("ENCLIP_PORT");
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--encoder-url", encoder_url, "Text encoder endpoint")->envname("ENCLIP_ENCODER_URL");
  serve->add_option("--images-dir", images_dir, "Directory of item images")->envname("ENCLIP_IMAGES_DIR");

  // query
  QueryOptions q;
  auto* query = app.add_subcommand("query", "Run one ranked search");
  query->add_option("--stores", q.stores, "Directory of .encb stores")->envname("ENCLIP_STORES")->required();
  auto* text_opt = query->add_option("--text", q.text, "Query text (needs an encoder)");
  auto* qvec_opt = query->add_option("--qvec-file", q.qvec_file, "Queries file with per-model vectors");
  text_opt->excludes(qvec_opt);
  query->add_option("--query-id", q.query_id, "Record to use from --qvec-file (default: first)");
  query->add_option("--encoder-url", q.encoder_url, "Text encoder endpoint")->envname("ENCLIP_ENCODER_URL");
  query->add_option("--n", q.n, "Number of results")->check(CLI::PositiveNumber);
  query->add_option("--topk", q.topk, "Hits taken from each model")->check(CLI::PositiveNumber);
  query->add_option("--k-min", q.k_min, "Smallest cluster count tried")->check(CLI::PositiveNumber);
  query->add_option("--k-max", q.k_max, "Largest cluster count tried")->check(CLI::PositiveNumber);
  query->add_option("--seed", q.seed, "Seed for t-SNE and K-means");
  query->add_option("--comparator", q.comparator, "freq_then_ws, ws_only or freq_times_ws");
  query->add_flag("--json", q.json, "Print the structured result");
  query->add_flag("--diagnostics", q.diagnostics, "Include projection and cluster diagnostics (with --json)");

  // eval
  std::string eval_stores, queries_file, qrels_file, denominator = "min", eval_comparator = "freq_then_ws";
  std::size_t eval_k = 10, eval_n = 0, eval_topk = search::kDefaultTopK;
  int eval_k_min = cluster::kDefaultKMin, eval_k_max = cluster::kDefaultKMax;
  std::uint64_t eval_seed = 0;
  bool eval_json = false;
  std::string eval_encoder;
  auto* eval = app.add_subcommand("eval", "Evaluate against relevance judgments");
  eval->add_option("--stores", eval_stores, "Directory of .encb stores")->envname("ENCLIP_STORES")->required();
  eval->add_option("--queries", queries_file, "Queries file")->required()->check(CLI::ExistingFile);
  eval->add_option("--qrels", qrels_file, "Relevance judgments file")->required()->check(CLI::ExistingFile);
  eval->add_option("--k", eval_k, "Metric cutoff")->check(CLI::PositiveNumber);
  eval->add_option("--n", eval_n, "Results per query (default: k)");
  eval->add_option("--topk", eval_topk, "Hits taken from each model")->check(CLI::PositiveNumber);
  eval->add_option("--k-min", eval_k_min)->check(CLI::PositiveNumber);
  eval->add_option("--k-max", eval_k_max)->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_seed);
  eval->add_option("--denominator", denominator, "Average precision denominator: min or total")
      ->check(CLI::IsMember({"min", "total"}));
  eval->add_option("--comparator", eval_comparator, "freq_then_ws, ws_only or freq_times_ws");
  eval->add_option("--encoder-url", eval_encoder, "Text encoder endpoint")->envname("ENCLIP_ENCODER_URL");
  eval->add_flag("--json", eval_json, "Print the structured report");

  // synth
  std::string synth_out;
  std::uint64_t synth_seed = 0;
  evalkit::SynthSpec spec;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-checkpoint fixture");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--items", spec.items)->check(CLI::PositiveNumber);
  synth->add_option("--groups", spec.groups)->check(CLI::PositiveNumber);
  synth->add_option("--models", spec.models)->check(CLI::PositiveNumber);
  synth->add_option("--dim", spec.dim)->check(CLI::PositiveNumber);
  synth->add_option("--queries-per-group", spec.queries_per_group);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto matrix = corpus::ingest_text(input, model_id, epoch);
      corpus::write_store(matrix, out_store);
      std::cout << "wrote " << matrix.size() << " items (dim " << matrix.dim() << ") to " << out_store << '\n';
    } else if (*serve) {
      service::EngineOptions options;
      if (!encoder_url.empty()) options.encoder_url = encoder_url;
      if (!images_dir.empty()) options.images_dir = images_dir;
      auto engine = std::make_shared<const service::Engine>(corpus::open_model_dir(serve_stores), options);
      service::Server server(engine);
      std::cerr << "serving " << engine->models().z() << " models on " << host << ':' << port << '\n';
      server.run(host, port);
    } else if (*query) {
      if (q.text.empty() && q.qvec_file.empty()) throw std::runtime_error("query needs --text or --qvec-file");
      return run_query(q);
    } else if (*eval) {
      service::EngineOptions options;
      if (!eval_encoder.empty()) options.encoder_url = eval_encoder;
      const service::Engine engine(corpus::open_model_dir(eval_stores), options);
      evalkit::EvalConfig config;
      config.k = eval_k;
      config.denominator = evalkit::parse_denominator(denominator);
      config.pipeline.n = eval_n == 0 ? eval_k : eval_n;
      config.pipeline.top_k_per_model = eval_topk;
      config.pipeline.k_min = eval_k_min;
      config.pipeline.k_max = eval_k_max;
      config.pipeline.seed = eval_seed;
      config.pipeline.variant = ranker::parse_variant(eval_comparator);
      const auto queries = evalkit::read_queries(queries_file);
      const auto report = engine.handle_eval(queries, evalkit::read_qrels(qrels_file), config);
      if (eval_json) {
        std::cout << evalkit::to_json(report).dump(2) << '\n';
      } else {
        std::cout << evalkit::format_table(report);
        for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
      }
    } else if (*synth) {
      const auto fixture = evalkit::synth_fixture(synth_seed, spec);
      evalkit::write_fixture(fixture, synth_out);
      std::cout << "wrote " << fixture.stores.size() << " stores, " << fixture.queries.size() << " queries to "
                << synth_out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

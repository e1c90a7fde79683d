#include "enclip/evalkit.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace enclip::evalkit {

namespace {

template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw EvalError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw EvalError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::vector<std::string> ids_of(const std::vector<ranker::RankedItem>& items) {
  std::vector<std::string> ids;
  ids.reserve(items.size());
  for (const auto& it : items) ids.push_back(it.item_id);
  return ids;
}

QueryScore score(const std::vector<std::string>& ranked, const RelevantSet& relevant, const EvalConfig& config) {
  return {precision_at_k(ranked, relevant, config.k),
          average_precision_at_k(ranked, relevant, config.k, config.denominator)};
}

void finish(SystemScores& s, const std::vector<std::string>& order) {
  std::vector<double> aps;
  aps.reserve(order.size());
  for (const auto& q : order) aps.push_back(s.per_query.at(q).avg_prec_at_k);
  s.map_score = mean_average_precision(aps);
}

double category_map(const SystemScores& s, const std::vector<std::string>& queries) {
  std::vector<double> aps;
  for (const auto& q : queries) aps.push_back(s.per_query.at(q).avg_prec_at_k);
  return mean_average_precision(aps);
}

}  // namespace

QueryRecord query_from_json(const nlohmann::json& j) {
  QueryRecord q;
  q.query_id = j.at("query_id").get<std::string>();
  if (j.contains("text") && !j["text"].is_null()) q.text = j["text"].get<std::string>();
  if (j.contains("vectors") && !j["vectors"].is_null()) {
    for (const auto& [model, vec] : j["vectors"].items()) q.vectors[model] = vec.get<std::vector<float>>();
  }
  if (j.contains("category") && j["category"].is_string()) q.category = j["category"].get<std::string>();
  if (!q.text && q.vectors.empty()) throw EvalError("query " + q.query_id + " has neither text nor vectors");
  return q;
}

nlohmann::json to_json(const QueryRecord& q) {
  nlohmann::json j{{"query_id", q.query_id}};
  if (q.text) j["text"] = *q.text;
  if (!q.vectors.empty()) j["vectors"] = q.vectors;
  if (!q.category.empty()) j["category"] = q.category;
  return j;
}

std::vector<QueryRecord> read_queries(const std::filesystem::path& path) {
  std::vector<QueryRecord> out;
  for_each_record(path, [&](const nlohmann::json& j) { out.push_back(query_from_json(j)); });
  return out;
}

std::vector<RelevanceJudgment> read_qrels(const std::filesystem::path& path) {
  std::vector<RelevanceJudgment> out;
  for_each_record(path, [&](const nlohmann::json& j) {
    out.push_back({j.at("query_id").get<std::string>(), j.at("relevant").get<std::vector<std::string>>()});
  });
  return out;
}

void write_queries(const std::vector<QueryRecord>& queries, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw EvalError("cannot write " + path.string());
  for (const auto& q : queries) out << to_json(q).dump() << '\n';
}

void write_qrels(const std::vector<RelevanceJudgment>& qrels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw EvalError("cannot write " + path.string());
  for (const auto& r : qrels) out << nlohmann::json{{"query_id", r.query_id}, {"relevant", r.relevant}}.dump() << '\n';
}

std::vector<std::vector<float>> resolve_query_vectors(const corpus::ModelSet& set, const QueryRecord& query,
                                                      const TextEncoder& encoder) {
  for (const auto& [model, vec] : query.vectors) {
    if (!set.index_of(model)) throw EvalError("query " + query.query_id + " names unknown model " + model);
  }
  std::vector<std::vector<float>> out;
  out.reserve(set.z());
  const bool complete = query.vectors.size() == set.z();
  if (!complete && !(query.text && encoder)) {
    throw EvalError("query " + query.query_id +
                    (query.text ? " needs a text encoder (none configured)" : " lacks vectors for some models"));
  }
  for (std::size_t n = 0; n < set.z(); ++n) {
    const auto& model_id = set.model(n).model_id();
    out.push_back(complete ? query.vectors.at(model_id) : encoder(model_id, *query.text));
    if (out.back().size() != set.dim()) {
      throw EvalError("query " + query.query_id + " vector for " + model_id + " has " +
                      std::to_string(out.back().size()) + " components, expected " + std::to_string(set.dim()));
    }
  }
  return out;
}

EvalReport run_eval(const corpus::ModelSet& set, const std::vector<QueryRecord>& queries,
                    const std::vector<RelevanceJudgment>& qrels, const EvalConfig& config,
                    const TextEncoder& encoder, const ProgressFn& progress) {
  if (queries.empty()) throw EvalError("no queries");
  if (config.k < 1) throw EvalError("k must be at least 1");
  if (config.pipeline.n < config.k) {
    throw EvalError("N=" + std::to_string(config.pipeline.n) + " must be at least k=" + std::to_string(config.k));
  }

  std::map<std::string, RelevantSet> relevant;
  for (const auto& r : qrels) {
    if (r.relevant.empty()) throw EvalError("judgment for " + r.query_id + " has no relevant items");
    relevant[r.query_id].insert(r.relevant.begin(), r.relevant.end());
  }

  EvalReport report;
  report.config = config;
  report.enclip.name = "ENCLIP";
  for (std::size_t n = 0; n < set.z(); ++n) report.baselines.push_back({set.model(n).model_id(), {}, 0.0});

  std::set<std::string> seen;
  for (const auto& q : queries) {
    if (!relevant.count(q.query_id)) throw EvalError("no relevance judgment for query " + q.query_id);
    if (!seen.insert(q.query_id).second) throw EvalError("duplicate query id " + q.query_id);
  }
  for (const auto& [qid, rel] : relevant) {
    for (const auto& id : rel) {
      if (!set.model(0).find(id)) report.warnings.push_back("qrels for " + qid + " name unknown item " + id);
    }
  }

  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& q = queries[i];
    const auto& rel = relevant.at(q.query_id);
    report.query_ids.push_back(q.query_id);
    report.categories[q.query_id] = q.category.empty() ? "all" : q.category;

    const auto vectors = resolve_query_vectors(set, q, encoder);
    const auto hits = search::multi_model_retrieve(set, vectors, config.pipeline.top_k_per_model);
    const auto ranked = rank_hits(set, hits, config.pipeline);
    report.enclip.per_query[q.query_id] = score(ids_of(ranked.items), rel, config);

    for (std::size_t n = 0; n < set.z(); ++n) {
      const auto single = search::cosine_topk(set.model(n), vectors[n], config.pipeline.n, n);
      std::vector<std::string> ids;
      for (const auto& h : single) ids.push_back(h.item_id);
      report.baselines[n].per_query[q.query_id] = score(ids, rel, config);
    }
    if (progress) progress(i + 1, queries.size());
  }

  finish(report.enclip, report.query_ids);
  for (auto& b : report.baselines) finish(b, report.query_ids);
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  const auto& c = report.config;
  nlohmann::json j;
  j["config"] = {{"k", c.k},
                 {"n", c.pipeline.n},
                 {"top_k_per_model", c.pipeline.top_k_per_model},
                 {"k_min", c.pipeline.k_min},
                 {"k_max", c.pipeline.k_max},
                 {"seed", c.pipeline.seed},
                 {"comparator", std::string(ranker::to_string(c.pipeline.variant))},
                 {"denominator", std::string(to_string(c.denominator))}};
  auto system = [&](const SystemScores& s) {
    nlohmann::json per_query = nlohmann::json::object();
    for (const auto& [qid, sc] : s.per_query) {
      per_query[qid] = {{"prec_at_k", sc.prec_at_k}, {"avg_prec_at_k", sc.avg_prec_at_k}};
    }
    return nlohmann::json{{"name", s.name}, {"map_score", s.map_score}, {"per_query", per_query}};
  };
  j["map_score"] = report.enclip.map_score;
  j["enclip"] = system(report.enclip);
  j["baselines"] = nlohmann::json::array();
  for (const auto& b : report.baselines) j["baselines"].push_back(system(b));
  j["categories"] = report.categories;
  j["warnings"] = report.warnings;
  return j;
}

std::string format_table(const EvalReport& report) {
  std::map<std::string, std::vector<std::string>> by_category;
  for (const auto& q : report.query_ids) by_category[report.categories.at(q)].push_back(q);

  std::vector<const SystemScores*> columns;
  for (const auto& b : report.baselines) columns.push_back(&b);
  columns.push_back(&report.enclip);

  std::size_t first_width = 8;
  for (const auto& [cat, _] : by_category) first_width = std::max(first_width, cat.size());
  std::vector<std::size_t> widths;
  for (const auto* s : columns) widths.push_back(std::max<std::size_t>(8, s->name.size()));

  std::ostringstream out;
  out << "mAP for AVG_PREC@" << report.config.k << '\n';
  auto rule = [&] {
    out << '+' << std::string(first_width + 2, '-');
    for (auto w : widths) out << '+' << std::string(w + 2, '-');
    out << "+\n";
  };
  auto row = [&](const std::string& label, const std::vector<std::string>& queries) {
    out << "| " << std::left << std::setw(static_cast<int>(first_width)) << label << ' ';
    for (std::size_t c = 0; c < columns.size(); ++c) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(3) << category_map(*columns[c], queries);
      out << "| " << std::right << std::setw(static_cast<int>(widths[c])) << cell.str() << ' ';
    }
    out << "|\n";
  };

  rule();
  out << "| " << std::left << std::setw(static_cast<int>(first_width)) << "Category" << ' ';
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out << "| " << std::right << std::setw(static_cast<int>(widths[c])) << columns[c]->name << ' ';
  }
  out << "|\n";
  rule();
  for (const auto& [cat, queries] : by_category) row(cat, queries);
  rule();
  row("Overall", report.query_ids);
  rule();
  return out.str();
}

}  // namespace enclip::evalkit

#include "hycoqa/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "hycoqa/error.hpp"

namespace hycoqa::eval {

std::vector<ScoredCandidate> rank_candidates(const ModelParams& params, const QAEmbedding& query,
                                             std::span<const QAEmbedding> candidates) {
  std::vector<ScoredCandidate> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.push_back({i, model::score(params, query, candidates[i])});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScoredCandidate& a, const ScoredCandidate& b) { return a.score < b.score; });
  return out;
}

RankingResult rank_embedded(const ModelParams& params, const QAEmbedding& query,
                            std::span<const QAEmbedding> candidates, std::size_t truth_index,
                            std::string query_id) {
  if (candidates.empty()) throw std::invalid_argument("no candidates to rank");
  if (truth_index >= candidates.size()) throw std::out_of_range("truth index out of range");
  const auto ranked = rank_candidates(params, query, candidates);
  const auto pos = std::find_if(ranked.begin(), ranked.end(),
                                [&](const ScoredCandidate& c) { return c.index == truth_index; });
  return {std::move(query_id), static_cast<std::size_t>(pos - ranked.begin()) + 1, candidates.size()};
}

RankingResult rank_query(const ModelParams& params, const TokenSequence& query,
                         const std::vector<TokenSequence>& candidates, std::size_t truth_index,
                         std::string query_id) {
  if (candidates.empty()) throw std::invalid_argument("no candidates to rank");
  if (truth_index >= candidates.size()) throw std::out_of_range("truth index out of range");
  const QAEmbedding q = model::pool_and_normalize(params, query, params.eps_ball);
  std::vector<QAEmbedding> cands;
  cands.reserve(candidates.size());
  for (const auto& c : candidates) cands.push_back(model::pool_and_normalize(params, c, params.eps_ball));
  return rank_embedded(params, q, cands, truth_index, std::move(query_id));
}

double mrr(const std::vector<RankingResult>& results) {
  if (results.empty()) throw std::invalid_argument("mrr of an empty result list");
  double sum = 0.0;
  for (const auto& r : results) sum += 1.0 / static_cast<double>(r.rank);
  return sum / static_cast<double>(results.size());
}

double recall_at_k(const std::vector<RankingResult>& results, std::size_t k) {
  if (results.empty()) throw std::invalid_argument("recall of an empty result list");
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  const auto hits = std::count_if(results.begin(), results.end(),
                                  [k](const RankingResult& r) { return r.rank <= k; });
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

MetricsReport summarize(const std::vector<RankingResult>& results) {
  MetricsReport m;
  m.mrr = mrr(results);
  for (std::size_t k : {1, 5, 10}) m.recall_at[k] = recall_at_k(results, k);
  m.num_queries = results.size();
  return m;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["mrr"] = mrr;
  j["r1"] = recall_at.at(1);
  j["r5"] = recall_at.at(5);
  j["r10"] = recall_at.at(10);
  j["num_queries"] = num_queries;
  return j.dump();
}

std::string MetricsReport::to_table() const {
  std::ostringstream out;
  char line[64];
  std::snprintf(line, sizeof line, "%-12s %10s\n", "metric", "value");
  out << line;
  std::snprintf(line, sizeof line, "%-12s %10.4f\n", "MRR", mrr);
  out << line;
  for (const auto& [k, v] : recall_at) {
    std::snprintf(line, sizeof line, "%-12s %10.4f\n", ("R@" + std::to_string(k)).c_str(), v);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-12s %10zu\n", "queries", num_queries);
  out << line;
  return out.str();
}

QAEmbedding embed_stored(const ModelParams& params, const data::EmbeddingStore& store,
                         const std::string& id, model::Role role, const model::SequenceLimits& limits) {
  if (store.dim() != params.input_dim()) {
    throw ShapeError("store dim " + std::to_string(store.dim()) + " does not match model input dim " +
                     std::to_string(params.input_dim()));
  }
  if (!store.contains(id)) throw std::invalid_argument("id \"" + id + "\" is not in the store");
  return model::pool_and_normalize(params, TokenSequence(store.matrix(id), role, limits), params.eps_ball);
}

Evaluation evaluate(const ModelParams& params, const data::TripleDataset& split,
                    const data::EmbeddingStore& questions, const data::EmbeddingStore& answers,
                    const model::SequenceLimits& limits) {
  if (split.triples.empty()) throw std::invalid_argument("evaluation split is empty");

  std::vector<std::string> code_ids;
  std::unordered_map<std::string, std::size_t> code_index;
  for (const auto& t : split.triples) {
    if (code_index.emplace(t.pos_id, code_ids.size()).second) code_ids.push_back(t.pos_id);
  }
  std::vector<QAEmbedding> codes;
  codes.reserve(code_ids.size());
  for (const auto& id : code_ids) codes.push_back(embed_stored(params, answers, id, model::Role::answer, limits));

  Evaluation ev;
  ev.results.reserve(split.triples.size());
  for (const auto& t : split.triples) {
    const QAEmbedding q = embed_stored(params, questions, t.qid, model::Role::question, limits);
    ev.results.push_back(rank_embedded(params, q, codes, code_index.at(t.pos_id), t.qid));
  }
  ev.report = summarize(ev.results);
  return ev;
}

}  // namespace hycoqa::eval

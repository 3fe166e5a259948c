#pragma once

// Test-stage retrieval: embed a description, score every candidate code,
// rank ascending by score, and summarize with MRR and Recall@k.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "hycoqa/data.hpp"
#include "hycoqa/model.hpp"

namespace hycoqa::eval {

using model::ModelParams;
using model::QAEmbedding;
using model::TokenSequence;

struct RankingResult {
  std::string query_id;
  std::size_t rank = 1;  // 1-based position of the ground-truth candidate
  std::size_t num_candidates = 1;

  bool operator==(const RankingResult&) const = default;
};

struct MetricsReport {
  double mrr = 0.0;
  std::map<std::size_t, double> recall_at;  // k -> R@k for k in {1, 5, 10}
  std::size_t num_queries = 0;

  /// {"mrr", "r1", "r5", "r10", "num_queries"}
  std::string to_json() const;
  std::string to_table() const;

  bool operator==(const MetricsReport&) const = default;
};

struct ScoredCandidate {
  std::size_t index;
  double score;
};

/// All candidates sorted by ascending score; ties keep candidate order.
std::vector<ScoredCandidate> rank_candidates(const ModelParams& params, const QAEmbedding& query,
                                             std::span<const QAEmbedding> candidates);

RankingResult rank_embedded(const ModelParams& params, const QAEmbedding& query,
                            std::span<const QAEmbedding> candidates, std::size_t truth_index,
                            std::string query_id = {});

/// Embeds the query and every candidate, then ranks. Throws std::out_of_range
/// for an invalid truth index and std::invalid_argument for no candidates.
RankingResult rank_query(const ModelParams& params, const TokenSequence& query,
                         const std::vector<TokenSequence>& candidates, std::size_t truth_index,
                         std::string query_id = {});

/// Mean of 1 / rank. Throws on an empty list.
double mrr(const std::vector<RankingResult>& results);

/// Fraction of results with rank <= k. Throws on an empty list or k == 0.
double recall_at_k(const std::vector<RankingResult>& results, std::size_t k);

/// MRR plus R@1, R@5, R@10.
MetricsReport summarize(const std::vector<RankingResult>& results);

struct Evaluation {
  MetricsReport report;
  std::vector<RankingResult> results;
};

/// Ranks every query of the split against all distinct positive codes of the
/// split. Code embeddings are computed once and shared by all queries.
Evaluation evaluate(const ModelParams& params, const data::TripleDataset& split,
                    const data::EmbeddingStore& questions, const data::EmbeddingStore& answers,
                    const model::SequenceLimits& limits = {});

/// Embeds a stored sequence after checking its width against the model.
QAEmbedding embed_stored(const ModelParams& params, const data::EmbeddingStore& store,
                         const std::string& id, model::Role role, const model::SequenceLimits& limits);

}  // namespace hycoqa::eval

#include "hycoqa/eval.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "oracles.hpp"
#include "test_util.hpp"

namespace hycoqa::eval {
namespace {

using model::Role;

using testing::counting_rank;

std::vector<RankingResult> ranks(std::initializer_list<std::size_t> rs) {
  std::vector<RankingResult> out;
  for (auto r : rs) out.push_back({"", r, 10});
  return out;
}

TEST(Mrr, Examples) {
  EXPECT_EQ(mrr(ranks({1, 1, 1})), 1.0);
  EXPECT_NEAR(mrr(ranks({1, 2, 4})), 0.5833333333333333, 1e-12);
  EXPECT_NEAR(mrr(ranks({10, 10})), 0.1, 1e-15);
  EXPECT_THROW(mrr({}), std::invalid_argument);
}

TEST(RecallAtK, Examples) {
  EXPECT_NEAR(recall_at_k(ranks({1, 2, 4}), 1), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(recall_at_k(ranks({1, 2, 4}), 5), 1.0);
  EXPECT_EQ(recall_at_k(ranks({3, 7, 4}), 7), 1.0);
  EXPECT_THROW(recall_at_k({}, 1), std::invalid_argument);
  EXPECT_THROW(recall_at_k(ranks({1}), 0), std::invalid_argument);
}

TEST(RecallAtK, MonotoneAndCompleteAtN) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial;
    std::uniform_int_distribution<std::size_t> pick(1, n);
    std::vector<RankingResult> rs;
    for (int i = 0; i < 30; ++i) rs.push_back({"", pick(rng), n});
    const auto m = summarize(rs);
    EXPECT_LE(m.recall_at.at(1), m.recall_at.at(5));
    EXPECT_LE(m.recall_at.at(5), m.recall_at.at(10));
    EXPECT_LE(m.recall_at.at(10), 1.0);
    EXPECT_LE(m.mrr, 1.0);
    EXPECT_EQ(recall_at_k(rs, n), 1.0);
  }
}

TEST(MetricsReport, JsonAndTable) {
  const auto m = summarize(ranks({1, 2, 4}));
  const auto j = nlohmann::json::parse(m.to_json());
  EXPECT_NEAR(j["mrr"].get<double>(), 0.5833333333333333, 1e-15);
  EXPECT_EQ(j["r5"].get<double>(), 1.0);
  EXPECT_EQ(j["num_queries"].get<int>(), 3);
  EXPECT_EQ(m.to_json().substr(0, 7), "{\"mrr\":");
  EXPECT_NE(m.to_table().find("R@10"), std::string::npos);
}

TEST(RankQuery, TiesBrokenByIndex) {
  const auto p = ModelParams::initialize(4, 3, 0);
  std::mt19937_64 rng(2);
  const TokenSequence q(testing::random_matrix(rng, 2, 4, -1, 1), Role::question);
  const Matrix dup = testing::random_matrix(rng, 3, 4, -1, 1);
  std::vector<TokenSequence> cands;
  for (int i = 0; i < 4; ++i) cands.emplace_back(dup, Role::answer);
  EXPECT_EQ(rank_query(p, q, cands, 2).rank, 3u);
  EXPECT_EQ(rank_query(p, q, cands, 0).rank, 1u);
}

TEST(RankQuery, SingleCandidateAndErrors) {
  const auto p = ModelParams::initialize(4, 3, 0);
  std::mt19937_64 rng(2);
  const TokenSequence q(testing::random_matrix(rng, 2, 4, -1, 1), Role::question);
  const std::vector<TokenSequence> one{TokenSequence(testing::random_matrix(rng, 2, 4, -1, 1), Role::answer)};
  const auto r = rank_query(p, q, one, 0, "q0");
  EXPECT_EQ(r, (RankingResult{"q0", 1, 1}));
  EXPECT_THROW(rank_query(p, q, one, 1), std::out_of_range);
  EXPECT_THROW(rank_query(p, q, {}, 0), std::invalid_argument);
}

TEST(RankQuery, MatchesCountingOracle) {
  std::mt19937_64 rng(50);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = ModelParams::initialize(6, 4, trial);
    const TokenSequence q(testing::random_matrix(rng, 3, 6, -1, 1), Role::question);
    std::vector<TokenSequence> cands;
    for (int i = 0; i < 20; ++i) {
      // Every fifth candidate repeats an earlier one to exercise ties.
      if (i % 5 == 4) {
        cands.push_back(cands[i - 2]);
      } else {
        cands.emplace_back(testing::random_matrix(rng, 1 + i % 3, 6, -1, 1), Role::answer);
      }
    }
    const std::size_t truth = static_cast<std::size_t>(trial) % 20;
    EXPECT_EQ(rank_query(p, q, cands, truth).rank, counting_rank(p, q, cands, truth));
  }
}

TEST(RankQuery, InvariantUnderIncreasingAffineScoreMap) {
  std::mt19937_64 rng(60);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = ModelParams::initialize(6, 4, trial);
    const TokenSequence q(testing::random_matrix(rng, 3, 6, -1, 1), Role::question);
    std::vector<TokenSequence> cands;
    for (int i = 0; i < 15; ++i) cands.emplace_back(testing::random_matrix(rng, 2, 6, -1, 1), Role::answer);
    const auto before = rank_query(p, q, cands, trial % 15);
    // s -> 2 s + 3
    p.score_bias = 2.0 * p.score_bias + 3.0;
    p.score_weight *= 2.0;
    EXPECT_EQ(rank_query(p, q, cands, trial % 15), before);
  }
}

struct Stores {
  data::EmbeddingStore desc{32};
  data::EmbeddingStore code{32};
};

std::string random_text(std::mt19937_64& rng, int words) {
  std::uniform_int_distribution<int> pick(0, 99999);
  std::string s;
  for (int i = 0; i < words; ++i) s += "w" + std::to_string(pick(rng)) + " ";
  return s;
}

TEST(Evaluate, SingleItemSplit) {
  Stores s;
  s.desc.add("a", data::pseudo_embed("only query", 32, 0));
  s.code.add("a", data::pseudo_embed("only code", 32, 0));
  const data::TripleDataset split{data::Split::test, {{"a", "a", "other"}}};
  const auto ev = evaluate(ModelParams::initialize(32, 8, 0), split, s.desc, s.code);
  EXPECT_EQ(ev.report.mrr, 1.0);
  for (const auto& [k, v] : ev.report.recall_at) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(ev.report.num_queries, 1u);
}

TEST(Evaluate, CachedMatchesPerQueryReembedding) {
  std::mt19937_64 rng(70);
  Stores s;
  std::vector<data::CorpusItem> items;
  for (int i = 0; i < 40; ++i) {
    const std::string id = "i" + std::to_string(i);
    const std::string shared = random_text(rng, 2);
    items.push_back({id, shared + random_text(rng, 3), shared + random_text(rng, 6), "go"});
    s.desc.add(id, data::pseudo_embed(items.back().description, 32, 1));
    s.code.add(id, data::pseudo_embed(items.back().code, 32, 1));
  }
  const auto split = data::make_triples(items, {1, 0, 0}, 0).train;
  const auto p = ModelParams::initialize(32, 8, 5);
  const auto ev = evaluate(p, split, s.desc, s.code);

  // No cache: every query re-embeds every candidate from the stores.
  std::vector<RankingResult> naive;
  for (const auto& t : split.triples) {
    std::vector<TokenSequence> cands;
    std::size_t truth = 0;
    for (std::size_t j = 0; j < split.triples.size(); ++j) {
      const auto& cid = split.triples[j].pos_id;
      if (cid == t.pos_id) truth = j;
      cands.emplace_back(s.code.matrix(cid), Role::answer);
    }
    naive.push_back(rank_query(p, TokenSequence(s.desc.matrix(t.qid), Role::question), cands, truth, t.qid));
  }
  EXPECT_EQ(ev.results, naive);
  const auto naive_report = summarize(naive);
  EXPECT_NEAR(ev.report.mrr, naive_report.mrr, 1e-12);
  EXPECT_EQ(ev.report, naive_report);
}

TEST(Evaluate, DimensionMismatchThrows) {
  Stores s;
  s.desc.add("a", data::pseudo_embed("q", 32, 0));
  s.code.add("a", data::pseudo_embed("c", 32, 0));
  const data::TripleDataset split{data::Split::test, {{"a", "a", "b"}}};
  EXPECT_THROW(evaluate(ModelParams::initialize(16, 8, 0), split, s.desc, s.code), std::invalid_argument);
  EXPECT_THROW(evaluate(ModelParams::initialize(32, 8, 0), data::TripleDataset{}, s.desc, s.code),
               std::invalid_argument);
}

// Untrained model, queries unrelated to every candidate: the truth rank is
// uniform on 1..100, so E[1/R] = H_100 / 100.
TEST(Evaluate, RandomModelMatchesHarmonicBaseline) {
  std::mt19937_64 rng(80);
  const auto p = ModelParams::initialize(32, 16, 9);
  std::vector<RankingResult> results;
  for (int qi = 0; qi < 200; ++qi) {
    const TokenSequence q(data::pseudo_embed(random_text(rng, 6), 32, 2), Role::question);
    std::vector<TokenSequence> cands;
    for (int c = 0; c < 100; ++c) cands.emplace_back(data::pseudo_embed(random_text(rng, 8), 32, 2), Role::answer);
    results.push_back(rank_query(p, q, cands, static_cast<std::size_t>(qi) % 100));
  }
  double h1 = 0.0, h2 = 0.0;
  for (int i = 1; i <= 100; ++i) {
    h1 += 1.0 / i;
    h2 += 1.0 / (static_cast<double>(i) * i);
  }
  const double mean = h1 / 100.0;
  const double se = std::sqrt((h2 / 100.0 - mean * mean) / 200.0);
  EXPECT_NEAR(mean, 0.05187, 1e-5);
  EXPECT_LT(std::abs(mrr(results) - mean), 3.0 * se) << "mrr " << mrr(results);
}

}  // namespace
}  // namespace hycoqa::eval

#include "hycoqa/viz.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"

namespace hycoqa::viz {
namespace {

struct Fixture {
  data::EmbeddingStore desc{16};
  data::EmbeddingStore code{16};
  data::TripleDataset triples;
};

Fixture fixture(std::size_t n_items) {
  Fixture f;
  std::vector<data::CorpusItem> items;
  for (std::size_t i = 0; i < n_items; ++i) {
    const std::string id = "x" + std::to_string(i);
    items.push_back({id, "find value " + std::to_string(i), "lookup key " + std::to_string(i) + " table", "go"});
    f.desc.add(id, data::pseudo_embed(items.back().description, 16, 0));
    f.code.add(id, data::pseudo_embed(items.back().code, 16, 0));
  }
  f.triples = data::make_triples(items, {1, 0, 0}, 1).train;
  return f;
}

TEST(ExtractPairFeatures, CountsAndLabels) {
  const auto f = fixture(10);
  const auto p = model::ModelParams::initialize(16, 4, 0);
  const auto feats = extract_pair_features(p, f.triples, f.desc, f.code);
  ASSERT_EQ(feats.size(), 20u);
  int pos = 0;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    EXPECT_EQ(feats[i].label, i % 2 == 0 ? PairLabel::positive : PairLabel::negative);
    pos += feats[i].label == PairLabel::positive;
    EXPECT_EQ(feats[i].feature.size(), 2u * 4u + 3u);
    for (double v : feats[i].feature) EXPECT_TRUE(std::isfinite(v));
  }
  EXPECT_EQ(pos, 10);
  EXPECT_THROW(extract_pair_features(p, data::TripleDataset{}, f.desc, f.code), std::invalid_argument);
}

TEST(MakePairFeature, LayoutAndIdentityPair) {
  std::mt19937_64 rng(3);
  const geom::PoincarePoint q(testing::random_ball_point(rng, 128, 0.9), 1e-5);
  const model::QAEmbedding e{q};
  const auto f = make_pair_feature(e, e, PairLabel::positive);
  ASSERT_EQ(f.feature.size(), 259u);
  EXPECT_EQ(f.feature[256], 0.0);
  EXPECT_EQ(f.feature[257], q.norm());
  EXPECT_EQ(f.feature[3], q.coords()[3]);
  EXPECT_EQ(f.feature[128 + 3], q.coords()[3]);
}

TEST(Pca2d, RecoversCentered2dUpToIsometry) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  std::vector<Vec> rows;
  for (int i = 0; i < 50; ++i) rows.push_back({3.0 * normal(rng), normal(rng)});
  Vec mean{0, 0};
  for (const auto& r : rows) {
    mean[0] += r[0] / 50;
    mean[1] += r[1] / 50;
  }
  for (auto& r : rows) {
    r[0] -= mean[0];
    r[1] -= mean[1];
  }
  const auto proj = pca_2d(rows);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      const double want = std::hypot(rows[i][0] - rows[j][0], rows[i][1] - rows[j][1]);
      const double got = std::hypot(proj.points[i][0] - proj.points[j][0], proj.points[i][1] - proj.points[j][1]);
      EXPECT_NEAR(got, want, 1e-6);
    }
  }
  EXPECT_NEAR(proj.explained_variance_ratio, 1.0, 1e-9);
}

TEST(Pca2d, Rank2DataFullyExplained) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  Vec b1(10), b2(10);
  for (auto& x : b1) x = normal(rng);
  for (auto& x : b2) x = normal(rng);
  std::vector<Vec> rows;
  for (int i = 0; i < 40; ++i) {
    const double s = normal(rng), t = 0.5 * normal(rng);
    Vec r(10);
    for (int k = 0; k < 10; ++k) r[k] = 1.0 + s * b1[k] + t * b2[k];
    rows.push_back(r);
  }
  const auto proj = pca_2d(rows, 11);
  EXPECT_NEAR(proj.explained_variance_ratio, 1.0, 1e-9);
  EXPECT_GE(proj.variances[0], proj.variances[1]);
  EXPECT_NEAR(geom::dot(proj.components[0], proj.components[1]), 0.0, 1e-9);
}

TEST(Pca2d, SignConventionAndDeterminism) {
  std::mt19937_64 rng(6);
  std::vector<Vec> rows;
  for (int i = 0; i < 30; ++i) rows.push_back(testing::random_matrix(rng, 1, 6, -1, 1).data);
  const auto a = pca_2d(rows, 3);
  for (const auto& c : a.components) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < c.size(); ++k) {
      if (std::abs(c[k]) > std::abs(c[best])) best = k;
    }
    EXPECT_GT(c[best], 0.0);
  }
  const auto b = pca_2d(rows, 3);
  EXPECT_EQ(a.points, b.points);

  auto doubled = rows;
  doubled.insert(doubled.end(), rows.begin(), rows.end());
  const auto d = pca_2d(doubled, 3);
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(d.points[i], d.points[i + rows.size()]);
}

TEST(Pca2d, Errors) {
  EXPECT_THROW(pca_2d({{1.0, 2.0}}), std::invalid_argument);
  EXPECT_THROW(pca_2d({{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}}), std::invalid_argument);
  EXPECT_THROW(pca_2d({{1.0, 2.0}, {1.0}}), std::invalid_argument);
}

TEST(Csv, FormatAndDeterminism) {
  const auto f = fixture(6);
  const auto p = model::ModelParams::initialize(16, 4, 2);
  auto export_once = [&] {
    const auto feats = extract_pair_features(p, f.triples, f.desc, f.code);
    std::vector<Vec> rows;
    for (const auto& x : feats) rows.push_back(x.feature);
    return points_csv(feats, pca_2d(rows)) + features_csv(feats);
  };
  const std::string a = export_once();
  EXPECT_EQ(a, export_once());
  EXPECT_EQ(a.substr(0, 10), "label,x,y\n");
  EXPECT_NE(a.find("label,f_0,f_1"), std::string::npos);
  EXPECT_NE(a.find(",f_10\n"), std::string::npos);  // 2 * 4 + 3 = 11 columns
  EXPECT_EQ(a.find(",f_11"), std::string::npos);
}

}  // namespace
}  // namespace hycoqa::viz

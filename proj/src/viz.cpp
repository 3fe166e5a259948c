#include "hycoqa/viz.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "hycoqa/error.hpp"
#include "hycoqa/eval.hpp"

namespace hycoqa::viz {

namespace {

constexpr int kMaxPowerIterations = 20000;
constexpr double kPowerTolerance = 1e-13;

void normalize(Vec& v) {
  const double r = geom::norm(v);
  for (double& x : v) x /= r;
}

// v -= (v . u) u for unit u.
void remove_component(Vec& v, const Vec& u) {
  const double c = geom::dot(v, u);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * u[i];
}

Vec mat_vec(const Matrix& m, const Vec& v) {
  Vec out(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
  return out;
}

// Dominant eigenvector of a symmetric PSD matrix, restricted to the
// orthogonal complement of `exclude`.
Vec power_iterate(const Matrix& cov, std::mt19937_64& rng, const std::vector<Vec>& exclude) {
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Vec v(cov.rows);
  for (double& x : v) x = uniform(rng);
  for (const auto& u : exclude) remove_component(v, u);
  normalize(v);

  for (int it = 0; it < kMaxPowerIterations; ++it) {
    Vec next = mat_vec(cov, v);
    for (const auto& u : exclude) remove_component(next, u);
    const double r = geom::norm(next);
    if (!(r > 0.0)) break;  // no variance left; any orthogonal direction will do
    for (double& x : next) x /= r;
    double delta = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) delta += (next[i] - v[i]) * (next[i] - v[i]);
    v = std::move(next);
    if (std::sqrt(delta) < kPowerTolerance) break;
  }
  return v;
}

void fix_sign(Vec& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (v[best] < 0.0) {
    for (double& x : v) x = -x;
  }
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view label_name(PairLabel label) {
  return label == PairLabel::positive ? "positive" : "negative";
}

PairFeature make_pair_feature(const model::QAEmbedding& q, const model::QAEmbedding& a, PairLabel label) {
  const auto qc = q.point.coords();
  const auto ac = a.point.coords();
  PairFeature f{label, {}};
  f.feature.reserve(qc.size() + ac.size() + 3);
  f.feature.insert(f.feature.end(), qc.begin(), qc.end());
  f.feature.insert(f.feature.end(), ac.begin(), ac.end());
  f.feature.push_back(geom::hyperbolic_distance(qc, ac));
  f.feature.push_back(q.point.norm());
  f.feature.push_back(a.point.norm());
  return f;
}

std::vector<PairFeature> extract_pair_features(const model::ModelParams& params,
                                               const data::TripleDataset& triples,
                                               const data::EmbeddingStore& questions,
                                               const data::EmbeddingStore& answers,
                                               const model::SequenceLimits& limits) {
  if (triples.triples.empty()) throw std::invalid_argument("no triples to export");
  std::vector<PairFeature> out;
  out.reserve(2 * triples.triples.size());
  for (const auto& t : triples.triples) {
    const auto q = eval::embed_stored(params, questions, t.qid, model::Role::question, limits);
    const auto pos = eval::embed_stored(params, answers, t.pos_id, model::Role::answer, limits);
    const auto neg = eval::embed_stored(params, answers, t.neg_id, model::Role::answer, limits);
    out.push_back(make_pair_feature(q, pos, PairLabel::positive));
    out.push_back(make_pair_feature(q, neg, PairLabel::negative));
  }
  return out;
}

Projection2d pca_2d(const std::vector<Vec>& rows, std::uint64_t seed) {
  if (rows.size() < 2) throw std::invalid_argument("PCA needs at least 2 rows");
  const std::size_t dim = rows.front().size();
  if (dim == 0) throw std::invalid_argument("PCA rows are empty");
  for (const auto& r : rows) {
    if (r.size() != dim) throw ShapeError("PCA rows differ in length");
  }
  const auto m = static_cast<double>(rows.size());

  Vec mean(dim, 0.0);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < dim; ++j) mean[j] += r[j];
  }
  for (double& x : mean) x /= m;

  Matrix centered(rows.size(), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) centered(i, j) = rows[i][j] - mean[j];
  }

  Matrix cov(dim, dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto x = centered.row(i);
    for (std::size_t a = 0; a < dim; ++a) {
      if (x[a] == 0.0) continue;
      auto ca = cov.row(a);
      for (std::size_t b = 0; b < dim; ++b) ca[b] += x[a] * x[b];
    }
  }
  double trace = 0.0;
  for (double& x : cov.data) x /= (m - 1.0);
  for (std::size_t a = 0; a < dim; ++a) trace += cov(a, a);
  if (!(trace > 0.0)) throw std::invalid_argument("PCA input has zero variance");

  std::mt19937_64 rng(seed);
  Projection2d out;
  std::vector<Vec> found;
  for (std::size_t c = 0; c < 2; ++c) {
    if (c >= dim) {
      out.components[c] = Vec(dim, 0.0);  // 1-D input has no second direction
      continue;
    }
    Vec v = power_iterate(cov, rng, found);
    fix_sign(v);
    const double lambda = geom::dot(v, mat_vec(cov, v));
    out.variances[c] = lambda;
    // Deflation
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t b = 0; b < dim; ++b) cov(a, b) -= lambda * v[a] * v[b];
    }
    found.push_back(v);
    out.components[c] = std::move(v);
  }
  out.explained_variance_ratio = (out.variances[0] + out.variances[1]) / trace;

  out.points.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto x = centered.row(i);
    out.points.push_back({geom::dot(x, out.components[0]), geom::dot(x, out.components[1])});
  }
  return out;
}

std::string points_csv(const std::vector<PairFeature>& features, const Projection2d& projection) {
  if (features.size() != projection.points.size()) {
    throw ShapeError("feature and projection counts differ");
  }
  std::string out = "label,x,y\n";
  for (std::size_t i = 0; i < features.size(); ++i) {
    out += label_name(features[i].label);
    out += ',' + fmt_double(projection.points[i][0]) + ',' + fmt_double(projection.points[i][1]) + '\n';
  }
  return out;
}

std::string features_csv(const std::vector<PairFeature>& features) {
  std::string out = "label";
  const std::size_t dim = features.empty() ? 0 : features.front().feature.size();
  for (std::size_t j = 0; j < dim; ++j) out += ",f_" + std::to_string(j);
  out += '\n';
  for (const auto& f : features) {
    out += label_name(f.label);
    for (double v : f.feature) out += ',' + fmt_double(v);
    out += '\n';
  }
  return out;
}

}  // namespace hycoqa::viz

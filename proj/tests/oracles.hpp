#pragma once

// Independent reference computations. They go through the public forward
// API only and never share code paths with the backward or ranking code.

#include <algorithm>
#include <cmath>
#include <vector>

#include "hycoqa/model.hpp"
#include "hycoqa/train.hpp"

namespace hycoqa::testing {

using geom::Vec;
using model::ModelParams;
using model::TokenSequence;

/// Hinge loss of one triple, each path with its own parameter copy so a
/// single path can be perturbed. Score parameters come from `pq`.
inline double oracle_item_loss(const ModelParams& pq, const ModelParams& pp, const ModelParams& pn,
                               const train::TripleExample& ex, double margin) {
  const auto q = model::pool_and_normalize(pq, ex.question, pq.eps_ball);
  const auto a = model::pool_and_normalize(pp, ex.positive, pp.eps_ball);
  const auto b = model::pool_and_normalize(pn, ex.negative, pn.eps_ball);
  const double s_pos = pq.score_weight * geom::hyperbolic_distance(q.point.coords(), a.point.coords()) + pq.score_bias;
  const double s_neg = pq.score_weight * geom::hyperbolic_distance(q.point.coords(), b.point.coords()) + pq.score_bias;
  return std::max(0.0, s_pos + margin - s_neg);
}

inline double oracle_batch_loss(const ModelParams& p, const train::TripleBatch& batch, double margin) {
  double total = 0.0;
  for (const auto& ex : batch.items) total += oracle_item_loss(p, p, p, ex, margin);
  return total / static_cast<double>(batch.items.size());
}

/// Flattened parameter vector: W, b, w_f, b_f.
inline Vec flatten(const ModelParams& p) {
  Vec v = p.proj_weight.data;
  v.insert(v.end(), p.proj_bias.begin(), p.proj_bias.end());
  v.push_back(p.score_weight);
  v.push_back(p.score_bias);
  return v;
}

inline ModelParams unflatten(const ModelParams& shape, const Vec& v) {
  ModelParams p = shape;
  std::size_t k = 0;
  for (double& x : p.proj_weight.data) x = v[k++];
  for (double& x : p.proj_bias) x = v[k++];
  p.score_weight = v[k++];
  p.score_bias = v[k++];
  return p;
}

inline Vec flatten(const train::Gradients& g) {
  Vec v = g.proj_weight.data;
  v.insert(v.end(), g.proj_bias.begin(), g.proj_bias.end());
  v.push_back(g.score_weight);
  v.push_back(g.score_bias);
  return v;
}

/// Distance from the parameter point to the nearest kink of the loss: hinge
/// at zero, ReLU pre-activation at zero, pooled norm at the clamp radius.
inline double distance_to_kink(const ModelParams& p, const train::TripleBatch& batch, double margin) {
  double closest = INFINITY;
  for (const auto& ex : batch.items) {
    for (const auto* seq : {&ex.question, &ex.positive, &ex.negative}) {
      const auto t = model::pool_trace(p, *seq);
      for (double h : t.pre_activation.data) closest = std::min(closest, std::abs(h));
      closest = std::min(closest, std::abs(t.pooled_norm - (1.0 - p.eps_ball)));
    }
    const double s_pos_minus_s_neg_plus_margin = [&] {
      const auto q = model::pool_and_normalize(p, ex.question, p.eps_ball);
      const auto a = model::pool_and_normalize(p, ex.positive, p.eps_ball);
      const auto b = model::pool_and_normalize(p, ex.negative, p.eps_ball);
      return p.score_weight * (geom::hyperbolic_distance(q.point.coords(), a.point.coords()) -
                               geom::hyperbolic_distance(q.point.coords(), b.point.coords())) +
             margin;
    }();
    closest = std::min(closest, std::abs(s_pos_minus_s_neg_plus_margin));
  }
  return closest;
}

/// 1 + #(strictly better) + #(tied with a smaller index).
inline std::size_t counting_rank(const ModelParams& p, const TokenSequence& q,
                                 const std::vector<TokenSequence>& cands, std::size_t truth) {
  const auto qe = model::pool_and_normalize(p, q, p.eps_ball);
  std::vector<double> scores;
  for (const auto& c : cands) {
    const auto ce = model::pool_and_normalize(p, c, p.eps_ball);
    scores.push_back(p.score_weight * geom::hyperbolic_distance(qe.point.coords(), ce.point.coords()) +
                     p.score_bias);
  }
  std::size_t rank = 1;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] < scores[truth] || (scores[j] == scores[truth] && j < truth)) ++rank;
  }
  return rank;
}

}  // namespace hycoqa::testing

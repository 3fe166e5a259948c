#include "hycoqa/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "hycoqa/error.hpp"

namespace hycoqa::train {

using model::PoolTrace;

void TrainConfig::validate() const {
  if (!(margin > 0.0) || !std::isfinite(margin)) throw std::invalid_argument("margin must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be nonnegative");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (output_dim == 0) throw std::invalid_argument("output dim must be positive");
  if (limits.max_question == 0 || limits.max_answer == 0) {
    throw std::invalid_argument("sequence limits must be positive");
  }
  geom::GeometryConfig{eps_ball, eps_sing}.validate();
}

double hinge_loss(double s_pos, double s_neg, double margin) {
  const double slack = s_pos + margin - s_neg;
  if (std::isnan(slack)) return slack;  // surfaces divergence instead of clamping it away
  return slack > 0.0 ? slack : 0.0;
}

Gradients Gradients::zeros_like(const ModelParams& params) {
  Gradients g;
  g.proj_weight = Matrix(params.proj_weight.rows, params.proj_weight.cols);
  g.proj_bias.assign(params.proj_bias.size(), 0.0);
  return g;
}

bool Gradients::all_finite() const {
  auto finite = [](double x) { return std::isfinite(x); };
  return std::all_of(proj_weight.data.begin(), proj_weight.data.end(), finite) &&
         std::all_of(proj_bias.begin(), proj_bias.end(), finite) && std::isfinite(score_weight) &&
         std::isfinite(score_bias);
}

void accumulate_embedding_gradient(const ModelParams& params, const TokenSequence& seq,
                                   const PoolTrace& trace, std::span<const double> grad_at_point,
                                   Gradients& grads) {
  const std::size_t d = params.output_dim();
  const std::size_t n = params.input_dim();
  if (grad_at_point.size() != d) throw ShapeError("embedding gradient has the wrong length");

  // Output = c * y / ||y|| when the norm clamp fired; its Jacobian is
  // (c / ||y||) (I - u u^T) with u = y / ||y||.
  geom::Vec grad_pooled(grad_at_point.begin(), grad_at_point.end());
  if (trace.rescaled) {
    const double r = trace.pooled_norm;
    const double c = 1.0 - params.eps_ball;
    double proj = 0.0;
    for (std::size_t k = 0; k < d; ++k) proj += trace.pooled[k] * grad_pooled[k];
    proj /= r;
    for (std::size_t k = 0; k < d; ++k) {
      grad_pooled[k] = (c / r) * (grad_pooled[k] - trace.pooled[k] / r * proj);
    }
  }

  // Sum pooling copies the gradient to every token; ReLU masks it.
  for (std::size_t i = 0; i < seq.length(); ++i) {
    const auto z = seq.embeddings().row(i);
    const auto h = trace.pre_activation.row(i);
    for (std::size_t k = 0; k < d; ++k) {
      if (!(h[k] > 0.0)) continue;
      const double g = grad_pooled[k];
      auto wk = grads.proj_weight.row(k);
      for (std::size_t c = 0; c < n; ++c) wk[c] += g * z[c];
      grads.proj_bias[k] += g;
    }
  }
}

namespace {

struct ItemRef {
  const TokenSequence* question;
  const TokenSequence* positive;
  const TokenSequence* negative;
};

struct ItemOutcome {
  double loss = 0.0;
  double max_norm = 0.0;
};

// Forward pass for one triple; when `grads` is given, adds `weight` times the
// item's gradient into it.
ItemOutcome process_item(const ModelParams& params, const ItemRef& item, const TrainConfig& cfg,
                         double weight, Gradients* grads) {
  const PoolTrace tq = model::pool_trace(params, *item.question);
  const PoolTrace tp = model::pool_trace(params, *item.positive);
  const PoolTrace tn = model::pool_trace(params, *item.negative);
  const auto q = tq.output.point.coords();
  const auto p = tp.output.point.coords();
  const auto n = tn.output.point.coords();

  const double d_pos = geom::hyperbolic_distance(q, p);
  const double d_neg = geom::hyperbolic_distance(q, n);
  const double s_pos = params.score_weight * d_pos + params.score_bias;
  const double s_neg = params.score_weight * d_neg + params.score_bias;

  ItemOutcome out;
  out.loss = hinge_loss(s_pos, s_neg, cfg.margin);
  out.max_norm = std::max({tq.output.point.norm(), tp.output.point.norm(), tn.output.point.norm()});
  if (grads == nullptr || !(out.loss > 0.0)) return out;

  // dl/ds_pos = 1, dl/ds_neg = -1; the score bias cancels.
  grads->score_weight += weight * (d_pos - d_neg);
  const double c = weight * params.score_weight;

  auto g_q = geom::distance_gradient(q, p, cfg.eps_sing);
  const auto g_q_neg = geom::distance_gradient(q, n, cfg.eps_sing);
  auto g_p = geom::distance_gradient(p, q, cfg.eps_sing);
  auto g_n = geom::distance_gradient(n, q, cfg.eps_sing);
  for (std::size_t k = 0; k < g_q.size(); ++k) {
    g_q[k] = c * (g_q[k] - g_q_neg[k]);
    g_p[k] *= c;
    g_n[k] *= -c;
  }
  if (cfg.riemannian) {
    g_q = geom::riemannian_rescale(q, g_q);
    g_p = geom::riemannian_rescale(p, g_p);
    g_n = geom::riemannian_rescale(n, g_n);
  }
  accumulate_embedding_gradient(params, *item.question, tq, g_q, *grads);
  accumulate_embedding_gradient(params, *item.positive, tp, g_p, *grads);
  accumulate_embedding_gradient(params, *item.negative, tn, g_n, *grads);
  return out;
}

std::vector<ItemRef> refs_of(const TripleBatch& batch) {
  if (batch.items.empty()) throw std::invalid_argument("batch is empty");
  std::vector<ItemRef> refs;
  refs.reserve(batch.items.size());
  for (const auto& it : batch.items) refs.push_back({&it.question, &it.positive, &it.negative});
  return refs;
}

}  // namespace

double batch_loss(const ModelParams& params, const TripleBatch& batch, const TrainConfig& cfg) {
  const auto refs = refs_of(batch);
  double total = 0.0;
  for (const auto& r : refs) total += process_item(params, r, cfg, 0.0, nullptr).loss;
  return total / static_cast<double>(refs.size());
}

Gradients backward(const ModelParams& params, const TripleBatch& batch, const TrainConfig& cfg) {
  const auto refs = refs_of(batch);
  Gradients g = Gradients::zeros_like(params);
  const double w = 1.0 / static_cast<double>(refs.size());
  for (const auto& r : refs) process_item(params, r, cfg, w, &g);
  return g;
}

ModelParams sgd_step(ModelParams params, const Gradients& grads, const TrainConfig& cfg) {
  if (!grads.all_finite()) throw std::runtime_error("sgd_step: non-finite gradient");
  if (grads.proj_weight.data.size() != params.proj_weight.data.size() ||
      grads.proj_bias.size() != params.proj_bias.size()) {
    throw ShapeError("gradient shapes do not match the model");
  }
  for (std::size_t i = 0; i < params.proj_weight.data.size(); ++i) {
    params.proj_weight.data[i] -= cfg.lr * grads.proj_weight.data[i];
  }
  for (std::size_t i = 0; i < params.proj_bias.size(); ++i) {
    params.proj_bias[i] -= cfg.lr * grads.proj_bias[i];
  }
  params.score_weight -= cfg.lr * grads.score_weight;
  params.score_bias -= cfg.lr * grads.score_bias;
  return params;
}

TrainResult train(const TrainingData& data, const TrainConfig& cfg) {
  cfg.validate();
  return train(data, ModelParams::initialize(data.questions.dim(), cfg.output_dim, cfg.seed, cfg.eps_ball),
               cfg);
}

TrainResult train(const TrainingData& data, ModelParams init, const TrainConfig& cfg) {
  cfg.validate();
  init.eps_ball = cfg.eps_ball;
  init.validate();
  if (data.questions.dim() != init.input_dim() || data.answers.dim() != init.input_dim()) {
    throw ShapeError("store dim does not match model input dim " + std::to_string(init.input_dim()));
  }

  TrainResult result;
  result.params = std::move(init);
  if (cfg.epochs == 0) return result;
  if (data.triples.triples.empty()) throw std::invalid_argument("training set is empty");

  std::unordered_map<std::string, TokenSequence> questions;
  std::unordered_map<std::string, TokenSequence> answers;
  auto resolve = [&](std::unordered_map<std::string, TokenSequence>& cache,
                     const data::EmbeddingStore& store, const std::string& id,
                     model::Role role) -> const TokenSequence& {
    auto it = cache.find(id);
    if (it == cache.end()) {
      if (!store.contains(id)) throw std::invalid_argument("id \"" + id + "\" is not in the store");
      it = cache.emplace(id, TokenSequence(store.matrix(id), role, cfg.limits)).first;
    }
    return it->second;
  };
  for (const auto& t : data.triples.triples) {
    resolve(questions, data.questions, t.qid, model::Role::question);
    resolve(answers, data.answers, t.pos_id, model::Role::answer);
    resolve(answers, data.answers, t.neg_id, model::Role::answer);
  }

  data::TripleDataset triples = data.triples;
  std::mt19937_64 rng(cfg.seed ^ 0x7472'6169'6e00'0000ull);
  std::vector<std::size_t> order(triples.triples.size());
  const double ball_limit = 1.0 - cfg.eps_ball / 2.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.resample_negatives && triples.triples.size() >= 2) {
      data::resample_negatives(triples, rng);
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double w = 1.0 / static_cast<double>(end - start);
      Gradients g = Gradients::zeros_like(result.params);
      for (std::size_t k = start; k < end; ++k) {
        const auto& t = triples.triples[order[k]];
        const ItemRef ref{&questions.at(t.qid), &answers.at(t.pos_id), &answers.at(t.neg_id)};
        const ItemOutcome o = process_item(result.params, ref, cfg, w, &g);
        if (o.max_norm > ball_limit) {
          throw std::logic_error("pooled embedding left the ball (norm " + std::to_string(o.max_norm) + ")");
        }
        result.max_pooled_norm = std::max(result.max_pooled_norm, o.max_norm);
        result.pooled_count += 3;
        epoch_total += o.loss;
      }
      result.params = sgd_step(std::move(result.params), g, cfg);
    }
    const double mean = epoch_total / static_cast<double>(order.size());
    if (!std::isfinite(mean)) {
      throw std::runtime_error("training diverged: epoch " + std::to_string(epoch + 1) +
                               " mean loss is not finite");
    }
    result.epoch_loss.push_back(mean);
  }
  return result;
}

std::string loss_trace_csv(const std::vector<double>& epoch_loss) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,mean_loss\n";
  for (std::size_t i = 0; i < epoch_loss.size(); ++i) out << (i + 1) << ',' << epoch_loss[i] << '\n';
  return out.str();
}

}  // namespace hycoqa::train

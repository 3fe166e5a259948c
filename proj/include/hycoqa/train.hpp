#pragma once

// Pairwise hinge-loss training over <description, positive code, negative code>
// triples with hand-derived gradients.

#include <cstdint>
#include <string>
#include <vector>

#include "hycoqa/data.hpp"
#include "hycoqa/model.hpp"

namespace hycoqa::train {

using model::ModelParams;
using model::TokenSequence;

struct TrainConfig {
  double margin = 1.0;
  double lr = 0.05;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  double eps_ball = geom::GeometryConfig{}.eps_ball;
  double eps_sing = geom::GeometryConfig{}.eps_sing;
  /// Output dimension d used when train() initializes a fresh model.
  std::size_t output_dim = 128;
  model::SequenceLimits limits;
  /// Rescale gradients at the pooled ball points by (1 - ||y||^2)^2 / 4.
  /// Turning this off yields the plain Euclidean gradient of batch_loss.
  bool riemannian = true;
  /// Draw fresh negatives from the training split at the start of each epoch.
  bool resample_negatives = true;

  void validate() const;
};

struct TripleExample {
  TokenSequence question;
  TokenSequence positive;
  TokenSequence negative;
};

struct TripleBatch {
  std::vector<TripleExample> items;
};

/// max(0, s_pos + margin - s_neg).
double hinge_loss(double s_pos, double s_neg, double margin);

/// Mean hinge loss over the batch.
double batch_loss(const ModelParams& params, const TripleBatch& batch, const TrainConfig& cfg);

struct Gradients {
  Matrix proj_weight;
  geom::Vec proj_bias;
  double score_weight = 0.0;
  double score_bias = 0.0;

  static Gradients zeros_like(const ModelParams& params);
  bool all_finite() const;
};

/// Gradient of batch_loss with respect to every parameter. The hinge uses
/// subgradient 0 at exactly zero, ReLU uses 0 at exactly zero, and the
/// distance uses 0 at its cusp. With cfg.riemannian the gradient arriving at
/// each pooled ball point is rescaled before flowing back into the projection.
Gradients backward(const ModelParams& params, const TripleBatch& batch, const TrainConfig& cfg);

/// Backpropagates a gradient taken at a pooled embedding into `grads`
/// through normalization, pooling, ReLU and the projection.
void accumulate_embedding_gradient(const ModelParams& params, const TokenSequence& seq,
                                   const model::PoolTrace& trace, std::span<const double> grad_at_point,
                                   Gradients& grads);

/// params - lr * grads. Throws std::runtime_error on non-finite gradients.
ModelParams sgd_step(ModelParams params, const Gradients& grads, const TrainConfig& cfg);

/// Triples plus the stores their ids resolve against.
struct TrainingData {
  const data::EmbeddingStore& questions;
  const data::EmbeddingStore& answers;
  data::TripleDataset triples;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_loss;  // mean item loss per epoch, measured before each batch update
  double max_pooled_norm = 0.0;    // largest pooled embedding norm seen during training
  std::size_t pooled_count = 0;
};

/// Initializes a model from cfg.seed and trains it.
TrainResult train(const TrainingData& data, const TrainConfig& cfg);

/// Trains starting from `init`. Deterministic for identical inputs; throws
/// std::runtime_error if the loss stops being finite.
TrainResult train(const TrainingData& data, ModelParams init, const TrainConfig& cfg);

/// "epoch,mean_loss" CSV with 1-based epochs.
std::string loss_trace_csv(const std::vector<double>& epoch_loss);

}  // namespace hycoqa::train

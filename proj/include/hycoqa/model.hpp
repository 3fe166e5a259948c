#pragma once

// The trainable part of the matcher: a single projection layer shared by
// descriptions and code, sum pooling into the Poincare ball, and a scalar
// affine layer on top of the hyperbolic distance.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hycoqa/geometry.hpp"
#include "hycoqa/matrix.hpp"

namespace hycoqa::model {

using geom::Vec;

enum class Activation : std::uint8_t { relu = 0 };

enum class Role { question, answer };

/// Maximum token counts kept per role; longer sequences lose their tail.
struct SequenceLimits {
  std::size_t max_question = 64;
  std::size_t max_answer = 256;

  std::size_t for_role(Role role) const { return role == Role::question ? max_question : max_answer; }
};

struct ModelParams {
  Matrix proj_weight;   // d x n
  Vec proj_bias;        // d
  double score_weight = 1.0;
  double score_bias = 0.0;
  Activation activation = Activation::relu;
  double eps_ball = geom::GeometryConfig{}.eps_ball;

  std::size_t input_dim() const { return proj_weight.cols; }
  std::size_t output_dim() const { return proj_weight.rows; }

  /// Xavier-uniform projection weights, zero bias, score_weight = 1, score_bias = 0.
  static ModelParams initialize(std::size_t input_dim, std::size_t output_dim, std::uint64_t seed,
                                double eps_ball = geom::GeometryConfig{}.eps_ball);

  /// Throws ShapeError on inconsistent shapes and std::invalid_argument on
  /// non-finite values or an out-of-range eps_ball.
  void validate() const;

  bool operator==(const ModelParams&) const = default;
};

/// Static token embeddings of one description (question) or code snippet (answer).
class TokenSequence {
 public:
  /// Rows beyond the role's limit are dropped. Throws on empty input or
  /// non-finite values.
  TokenSequence(Matrix embeddings, Role role, const SequenceLimits& limits = {});

  const Matrix& embeddings() const { return embeddings_; }
  Role role() const { return role_; }
  std::size_t length() const { return embeddings_.rows; }
  std::size_t width() const { return embeddings_.cols; }

 private:
  Matrix embeddings_;
  Role role_;
};

/// Pooled, normalized representation of a sequence.
struct QAEmbedding {
  geom::PoincarePoint point;
};

/// relu(W z + b).
Vec project_word(const ModelParams& params, std::span<const double> z);

/// Everything the backward pass needs from one pooling forward pass.
struct PoolTrace {
  Matrix pre_activation;  // M x d, W z_i + b
  Vec pooled;             // raw sum of activations
  double pooled_norm = 0.0;
  bool rescaled = false;  // true when the output is pooled scaled to norm 1 - eps_ball
  QAEmbedding output;
};

PoolTrace pool_trace(const ModelParams& params, const TokenSequence& seq);

/// Sum of projected tokens; divided by its norm when that exceeds 1, then
/// retracted to norm <= 1 - eps_ball.
QAEmbedding pool_and_normalize(const ModelParams& params, const TokenSequence& seq, double eps_ball);

/// w_f * d(q, a) + b_f. Lower is a better match while w_f > 0.
double score(const ModelParams& params, const QAEmbedding& q, const QAEmbedding& a);

// Checkpoint layout (little-endian): "HYCQM1", u32 n, u32 d, W row-major
// f64[d*n], b f64[d], w_f f64, b_f f64, eps_ball f64, activation u8.
std::string serialize_checkpoint(const ModelParams& params);
ModelParams deserialize_checkpoint(const std::string& bytes);
void write_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams read_checkpoint(const std::filesystem::path& path);

}  // namespace hycoqa::model

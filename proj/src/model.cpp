#include "hycoqa/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "binary_io.hpp"
#include "hycoqa/error.hpp"

namespace hycoqa::model {

namespace {

constexpr std::string_view kCheckpointMagic = "HYCQM1";

bool all_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

ModelParams ModelParams::initialize(std::size_t input_dim, std::size_t output_dim,
                                    std::uint64_t seed, double eps_ball) {
  if (input_dim == 0 || output_dim == 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  ModelParams p;
  p.proj_weight = Matrix(output_dim, input_dim);
  p.proj_bias.assign(output_dim, 0.0);
  p.eps_ball = eps_ball;

  const double limit = std::sqrt(6.0 / static_cast<double>(input_dim + output_dim));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-limit, limit);
  for (double& w : p.proj_weight.data) w = uniform(rng);
  p.validate();
  return p;
}

void ModelParams::validate() const {
  if (proj_weight.rows == 0 || proj_weight.cols == 0 ||
      proj_weight.data.size() != proj_weight.rows * proj_weight.cols) {
    throw ShapeError("projection weight has an invalid shape");
  }
  if (proj_bias.size() != proj_weight.rows) {
    throw ShapeError("projection bias length " + std::to_string(proj_bias.size()) +
                     " does not match output dim " + std::to_string(proj_weight.rows));
  }
  if (!all_finite(proj_weight.data) || !all_finite(proj_bias) || !std::isfinite(score_weight) ||
      !std::isfinite(score_bias)) {
    throw std::invalid_argument("model parameters contain non-finite values");
  }
  geom::GeometryConfig{eps_ball, geom::GeometryConfig{}.eps_sing}.validate();
}

TokenSequence::TokenSequence(Matrix embeddings, Role role, const SequenceLimits& limits)
    : embeddings_(std::move(embeddings)), role_(role) {
  if (embeddings_.rows == 0 || embeddings_.cols == 0) {
    throw std::invalid_argument("token sequence is empty");
  }
  const std::size_t keep = limits.for_role(role);
  if (keep == 0) throw std::invalid_argument("sequence length limit must be positive");
  if (embeddings_.rows > keep) {
    embeddings_.rows = keep;
    embeddings_.data.resize(keep * embeddings_.cols);
  }
  if (!all_finite(embeddings_.data)) {
    throw std::invalid_argument("token sequence contains non-finite values");
  }
}

namespace {

void pre_activation_into(const ModelParams& params, std::span<const double> z, std::span<double> out) {
  const Matrix& w = params.proj_weight;
  for (std::size_t r = 0; r < w.rows; ++r) {
    const auto wr = w.row(r);
    double acc = params.proj_bias[r];
    for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * z[c];
    out[r] = acc;
  }
}

}  // namespace

Vec project_word(const ModelParams& params, std::span<const double> z) {
  if (z.size() != params.input_dim()) {
    throw ShapeError("token width " + std::to_string(z.size()) + " does not match model input dim " +
                     std::to_string(params.input_dim()));
  }
  Vec out(params.output_dim());
  pre_activation_into(params, z, out);
  for (double& x : out) x = x > 0.0 ? x : 0.0;
  return out;
}

PoolTrace pool_trace(const ModelParams& params, const TokenSequence& seq) {
  if (seq.width() != params.input_dim()) {
    throw ShapeError("sequence width " + std::to_string(seq.width()) +
                     " does not match model input dim " + std::to_string(params.input_dim()));
  }
  const std::size_t d = params.output_dim();
  PoolTrace t;
  t.pre_activation = Matrix(seq.length(), d);
  t.pooled.assign(d, 0.0);
  for (std::size_t i = 0; i < seq.length(); ++i) {
    pre_activation_into(params, seq.embeddings().row(i), t.pre_activation.row(i));
  }
  // Accumulate in lexicographic order of the token rows so the pooled sum is
  // bitwise independent of token order.
  const Matrix& z = seq.embeddings();
  std::vector<std::size_t> order(seq.length());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = z.row(a);
    const auto rb = z.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  for (std::size_t i : order) {
    const auto h = t.pre_activation.row(i);
    for (std::size_t k = 0; k < d; ++k) t.pooled[k] += h[k] > 0.0 ? h[k] : 0.0;
  }
  t.pooled_norm = geom::norm(t.pooled);

  Vec y = t.pooled;
  if (t.pooled_norm > 1.0) {
    for (double& v : y) v /= t.pooled_norm;
  }
  Vec p = geom::retract(y, params.eps_ball);
  t.rescaled = t.pooled_norm > 1.0 - params.eps_ball;
  t.output.point = geom::PoincarePoint(std::move(p), params.eps_ball);
  return t;
}

QAEmbedding pool_and_normalize(const ModelParams& params, const TokenSequence& seq, double eps_ball) {
  if (eps_ball == params.eps_ball) return pool_trace(params, seq).output;
  ModelParams copy = params;
  copy.eps_ball = eps_ball;
  return pool_trace(copy, seq).output;
}

double score(const ModelParams& params, const QAEmbedding& q, const QAEmbedding& a) {
  return params.score_weight * geom::hyperbolic_distance(q.point.coords(), a.point.coords()) +
         params.score_bias;
}

std::string serialize_checkpoint(const ModelParams& params) {
  params.validate();
  io::ByteWriter w;
  w.raw(kCheckpointMagic);
  w.le(static_cast<std::uint32_t>(params.input_dim()));
  w.le(static_cast<std::uint32_t>(params.output_dim()));
  for (double v : params.proj_weight.data) w.le(v);
  for (double v : params.proj_bias) w.le(v);
  w.le(params.score_weight);
  w.le(params.score_bias);
  w.le(params.eps_ball);
  w.le(static_cast<std::uint8_t>(params.activation));
  return w.take();
}

ModelParams deserialize_checkpoint(const std::string& bytes) {
  io::ByteReader r(bytes, "checkpoint");
  if (r.raw(kCheckpointMagic.size()) != kCheckpointMagic) {
    throw FormatError("checkpoint: bad magic (expected HYCQM1)");
  }
  const auto n = r.le<std::uint32_t>();
  const auto d = r.le<std::uint32_t>();
  if (n == 0 || d == 0) throw FormatError("checkpoint: zero dimension");
  const std::uint64_t expected = 8ull * (std::uint64_t{n} * d + d + 3) + 1;
  if (r.remaining() != expected) {
    throw FormatError("checkpoint: payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                      std::to_string(expected));
  }
  ModelParams p;
  p.proj_weight = Matrix(d, n);
  for (double& v : p.proj_weight.data) v = r.le<double>();
  p.proj_bias.resize(d);
  for (double& v : p.proj_bias) v = r.le<double>();
  p.score_weight = r.le<double>();
  p.score_bias = r.le<double>();
  p.eps_ball = r.le<double>();
  const auto tag = r.le<std::uint8_t>();
  if (tag != static_cast<std::uint8_t>(Activation::relu)) {
    throw FormatError("checkpoint: unknown activation tag " + std::to_string(tag));
  }
  p.activation = Activation::relu;
  try {
    p.validate();
  } catch (const std::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return p;
}

void write_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  io::write_file(path, serialize_checkpoint(params));
}

ModelParams read_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(io::read_file(path));
}

}  // namespace hycoqa::model

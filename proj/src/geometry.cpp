#include "hycoqa/geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "hycoqa/error.hpp"

namespace hycoqa::geom {

namespace {

void require_same_dim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
}

// 1 - ||x||^2, rejecting points on or outside the unit sphere.
double boundary_gap(std::span<const double> x) {
  const double gap = 1.0 - squared_norm(x);
  if (!(gap > 0.0)) {
    throw DomainError("point is not inside the open unit ball (||x||^2 = " +
                      std::to_string(1.0 - gap) + ")");
  }
  return gap;
}

}  // namespace

void GeometryConfig::validate() const {
  if (!(eps_ball > 0.0 && eps_ball < 0.1)) {
    throw std::invalid_argument("eps_ball must lie in (0, 0.1)");
  }
  if (!(eps_sing > 0.0 && eps_sing < 1e-3)) {
    throw std::invalid_argument("eps_sing must lie in (0, 1e-3)");
  }
}

PoincarePoint::PoincarePoint(Vec coords, double eps_ball) : coords_(std::move(coords)) {
  if (coords_.empty()) throw ShapeError("a point needs at least one coordinate");
  const double r = geom::norm(coords_);
  if (!std::isfinite(r) || r > 1.0 - eps_ball) {
    throw DomainError("point norm " + std::to_string(r) + " exceeds 1 - eps_ball");
  }
}

double PoincarePoint::norm() const { return geom::norm(coords_); }

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double norm(std::span<const double> x) { return std::sqrt(squared_norm(x)); }

double conformal_factor(std::span<const double> x) { return 2.0 / boundary_gap(x); }

double arcosh1p(double u) {
  if (u < 0.0) throw DomainError("arcosh1p needs u >= 0");
  return std::log1p(u + std::sqrt(u * (u + 2.0)));
}

double hyperbolic_distance(std::span<const double> q, std::span<const double> a) {
  require_same_dim(q, a);
  const double alpha = boundary_gap(q);
  const double beta = boundary_gap(a);
  double diff2 = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double t = q[i] - a[i];
    diff2 += t * t;
  }
  return arcosh1p(2.0 * diff2 / (alpha * beta));
}

Vec distance_gradient(std::span<const double> theta, std::span<const double> x, double eps_sing) {
  require_same_dim(theta, x);
  const double alpha = boundary_gap(theta);
  const double beta = boundary_gap(x);
  double diff2 = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double t = theta[i] - x[i];
    diff2 += t * t;
  }
  // u = gamma - 1; gamma^2 - 1 = u (u + 2) avoids cancellation near the cusp.
  const double u = 2.0 * diff2 / (alpha * beta);
  Vec grad(theta.size(), 0.0);
  if (u < eps_sing) return grad;

  const double front = 4.0 / (beta * std::sqrt(u * (u + 2.0)));
  const double theta_coef = (squared_norm(x) - 2.0 * dot(theta, x) + 1.0) / (alpha * alpha);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    grad[i] = front * (theta_coef * theta[i] - x[i] / alpha);
  }
  return grad;
}

double riemannian_scale(std::span<const double> theta) {
  const double gap = boundary_gap(theta);
  return gap * gap / 4.0;
}

Vec riemannian_rescale(std::span<const double> theta, std::span<const double> euclidean_grad) {
  require_same_dim(theta, euclidean_grad);
  const double scale = riemannian_scale(theta);
  Vec out(euclidean_grad.begin(), euclidean_grad.end());
  for (double& g : out) g *= scale;
  return out;
}

Vec retract(std::span<const double> v, double eps_ball) {
  for (double c : v) {
    if (!std::isfinite(c)) throw DomainError("cannot retract a non-finite vector");
  }
  const double limit = 1.0 - eps_ball;
  Vec out(v.begin(), v.end());
  const double r = norm(v);
  if (r <= limit) return out;

  // Shrink the factor until the rounded result is within the limit, so a
  // retracted point is a fixed point of retract.
  double factor = limit / r;
  for (;;) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * factor;
    if (norm(out) <= limit) break;
    factor = std::nextafter(factor, 0.0);
  }
  return out;
}

}  // namespace hycoqa::geom

#pragma once

// Poincare-ball geometry used by the scoring model.
//
// Every function here is a pure function of its arguments. Points are plain
// coordinate spans; the open-ball requirement ||x|| < 1 is checked on entry and
// violations raise DomainError.

#include <span>
#include <vector>

namespace hycoqa::geom {

using Vec = std::vector<double>;

struct GeometryConfig {
  /// Clearance kept between a retracted point and the unit sphere.
  double eps_ball = 1e-5;
  /// Below this value of gamma - 1 the distance gradient is taken as zero.
  double eps_sing = 1e-9;

  /// Throws std::invalid_argument unless 0 < eps_ball < 0.1 and 0 < eps_sing < 1e-3.
  void validate() const;
};

/// A coordinate vector with ||x|| <= 1 - eps_ball.
class PoincarePoint {
 public:
  PoincarePoint() = default;

  /// Validates the clearance; throws DomainError when the point is too close
  /// to (or beyond) the boundary.
  PoincarePoint(Vec coords, double eps_ball);

  std::span<const double> coords() const { return coords_; }
  std::size_t dim() const { return coords_.size(); }
  double norm() const;

 private:
  Vec coords_;
};

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> x);
double norm(std::span<const double> x);

/// lambda(x) = 2 / (1 - ||x||^2); the metric is lambda(x)^2 times the Euclidean one.
double conformal_factor(std::span<const double> x);

/// arcosh(1 + u) for u >= 0, evaluated as log1p(u + sqrt(u (u + 2))) so small
/// u keeps full relative precision.
double arcosh1p(double u);

/// Geodesic distance arcosh(1 + 2 ||q - a||^2 / ((1 - ||q||^2)(1 - ||a||^2))).
double hyperbolic_distance(std::span<const double> q, std::span<const double> a);

/// d/dtheta of hyperbolic_distance(theta, x).
///
/// With alpha = 1 - ||theta||^2, beta = 1 - ||x||^2 and
/// gamma = 1 + 2 ||theta - x||^2 / (alpha beta):
///
///   4 / (beta sqrt(gamma^2 - 1)) * ((||x||^2 - 2 <theta, x> + 1) / alpha^2 * theta - x / alpha)
///
/// The distance has a cusp at theta == x; whenever gamma - 1 < eps_sing the
/// zero vector (a valid subgradient) is returned.
Vec distance_gradient(std::span<const double> theta, std::span<const double> x,
                      double eps_sing = GeometryConfig{}.eps_sing);

/// Scaling between Euclidean and Riemannian gradients at theta: (1 - ||theta||^2)^2 / 4.
double riemannian_scale(std::span<const double> theta);

/// ((1 - ||theta||^2)^2 / 4) * euclidean_grad.
Vec riemannian_rescale(std::span<const double> theta, std::span<const double> euclidean_grad);

/// Radial projection into the ball: v unchanged if ||v|| <= 1 - eps_ball,
/// otherwise (1 - eps_ball) v / ||v||. Non-finite input throws DomainError.
Vec retract(std::span<const double> v, double eps_ball = GeometryConfig{}.eps_ball);

}  // namespace hycoqa::geom

#pragma once

#include "rhl/grid.hpp"

namespace rhl::geom {

// Highest tensor rank the covariant-derivative machinery will produce.
inline constexpr int kDefaultMaxRank = 4;

/// Five-point flat Laplacian with periodic wraparound.
ScalarField flat_laplacian(const ScalarField& u);

/// R = -2 e^{-2f} Δ₀f.
ScalarField scalar_curvature(const ConformalMetric& metric);

/// Δ_g u = e^{-2f} Δ₀u.
ScalarField laplace_beltrami(const ConformalMetric& metric, const ScalarField& u);

/// Gradient of a scalar field (rank-1 covariant tensor, centered differences).
TensorField covariant_derivative(const ConformalMetric& metric, const ScalarField& u,
                                 int max_rank = kDefaultMaxRank);

/// ∇T for a covariant tensor T, with the new index placed first:
///   (∇T)_{c a_1..a_k} = ∂_c T_{a_1..a_k} - Σ_m Γ^p_{c a_m} T_{a_1..p..a_k},
/// where for g = e^{2f}δ the Christoffel symbols are
///   Γ^p_{ca} = δ^p_c ∂_a f + δ^p_a ∂_c f - δ_{ca} ∂_p f.
/// Throws UnsupportedRank when the result would exceed max_rank.
TensorField covariant_derivative(const ConformalMetric& metric, const TensorField& t,
                                 int max_rank = kDefaultMaxRank);

/// ∇^k u for k >= 1.
TensorField covariant_derivative_power(const ConformalMetric& metric, const ScalarField& u, int k,
                                       int max_rank = kDefaultMaxRank);

/// Pointwise |T|² with every index contracted by g^{-1} = e^{-2f}δ.
ScalarField tensor_norm_squared(const ConformalMetric& metric, const TensorField& t);
ScalarField tensor_norm(const ConformalMetric& metric, const TensorField& t);

/// g^{ab} T_{ab} for a rank-2 tensor.
ScalarField metric_trace(const ConformalMetric& metric, const TensorField& t);

/// |∇^i Rm|. In two dimensions Rm = (R/2)(g ∧ g) and |g ∧ g|² = 4, so
/// |∇^i Rm| = |∇^i R|. Valid for 0 <= order <= max_rank - 2.
ScalarField curvature_derivative_norm(const ConformalMetric& metric, int order,
                                      int max_rank = kDefaultMaxRank);

/// Shortest-path distance from x0 over the 16-neighbour lattice graph
/// (axis, diagonal and knight moves) with edge weight
/// e^{(f_p + f_q)/2} times the Euclidean step length.
ScalarField geodesic_distance(const ConformalMetric& metric, GridIndex x0);

/// Distance refined by geodesic shooting. Geodesics and their Jacobi fields
/// (J'' + K J = 0, J(0) = 0, J'(0) = 1) are integrated from x0 over a fan of
/// directions on a periodic Catmull-Rom interpolant of f and K = R/2; each
/// node within `radius` is then hit by Newton iteration on (direction,
/// length), keeping the shortest geodesic found. Unlike the lattice distance
/// this field is accurate to ODE precision, so Δ_g d = J'/J is available
/// directly.
struct ShotDistance {
  ScalarField distance;   // +inf beyond radius or where no geodesic converged
  ScalarField laplacian;  // J'/J; nan at x0 and wherever distance is +inf
};
ShotDistance shot_distance(const ConformalMetric& metric, GridIndex x0, double radius);

/// Closed ball {d <= r} from a precomputed distance field.
Mask ball_mask(const ScalarField& distance, double r);
Mask metric_ball(const ConformalMetric& metric, GridIndex x0, double r);

/// ∫ field dg with midpoint weights e^{2f} hx hy. Terms are summed in
/// sorted order, so the result depends only on the multiset of cell values.
double integrate(const ConformalMetric& metric, const ScalarField& field);

}  // namespace rhl::geom

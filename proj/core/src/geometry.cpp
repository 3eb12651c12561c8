#include "rhl/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <utility>

#include "rhl/errors.hpp"

namespace rhl::geom {
namespace {

void require_same_grid(const GridSpec& a, const GridSpec& b) {
  if (!(a == b)) throw InvalidArgument("field is not aligned to the metric grid");
}

// Centered first differences of a flat array laid out on the grid, with the
// given stride between consecutive entries of the same cell component.
struct FirstDifferences {
  std::vector<double> dx;
  std::vector<double> dy;
};

FirstDifferences first_differences(const ScalarField& u) {
  const GridSpec& s = u.spec();
  FirstDifferences out{std::vector<double>(s.size()), std::vector<double>(s.size())};
  const double ix = 0.5 / s.hx();
  const double iy = 0.5 / s.hy();
  for (int j = 0; j < s.ny(); ++j) {
    for (int i = 0; i < s.nx(); ++i) {
      const std::size_t k = s.index(i, j);
      out.dx[k] = (u(i + 1, j) - u(i - 1, j)) * ix;
      out.dy[k] = (u(i, j + 1) - u(i, j - 1)) * iy;
    }
  }
  return out;
}

}  // namespace

ScalarField flat_laplacian(const ScalarField& u) {
  const GridSpec& s = u.spec();
  ScalarField out(s);
  const double ixx = 1.0 / (s.hx() * s.hx());
  const double iyy = 1.0 / (s.hy() * s.hy());
  for (int j = 0; j < s.ny(); ++j) {
    for (int i = 0; i < s.nx(); ++i) {
      const double c = u(i, j);
      out(i, j) = (u(i + 1, j) - 2.0 * c + u(i - 1, j)) * ixx + (u(i, j + 1) - 2.0 * c + u(i, j - 1)) * iyy;
    }
  }
  return out;
}

ScalarField scalar_curvature(const ConformalMetric& metric) {
  ScalarField lap = flat_laplacian(metric.f());
  const ScalarField& f = metric.f();
  for (std::size_t k = 0; k < lap.size(); ++k) lap[k] *= -2.0 * std::exp(-2.0 * f[k]);
  return lap;
}

ScalarField laplace_beltrami(const ConformalMetric& metric, const ScalarField& u) {
  require_same_grid(metric.spec(), u.spec());
  ScalarField lap = flat_laplacian(u);
  const ScalarField& f = metric.f();
  for (std::size_t k = 0; k < lap.size(); ++k) lap[k] *= std::exp(-2.0 * f[k]);
  return lap;
}

TensorField covariant_derivative(const ConformalMetric& metric, const ScalarField& u, int max_rank) {
  require_same_grid(metric.spec(), u.spec());
  if (max_rank < 1) throw UnsupportedRank(1, max_rank);
  const FirstDifferences d = first_differences(u);
  TensorField out(u.spec(), 1);
  for (std::size_t k = 0; k < u.size(); ++k) {
    out.at(k, 0) = d.dx[k];
    out.at(k, 1) = d.dy[k];
  }
  return out;
}

TensorField covariant_derivative(const ConformalMetric& metric, const TensorField& t, int max_rank) {
  require_same_grid(metric.spec(), t.spec());
  const int rank = t.rank();
  if (rank + 1 > max_rank) throw UnsupportedRank(rank + 1, max_rank);

  const GridSpec& s = t.spec();
  const int nc = t.components();
  const FirstDifferences df = first_differences(metric.f());
  TensorField out(s, rank + 1);
  const double ix = 0.5 / s.hx();
  const double iy = 0.5 / s.hy();

  for (int j = 0; j < s.ny(); ++j) {
    for (int i = 0; i < s.nx(); ++i) {
      const std::size_t k = s.index(i, j);
      const auto here = t.cell(k);
      const auto east = t.cell(s.index(i + 1, j));
      const auto west = t.cell(s.index(i - 1, j));
      const auto north = t.cell(s.index(i, j + 1));
      const auto south = t.cell(s.index(i, j - 1));
      const std::array<double, 2> grad_f{df.dx[k], df.dy[k]};
      auto dst = out.cell(k);

      for (int c = 0; c < 2; ++c) {
        for (int a = 0; a < nc; ++a) {
          double value = c == 0 ? (east[a] - west[a]) * ix : (north[a] - south[a]) * iy;
          for (int m = 0; m < rank; ++m) {
            const int shift = rank - 1 - m;
            const int am = (a >> shift) & 1;
            // Σ_p Γ^p_{c a_m} T_{..p..} = ∂_{a_m}f T_{..c..} + ∂_c f T_{..a_m..} - δ_{c a_m} Σ_p ∂_p f T_{..p..}
            const int with_c = (a & ~(1 << shift)) | (c << shift);
            double contraction = grad_f[am] * here[with_c] + grad_f[c] * here[a];
            if (c == am) {
              const int with0 = a & ~(1 << shift);
              const int with1 = a | (1 << shift);
              contraction -= grad_f[0] * here[with0] + grad_f[1] * here[with1];
            }
            value -= contraction;
          }
          dst[(c << rank) | a] = value;
        }
      }
    }
  }
  return out;
}

TensorField covariant_derivative_power(const ConformalMetric& metric, const ScalarField& u, int k, int max_rank) {
  if (k < 1) throw InvalidArgument("derivative order must be at least 1");
  if (k > max_rank) throw UnsupportedRank(k, max_rank);
  TensorField t = covariant_derivative(metric, u, max_rank);
  for (int r = 1; r < k; ++r) t = covariant_derivative(metric, t, max_rank);
  return t;
}

ScalarField tensor_norm_squared(const ConformalMetric& metric, const TensorField& t) {
  require_same_grid(metric.spec(), t.spec());
  ScalarField out(t.spec());
  const ScalarField& f = metric.f();
  const int nc = t.components();
  for (std::size_t k = 0; k < out.size(); ++k) {
    double sum = 0.0;
    for (int a = 0; a < nc; ++a) sum += t.at(k, a) * t.at(k, a);
    out[k] = std::exp(-2.0 * t.rank() * f[k]) * sum;
  }
  return out;
}

ScalarField tensor_norm(const ConformalMetric& metric, const TensorField& t) {
  ScalarField out = tensor_norm_squared(metric, t);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::sqrt(out[k]);
  return out;
}

ScalarField metric_trace(const ConformalMetric& metric, const TensorField& t) {
  require_same_grid(metric.spec(), t.spec());
  if (t.rank() != 2) throw InvalidArgument("metric trace needs a rank-2 tensor");
  ScalarField out(t.spec());
  const ScalarField& f = metric.f();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::exp(-2.0 * f[k]) * (t.at(k, 0) + t.at(k, 3));
  return out;
}

ScalarField curvature_derivative_norm(const ConformalMetric& metric, int order, int max_rank) {
  if (order < 0 || order > max_rank - 2) {
    throw UnsupportedRank(order, max_rank - 2);
  }
  ScalarField r = scalar_curvature(metric);
  if (order == 0) {
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = std::abs(r[k]);
    return r;
  }
  return tensor_norm(metric, covariant_derivative_power(metric, r, order, max_rank));
}

ScalarField geodesic_distance(const ConformalMetric& metric, GridIndex x0) {
  const GridSpec& s = metric.spec();
  if (x0.i < 0 || x0.i >= s.nx() || x0.j < 0 || x0.j >= s.ny()) {
    throw InvalidArgument("source point outside grid");
  }
  static constexpr std::array<std::pair<int, int>, 16> kMoves{{{1, 0},
                                                               {-1, 0},
                                                               {0, 1},
                                                               {0, -1},
                                                               {1, 1},
                                                               {1, -1},
                                                               {-1, 1},
                                                               {-1, -1},
                                                               {2, 1},
                                                               {2, -1},
                                                               {-2, 1},
                                                               {-2, -1},
                                                               {1, 2},
                                                               {1, -2},
                                                               {-1, 2},
                                                               {-1, -2}}};
  std::array<double, 16> step{};
  for (std::size_t m = 0; m < kMoves.size(); ++m) {
    step[m] = std::hypot(kMoves[m].first * s.hx(), kMoves[m].second * s.hy());
  }

  // Half-weights e^{f/2}: edge weight is the product of the endpoint values.
  std::vector<double> half(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) half[k] = std::exp(0.5 * metric.f()[k]);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(s.size(), kInf);
  std::vector<unsigned char> done(s.size(), 0);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;

  const std::size_t source = s.index(x0);
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, k] = queue.top();
    queue.pop();
    if (done[k]) continue;
    done[k] = 1;
    const GridIndex p = s.point(k);
    for (std::size_t m = 0; m < kMoves.size(); ++m) {
      const std::size_t q = s.index(p.i + kMoves[m].first, p.j + kMoves[m].second);
      if (done[q]) continue;
      const double candidate = d + half[k] * half[q] * step[m];
      if (candidate < dist[q]) {
        dist[q] = candidate;
        queue.emplace(candidate, q);
      }
    }
  }
  return ScalarField(s, std::move(dist));
}

Mask ball_mask(const ScalarField& distance, double r) {
  Mask mask(distance.size(), 0);
  for (std::size_t k = 0; k < distance.size(); ++k) mask[k] = distance[k] <= r ? 1 : 0;
  return mask;
}

Mask metric_ball(const ConformalMetric& metric, GridIndex x0, double r) {
  if (!(r > 0.0)) throw InvalidArgument("ball radius must be positive");
  return ball_mask(geodesic_distance(metric, x0), r);
}

double integrate(const ConformalMetric& metric, const ScalarField& field) {
  require_same_grid(metric.spec(), field.spec());
  std::vector<double> terms(field.size());
  const ScalarField& f = metric.f();
  for (std::size_t k = 0; k < terms.size(); ++k) terms[k] = field[k] * std::exp(2.0 * f[k]);
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  double c = 0.0;
  for (double v : terms) {
    const double t = sum + v;
    c += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return (sum + c) * metric.spec().cell_area();
}

}  // namespace rhl::geom

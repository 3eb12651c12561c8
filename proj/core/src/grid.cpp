#include "rhl/grid.hpp"

#include <algorithm>
#include <cmath>

#include "rhl/errors.hpp"

namespace rhl {

GridSpec::GridSpec(int nx, int ny, double lx, double ly) : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
  if (nx < kMinCells || ny < kMinCells) {
    throw InvalidArgument("grid needs at least 8 cells per axis");
  }
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
    throw InvalidArgument("grid side lengths must be positive and finite");
  }
}

double GridSpec::h() const { return std::min(hx(), hy()); }

int GridSpec::wrap_i(int i) const {
  i %= nx_;
  return i < 0 ? i + nx_ : i;
}

int GridSpec::wrap_j(int j) const {
  j %= ny_;
  return j < 0 ? j + ny_ : j;
}

ScalarField::ScalarField(const GridSpec& spec, double value) : spec_(spec), values_(spec.size(), value) {}

ScalarField::ScalarField(const GridSpec& spec, std::vector<double> values) : spec_(spec), values_(std::move(values)) {
  if (values_.size() != spec_.size()) {
    throw InvalidArgument("scalar field size does not match grid");
  }
}

ScalarField ScalarField::sample(const GridSpec& spec, const std::function<double(double, double)>& fn) {
  ScalarField out(spec);
  for (int j = 0; j < spec.ny(); ++j) {
    for (int i = 0; i < spec.nx(); ++i) {
      out(i, j) = fn(spec.x(i), spec.y(j));
    }
  }
  return out;
}

double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }
double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  if (!(other.spec_ == spec_)) throw InvalidArgument("field grids differ");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  if (!(other.spec_ == spec_)) throw InvalidArgument("field grids differ");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(ScalarField a, double s) { return a *= s; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

TensorField::TensorField(const GridSpec& spec, int rank)
    : spec_(spec), rank_(rank), data_(spec.size() * static_cast<std::size_t>(components_for(rank > 0 ? rank : 0)), 0.0) {
  if (rank < 1) throw InvalidArgument("tensor rank must be at least 1");
}

bool TensorField::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

TensorField& TensorField::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

ConformalMetric::ConformalMetric(ScalarField f, double t) : f_(std::move(f)), t_(t) {
  if (!f_.all_finite()) throw InvalidArgument("conformal exponent must be finite");
  if (!std::isfinite(t)) throw InvalidArgument("metric time stamp must be finite");
}

ScalarField ConformalMetric::area_density() const {
  ScalarField out(spec());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::exp(2.0 * f_[k]);
  return out;
}

double ConformalMetric::min_area_density() const { return std::exp(2.0 * f_.min()); }

double ConformalMetric::area() const {
  double sum = 0.0;
  double c = 0.0;
  for (std::size_t k = 0; k < f_.size(); ++k) {
    // Neumaier summation
    const double v = std::exp(2.0 * f_[k]);
    const double t = sum + v;
    c += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return (sum + c) * spec().cell_area();
}

}  // namespace rhl

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace rhl {

struct GridIndex {
  int i = 0;
  int j = 0;

  friend bool operator==(const GridIndex&, const GridIndex&) = default;
};

/// Periodic rectangle [0, Lx) x [0, Ly) sampled at nx x ny nodes.
///
/// Node (i, j) sits at (i*hx, j*hy). Storage is row-major with rows along y:
/// the flat index of (i, j) is j*nx + i.
class GridSpec {
 public:
  static constexpr int kMinCells = 8;

  GridSpec(int nx, int ny, double lx, double ly);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  double hx() const { return lx_ / nx_; }
  double hy() const { return ly_ / ny_; }
  double h() const;
  double cell_area() const { return hx() * hy(); }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }

  int wrap_i(int i) const;
  int wrap_j(int j) const;
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(wrap_j(j)) * nx_ + wrap_i(i); }
  std::size_t index(GridIndex p) const { return index(p.i, p.j); }
  GridIndex point(std::size_t flat) const {
    return {static_cast<int>(flat % nx_), static_cast<int>(flat / nx_)};
  }
  double x(int i) const { return i * hx(); }
  double y(int j) const { return j * hy(); }

  // Same grid at twice the resolution in each axis.
  GridSpec refined() const { return GridSpec(2 * nx_, 2 * ny_, lx_, ly_); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  int nx_;
  int ny_;
  double lx_;
  double ly_;
};

/// Real values on the nodes of a GridSpec.
class ScalarField {
 public:
  explicit ScalarField(const GridSpec& spec, double value = 0.0);
  ScalarField(const GridSpec& spec, std::vector<double> values);

  // Samples fn(x, y) at every node.
  static ScalarField sample(const GridSpec& spec, const std::function<double(double, double)>& fn);

  const GridSpec& spec() const { return spec_; }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator()(int i, int j) { return values_[spec_.index(i, j)]; }
  double operator()(int i, int j) const { return values_[spec_.index(i, j)]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double max() const;
  double min() const;
  double max_abs() const;
  bool all_finite() const;

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double s);

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(ScalarField a, double s);
ScalarField operator*(double s, ScalarField a);

/// Covariant tensor of a given rank on a 2D grid, stored in coordinate
/// components. Each cell carries 2^rank components; the multi-index
/// (a_1, ..., a_rank) with a_m in {0, 1} maps to the integer whose binary
/// digits are a_1 ... a_rank (a_1 most significant).
class TensorField {
 public:
  TensorField(const GridSpec& spec, int rank);

  static constexpr int components_for(int rank) { return 1 << rank; }

  const GridSpec& spec() const { return spec_; }
  int rank() const { return rank_; }
  int components() const { return components_for(rank_); }

  double& at(std::size_t cell, int component) { return data_[cell * components() + component]; }
  double at(std::size_t cell, int component) const { return data_[cell * components() + component]; }

  std::span<double> cell(std::size_t k) { return {data_.data() + k * components(), static_cast<std::size_t>(components())}; }
  std::span<const double> cell(std::size_t k) const {
    return {data_.data() + k * components(), static_cast<std::size_t>(components())};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool all_finite() const;
  TensorField& operator*=(double s);

 private:
  GridSpec spec_;
  int rank_;
  std::vector<double> data_;
};

/// g = e^{2f} (dx^2 + dy^2) on the periodic rectangle, stamped with a time.
class ConformalMetric {
 public:
  ConformalMetric(ScalarField f, double t = 0.0);

  static ConformalMetric flat(const GridSpec& spec, double t = 0.0) { return ConformalMetric(ScalarField(spec), t); }

  const GridSpec& spec() const { return f_.spec(); }
  const ScalarField& f() const { return f_; }
  double t() const { return t_; }

  // e^{2f}: pointwise area density relative to the flat cell.
  ScalarField area_density() const;
  double min_area_density() const;
  // Total area sum e^{2f} hx hy.
  double area() const;

 private:
  ScalarField f_;
  double t_;
};

using Mask = std::vector<unsigned char>;

}  // namespace rhl

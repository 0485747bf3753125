/*
 Copyright 2026 The mfstack Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mfstack {

using Eigen::Index;

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowMatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Equidistant cell-centered grid on [xi_min, xi_max) with periodic index arithmetic.
template <typename Scalar>
class PeriodicGrid1D {
 public:
  PeriodicGrid1D() = default;
  PeriodicGrid1D(Scalar xi_min, Scalar xi_max, Index n_xi)
      : xi_min_(xi_min), xi_max_(xi_max), n_(n_xi) {
    if (!(xi_max > xi_min)) throw std::invalid_argument("PeriodicGrid1D: empty domain");
    if (n_xi < 1) throw std::invalid_argument("PeriodicGrid1D: need at least one cell");
    dxi_ = (xi_max - xi_min) / Scalar(n_xi);
  }

  Scalar xi_min() const { return xi_min_; }
  Scalar xi_max() const { return xi_max_; }
  Scalar length() const { return xi_max_ - xi_min_; }
  Index size() const { return n_; }
  Scalar dxi() const { return dxi_; }

  Scalar center(Index i) const { return xi_min_ + (Scalar(i) + Scalar(0.5)) * dxi_; }

  ArrayX<Scalar> centers() const {
    return ArrayX<Scalar>::NullaryExpr(n_, [this](Index i) { return center(i); });
  }

  Index wrap(Index i) const {
    const Index r = i % n_;
    return r < 0 ? r + n_ : r;
  }

  /// Maps a position into [xi_min, xi_max).
  Scalar wrap_position(Scalar xi) const {
    using std::floor;
    Scalar s = xi - xi_min_;
    s -= length() * floor(s / length());
    Scalar out = xi_min_ + s;
    return out >= xi_max_ ? xi_min_ : out;
  }

  Index cell_of(Scalar xi) const {
    using std::floor;
    const auto i = static_cast<Index>(floor((wrap_position(xi) - xi_min_) / dxi_));
    return std::clamp<Index>(i, 0, n_ - 1);
  }

  /// Periodic linear interpolation of cell-center values at an arbitrary position.
  template <typename Derived>
  Scalar interpolate(const Eigen::DenseBase<Derived>& values, Scalar xi) const {
    using std::floor;
    const Scalar s = (wrap_position(xi) - xi_min_) / dxi_ - Scalar(0.5);
    const Scalar base = floor(s);
    const Scalar w = s - base;
    const Index left = wrap(static_cast<Index>(base));
    const Index right = wrap(left + 1);
    return (Scalar(1) - w) * values(left) + w * values(right);
  }

  bool operator==(const PeriodicGrid1D&) const = default;

 private:
  Scalar xi_min_{0};
  Scalar xi_max_{1};
  Index n_{1};
  Scalar dxi_{1};
};

/// Cell averages on a periodic grid at one instant.
template <typename Scalar>
struct CellField {
  PeriodicGrid1D<Scalar> grid;
  ArrayX<Scalar> values;

  CellField() = default;
  explicit CellField(const PeriodicGrid1D<Scalar>& g) : grid(g), values(ArrayX<Scalar>::Zero(g.size())) {}
  CellField(const PeriodicGrid1D<Scalar>& g, ArrayX<Scalar> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size())
      throw std::invalid_argument("CellField: value count does not match grid");
  }

  template <typename F>
  static CellField sample(const PeriodicGrid1D<Scalar>& g, F&& f) {
    ArrayX<Scalar> v(g.size());
    for (Index i = 0; i < g.size(); ++i) v(i) = f(g.center(i));
    return CellField(g, std::move(v));
  }
};

/// n uniformly spaced instants on [t0, t1]; the last instant is t1 exactly.
template <typename Scalar>
class UniformTimes {
 public:
  UniformTimes() = default;
  UniformTimes(Scalar t0, Scalar t1, Index n) : t0_(t0), t1_(t1), n_(n) {
    if (n < 2) throw std::invalid_argument("UniformTimes: need at least two points");
    if (!(t1 > t0)) throw std::invalid_argument("UniformTimes: t1 must exceed t0");
  }

  Index size() const { return n_; }
  Scalar front() const { return t0_; }
  Scalar back() const { return t1_; }
  Scalar step() const { return (t1_ - t0_) / Scalar(n_ - 1); }
  Scalar operator[](Index k) const {
    if (k == n_ - 1) return t1_;
    return t0_ + (t1_ - t0_) * Scalar(k) / Scalar(n_ - 1);
  }

  ArrayX<Scalar> to_array() const {
    return ArrayX<Scalar>::NullaryExpr(n_, [this](Index k) { return (*this)[k]; });
  }

  /// Bracketing interval [k, k+1] and weight of k+1 for t (clamped to the range).
  std::pair<Index, Scalar> locate(Scalar t) const {
    using std::floor;
    if (t <= t0_) return {0, Scalar(0)};
    if (t >= t1_) return {n_ - 2, Scalar(1)};
    const Scalar s = (t - t0_) / step();
    Index k = std::min<Index>(static_cast<Index>(floor(s)), n_ - 2);
    return {k, s - Scalar(k)};
  }

  bool operator==(const UniformTimes&) const = default;

 private:
  Scalar t0_{0};
  Scalar t1_{1};
  Index n_{2};
};

/// Scalar function of time on a uniform grid; piecewise-linear between samples.
template <typename Scalar>
class TimeSeries {
 public:
  TimeSeries() = default;
  TimeSeries(UniformTimes<Scalar> times, ArrayX<Scalar> values)
      : times_(times), values_(std::move(values)) {
    if (values_.size() != times_.size())
      throw std::invalid_argument("TimeSeries: value count does not match time grid");
  }

  template <typename F>
  static TimeSeries sample(UniformTimes<Scalar> times, F&& f) {
    ArrayX<Scalar> v(times.size());
    for (Index k = 0; k < times.size(); ++k) v(k) = f(times[k]);
    return TimeSeries(times, std::move(v));
  }

  const UniformTimes<Scalar>& times() const { return times_; }
  const ArrayX<Scalar>& values() const { return values_; }
  ArrayX<Scalar>& values() { return values_; }
  Index size() const { return values_.size(); }

  Scalar operator()(Scalar t) const {
    const auto [k, w] = times_.locate(t);
    if (w == Scalar(0)) return values_(k);
    if (w == Scalar(1)) return values_(k + 1);
    return (Scalar(1) - w) * values_(k) + w * values_(k + 1);
  }

 private:
  UniformTimes<Scalar> times_;
  ArrayX<Scalar> values_;
};

/// Cell fields recorded at uniform output times; row k is the snapshot at times()[k].
template <typename Scalar>
class FieldTrajectory {
 public:
  FieldTrajectory() = default;
  FieldTrajectory(UniformTimes<Scalar> times, PeriodicGrid1D<Scalar> grid)
      : times_(times), grid_(grid), data_(RowMatrixX<Scalar>::Zero(times.size(), grid.size())) {}
  FieldTrajectory(UniformTimes<Scalar> times, PeriodicGrid1D<Scalar> grid, RowMatrixX<Scalar> data)
      : times_(times), grid_(grid), data_(std::move(data)) {
    if (data_.rows() != times_.size() || data_.cols() != grid_.size())
      throw std::invalid_argument("FieldTrajectory: data shape does not match grids");
  }

  const UniformTimes<Scalar>& times() const { return times_; }
  const PeriodicGrid1D<Scalar>& grid() const { return grid_; }
  const RowMatrixX<Scalar>& data() const { return data_; }
  RowMatrixX<Scalar>& data() { return data_; }

  auto row(Index k) const { return data_.row(k).transpose().array(); }
  auto row(Index k) { return data_.row(k).transpose().array(); }

  CellField<Scalar> snapshot(Index k) const { return CellField<Scalar>(grid_, row(k)); }

  /// Linear-in-time reconstruction of the whole field.
  ArrayX<Scalar> at_time(Scalar t) const {
    const auto [k, w] = times_.locate(t);
    if (w == Scalar(0)) return row(k);
    if (w == Scalar(1)) return row(k + 1);
    return (Scalar(1) - w) * row(k) + w * row(k + 1);
  }

  /// Bilinear reconstruction in (t, xi) with periodic wrap in xi.
  Scalar at(Scalar t, Scalar xi) const {
    const auto [k, w] = times_.locate(t);
    const Scalar a = grid_.interpolate(data_.row(k), xi);
    if (w == Scalar(0)) return a;
    const Scalar b = grid_.interpolate(data_.row(k + 1), xi);
    return (Scalar(1) - w) * a + w * b;
  }

 private:
  UniformTimes<Scalar> times_;
  PeriodicGrid1D<Scalar> grid_;
  RowMatrixX<Scalar> data_;
};

using Grid = PeriodicGrid1D<double>;
using Field = CellField<double>;
using Times = UniformTimes<double>;
using Series = TimeSeries<double>;
using Trajectory = FieldTrajectory<double>;

}  // namespace mfstack

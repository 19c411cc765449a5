#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace mosquito {

/// Length of the periodic biting-time axis, in hours.
inline constexpr double kDayHours = 24.0;

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

/// Ages x biting-time samples at one time level (row i = age node, column k =
/// x cell).
template <typename Scalar>
using Slice = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Time x biting-time table, used for the newborn boundary p(0, t, x).
template <typename Scalar>
using Boundary = Slice<Scalar>;

/// Characteristic-aligned lattice over (0, a_max) x (0, t_max) x [0, 24).
///
/// Age and time share one step so the transport operator d/dt + d/da is an
/// exact shift from node (i, n) to (i + 1, n + 1). The x axis holds n_x cells
/// whose centers sit at (k + 1/2) dx; index n_x is identified with index 0.
template <typename Scalar>
struct Grid {
  Scalar a_max{};
  Scalar t_max{};
  int n_a = 0;
  int n_t = 0;
  int n_x = 0;
  Scalar da{};
  Scalar dt{};
  Scalar dx{};

  Scalar age(int i) const { return static_cast<Scalar>(i) * da; }
  Scalar time(int n) const { return static_cast<Scalar>(n) * dt; }
  Scalar x_center(int k) const { return (static_cast<Scalar>(k) + Scalar(0.5)) * dx; }

  /// Nodes (i, n) with i < n_a and n < n_t anchor one characteristic cell
  /// each; they carry the quadrature weight and the effective control.
  bool is_cell_anchor(int i, int n) const { return i < n_a && n < n_t; }
  Scalar cell_volume() const { return da * dt * dx; }

  std::size_t node_count() const {
    return static_cast<std::size_t>(n_a + 1) * static_cast<std::size_t>(n_t + 1) *
           static_cast<std::size_t>(n_x);
  }
  std::size_t control_cell_count() const {
    return static_cast<std::size_t>(n_a) * static_cast<std::size_t>(n_t) *
           static_cast<std::size_t>(n_x);
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Builds a grid with da = dt = a_max / n_a and n_t = t_max / dt.
///
/// Throws std::invalid_argument when t_max is not an integer multiple of the
/// age step, since the characteristics would then miss the lattice.
template <typename Scalar = double>
Grid<Scalar> make_grid(Scalar a_max, Scalar t_max, int n_a, int n_x) {
  if (!(a_max > 0) || !(t_max > 0)) {
    throw std::invalid_argument("make_grid: a_max and t_max must be positive");
  }
  if (n_a < 2) throw std::invalid_argument("make_grid: n_a must be at least 2");
  if (n_x < 2) throw std::invalid_argument("make_grid: n_x must be at least 2");

  Grid<Scalar> g;
  g.a_max = a_max;
  g.t_max = t_max;
  g.n_a = n_a;
  g.n_x = n_x;
  g.da = a_max / static_cast<Scalar>(n_a);
  g.dt = g.da;
  g.dx = Scalar(kDayHours) / static_cast<Scalar>(n_x);

  const Scalar steps = t_max / g.da;
  const Scalar rounded = std::round(steps);
  // Allow a few ulps of slack in the quotient itself.
  if (rounded < 1 || std::abs(steps - rounded) > Scalar(64) * std::numeric_limits<Scalar>::epsilon() * rounded) {
    throw std::invalid_argument("make_grid: t_max / (a_max / n_a) = " + std::to_string(static_cast<double>(steps)) +
                                " is not an integer; characteristic alignment da == dt is impossible");
  }
  g.n_t = static_cast<int>(rounded);
  return g;
}

/// Periodic x index: returns k mod n_x in [0, n_x).
inline int wrap_x(int n_x, int k) {
  const int r = k % n_x;
  return r < 0 ? r + n_x : r;
}

template <typename Scalar>
int wrap_x(const Grid<Scalar>& grid, int k) {
  return wrap_x(grid.n_x, k);
}

/// Scalar samples on every lattice node (age i, time n, x cell k).
///
/// Storage is time-major so that the full age x biting-time slice at one time
/// level is a contiguous row-major block; slice(n) maps it without copying.
template <typename Scalar>
class Field {
 public:
  using SliceMap = Eigen::Map<Slice<Scalar>>;
  using ConstSliceMap = Eigen::Map<const Slice<Scalar>>;

  Field() = default;
  explicit Field(const Grid<Scalar>& grid, Scalar fill = Scalar(0))
      : grid_(grid), values_(ArrayX<Scalar>::Constant(static_cast<Eigen::Index>(grid.node_count()), fill)) {}

  const Grid<Scalar>& grid() const { return grid_; }

  ArrayX<Scalar>& values() { return values_; }
  const ArrayX<Scalar>& values() const { return values_; }

  Eigen::Index index(int i, int n, int k) const {
    return (static_cast<Eigen::Index>(n) * (grid_.n_a + 1) + i) * grid_.n_x + k;
  }

  Scalar& operator()(int i, int n, int k) { return values_[index(i, n, k)]; }
  Scalar operator()(int i, int n, int k) const { return values_[index(i, n, k)]; }

  /// Access with periodic x index.
  Scalar at_wrapped(int i, int n, int k) const { return (*this)(i, n, wrap_x(grid_.n_x, k)); }

  SliceMap slice(int n) {
    return SliceMap(values_.data() + index(0, n, 0), grid_.n_a + 1, grid_.n_x);
  }
  ConstSliceMap slice(int n) const {
    return ConstSliceMap(values_.data() + index(0, n, 0), grid_.n_a + 1, grid_.n_x);
  }

  bool all_finite() const { return values_.isFinite().all(); }

  friend bool operator==(const Field& lhs, const Field& rhs) {
    return lhs.grid_ == rhs.grid_ && (lhs.values_ == rhs.values_).all();
  }

 private:
  Grid<Scalar> grid_{};
  ArrayX<Scalar> values_{};
};

/// Newborn row p(0, t_n, x) for every time level.
template <typename Scalar>
Boundary<Scalar> boundary_of(const Field<Scalar>& p) {
  const auto& g = p.grid();
  Boundary<Scalar> b(g.n_t + 1, g.n_x);
  for (int n = 0; n <= g.n_t; ++n) b.row(n) = p.slice(n).row(0);
  return b;
}

/// Quadrature sum over the characteristic cells: each (a, t) cell is
/// represented by its anchor node and weighted da * dt * dx.
template <typename Scalar, typename Fn>
Scalar cell_sum(const Grid<Scalar>& g, Fn&& integrand) {
  Scalar total = 0;
  for (int n = 0; n < g.n_t; ++n) {
    for (int i = 0; i < g.n_a; ++i) {
      for (int k = 0; k < g.n_x; ++k) total += integrand(i, n, k);
    }
  }
  return total * g.cell_volume();
}

}  // namespace mosquito

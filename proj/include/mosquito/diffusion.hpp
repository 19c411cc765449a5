#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "mosquito/grid.hpp"

namespace mosquito {

/// Discrete eigenvalue of the periodic second difference, -L e_j = lambda_j e_j:
/// lambda_j = 2 (1 - cos(2 pi j / n_x)) / dx^2.
template <typename Scalar>
Scalar periodic_laplacian_eigenvalue(int j, int n_x, Scalar dx) {
  const Scalar theta = Scalar(2) * Scalar(M_PI) * static_cast<Scalar>(j) / static_cast<Scalar>(n_x);
  return Scalar(2) * (Scalar(1) - std::cos(theta)) / (dx * dx);
}

/// Dense periodic second-difference matrix with stencil [1, -2, 1] / dx^2.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> periodic_laplacian(int n_x, Scalar dx) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> lap =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n_x, n_x);
  const Scalar inv = Scalar(1) / (dx * dx);
  for (int k = 0; k < n_x; ++k) {
    lap(k, wrap_x(n_x, k - 1)) += inv;
    lap(k, wrap_x(n_x, k + 1)) += inv;
    lap(k, k) -= Scalar(2) * inv;
  }
  return lap;
}

/// Backward-Euler step (I - delta dt L) y = rhs for the periodic Laplacian.
///
/// The cyclic tridiagonal matrix is an M-matrix, factored once without
/// pivoting. Every multiplier is stored with its sign flipped so the
/// right-hand-side path performs only additions and multiplications by
/// nonnegative constants: the solve is exactly monotone in floating point,
/// which the discrete comparison principle relies on.
template <typename Scalar>
class PeriodicDiffusion {
 public:
  PeriodicDiffusion() = default;
  PeriodicDiffusion(int n_x, Scalar dx, Scalar delta, Scalar dt) : n_(n_x) {
    const Scalar r = delta * dt / (dx * dx);
    identity_ = !(r > Scalar(0));
    if (identity_) return;

    // Assemble the entries of A = I - delta dt L that the elimination touches.
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Identity(n_, n_) -
        delta * dt * periodic_laplacian<Scalar>(n_, dx);

    const int last = n_ - 1;
    pivot_.assign(n_ - 1, Scalar(0));
    fwd_.assign(n_ - 1, Scalar(0));
    border_.assign(n_ - 1, Scalar(0));
    up_.assign(n_ - 1, Scalar(0));
    spike_.assign(n_ - 1, Scalar(0));

    std::vector<Scalar> super(n_ - 1, Scalar(0));  // (k, k + 1) for k <= n - 3
    std::vector<Scalar> col(n_ - 1, Scalar(0));    // (k, n - 1)
    std::vector<Scalar> row(n_ - 1, Scalar(0));    // (n - 1, k)
    for (int k = 0; k < last; ++k) {
      pivot_[k] = a(k, k);
      col[k] = a(k, last);
      row[k] = a(last, k);
      if (k + 1 < last) super[k] = a(k, k + 1);
    }
    Scalar corner = a(last, last);

    for (int k = 0; k < last; ++k) {
      if (k + 1 < last) {
        const Scalar l = a(k + 1, k) / pivot_[k];
        fwd_[k + 1] = -l;
        pivot_[k + 1] -= l * super[k];
        col[k + 1] -= l * col[k];
      }
      const Scalar m = row[k] / pivot_[k];
      border_[k] = -m;
      if (k + 1 < last) row[k + 1] -= m * super[k];
      corner -= m * col[k];
    }
    for (int k = 0; k < last; ++k) {
      up_[k] = -super[k];
      spike_[k] = -col[k];
    }
    corner_ = corner;
  }

  bool is_identity() const { return identity_; }

  /// Solves in place; rhs has n_x entries.
  template <typename Derived>
  void solve_in_place(Eigen::DenseBase<Derived>& y) const {
    if (identity_) return;
    const int last = n_ - 1;
    for (int k = 1; k < last; ++k) y(k) += fwd_[k] * y(k - 1);
    Scalar tail = y(last);
    for (int k = 0; k < last; ++k) tail += border_[k] * y(k);
    y(last) = tail / corner_;
    for (int k = last - 1; k >= 0; --k) {
      Scalar acc = y(k) + spike_[k] * y(last);
      if (k + 1 < last) acc += up_[k] * y(k + 1);
      y(k) = acc / pivot_[k];
    }
  }

 private:
  int n_ = 0;
  bool identity_ = true;
  std::vector<Scalar> pivot_, fwd_, border_, up_, spike_;
  Scalar corner_{1};
};

/// Applies one implicit diffusion step to every age row of a slice.
template <typename Scalar>
void step_diffusion(Slice<Scalar>& slice, const PeriodicDiffusion<Scalar>& solver) {
  if (solver.is_identity()) return;
  for (Eigen::Index i = 0; i < slice.rows(); ++i) {
    auto row = slice.row(i);
    solver.solve_in_place(row);
  }
}

template <typename Scalar>
void step_diffusion(Slice<Scalar>& slice, Scalar delta, const Grid<Scalar>& grid) {
  step_diffusion(slice, PeriodicDiffusion<Scalar>(grid.n_x, grid.dx, delta, grid.dt));
}

}  // namespace mosquito

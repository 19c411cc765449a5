#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mosquito/diffusion.hpp"
#include "mosquito/grid.hpp"
#include "mosquito/model.hpp"

namespace mosquito {

/// A solver produced a NaN or infinity.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, int i, int n, int k)
      : std::runtime_error(what), age_index(i), time_index(n), x_index(k) {}
  int age_index;
  int time_index;
  int x_index;
};

/// An iteration hit its cap; carries the residuals observed so far.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residual_history(std::move(residuals)) {}
  std::vector<double> residual_history;
};

enum class ForwardMode { renewal, prescribed_b, fixed_point };

template <typename Scalar>
struct ForwardConfig {
  ForwardMode mode = ForwardMode::renewal;
  Scalar fp_tol = Scalar(1e-12);
  int fp_max_iter = 500;
  /// Newborn row for prescribed_b; row n holds b(t_n, .). Row 0 is ignored
  /// because p(0, 0, .) comes from p0.
  std::optional<Boundary<Scalar>> boundary;
  /// Starting boundary for fixed_point (zero when absent).
  std::optional<Boundary<Scalar>> initial_guess;
};

template <typename Scalar>
struct FixedPointResult {
  Field<Scalar> p;
  Boundary<Scalar> b;
  int iterations = 0;
  std::vector<Scalar> residual_history;
};

namespace detail {

template <typename Scalar, typename SliceLike>
void require_finite(const SliceLike& s, int n, const char* who) {
  if (s.isFinite().all()) return;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index k = 0; k < s.cols(); ++k) {
      if (!std::isfinite(static_cast<double>(s(i, k)))) {
        std::ostringstream os;
        os << who << ": non-finite value at node (i=" << i << ", n=" << n << ", k=" << k << ")";
        throw NonFiniteError(os.str(), static_cast<int>(i), n, static_cast<int>(k));
      }
    }
  }
}

}  // namespace detail

/// Transport and reaction over one step: the age-(i - 1) row at time n moves
/// to age i at time n + 1, scaled by exp(-(mu - u) dt) and fed by the source
/// with the half-step factor. Row 0 of the result is left at zero.
template <typename Scalar, typename P, typename M, typename U, typename F>
Slice<Scalar> step_transport_reaction(const Eigen::ArrayBase<P>& p, const Eigen::ArrayBase<M>& mu,
                                      const Eigen::ArrayBase<U>& u, const Eigen::ArrayBase<F>& f, Scalar dt) {
  const Eigen::Index ages = p.rows() - 1;
  Slice<Scalar> out = Slice<Scalar>::Zero(p.rows(), p.cols());
  const Slice<Scalar> rate = (mu.topRows(ages) - u.topRows(ages)) * dt;
  const auto decay = (-rate).unaryExpr([](Scalar v) { return std::exp(v); });
  const auto half = (-rate / Scalar(2)).unaryExpr([](Scalar v) { return std::exp(v); });
  out.bottomRows(ages) = p.topRows(ages) * decay + f.topRows(ages) * dt * half;
  return out;
}

/// Newborn density b(x_k) = sum_{i < n_a} beta_i da sum_l w_{k,l} p(i, l).
///
/// The anchor rule gives the a_max row zero weight.
template <typename Scalar, typename P>
Eigen::Array<Scalar, 1, Eigen::Dynamic> birth_boundary(const Eigen::ArrayBase<P>& slice, const ArrayX<Scalar>& beta,
                                                       const KernelWeights<Scalar>& weights,
                                                       const Grid<Scalar>& grid) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> fertile = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(grid.n_x);
  for (int i = 0; i < grid.n_a; ++i) {
    if (beta[i] == Scalar(0)) continue;
    fertile += (beta[i] * grid.da) * slice.row(i).matrix().transpose();
  }
  return (weights.table * fertile).transpose().array();
}

namespace detail {

// Core march. When `prescribed` is null the newborn row is computed from the
// renewal condition with the age-0 integrand lagged one step; otherwise row
// n + 1 of `prescribed` is copied in.
template <typename Scalar>
Field<Scalar> march(const ProblemData<Scalar>& data, const Field<Scalar>& u, const Boundary<Scalar>* prescribed) {
  const auto& g = data.grid;
  if (!(u.grid() == g)) throw std::invalid_argument("forward_solve: control does not conform to the grid");
  if (prescribed && (prescribed->rows() != g.n_t + 1 || prescribed->cols() != g.n_x)) {
    throw std::invalid_argument("forward_solve: prescribed boundary must be (n_t + 1) x n_x");
  }
  Field<Scalar> p(g);
  p.slice(0) = data.p0;
  detail::require_finite<Scalar>(p.slice(0), 0, "forward_solve");

  const PeriodicDiffusion<Scalar> diffusion(g.n_x, g.dx, data.rates.delta, g.dt);
  std::optional<KernelWeights<Scalar>> weights;
  if (!prescribed) weights = kernel_weights(g, data.rates.eta, data.rates.birth_wrap);

  for (int n = 0; n < g.n_t; ++n) {
    Slice<Scalar> next =
        step_transport_reaction(p.slice(n), data.rates.mu.slice(n), u.slice(n), data.f.slice(n), g.dt);
    if (!diffusion.is_identity()) {
      for (int i = 1; i <= g.n_a; ++i) {
        auto row = next.row(i);
        diffusion.solve_in_place(row);
      }
    }
    if (prescribed) {
      next.row(0) = prescribed->row(n + 1);
    } else {
      next.row(0) = p.slice(n).row(0);
      next.row(0) = birth_boundary(next, data.rates.beta, *weights, g);
    }
    detail::require_finite<Scalar>(next, n + 1, "forward_solve");
    p.slice(n + 1) = next;
  }
  return p;
}

}  // namespace detail

/// Renewal map b -> F(b): newborns produced by a state p whose newborn row
/// was prescribed. Row n + 1 uses ages >= 1 at t_{n+1} and the age-0 row at
/// t_n, matching the lag in the renewal march.
template <typename Scalar>
Boundary<Scalar> birth_map(const ProblemData<Scalar>& data, const Field<Scalar>& p,
                           const KernelWeights<Scalar>& weights) {
  const auto& g = data.grid;
  Boundary<Scalar> b(g.n_t + 1, g.n_x);
  b.row(0) = data.p0.row(0);
  Slice<Scalar> lagged;
  for (int n = 0; n < g.n_t; ++n) {
    lagged = p.slice(n + 1);
    lagged.row(0) = p.slice(n).row(0);
    b.row(n + 1) = birth_boundary(lagged, data.rates.beta, weights, g);
  }
  return b;
}

template <typename Scalar>
Scalar boundary_l2(const Grid<Scalar>& g, const Boundary<Scalar>& b) {
  return std::sqrt(b.bottomRows(g.n_t).square().sum() * g.dt * g.dx);
}

/// Iterates b_{m+1} = F(b_m) with prescribed-boundary solves until the L2
/// boundary residual drops below fp_tol.
template <typename Scalar>
FixedPointResult<Scalar> forward_solve_fixed_point(const ProblemData<Scalar>& data, const Field<Scalar>& u,
                                                   const ForwardConfig<Scalar>& cfg) {
  if (!(cfg.fp_tol > Scalar(0)) || cfg.fp_max_iter < 1) {
    throw std::invalid_argument("forward_solve_fixed_point: need fp_tol > 0 and fp_max_iter >= 1");
  }
  const auto& g = data.grid;
  const auto weights = kernel_weights(g, data.rates.eta, data.rates.birth_wrap);
  FixedPointResult<Scalar> out;
  Boundary<Scalar> b = cfg.initial_guess ? *cfg.initial_guess : Boundary<Scalar>::Zero(g.n_t + 1, g.n_x);
  b.row(0) = data.p0.row(0);

  std::vector<double> history;
  for (int m = 1; m <= cfg.fp_max_iter; ++m) {
    Field<Scalar> p = detail::march(data, u, &b);
    Boundary<Scalar> next = birth_map(data, p, weights);
    const Scalar residual = boundary_l2<Scalar>(g, next - b);
    out.residual_history.push_back(residual);
    history.push_back(static_cast<double>(residual));
    b = std::move(next);
    if (residual < cfg.fp_tol) {
      out.p = detail::march(data, u, &b);
      out.b = std::move(b);
      out.iterations = m;
      return out;
    }
  }
  throw NonConvergenceError("forward_solve_fixed_point: no convergence within fp_max_iter", std::move(history));
}

/// State p^u. Lie splitting per step: exact shift with exponential reaction,
/// implicit periodic diffusion, then the newborn row.
template <typename Scalar>
Field<Scalar> forward_solve(const ProblemData<Scalar>& data, const Field<Scalar>& u,
                            const ForwardConfig<Scalar>& cfg = {}) {
  switch (cfg.mode) {
    case ForwardMode::renewal:
      return detail::march<Scalar>(data, u, nullptr);
    case ForwardMode::prescribed_b:
      if (!cfg.boundary) throw std::invalid_argument("forward_solve: prescribed_b mode needs a boundary");
      return detail::march<Scalar>(data, u, &*cfg.boundary);
    case ForwardMode::fixed_point:
      return forward_solve_fixed_point(data, u, cfg).p;
  }
  throw std::invalid_argument("forward_solve: unknown mode");
}

}  // namespace mosquito

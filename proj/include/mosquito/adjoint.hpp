#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "mosquito/diffusion.hpp"
#include "mosquito/forward.hpp"
#include "mosquito/grid.hpp"
#include "mosquito/model.hpp"

namespace mosquito {

template <typename Scalar>
struct AdjointConfig {
  bool check_finite = true;
};

/// Costate q for the harvest objective, marched backward along the
/// characteristics from q(a_max, ., .) = 0 and q(., T, .) = 0.
///
/// One backward step from (i + 1, n + 1) to (i, n):
///
///   g(j, m) = dt u(j, m) + q(j, m) + beta_j da sum_l w_{.,l} g(0, m)(l)
///   q(i, n) = exp(-(mu - u)(i, n) dt) * (I - delta dt L)^{-1} g(i + 1, n + 1)
///
/// g is the accumulated costate at the arrival node: the harvest source -u,
/// the previous value, and the fertility source fed by the newborn costate one
/// level later in time. With the same exponential factor, diffusion matrix and
/// symmetric kernel table as the forward march, the directional derivative of
/// the objective along v is sum v p (q + 1) da dt dx over anchor nodes.
template <typename Scalar>
Field<Scalar> adjoint_solve(const ProblemData<Scalar>& data, const Field<Scalar>& u_star,
                            const AdjointConfig<Scalar>& cfg = {}) {
  const auto& g = data.grid;
  if (!(u_star.grid() == g)) throw std::invalid_argument("adjoint_solve: control does not conform to the grid");

  const PeriodicDiffusion<Scalar> diffusion(g.n_x, g.dx, data.rates.delta, g.dt);
  const auto weights = kernel_weights(g, data.rates.eta, data.rates.birth_wrap);
  const auto& beta = data.rates.beta;

  Field<Scalar> q(g);
  Slice<Scalar> carried = Slice<Scalar>::Zero(g.n_a + 1, g.n_x);  // g(., n + 1, .)
  Slice<Scalar> current(g.n_a + 1, g.n_x);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> spread(g.n_x);
  Eigen::Array<Scalar, 1, Eigen::Dynamic> row(g.n_x);

  for (int n = g.n_t - 1; n >= 0; --n) {
    auto qn = q.slice(n);
    const auto mu = data.rates.mu.slice(n);
    const auto un = u_star.slice(n);
    for (int i = 0; i < g.n_a; ++i) {
      row = carried.row(i + 1);
      diffusion.solve_in_place(row);
      const auto decay = (-((mu.row(i) - un.row(i)) * g.dt)).unaryExpr([](Scalar v) { return std::exp(v); });
      qn.row(i) = decay * row;
    }
    qn.row(g.n_a).setZero();

    current.row(0) = g.dt * un.row(0) + qn.row(0);
    if (beta[0] != Scalar(0)) {
      spread = weights.table * carried.row(0).matrix().transpose();
      current.row(0) += (beta[0] * g.da) * spread.transpose().array();
    }
    spread = weights.table * current.row(0).matrix().transpose();
    for (int j = 1; j < g.n_a; ++j) {
      current.row(j) = g.dt * un.row(j) + qn.row(j);
      if (beta[j] != Scalar(0) && n >= 1) current.row(j) += (beta[j] * g.da) * spread.transpose().array();
    }
    current.row(g.n_a).setZero();
    carried.swap(current);

    if (cfg.check_finite) detail::require_finite<Scalar>(qn, n, "adjoint_solve");
  }
  return q;
}

}  // namespace mosquito

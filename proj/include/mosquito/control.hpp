#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "mosquito/adjoint.hpp"
#include "mosquito/forward.hpp"
#include "mosquito/grid.hpp"
#include "mosquito/model.hpp"

namespace mosquito {

/// Psi(u) = sum over anchor nodes of u p da dt dx. The harvest is -Psi; the
/// optimizer minimizes Psi.
template <typename Scalar>
Scalar objective(const Field<Scalar>& u, const Field<Scalar>& p) {
  const auto& g = u.grid();
  if (!(p.grid() == g)) throw std::invalid_argument("objective: fields do not conform");
  return cell_sum(g, [&](int i, int n, int k) { return u(i, n, k) * p(i, n, k); });
}

/// Bang-bang selection: sigma1 where q > -1 + band, sigma2 where
/// q < -1 - band, otherwise the previous control clamped into the bounds.
template <typename Scalar>
Field<Scalar> switching_rule(const Field<Scalar>& q, const ControlBounds<Scalar>& bounds, const Field<Scalar>& u_prev,
                             Scalar band) {
  Field<Scalar> u(q.grid());
  const auto& qv = q.values();
  const auto& lo = bounds.sigma1.values();
  const auto& hi = bounds.sigma2.values();
  const auto& prev = u_prev.values();
  auto& out = u.values();
  for (Eigen::Index j = 0; j < qv.size(); ++j) {
    if (qv[j] > Scalar(-1) + band) {
      out[j] = lo[j];
    } else if (qv[j] < Scalar(-1) - band) {
      out[j] = hi[j];
    } else {
      out[j] = std::clamp(prev[j], lo[j], hi[j]);
    }
  }
  return u;
}

template <typename Scalar>
struct SweepConfig {
  Scalar relaxation = Scalar(0.5);
  int max_iter = 200;
  Scalar u_tol = Scalar(1e-10);
  Scalar switch_band = Scalar(1e-8);
  Scalar eps_fd = Scalar(1e-4);
};

template <typename Scalar>
struct SweepResult {
  Field<Scalar> u_star;
  Field<Scalar> p_star;
  Field<Scalar> q;
  std::vector<Scalar> objective_history;
  std::vector<Scalar> residual_history;
  bool converged = false;
  int iterations = 0;
};

template <typename Scalar>
Scalar field_l2(const Field<Scalar>& f) {
  return std::sqrt(f.values().square().sum() * f.grid().cell_volume());
}

/// Forward-backward sweep: state, costate, switching rule, damped update
/// u <- (1 - omega) u + omega u_switch, starting from u = sigma1.
///
/// On convergence the returned control is the last switching target itself,
/// so it is exactly bang-bang outside the dead band; state and costate are
/// recomputed for it. Without convergence the last damped iterate is
/// returned with converged = false.
template <typename Scalar>
SweepResult<Scalar> sweep(const ProblemData<Scalar>& data, const SweepConfig<Scalar>& cfg = {}) {
  if (!(cfg.relaxation > Scalar(0) && cfg.relaxation <= Scalar(1))) {
    throw std::invalid_argument("sweep: relaxation must lie in (0, 1]");
  }
  if (!(cfg.u_tol > Scalar(0)) || !(cfg.switch_band >= Scalar(0)) || cfg.max_iter < 1) {
    throw std::invalid_argument("sweep: need u_tol > 0, switch_band >= 0, max_iter >= 1");
  }
  const auto& bounds = data.bounds;
  SweepResult<Scalar> res;
  Field<Scalar> u = bounds.sigma1;
  Field<Scalar> target = u;
  const Scalar omega = cfg.relaxation;

  for (int k = 1; k <= cfg.max_iter; ++k) {
    const Field<Scalar> p = forward_solve(data, u);
    const Field<Scalar> q = adjoint_solve(data, u);
    res.objective_history.push_back(objective(u, p));
    target = switching_rule(q, bounds, u, cfg.switch_band);

    Field<Scalar> next(u.grid());
    next.values() = ((Scalar(1) - omega) * u.values() + omega * target.values())
                        .max(bounds.sigma1.values())
                        .min(bounds.sigma2.values());
    Field<Scalar> step(u.grid());
    step.values() = next.values() - u.values();
    const Scalar residual = field_l2(step);
    res.residual_history.push_back(residual);
    res.iterations = k;
    u = std::move(next);
    if (residual < cfg.u_tol) {
      res.converged = true;
      break;
    }
  }

  res.u_star = res.converged ? target : u;
  res.p_star = forward_solve(data, res.u_star);
  res.q = adjoint_solve(data, res.u_star);
  res.objective_history.push_back(objective(res.u_star, res.p_star));
  return res;
}

template <typename Scalar>
struct OracleResult {
  Field<Scalar> u_best;
  Scalar psi_best{};
  std::uint64_t best_index = 0;
  std::uint64_t candidates = 0;
  /// Enumeration indices whose objective lies within tie tolerance of the best.
  std::vector<std::uint64_t> near_ties;
};

/// Enumerates every control taking sigma1 or sigma2 on each free anchor node
/// (nodes with sigma1 == sigma2 are fixed) and returns the minimizer of Psi.
///
/// Candidate index bits run most-significant-first over anchor nodes in
/// (a, t, x) order, bit 1 selecting sigma2; ties keep the first candidate.
template <typename Scalar>
OracleResult<Scalar> brute_force_optimum(const ProblemData<Scalar>& data, int max_nodes = 20,
                                         Scalar tie_tol = Scalar(1e-9)) {
  const auto& g = data.grid;
  const auto& lo = data.bounds.sigma1;
  const auto& hi = data.bounds.sigma2;
  std::vector<Eigen::Index> free_nodes;
  for (int i = 0; i < g.n_a; ++i) {
    for (int n = 0; n < g.n_t; ++n) {
      for (int k = 0; k < g.n_x; ++k) {
        if (lo(i, n, k) != hi(i, n, k)) free_nodes.push_back(lo.index(i, n, k));
      }
    }
  }
  if (free_nodes.size() > static_cast<std::size_t>(max_nodes)) {
    std::ostringstream os;
    os << "brute_force_optimum: " << free_nodes.size() << " free control nodes exceed the enumeration cap of "
       << max_nodes;
    throw std::invalid_argument(os.str());
  }
  const int bits = static_cast<int>(free_nodes.size());
  const std::uint64_t count = std::uint64_t{1} << bits;

  OracleResult<Scalar> out;
  out.candidates = count;
  std::vector<Scalar> psi(count);
  Field<Scalar> u = lo;
  out.psi_best = std::numeric_limits<Scalar>::infinity();
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (int b = 0; b < bits; ++b) {
      const Eigen::Index j = free_nodes[b];
      const bool upper = (mask >> (bits - 1 - b)) & 1U;
      u.values()[j] = upper ? hi.values()[j] : lo.values()[j];
    }
    psi[mask] = objective(u, forward_solve(data, u));
    if (psi[mask] < out.psi_best) {
      out.psi_best = psi[mask];
      out.best_index = mask;
      out.u_best = u;
    }
  }
  const Scalar tol = tie_tol * std::max(Scalar(1), std::abs(out.psi_best));
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    if (psi[mask] - out.psi_best <= tol) out.near_ties.push_back(mask);
  }
  return out;
}

template <typename Scalar>
struct VariationalReport {
  Scalar fd_derivative{};
  Scalar adjoint_expression{};
  Scalar gap{};
  /// sum |v| p (|q| + 1) da dt dx, a magnitude for relative comparisons.
  Scalar scale{};
};

/// Compares the one-sided difference quotient of Psi along v with the
/// costate expression sum v p (q + 1) da dt dx.
///
/// v must be an admissible direction at u: v >= 0 where u = sigma1, v <= 0
/// where u = sigma2, and u + eps v inside the bounds.
template <typename Scalar>
VariationalReport<Scalar> variational_check(const ProblemData<Scalar>& data, const Field<Scalar>& u,
                                            const Field<Scalar>& v, Scalar eps) {
  const auto& g = data.grid;
  if (!(eps > Scalar(0))) throw std::invalid_argument("variational_check: eps must be positive");
  if (!(v.grid() == g) || !(u.grid() == g)) throw std::invalid_argument("variational_check: fields do not conform");
  const auto& lo = data.bounds.sigma1;
  const auto& hi = data.bounds.sigma2;

  Field<Scalar> moved(g);
  moved.values() = u.values() + eps * v.values();
  std::vector<std::string> offending;
  for (int n = 0; n <= g.n_t; ++n) {
    for (int i = 0; i <= g.n_a; ++i) {
      for (int k = 0; k < g.n_x; ++k) {
        const bool bad = u(i, n, k) < lo(i, n, k) || u(i, n, k) > hi(i, n, k) ||
                         (u(i, n, k) == lo(i, n, k) && v(i, n, k) < 0) ||
                         (u(i, n, k) == hi(i, n, k) && v(i, n, k) > 0) || moved(i, n, k) < lo(i, n, k) ||
                         moved(i, n, k) > hi(i, n, k);
        if (bad && offending.size() < 8) {
          std::ostringstream os;
          os << "(i=" << i << ", n=" << n << ", k=" << k << ")";
          offending.push_back(os.str());
        }
      }
    }
  }
  if (!offending.empty()) {
    std::string msg = "variational_check: inadmissible direction at";
    for (const auto& s : offending) msg += " " + s;
    throw std::invalid_argument(msg);
  }

  const Field<Scalar> p = forward_solve(data, u);
  const Field<Scalar> q = adjoint_solve(data, u);
  const Field<Scalar> p_moved = forward_solve(data, moved);

  VariationalReport<Scalar> r;
  r.fd_derivative = (objective(moved, p_moved) - objective(u, p)) / eps;
  r.adjoint_expression = cell_sum(g, [&](int i, int n, int k) { return v(i, n, k) * p(i, n, k) * (q(i, n, k) + 1); });
  r.scale = cell_sum(
      g, [&](int i, int n, int k) { return std::abs(v(i, n, k)) * p(i, n, k) * (std::abs(q(i, n, k)) + 1); });
  r.gap = std::abs(r.fd_derivative - r.adjoint_expression);
  return r;
}

}  // namespace mosquito

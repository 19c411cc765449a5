#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mosquito/diffusion.hpp"
#include "mosquito/forward.hpp"
#include "mosquito/grid.hpp"
#include "mosquito/model.hpp"

namespace mosquito {

struct NodeIndex {
  int i = 0;
  int n = 0;
  int k = 0;
};

struct PropertyReport {
  std::string name;
  bool passed = false;
  double worst_violation = 0.0;
  double tolerance = 0.0;
  std::optional<NodeIndex> location;
  std::string details;
  std::optional<std::uint64_t> seed;
};

/// Latin-hypercube design on [0, 1)^dims: each column visits every one of the
/// `samples` strata exactly once.
inline Eigen::MatrixXd latin_hypercube(int samples, int dims, std::mt19937_64& rng) {
  Eigen::MatrixXd design(samples, dims);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  std::vector<int> strata(samples);
  for (int d = 0; d < dims; ++d) {
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    for (int s = 0; s < samples; ++s) design(s, d) = (strata[s] + jitter(rng)) / samples;
  }
  return design;
}

/// Parameter ranges for randomized trials.
struct TrialRanges {
  double mu_max = 1.5;
  double beta_max = 2.0;
  double p0_max = 2.0;
  double f_max = 0.5;
  double b_max = 2.0;
  double delta_max = 1.0;
  double eta_min = 0.5;
  double eta_max = 12.0;
};

namespace detail {

template <typename Scalar>
std::string node_string(const NodeIndex& at) {
  std::ostringstream os;
  os << "(i=" << at.i << ", n=" << at.n << ", k=" << at.k << ")";
  return os.str();
}

template <typename Scalar, typename Fn>
std::optional<NodeIndex> first_node(const Grid<Scalar>& g, Fn&& violates) {
  for (int n = 0; n <= g.n_t; ++n)
    for (int i = 0; i <= g.n_a; ++i)
      for (int k = 0; k < g.n_x; ++k)
        if (violates(i, n, k)) return NodeIndex{i, n, k};
  return std::nullopt;
}

}  // namespace detail

/// Throws std::invalid_argument unless data1 is dominated by data2 in the
/// comparison order (mu1 >= mu2, f1 <= f2, beta1 <= beta2, p01 <= p02) on a
/// shared grid with shared diffusion and kernel.
template <typename Scalar>
void check_ordered(const ProblemData<Scalar>& lo, const ProblemData<Scalar>& hi) {
  const auto& g = lo.grid;
  if (!(hi.grid == g) || lo.rates.delta != hi.rates.delta || lo.rates.eta != hi.rates.eta ||
      lo.rates.birth_wrap != hi.rates.birth_wrap) {
    throw std::invalid_argument("comparison_suite: pair must share grid, delta, eta and birth_wrap");
  }
  if (auto at = detail::first_node(g, [&](int i, int n, int k) { return lo.rates.mu(i, n, k) < hi.rates.mu(i, n, k); })) {
    throw std::invalid_argument("comparison_suite: mu1 < mu2 at " + detail::node_string<Scalar>(*at));
  }
  if (auto at = detail::first_node(g, [&](int i, int n, int k) { return lo.f(i, n, k) > hi.f(i, n, k); })) {
    throw std::invalid_argument("comparison_suite: f1 > f2 at " + detail::node_string<Scalar>(*at));
  }
  for (int i = 0; i <= g.n_a; ++i) {
    if (lo.rates.beta[i] > hi.rates.beta[i]) {
      throw std::invalid_argument("comparison_suite: beta1 > beta2 at age index " + std::to_string(i));
    }
    for (int k = 0; k < g.n_x; ++k) {
      if (lo.p0(i, k) > hi.p0(i, k)) {
        throw std::invalid_argument("comparison_suite: p01 > p02 at " + detail::node_string<Scalar>({i, 0, k}));
      }
    }
  }
}

/// Runs both forward solves for every ordered pair and checks 0 <= p1 <= p2
/// at every node with zero tolerance.
template <typename Scalar>
PropertyReport comparison_suite(const std::vector<std::pair<ProblemData<Scalar>, ProblemData<Scalar>>>& pairs,
                                const Field<Scalar>& u) {
  for (const auto& [lo, hi] : pairs) check_ordered(lo, hi);

  PropertyReport r;
  r.name = "comparison";
  r.tolerance = 0.0;
  double worst = 0.0;
  std::size_t strict = 0;
  for (const auto& [lo, hi] : pairs) {
    const Field<Scalar> p1 = forward_solve(lo, u);
    const Field<Scalar> p2 = forward_solve(hi, u);
    const auto& g = lo.grid;
    for (int n = 0; n <= g.n_t; ++n) {
      for (int i = 0; i <= g.n_a; ++i) {
        for (int k = 0; k < g.n_x; ++k) {
          const double a = static_cast<double>(p1(i, n, k));
          const double b = static_cast<double>(p2(i, n, k));
          const double v = std::max(a - b, -std::min(a, 0.0));
          if (a < b) ++strict;
          if (v > worst) {
            worst = v;
            r.location = NodeIndex{i, n, k};
          }
        }
      }
    }
  }
  r.worst_violation = worst;
  r.passed = worst <= r.tolerance;
  std::ostringstream os;
  os << pairs.size() << " ordered pairs; " << strict << " nodes strictly ordered";
  r.details = os.str();
  return r;
}

/// Discrete norms of the prescribed-boundary energy estimate.
struct EnergyTerms {
  double state = 0.0;     // ||p||^2 over Q
  double initial = 0.0;   // ||p0||^2 over ages x biting time
  double boundary = 0.0;  // ||b||^2 over time x biting time
  double residual = 0.0;  // ||f - mu p||^2 over Q
  double exp_t = 1.0;     // e^T
  double ratio() const {
    const double rhs = exp_t * (initial + boundary + residual);
    return rhs > 0.0 ? state / rhs : (state > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  }
};

template <typename Scalar>
EnergyTerms energy_terms(const ProblemData<Scalar>& data, const Boundary<Scalar>& b, const Field<Scalar>& p) {
  const auto& g = data.grid;
  EnergyTerms e;
  e.state = static_cast<double>(cell_sum(g, [&](int i, int n, int k) { return p(i, n, k) * p(i, n, k); }));
  e.initial = static_cast<double>(data.p0.topRows(g.n_a).square().sum() * g.da * g.dx);
  e.boundary = static_cast<double>(b.bottomRows(g.n_t).square().sum() * g.dt * g.dx);
  e.residual = static_cast<double>(cell_sum(g, [&](int i, int n, int k) {
    const Scalar r = data.f(i, n, k) - data.rates.mu(i, n, k) * p(i, n, k);
    return r * r;
  }));
  e.exp_t = std::exp(static_cast<double>(g.t_max));
  return e;
}

/// Prescribed-boundary energy bound ||p||^2 <= slack e^T (||p0||^2 + ||b||^2 +
/// ||f - mu p||^2) with slack 2. worst_violation is max(0, ratio - slack).
template <typename Scalar>
PropertyReport energy_bound_suite(const ProblemData<Scalar>& data, const Boundary<Scalar>& b, double slack = 2.0) {
  ForwardConfig<Scalar> cfg;
  cfg.mode = ForwardMode::prescribed_b;
  cfg.boundary = b;
  const Field<Scalar> u(data.grid);
  const Field<Scalar> p = forward_solve(data, u, cfg);
  const EnergyTerms e = energy_terms(data, b, p);

  PropertyReport r;
  r.name = "energy";
  r.tolerance = 0.0;
  const double ratio = e.ratio();
  r.worst_violation = std::max(0.0, ratio - slack);
  r.passed = r.worst_violation <= r.tolerance;
  std::ostringstream os;
  os << "ratio=" << ratio << " (slack " << slack << "), ||p||^2=" << e.state;
  r.details = os.str();
  return r;
}

/// Bellman-Gronwall check on a sampled series. The premise
/// x_n <= M + sum_{m<n} psi_m x_m dt is verified first (std::invalid_argument
/// if it fails); then x_n <= M exp(sum_{m<n} psi_m dt) (1 + 1e-9) is asserted.
inline PropertyReport gronwall_check(std::span<const double> x, std::span<const double> psi, double M, double dt) {
  if (x.size() != psi.size()) throw std::invalid_argument("gronwall_check: x and psi lengths differ");
  if (std::any_of(psi.begin(), psi.end(), [](double v) { return !(v >= 0.0); })) {
    throw std::invalid_argument("gronwall_check: psi must be nonnegative");
  }
  double integral = 0.0;  // sum_{m<n} psi_m x_m dt
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double premise = M + integral;
    if (x[n] > premise + 1e-12 * std::max({1.0, std::abs(premise), std::abs(x[n])})) {
      throw std::invalid_argument("gronwall_check: premise fails at n=" + std::to_string(n));
    }
    integral += psi[n] * x[n] * dt;
  }

  PropertyReport r;
  r.name = "gronwall";
  r.tolerance = 0.0;
  double exponent = 0.0;
  double worst = 0.0;
  double tightest = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double bound = M * std::exp(exponent);
    const double allowed = bound + 1e-9 * std::abs(bound);
    const double excess = x[n] - allowed;
    if (excess > worst) {
      worst = excess;
      r.location = NodeIndex{0, static_cast<int>(n), 0};
    }
    if (bound != 0.0) tightest = std::max(tightest, x[n] / bound);
    exponent += psi[n] * dt;
  }
  r.worst_violation = worst;
  r.passed = worst <= r.tolerance;
  std::ostringstream os;
  os << x.size() << " samples; max x/bound = " << tightest;
  r.details = os.str();
  return r;
}

/// Checks the implicit diffusion step against the periodic eigenbasis: every
/// Fourier mode j is damped by exactly 1 / (1 + delta dt lambda_j^h), modes j
/// and n_x - j damp identically, and lambda_1^h approaches (pi / 12)^2 within
/// the second-order bound theta^2 / 12.
template <typename Scalar>
PropertyReport eigen_oracle(const Grid<Scalar>& grid, Scalar delta = Scalar(1)) {
  if (grid.n_x < 8) throw std::invalid_argument("eigen_oracle: n_x must be at least 8");
  const int nx = grid.n_x;
  const PeriodicDiffusion<Scalar> solver(nx, grid.dx, delta, grid.dt);
  const double damping_tol = 1e-12;

  PropertyReport r;
  r.name = "eigen";
  r.tolerance = 0.0;
  double worst_damping = 0.0;
  double worst_symmetry = 0.0;
  std::vector<double> factor(nx);
  for (int j = 0; j < nx; ++j) {
    const Scalar lambda = periodic_laplacian_eigenvalue<Scalar>(j, nx, grid.dx);
    const double expected = 1.0 / (1.0 + static_cast<double>(delta * grid.dt * lambda));
    double err = 0.0;
    for (int phase = 0; phase < 2; ++phase) {
      Eigen::Array<Scalar, 1, Eigen::Dynamic> mode(nx);
      for (int k = 0; k < nx; ++k) {
        const Scalar arg = Scalar(2 * M_PI) * static_cast<Scalar>(j) * static_cast<Scalar>(k) / static_cast<Scalar>(nx);
        mode[k] = phase == 0 ? std::cos(arg) : std::sin(arg);
      }
      const Scalar peak = mode.abs().maxCoeff();
      if (peak < Scalar(1e-8)) continue;  // sin of the 0 and n_x / 2 modes
      Eigen::Array<Scalar, 1, Eigen::Dynamic> out = mode;
      solver.solve_in_place(out);
      err = std::max(err, static_cast<double>((out - Scalar(expected) * mode).abs().maxCoeff() / peak));
    }
    factor[j] = expected;
    worst_damping = std::max(worst_damping, err);
  }
  for (int j = 1; j < nx; ++j) {
    const double lj = static_cast<double>(periodic_laplacian_eigenvalue<Scalar>(j, nx, grid.dx));
    const double lm = static_cast<double>(periodic_laplacian_eigenvalue<Scalar>(nx - j, nx, grid.dx));
    worst_symmetry = std::max(worst_symmetry, std::abs(lj - lm) / std::max(lj, 1e-300));
  }
  const double continuum = std::pow(M_PI / 12.0, 2);
  const double lambda1 = static_cast<double>(periodic_laplacian_eigenvalue<Scalar>(1, nx, grid.dx));
  const double rel_eig = std::abs(lambda1 - continuum) / continuum;
  const double theta = 2.0 * M_PI / nx;
  const double eig_bound = theta * theta / 12.0;

  r.worst_violation = std::max({0.0, worst_damping - damping_tol, worst_symmetry - 1e-12, rel_eig - eig_bound,
                                std::abs(factor[0] - 1.0)});
  r.passed = r.worst_violation <= r.tolerance;
  std::ostringstream os;
  os << "max damping error=" << worst_damping << ", lambda_1 relative error=" << rel_eig << " (bound " << eig_bound
     << "), symmetry error=" << worst_symmetry;
  r.details = os.str();
  return r;
}

/// Draws an ordered pair (lo, hi) from one row of a design in [0, 1)^9. hi has
/// x- and age-varying data; lo lowers fertility, initial data and source and
/// raises mortality by independent random factors.
template <typename Scalar>
std::pair<ProblemData<Scalar>, ProblemData<Scalar>> random_ordered_pair(const Grid<Scalar>& g,
                                                                        const Eigen::RowVectorXd& design,
                                                                        std::mt19937_64& rng,
                                                                        const TrialRanges& ranges = {}) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double mu_level = design(0) * ranges.mu_max;
  const double beta_level = design(1) * ranges.beta_max;
  const double p0_level = design(2) * ranges.p0_max;
  const double f_level = design(3) * ranges.f_max;
  const double delta = design(4) * ranges.delta_max;
  const double eta = ranges.eta_min + design(5) * (ranges.eta_max - ranges.eta_min);
  const double mu_gap = design(6);
  const double keep = design(7);
  const bool wrap = design(8) < 0.5;

  ProblemData<Scalar> hi;
  hi.grid = g;
  hi.rates.mu = Field<Scalar>(g);
  hi.rates.beta.resize(g.n_a + 1);
  hi.rates.delta = static_cast<Scalar>(delta);
  hi.rates.eta = static_cast<Scalar>(eta);
  hi.rates.birth_wrap = wrap;
  hi.p0.resize(g.n_a + 1, g.n_x);
  hi.f = Field<Scalar>(g);
  hi.bounds = constant_bounds<Scalar>(g, Scalar(-1), Scalar(0));
  for (auto& v : hi.rates.mu.values()) v = static_cast<Scalar>(mu_level * unit(rng));
  for (auto& v : hi.rates.beta) v = static_cast<Scalar>(beta_level * unit(rng));
  for (Eigen::Index j = 0; j < hi.p0.size(); ++j) hi.p0.data()[j] = static_cast<Scalar>(p0_level * unit(rng));
  for (auto& v : hi.f.values()) v = static_cast<Scalar>(f_level * unit(rng));

  ProblemData<Scalar> lo = hi;
  for (auto& v : lo.rates.mu.values()) v += static_cast<Scalar>(mu_gap * unit(rng));
  for (auto& v : lo.rates.beta) v *= static_cast<Scalar>(keep + (1.0 - keep) * unit(rng));
  for (Eigen::Index j = 0; j < lo.p0.size(); ++j) lo.p0.data()[j] *= static_cast<Scalar>(keep + (1.0 - keep) * unit(rng));
  for (auto& v : lo.f.values()) v *= static_cast<Scalar>(keep + (1.0 - keep) * unit(rng));
  return {std::move(lo), std::move(hi)};
}

}  // namespace mosquito

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "mosquito/control.hpp"

using namespace mosquito;
using fixtures::constant_problem;
using fixtures::cosine_slice;

TEST(Objective, Annihilation) {
  const auto g = make_grid(1.0, 1.0, 4, 6);
  EXPECT_EQ(objective(Field<double>(g), Field<double>(g, 2.0)), 0.0);
  EXPECT_EQ(objective(Field<double>(g, -1.0), Field<double>(g)), 0.0);
}

TEST(Objective, ClosedFormStateQuadrature) {
  const auto g = make_grid(2.0, 1.0, 40, 4);
  const auto d = constant_problem(g, 0.0, 0.0, 0.0, 1.0);
  const Field<double> u(g, -1.0);
  const auto p = forward_solve(d, u);
  // Same anchor-node quadrature applied to e^{-t} 1_{a >= t}.
  double oracle = 0.0;
  for (int n = 0; n < g.n_t; ++n)
    for (int i = 0; i < g.n_a; ++i)
      if (i >= n) oracle += std::exp(-g.time(n));
  oracle *= -g.cell_volume() * g.n_x;
  EXPECT_NEAR(objective(u, p), oracle, 1e-12 * std::abs(oracle));
  // Continuum value -24 int_0^1 (2 - t) e^{-t} dt = -24.
  EXPECT_NEAR(objective(u, p), -24.0, 24.0 * 2.0 * g.dt);
}

TEST(Switching, Branches) {
  const auto g = make_grid(1.0, 1.0, 3, 4);
  const auto b = constant_bounds(g, -0.8, -0.1);
  const Field<double> prev(g, -0.4);
  EXPECT_TRUE(switching_rule(Field<double>(g, 0.0), b, prev, 1e-8) == b.sigma1);
  EXPECT_TRUE(switching_rule(Field<double>(g, -2.0), b, prev, 1e-8) == b.sigma2);
  EXPECT_TRUE(switching_rule(Field<double>(g, -1.0), b, b.sigma2, 1e-8) == b.sigma2);
  EXPECT_TRUE(switching_rule(Field<double>(g, -1.0), b, prev, 1e-8) == prev);
}

TEST(Sweep, SingletonAdmissibleSet) {
  const auto g = make_grid(1.0, 1.0, 6, 8);
  const auto d = constant_problem(g, 0.1, 1.0, 0.3, 1.0, -0.4, -0.4);
  const auto r = sweep(d);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_TRUE((r.u_star.values() == -0.4).all());
}

TEST(Sweep, NoVitalRatesPicksLowerBound) {
  const auto g = make_grid(1.0, 1.0, 10, 8);
  const auto d = constant_problem(g, 0.0, 0.0, 0.5, 1.0, -0.5, 0.0);
  const auto r = sweep(d);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE((r.u_star.values() == -0.5).all());
  EXPECT_GT(r.q.values().minCoeff(), -1.0);
}

TEST(Sweep, BangBangWhereDecisive) {
  const auto g = make_grid(2.0, 2.0, 16, 12);
  auto d = constant_problem(g, 0.1, 2.5, 0.5, 1.0, -2.0, 0.0);
  d.p0 = cosine_slice(g, 1.0, 0.5);
  SweepConfig<double> cfg;
  const auto r = sweep(d, cfg);
  ASSERT_TRUE(r.converged);
  EXPECT_TRUE(is_admissible(r.u_star, d.bounds));
  int upper = 0;
  for (int n = 0; n < g.n_t; ++n)
    for (int i = 0; i < g.n_a; ++i)
      for (int k = 0; k < g.n_x; ++k) {
        const double s = r.q(i, n, k) + 1.0;
        if (std::abs(s) <= cfg.switch_band + 1e-9 || r.p_star(i, n, k) <= 1e-12) continue;
        EXPECT_EQ(r.u_star(i, n, k), s > 0 ? -2.0 : 0.0);
        upper += s < 0;
      }
  EXPECT_GT(upper, 0);  // the regime actually switches
  // Objective never worse than either constant bang-bang control.
  for (double c : {-2.0, 0.0}) {
    const Field<double> u(g, c);
    EXPECT_LE(r.objective_history.back(), objective(u, forward_solve(d, u)) + 1e-9);
  }
}

TEST(Sweep, RejectsBadConfig) {
  const auto g = make_grid(1.0, 1.0, 4, 4);
  const auto d = constant_problem(g, 0.1, 0.0, 0.0, 1.0);
  SweepConfig<double> cfg;
  cfg.relaxation = 0.0;
  EXPECT_THROW(sweep(d, cfg), std::invalid_argument);
}

TEST(BruteForce, NonRenewingPopulationTakesLowerBound) {
  const auto g = make_grid(2.0, 2.0, 2, 2);
  auto d = constant_problem(g, 0.2, 0.0, 0.3, 1.0, -1.0, 0.0);
  const auto r = brute_force_optimum(d);
  EXPECT_EQ(r.candidates, 256u);
  EXPECT_EQ(r.best_index, 0u);
  EXPECT_TRUE(r.u_best == d.bounds.sigma1);
}

TEST(BruteForce, SingletonHasOneCandidate) {
  const auto g = make_grid(2.0, 2.0, 2, 2);
  const auto d = constant_problem(g, 0.2, 1.0, 0.3, 1.0, -0.5, -0.5);
  const auto r = brute_force_optimum(d);
  EXPECT_EQ(r.candidates, 1u);
}

TEST(BruteForce, CapEnforced) {
  const auto g = make_grid(1.0, 1.0, 4, 4);
  const auto d = constant_problem(g, 0.2, 1.0, 0.3, 1.0);
  EXPECT_THROW(brute_force_optimum(d), std::invalid_argument);
}

TEST(BruteForce, MatchesSweepOnTinyGrids) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = make_grid(2.0, 2.0, 2, 2);
    auto d = constant_problem(g, unit(rng), 3.0 * unit(rng), unit(rng), 1.0, -2.0 * unit(rng) - 0.1, 0.0,
                              0.5 + 11.5 * unit(rng));
    for (Eigen::Index j = 0; j < d.p0.size(); ++j) d.p0.data()[j] = 2.0 * unit(rng);
    const auto best = brute_force_optimum(d);
    const auto r = sweep(d);
    ASSERT_TRUE(r.converged);
    EXPECT_LE(r.objective_history.back(), best.psi_best + 1e-6 * std::abs(best.psi_best));
  }
}

TEST(Variational, NullDirection) {
  const auto g = make_grid(1.0, 1.0, 6, 6);
  const auto d = constant_problem(g, 0.1, 1.0, 0.3, 1.0);
  const auto r = variational_check(d, Field<double>(g, -0.5), Field<double>(g), 1e-3);
  EXPECT_EQ(r.fd_derivative, 0.0);
  EXPECT_EQ(r.adjoint_expression, 0.0);
}

TEST(Variational, GapShrinksWithEps) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto g = make_grid(1.0, 1.0, 10, 8);
  const auto d = constant_problem(g, 0.1, 2.0, 0.4, 1.0);
  const Field<double> u(g, -0.5);
  Field<double> v(g);
  for (auto& x : v.values()) x = unit(rng);
  std::vector<double> gaps;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const auto r = variational_check(d, u, v, eps);
    gaps.push_back(r.gap / r.scale);
  }
  EXPECT_LT(gaps[1], 0.2 * gaps[0]);
  EXPECT_LT(gaps[2], 0.2 * gaps[1]);
}

TEST(Variational, RejectsInadmissibleDirection) {
  const auto g = make_grid(1.0, 1.0, 4, 4);
  const auto d = constant_problem(g, 0.1, 1.0, 0.3, 1.0, -1.0, 0.0);
  Field<double> v(g);
  v(1, 2, 3) = -1.0;
  try {
    variational_check(d, d.bounds.sigma1, v, 1e-3);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("(i=1, n=2, k=3)"), std::string::npos);
  }
}

TEST(Degenerate, VanishingStateIgnoresControl) {
  const auto g = make_grid(1.0, 1.0, 8, 8);
  const auto d = constant_problem(g, 0.1, 0.0, 0.3, 0.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(-1.0, 0.0);
  const Field<double> base(g, -0.5);
  const double psi0 = objective(base, forward_solve(d, base));
  Field<double> u(g);
  for (auto& x : u.values()) x = unit(rng);
  EXPECT_LT(std::abs(objective(u, forward_solve(d, u)) - psi0), 1e-12);
}

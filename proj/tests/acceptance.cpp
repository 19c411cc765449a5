// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "mosquito/adjoint.hpp"
#include "mosquito/control.hpp"
#include "mosquito/forward.hpp"
#include "mosquito/verify.hpp"

using namespace mosquito;
using fixtures::constant_problem;
using fixtures::cosine_slice;

namespace {

struct Outcome {
  bool passed = false;
  std::string details;
};

struct Criterion {
  int id;
  std::string title;
  double time_limit;
  std::function<Outcome()> run;
};

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c, d);
  return buf;
}

Outcome positivity_comparison() {
  std::mt19937_64 rng(20240601);
  const auto g = make_grid(1.0, 1.0, 40, 32);
  const auto design = latin_hypercube(25, 9, rng);
  std::vector<std::pair<ProblemData<double>, ProblemData<double>>> pairs;
  for (int s = 0; s < design.rows(); ++s) pairs.push_back(random_ordered_pair<double>(g, design.row(s), rng));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Field<double> u(g);
  for (auto& v : u.values()) v = -unit(rng);
  const auto r = comparison_suite(pairs, u);
  return {r.passed && r.worst_violation == 0.0,
          fmt("worst_violation=%g on 25 pairs, 40x40x32", r.worst_violation) + "; " + r.details};
}

Outcome analytic_transport() {
  const auto g = make_grid(2.0, 1.0, 50, 16);
  const auto d = constant_problem(g, 0.1, 0.0, 0.0, 1.0);
  const auto p = forward_solve(d, Field<double>(g));
  double worst = 0.0;
  for (int i = g.n_t + 1; i <= g.n_a; ++i)
    for (int k = 0; k < g.n_x; ++k) worst = std::max(worst, std::abs(p(i, g.n_t, k) / std::exp(-0.1) - 1.0));
  return {worst < 1e-12, fmt("max relative error %.3g for a > t at t = 1", worst)};
}

double heat_error(int nx) {
  const auto g = make_grid(2.0, 1.0, 2 * nx, nx);
  auto d = constant_problem(g, 0.0, 0.0, 1.0, 0.0);
  d.p0 = cosine_slice(g, 0.0, 1.0);
  const auto p = forward_solve(d, Field<double>(g));
  const double decay = std::exp(-std::pow(M_PI / 12.0, 2));
  double err = 0.0, ref = 0.0;
  for (int i = g.n_t + 1; i < g.n_a; ++i)
    for (int k = 0; k < g.n_x; ++k) {
      const double exact = decay * std::cos(2 * M_PI * g.x_center(k) / 24.0);
      err += std::pow(p(i, g.n_t, k) - exact, 2);
      ref += exact * exact;
    }
  return std::sqrt(err / ref);
}

Outcome analytic_diffusion() {
  const double e64 = heat_error(64);
  const double e128 = heat_error(128);
  const double ratio = e64 / e128;
  const bool accurate = e64 < 0.02;
  const bool halving = ratio >= 1.6 && ratio <= 2.4;
  return {accurate && halving,
          fmt("L2 error %.3g at n_x=64 (limit 0.02), %.3g at 128; ratio %.3f (required 1.6..2.4)", e64, e128,
              ratio)};
}

Outcome fixed_point_vs_renewal() {
  const auto g = make_grid(1.0, 2.0, 20, 24);
  auto d = constant_problem(g, 0.1, 0.3, 0.5, 1.0);
  d.p0 = cosine_slice(g, 1.0, 0.5);
  const Field<double> u(g, -0.2);
  ForwardConfig<double> cfg;
  const auto fp = forward_solve_fixed_point(d, u, cfg);
  const auto renewal = forward_solve(d, u);
  const double diff = (fp.p.values() - renewal.values()).matrix().norm() / renewal.values().matrix().norm();
  double worst_ratio = 0.0;
  bool decaying = true;
  for (std::size_t m = 1; m < fp.residual_history.size(); ++m) {
    if (fp.residual_history[m - 1] == 0.0) break;
    const double ratio = fp.residual_history[m] / fp.residual_history[m - 1];
    worst_ratio = std::max(worst_ratio, ratio);
    decaying = decaying && ratio < 1.0;
  }
  return {decaying && fp.residual_history.size() >= 2 && diff < 1e-8,
          fmt("%g iterations, max residual ratio %.3g, relative L2 gap to renewal %.3g",
              static_cast<double>(fp.iterations), worst_ratio, diff)};
}

Outcome energy_bound() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto g = make_grid(1.0, 1.0, 20, 24);
  const auto design = latin_hypercube(20, 9, rng);
  double worst_ratio = 0.0;
  bool ok = true;
  for (int s = 0; s < design.rows(); ++s) {
    const auto d = random_ordered_pair<double>(g, design.row(s), rng).second;
    Boundary<double> b(g.n_t + 1, g.n_x);
    for (Eigen::Index j = 0; j < b.size(); ++j) b.data()[j] = 2.0 * unit(rng);
    ok = ok && energy_bound_suite(d, b).passed;
    ForwardConfig<double> cfg;
    cfg.mode = ForwardMode::prescribed_b;
    cfg.boundary = b;
    worst_ratio = std::max(worst_ratio, energy_terms(d, b, forward_solve(d, Field<double>(g), cfg)).ratio());
  }
  return {ok, fmt("20 runs, max ||p||^2 / (e^T (...)) = %.3g (limit 2)", worst_ratio)};
}

Outcome adjoint_closed_form() {
  const double c = -0.5;
  const auto g = make_grid(1.0, 1.0, 40, 8);
  const auto d = constant_problem(g, 0.0, 0.0, 0.5, 1.0);
  const auto q = adjoint_solve(d, Field<double>(g, c));
  double worst = 0.0;
  for (int n = 0; n <= g.n_t; ++n)
    for (int i = 0; i <= g.n_a; ++i) {
      const double sigma = std::min(g.a_max - g.age(i), g.t_max - g.time(n));
      for (int k = 0; k < g.n_x; ++k) worst = std::max(worst, std::abs(q(i, n, k) - std::expm1(c * sigma)));
    }
  return {worst < 2.0 * g.dt, fmt("max node error %.3g, limit 2 dt = %.3g", worst, 2.0 * g.dt)};
}

Outcome variational_identity() {
  const auto g = make_grid(2.0, 2.0, 20, 16);
  auto d = constant_problem(g, 0.1, 2.0, 0.5, 1.0, -2.0, 0.0);
  d.p0 = cosine_slice(g, 1.0, 0.5);
  const auto res = sweep(d);
  if (!res.converged) return {false, "sweep did not converge"};

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double eps = 1e-4;
  const double c_limit = 10.0;
  double worst_sign = std::numeric_limits<double>::infinity(), observed_c = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 5; ++trial) {
    // Point into the admissible box from whichever bound u* sits on.
    Field<double> v(g);
    for (Eigen::Index j = 0; j < v.values().size(); ++j) {
      const double lo = d.bounds.sigma1.values()[j], hi = d.bounds.sigma2.values()[j];
      const double u = res.u_star.values()[j];
      const double room = (hi - lo) * unit(rng);
      v.values()[j] = u == lo ? room : (u == hi ? -room : (2 * unit(rng) - 1) * std::min(u - lo, hi - u));
    }
    const auto r = variational_check(d, res.u_star, v, eps);
    const double sign_margin = r.fd_derivative / r.scale;
    const double c = r.gap / (r.scale * (eps + g.dt));
    worst_sign = std::min(worst_sign, sign_margin);
    observed_c = std::max(observed_c, c);
    ok = ok && r.fd_derivative >= -1e-6 * r.scale && c <= c_limit;
  }
  return {ok, fmt("%g sweep iterations; min fd/scale %.3g (limit -1e-6); observed C %.3g (pinned <= %g)",
                  static_cast<double>(res.iterations), worst_sign, observed_c, c_limit)};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_gap = 0.0;
  int non_bang_bang = 0;
  bool ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = make_grid(2.0, 2.0, 2, 2);
    auto d = constant_problem(g, unit(rng), 3.0 * unit(rng), unit(rng), 1.0, -2.0 * unit(rng) - 0.1, 0.0,
                              0.5 + 11.5 * unit(rng));
    for (Eigen::Index j = 0; j < d.p0.size(); ++j) d.p0.data()[j] = 2.0 * unit(rng);
    const auto best = brute_force_optimum(d);
    const auto res = sweep(d);
    const double psi = res.objective_history.back();
    const double gap = std::abs(psi - best.psi_best) / std::abs(best.psi_best);
    worst_gap = std::max(worst_gap, gap);
    ok = ok && res.converged && gap <= 1e-6;
    for (int n = 0; n < g.n_t; ++n)
      for (int i = 0; i < g.n_a; ++i)
        for (int k = 0; k < g.n_x; ++k) {
          const double s = res.q(i, n, k) + 1.0;
          if (std::abs(s) <= 1e-6 || res.p_star(i, n, k) <= 1e-12) continue;
          const double expected = s > 0 ? d.bounds.sigma1(i, n, k) : d.bounds.sigma2(i, n, k);
          if (res.u_star(i, n, k) != expected) ++non_bang_bang;
        }
  }
  ok = ok && non_bang_bang == 0;
  return {ok, fmt("10 instances of 2x2x2, max relative Psi gap %.3g (limit 1e-6), %g non-bang-bang nodes", worst_gap,
                  non_bang_bang)};
}

Outcome degenerate_freedom() {
  const auto g = make_grid(1.0, 1.0, 16, 16);
  const auto d = constant_problem(g, 0.2, 0.0, 0.5, 0.0, -2.0, 0.0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Field<double> base = d.bounds.sigma1;
  const double psi0 = objective(base, forward_solve(d, base));
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Field<double> u(g);
    for (auto& v : u.values()) v = -2.0 * unit(rng);
    worst = std::max(worst, std::abs(objective(u, forward_solve(d, u)) - psi0));
  }
  return {worst < 1e-12, fmt("max |delta Psi| %.3g over 10 random controls", worst)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "positivity and comparison", 30.0, positivity_comparison},
      {2, "analytic transport", 1.0, analytic_transport},
      {3, "analytic diffusion", 10.0, analytic_diffusion},
      {4, "fixed point vs renewal", 10.0, fixed_point_vs_renewal},
      {5, "energy bound", 30.0, energy_bound},
      {6, "adjoint closed form", 5.0, adjoint_closed_form},
      {7, "variational identity", 60.0, variational_identity},
      {8, "oracle equivalence", 120.0, oracle_equivalence},
      {9, "degenerate-set freedom", 1.0, degenerate_freedom},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.time_limit;
    const bool passed = o.passed && in_time;
    failures += !passed;
    std::printf("[%s] criterion %d %s: %s; %.2fs (limit %gs)\n", passed ? "PASS" : "FAIL", c.id, c.title.c_str(),
                o.details.c_str(), secs, c.time_limit);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

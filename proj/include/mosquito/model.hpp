#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mosquito/grid.hpp"

namespace mosquito {

/// Adaptation kernel K(x, s) = (x - s)^2 exp(-(x - s)^2) for s in (0, 24),
/// zero otherwise.
template <typename Scalar>
Scalar kernel_eval(Scalar x, Scalar s) {
  if (!(s > Scalar(0) && s < Scalar(kDayHours))) return Scalar(0);
  const Scalar r2 = (x - s) * (x - s);
  return r2 * std::exp(-r2);
}

namespace detail {

// Length of [d - h, d + h] intersected with [-eta, eta].
template <typename Scalar>
Scalar window_overlap(Scalar d, Scalar h, Scalar eta) {
  const Scalar lo = std::max(d - h, -eta);
  const Scalar hi = std::min(d + h, eta);
  return std::max(Scalar(0), hi - lo);
}

template <typename Scalar>
Scalar displacement_kernel(Scalar d) {
  const Scalar r2 = d * d;
  return r2 * std::exp(-r2);
}

}  // namespace detail

/// Midpoint quadrature table for s -> int_{x-eta}^{x+eta} K(x, s) g(s) ds.
///
/// Row k holds the weights at cell center x_k; entry (k, l) is
/// K(x_k, s_l) * |cell_l ∩ window|. Both factors depend only on |x_k - s_l|,
/// so the table is symmetric.
template <typename Scalar>
struct KernelWeights {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> table;
  Scalar eta{};
  bool wrap = false;
};

/// Builds the birth-window weights. With wrap = false the window is cut at
/// s = 0 and s = 24; with wrap = true it is read periodically.
template <typename Scalar>
KernelWeights<Scalar> kernel_weights(const Grid<Scalar>& grid, Scalar eta, bool wrap = false) {
  if (!(eta > Scalar(0) && eta <= Scalar(kDayHours))) {
    throw std::invalid_argument("kernel_weights: eta must lie in (0, 24]");
  }
  const int nx = grid.n_x;
  const Scalar h = grid.dx / Scalar(2);
  const Scalar period = Scalar(kDayHours);
  KernelWeights<Scalar> w;
  w.eta = eta;
  w.wrap = wrap;
  w.table.setZero(nx, nx);
  for (int k = 0; k < nx; ++k) {
    const Scalar x = grid.x_center(k);
    for (int l = 0; l < nx; ++l) {
      const Scalar delta = x - grid.x_center(l);
      if (!wrap) {
        const Scalar d = std::abs(delta);
        w.table(k, l) = detail::displacement_kernel(d) * detail::window_overlap(d, h, eta);
        continue;
      }
      Scalar sum = 0;
      for (int m = -1; m <= 1; ++m) {
        const Scalar d = std::abs(delta - static_cast<Scalar>(m) * period);
        sum += detail::displacement_kernel(d) * detail::window_overlap(d, h, eta);
      }
      w.table(k, l) = sum;
    }
  }
  return w;
}

/// Age-dependent mortality presets. The blow-up form m0 + c / (a_max - a)
/// diverges at a_max and is always used through min(mu, N).
struct MortalityModel {
  enum class Kind { constant, blowup };
  Kind kind = Kind::constant;
  double m0 = 0.0;
  double c = 0.0;
  double truncation = std::numeric_limits<double>::infinity();

  double raw(double a, double a_max) const {
    if (kind == Kind::constant) return m0;
    const double gap = a_max - a;
    return gap > 0.0 ? m0 + c / gap : std::numeric_limits<double>::infinity();
  }
  double operator()(double a, double a_max) const { return std::min(raw(a, a_max), truncation); }
};

/// Fertility presets: constant b0, or b0 sin^2 bump supported on [a_lo, a_hi].
struct FertilityModel {
  enum class Kind { constant, bump };
  Kind kind = Kind::constant;
  double b0 = 0.0;
  double a_lo = 0.0;
  double a_hi = 0.0;

  double operator()(double a) const {
    if (kind == Kind::constant) return b0;
    if (a <= a_lo || a >= a_hi || a_hi <= a_lo) return 0.0;
    const double s = std::sin(M_PI * (a - a_lo) / (a_hi - a_lo));
    return b0 * s * s;
  }
};

/// Tabulated vital rates on a grid. mu may vary in (a, t, x); beta varies in
/// age only.
template <typename Scalar>
struct VitalRates {
  Field<Scalar> mu;
  ArrayX<Scalar> beta;
  Scalar delta{};
  Scalar eta{};
  Scalar truncation = std::numeric_limits<Scalar>::infinity();
  bool truncation_active = false;
  bool birth_wrap = false;
};

template <typename Scalar>
VitalRates<Scalar> make_vital_rates(const Grid<Scalar>& grid, const MortalityModel& mortality,
                                    const FertilityModel& fertility, Scalar delta, Scalar eta,
                                    bool birth_wrap = false) {
  VitalRates<Scalar> r;
  r.mu = Field<Scalar>(grid);
  r.beta.resize(grid.n_a + 1);
  r.delta = delta;
  r.eta = eta;
  r.truncation = static_cast<Scalar>(mortality.truncation);
  r.birth_wrap = birth_wrap;
  const double a_max = static_cast<double>(grid.a_max);
  for (int i = 0; i <= grid.n_a; ++i) {
    const double a = static_cast<double>(grid.age(i));
    if (mortality.raw(a, a_max) > mortality.truncation) r.truncation_active = true;
    const Scalar m = static_cast<Scalar>(mortality(a, a_max));
    for (int n = 0; n <= grid.n_t; ++n) r.mu.slice(n).row(i).setConstant(m);
    r.beta[i] = static_cast<Scalar>(fertility(a));
  }
  return r;
}

/// Pointwise bounds sigma1 <= u <= sigma2 <= 0 defining the admissible set.
template <typename Scalar>
struct ControlBounds {
  Field<Scalar> sigma1;
  Field<Scalar> sigma2;
};

template <typename Scalar>
ControlBounds<Scalar> constant_bounds(const Grid<Scalar>& grid, Scalar lower, Scalar upper) {
  return {Field<Scalar>(grid, lower), Field<Scalar>(grid, upper)};
}

template <typename Scalar>
bool is_admissible(const Field<Scalar>& u, const ControlBounds<Scalar>& bounds) {
  return (u.values() >= bounds.sigma1.values()).all() && (u.values() <= bounds.sigma2.values()).all();
}

/// Everything a forward or adjoint solve needs besides the control.
template <typename Scalar>
struct ProblemData {
  Grid<Scalar> grid;
  VitalRates<Scalar> rates;
  Slice<Scalar> p0;  // (n_a + 1) x n_x initial age-x distribution
  Field<Scalar> f;   // nonnegative source, zero by default
  ControlBounds<Scalar> bounds;
};

template <typename Scalar>
ProblemData<Scalar> make_problem(const Grid<Scalar>& grid, VitalRates<Scalar> rates, Slice<Scalar> p0,
                                 ControlBounds<Scalar> bounds) {
  ProblemData<Scalar> d;
  d.grid = grid;
  d.rates = std::move(rates);
  d.p0 = std::move(p0);
  d.f = Field<Scalar>(grid);
  d.bounds = std::move(bounds);
  return d;
}

struct ValidationIssue {
  std::string hypothesis;  // J1, J2, J3, U, f, delta, eta, shape
  std::string path;        // JSON path of the offending config key
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  std::vector<std::string> notes;

  bool ok() const { return issues.empty(); }
  bool names(const std::string& hypothesis) const {
    return std::any_of(issues.begin(), issues.end(),
                       [&](const ValidationIssue& i) { return i.hypothesis == hypothesis; });
  }
  std::string summary() const {
    std::ostringstream os;
    for (const auto& i : issues) os << i.hypothesis << " (" << i.path << "): " << i.message << "\n";
    return os.str();
  }
};

namespace detail {

template <typename Scalar>
std::string node_text(const Field<Scalar>& f, Eigen::Index flat) {
  const auto& g = f.grid();
  const Eigen::Index k = flat % g.n_x;
  const Eigen::Index rest = flat / g.n_x;
  const Eigen::Index i = rest % (g.n_a + 1);
  const Eigen::Index n = rest / (g.n_a + 1);
  std::ostringstream os;
  os << "(i=" << i << ", n=" << n << ", k=" << k << ")";
  return os.str();
}

}  // namespace detail

/// Checks the standing hypotheses on the data; never throws.
template <typename Scalar>
ValidationReport validate_params(const ProblemData<Scalar>& data) {
  ValidationReport report;
  const auto& g = data.grid;
  auto add = [&](std::string hyp, std::string path, std::string msg) {
    report.issues.push_back({std::move(hyp), std::move(path), std::move(msg)});
  };
  auto conforms = [&](const Field<Scalar>& f) { return f.grid() == g; };

  if (!conforms(data.rates.mu) || data.rates.beta.size() != g.n_a + 1 || data.p0.rows() != g.n_a + 1 ||
      data.p0.cols() != g.n_x || !conforms(data.f) || !conforms(data.bounds.sigma1) ||
      !conforms(data.bounds.sigma2)) {
    add("shape", "", "fields do not conform to the grid");
    return report;
  }

  const auto& mu = data.rates.mu.values();
  Eigen::Index at = 0;
  if (!mu.isFinite().all() || (mu < Scalar(0)).any()) {
    (mu.isFinite() && mu >= Scalar(0)).template cast<int>().minCoeff(&at);
    add("J1", "mu", "mortality must be finite and nonnegative; first violation at " +
                        detail::node_text(data.rates.mu, at));
  } else if ((mu > data.rates.truncation).any()) {
    add("J1", "mu.N", "mortality exceeds its truncation level N");
  }
  if (data.rates.truncation_active) {
    std::ostringstream os;
    os << "mortality truncated at N = " << data.rates.truncation << " near a_max";
    report.notes.push_back(os.str());
  }

  const auto& beta = data.rates.beta;
  if (!beta.isFinite().all() || (beta < Scalar(0)).any()) {
    add("J2", "beta", "fertility must be finite and nonnegative");
  }

  if (!data.p0.isFinite().all() || (data.p0 < Scalar(0)).any()) {
    add("J3", "p0", "initial distribution must be finite and nonnegative");
  }

  if (!data.f.values().isFinite().all() || (data.f.values() < Scalar(0)).any()) {
    add("f", "f", "source must be finite and nonnegative");
  }

  if (!(data.rates.delta >= Scalar(0)) || !std::isfinite(static_cast<double>(data.rates.delta))) {
    add("delta", "delta", "diffusion coefficient must be finite and nonnegative");
  }
  if (!(data.rates.eta > Scalar(0) && data.rates.eta <= Scalar(kDayHours))) {
    add("eta", "eta", "kernel half-width must lie in (0, 24]");
  }

  const auto& s1 = data.bounds.sigma1.values();
  const auto& s2 = data.bounds.sigma2.values();
  if ((s2 > Scalar(0)).any() || !s2.isFinite().all()) {
    (s2 <= Scalar(0)).template cast<int>().minCoeff(&at);
    add("U", "bounds.sigma2", "upper control bound must be <= 0; first violation at " +
                                  detail::node_text(data.bounds.sigma2, at));
  }
  if ((s1 > s2).any() || !s1.isFinite().all()) {
    (s1 <= s2).template cast<int>().minCoeff(&at);
    add("U", "bounds.sigma1", "lower control bound must not exceed the upper bound; first violation at " +
                                  detail::node_text(data.bounds.sigma1, at));
  }
  return report;
}

}  // namespace mosquito

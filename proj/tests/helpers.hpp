#pragma once

#include <cmath>

#include "mosquito/model.hpp"

namespace mosquito::fixtures {

// Constant-rate problem with p0 == p0_value and bounds [lo, hi].
inline ProblemData<double> constant_problem(const Grid<double>& g, double mu, double beta, double delta,
                                            double p0_value, double lo = -1.0, double hi = 0.0, double eta = 6.0) {
  MortalityModel m;
  m.m0 = mu;
  FertilityModel f;
  f.b0 = beta;
  Slice<double> p0 = Slice<double>::Constant(g.n_a + 1, g.n_x, p0_value);
  return make_problem(g, make_vital_rates(g, m, f, delta, eta), p0, constant_bounds(g, lo, hi));
}

inline Slice<double> cosine_slice(const Grid<double>& g, double mean, double amplitude) {
  Slice<double> s(g.n_a + 1, g.n_x);
  for (int k = 0; k < g.n_x; ++k) s.col(k).setConstant(mean + amplitude * std::cos(2 * M_PI * g.x_center(k) / 24.0));
  return s;
}

}  // namespace mosquito::fixtures

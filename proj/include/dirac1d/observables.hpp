#ifndef DIRAC1D_OBSERVABLES_HPP
#define DIRAC1D_OBSERVABLES_HPP

#include <cmath>
#include <stdexcept>

#include "dirac1d/core.hpp"
#include "dirac1d/eigensolver.hpp"

// Expectation values and the identities of the confinement proof chain:
// for every normalized bound state of a finite symmetric scalar potential
//
//   <z> = 0,          |S| = |int z phi chi dz| = 1/4   (independent of f),
//   int |z| rho >= 1/2,    delta_z = sqrt(<z^2> - <z>^2) > 1/2.
//
// chi is interpolated to the phi points before any product is formed, so all
// integrands live on one grid; the O(h^2) interpolation error is covered by
// the per-state discretization error estimates.

namespace dirac1d {

inline double mean_z(const Spinor<double>& s, const Grid<double>& g) {
  const auto rho = density(s, g).rho;
  return quadrature((g.phi_points.array() * rho.array()).matrix(), g);
}

inline double abs_first_moment(const Spinor<double>& s, const Grid<double>& g) {
  const auto rho = density(s, g).rho;
  return quadrature((g.phi_points.array().abs() * rho.array()).matrix(), g);
}

inline double second_moment(const Spinor<double>& s, const Grid<double>& g) {
  const auto rho = density(s, g).rho;
  return quadrature((g.phi_points.array().square() * rho.array()).matrix(), g);
}

/// S = int z phi(z) chi~(z) dz, returned signed. With the sign conventions of
/// the coupled equations every normalized bound state gives S = -1/4; only
/// |S| enters the certificate.
inline double overlap_integral(const Spinor<double>& s, const Grid<double>& g) {
  const VectorX<double> chi_t = interpolate_chi_to_phi(s.chi, g);
  return quadrature(
      (g.phi_points.array() * s.phi.array() * chi_t.array()).matrix(), g);
}

inline double variance_z(const Spinor<double>& s, const Grid<double>& g) {
  const double m = mean_z(s, g);
  return second_moment(s, g) - m * m;
}

inline double mean_z(const BoundState& st) { return mean_z(st.spinor, st.grid); }
inline double abs_first_moment(const BoundState& st) {
  return abs_first_moment(st.spinor, st.grid);
}
inline double second_moment(const BoundState& st) {
  return second_moment(st.spinor, st.grid);
}
inline double overlap_integral(const BoundState& st) {
  return overlap_integral(st.spinor, st.grid);
}
inline double variance_z(const BoundState& st) {
  return variance_z(st.spinor, st.grid);
}

struct Identity11Residuals {
  double residual_phi = 0;
  double residual_chi = 0;
};

namespace detail {

// derivative on phi points: centered differences inside, one-sided copies at
// the two endpoints (bound states have decayed there)
inline VectorX<double> phi_point_derivative(const VectorX<double>& v,
                                            const Grid<double>& g) {
  const Eigen::Index n = g.n_cells;
  const double h = g.spacing;
  VectorX<double> d(n + 1);
  for (Eigen::Index i = 1; i < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2 * h);
  d[0] = (v[1] - v[0]) / h;
  d[n] = (v[n] - v[n - 1]) / h;
  return d;
}

// chi' lands exactly on the interior phi points under the staggered
// difference (chi_{i+1/2} - chi_{i-1/2})/h
inline VectorX<double> chi_derivative_on_phi_points(const VectorX<double>& chi,
                                                    const Grid<double>& g) {
  const Eigen::Index n = g.n_cells;
  const double h = g.spacing;
  VectorX<double> d(n + 1);
  for (Eigen::Index i = 1; i < n; ++i) d[i] = (chi[i] - chi[i - 1]) / h;
  d[0] = d[1];
  d[n] = d[n - 1];
  return d;
}

}  // namespace detail

/// Residuals of the integration-by-parts identity
/// int z u u' dz = -1/2 int u^2 dz for u = phi and u = chi~. Exact in the
/// continuum for any decaying function; O(h^2) on the grid.
inline Identity11Residuals identity11_check(const Spinor<double>& s,
                                            const Grid<double>& g) {
  detail::check_spinor_shape(s, g, "identity11_check");
  Identity11Residuals r;
  const auto& z = g.phi_points;
  {
    const VectorX<double> dphi = detail::phi_point_derivative(s.phi, g);
    const double lhs =
        quadrature((z.array() * s.phi.array() * dphi.array()).matrix(), g);
    const double rhs = quadrature(s.phi.array().square().matrix(), g);
    r.residual_phi = std::abs(lhs + 0.5 * rhs);
  }
  {
    const VectorX<double> chi_t = interpolate_chi_to_phi(s.chi, g);
    const VectorX<double> dchi = detail::chi_derivative_on_phi_points(s.chi, g);
    const double lhs =
        quadrature((z.array() * chi_t.array() * dchi.array()).matrix(), g);
    const double rhs = quadrature(chi_t.array().square().matrix(), g);
    r.residual_chi = std::abs(lhs + 0.5 * rhs);
  }
  return r;
}

inline Identity11Residuals identity11_check(const BoundState& st) {
  return identity11_check(st.spinor, st.grid);
}

/// Per-quantity discretization error estimates and the tolerances derived
/// from them. When the state was refined, estimates come from the coarse/fine
/// level pair (Richardson, O(h^2)); otherwise a conservative h^2 fallback is
/// used.
struct ErrorEstimates {
  double err_gamma = 0;
  double err_overlap_S = 0;
  double err_abs_first_moment = 0;
  double err_variance = 0;
  double err_delta_z = 0;
  double tol_norm = 0;
  double tol_mean_z = 0;
  double tol_identity13 = 0;
  double tol_identity11 = 0;
  double tol_ineq14 = 0;
};

/// Machine-checked record of the proof-chain identities and inequalities for
/// one bound state.
struct Certificate {
  double gamma = 0;
  double norm_residual = 0;          // |int rho - 1|
  double mean_z = 0;                 // <z>
  double abs_first_moment = 0;       // int |z| rho dz
  double overlap_S = 0;              // signed S
  double variance = 0;               // <z^2> - <z>^2
  double delta_z = 0;
  double strictness_margin = 0;      // delta_z - 1/2
  double identity13_residual = 0;    // | |S| - 1/4 |
  double identity11_residual_phi = 0;
  double identity11_residual_chi = 0;
  bool ineq14_satisfied = false;     // int |z| rho >= 1/2
  bool ineq16_satisfied = false;     // delta_z - 1/2 > error estimate
  ErrorEstimates discretization_error_estimates;

  // individual check outcomes (diagnostics, not part of the serialized record)
  bool norm_ok = false;
  bool mean_z_ok = false;
  bool identity13_ok = false;
  bool identity11_ok = false;
  bool chain_am_ok = false;       // 2 int|z|rho >= 4|S|
  bool chain_schwarz_ok = false;  // <z^2> >= (int|z|rho)^2

  bool pass() const {
    return norm_ok && mean_z_ok && identity13_ok && identity11_ok &&
           ineq14_satisfied && ineq16_satisfied && chain_am_ok &&
           chain_schwarz_ok;
  }
};

/// Evaluate every check of the proof chain for a normalized bound state, in
/// order: normalization, <z> = 0, |S| = 1/4, first-moment bound, strict
/// variance bound, integration-by-parts identity, plus the two chain
/// inequalities (arithmetic-mean and Schwarz steps), which hold exactly in
/// the discrete quadrature.
inline Certificate certify(const BoundState& st) {
  const auto& s = st.spinor;
  const auto& g = st.grid;
  detail::check_spinor_shape(s, g, "certify");

  Certificate c;
  c.gamma = st.gamma;
  c.norm_residual = std::abs(norm_integral(s, g) - 1.0);
  if (c.norm_residual > 1e-6)
    throw std::invalid_argument("certify: state is not normalized");

  c.mean_z = mean_z(s, g);
  c.abs_first_moment = abs_first_moment(s, g);
  c.overlap_S = overlap_integral(s, g);
  c.variance = variance_z(s, g);
  c.delta_z = std::sqrt(std::max(c.variance, 0.0));
  c.strictness_margin = c.delta_z - 0.5;
  c.identity13_residual = std::abs(std::abs(c.overlap_S) - 0.25);
  const Identity11Residuals r11 = identity11_check(s, g);
  c.identity11_residual_phi = r11.residual_phi;
  c.identity11_residual_chi = r11.residual_chi;

  // error estimates
  ErrorEstimates& e = c.discretization_error_estimates;
  const double h = g.spacing;
  double coarse_res11 = 0;
  if (st.refine.refined && st.refine.coarse_spinor.phi.size() > 0) {
    const auto& cs = st.refine.coarse_spinor;
    const auto& cg = st.refine.coarse_grid;
    const double shrink = st.refine.monotone ? 3.0 : 1.0;
    e.err_overlap_S =
        std::abs(overlap_integral(cs, cg) - c.overlap_S) / shrink;
    e.err_abs_first_moment =
        std::abs(abs_first_moment(cs, cg) - c.abs_first_moment) / shrink;
    const double var_c = variance_z(cs, cg);
    e.err_variance = std::abs(var_c - c.variance) / shrink;
    e.err_delta_z =
        std::abs(std::sqrt(std::max(var_c, 0.0)) - c.delta_z) / shrink;
    e.err_gamma = std::isfinite(st.refine.err_gamma) ? st.refine.err_gamma
                                                     : h * h;
    const Identity11Residuals rc = identity11_check(cs, cg);
    coarse_res11 = std::max(rc.residual_phi, rc.residual_chi);
  } else {
    e.err_gamma = h * h;
    e.err_overlap_S = h * h;
    e.err_abs_first_moment = h * h;
    e.err_variance = 4 * h * h;
    e.err_delta_z = 2 * h * h;
  }

  e.tol_norm = 1e-11;
  e.tol_mean_z = std::max(1e-10 * c.abs_first_moment, 1e-13);
  e.tol_identity13 = 10.0 * e.err_overlap_S + 1e-9;
  e.tol_identity11 = st.refine.refined
                         ? 10.0 * coarse_res11 / 4.0 + 1e-9
                         : 20.0 * h * h;
  e.tol_ineq14 = std::max(10.0 * e.err_abs_first_moment, 1e-6);

  c.norm_ok = c.norm_residual <= e.tol_norm;
  c.mean_z_ok = std::abs(c.mean_z) <= e.tol_mean_z;
  c.identity13_ok = c.identity13_residual <= e.tol_identity13;
  c.identity11_ok = c.identity11_residual_phi <= e.tol_identity11 &&
                    c.identity11_residual_chi <= e.tol_identity11;
  c.ineq14_satisfied = c.abs_first_moment >= 0.5 - e.tol_ineq14;
  c.ineq16_satisfied =
      c.strictness_margin > std::max(e.err_delta_z, 1e-12);

  const double slack = 1e-12;
  c.chain_am_ok = 2.0 * c.abs_first_moment >=
                  4.0 * std::abs(c.overlap_S) - slack * (1.0 + c.abs_first_moment);
  const double z2 = c.variance + c.mean_z * c.mean_z;
  c.chain_schwarz_ok =
      z2 >= c.abs_first_moment * c.abs_first_moment - slack * (1.0 + z2);
  return c;
}

}  // namespace dirac1d

#endif  // DIRAC1D_OBSERVABLES_HPP

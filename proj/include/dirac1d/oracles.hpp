#ifndef DIRAC1D_ORACLES_HPP
#define DIRAC1D_ORACLES_HPP

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dirac1d/eigensolver.hpp"

// Independent ground-truth generators used to validate the solvers. Nothing
// here shares code with the main solution paths: the free-space solution is
// closed form, the square-well spectrum comes from a transcendental matching
// condition, and the dense cross-check diagonalizes the assembled block
// matrix with Eigen's dense solver.

namespace dirac1d {

/// Closed-form solution of the coupled equations with f = 0 and parity
/// initial data; satisfies them exactly for |gamma| < 1. Used to calibrate
/// the shooting integrator's step error.
struct FreeSpaceSolution {
  double gamma = 0;
  double kappa = 0;  // sqrt(1 - gamma^2)
  Parity parity = Parity::even_phi;

  double phi(double z) const {
    return parity == Parity::even_phi ? std::cosh(kappa * z)
                                      : std::sinh(kappa * z);
  }
  double chi(double z) const {
    const double num = parity == Parity::even_phi ? std::sinh(kappa * z)
                                                  : std::cosh(kappa * z);
    return kappa * num / (gamma + 1.0);
  }
};

inline FreeSpaceSolution free_space_solution(double gamma,
                                             Parity parity = Parity::even_phi) {
  if (!(std::abs(gamma) < 1.0))
    throw std::invalid_argument("free_space_solution: |gamma| must be < 1");
  return FreeSpaceSolution{gamma, std::sqrt(1.0 - gamma * gamma), parity};
}

namespace detail {

// Matching condition for the square well f = -V on |z| <= a, joining the
// oscillatory interior solution (wavenumber k = sqrt((gamma+V)^2 - 1)) to the
// decaying exterior (rate kappa = sqrt(1-gamma^2)) with both components
// continuous at z = a. Written in product form so there are no tan poles:
//
//   even_phi:  k sin(ka) (gamma+1) - kappa cos(ka) (gamma+1+V) = 0
//   odd_phi:   k cos(ka) (gamma+1) + kappa sin(ka) (gamma+1+V) = 0
inline double square_well_match(double V, double a, Parity parity, double g) {
  const double k = std::sqrt((g + V) * (g + V) - 1.0);
  const double kappa = std::sqrt(1.0 - g * g);
  const double s = std::sin(k * a), c = std::cos(k * a);
  if (parity == Parity::even_phi)
    return k * s * (g + 1.0) - kappa * c * (g + 1.0 + V);
  return k * c * (g + 1.0) + kappa * s * (g + 1.0 + V);
}

}  // namespace detail

/// In-gap eigenvalues of the square well f = -V on |z| <= a from the
/// transcendental matching condition, sign-scanned and bisected to 1e-12.
/// Only the interior-oscillation regime (gamma + V > 1) carries roots.
inline std::vector<double> square_well_spectrum(double V, double a,
                                                Parity parity,
                                                int scan_points = 4000) {
  if (!(V > 0) || !(a > 0))
    throw std::invalid_argument("square_well_spectrum: need V > 0 and a > 0");
  const double eps = 1e-9;
  const double lo = std::max(-1.0, 1.0 - V) + eps;
  const double hi = 1.0 - eps;
  std::vector<double> roots;
  if (!(lo < hi)) return roots;

  const double dg = (hi - lo) / (scan_points - 1);
  double g_prev = lo;
  double f_prev = detail::square_well_match(V, a, parity, g_prev);
  for (int i = 1; i < scan_points; ++i) {
    const double g = lo + i * dg;
    const double fv = detail::square_well_match(V, a, parity, g);
    if (f_prev == 0.0) roots.push_back(g_prev);
    if (f_prev * fv < 0) {
      double x0 = g_prev, x1 = g, fx0 = f_prev;
      while (x1 - x0 > 1e-12) {
        const double mid = 0.5 * (x0 + x1);
        const double fm = detail::square_well_match(V, a, parity, mid);
        if (fx0 * fm <= 0) {
          x1 = mid;
        } else {
          x0 = mid;
          fx0 = fm;
        }
      }
      roots.push_back(0.5 * (x0 + x1));
    }
    g_prev = g;
    f_prev = fv;
  }
  return roots;
}

/// Full dense symmetric eigendecomposition of the assembled block
/// Hamiltonian; returns the in-gap eigenvalues. Capped at n_cells <= 2000 to
/// keep the O(n^3) dense solve at desk scale.
inline std::vector<double> dense_cross_check(const PotentialSpec<double>& spec,
                                             const Grid<double>& grid,
                                             double gamma_lo = -0.999,
                                             double gamma_hi = 0.999) {
  if (grid.n_cells > 2000)
    throw std::invalid_argument(
        "dense_cross_check: n_cells > 2000 exceeds the dense-solve cap");
  const MatrixX<double> H = assemble_hamiltonian(spec, grid);
  Eigen::SelfAdjointEigenSolver<MatrixX<double>> es(H,
                                                    Eigen::EigenvaluesOnly);
  std::vector<double> in_gap;
  const auto& ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] > gamma_lo && ev[i] < gamma_hi) in_gap.push_back(ev[i]);
  return in_gap;
}

struct ConvergenceOrder {
  double order = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;
};

/// log2 of the successive-difference ratio for samples at h, h/2, h/4;
/// undefined when the differences are not monotone.
inline ConvergenceOrder convergence_order(double q_h, double q_h2,
                                          double q_h4) {
  const double d1 = q_h - q_h2;
  const double d2 = q_h2 - q_h4;
  ConvergenceOrder r;
  if (d1 * d2 <= 0.0 || std::abs(d2) >= std::abs(d1)) return r;
  r.order = std::log2(std::abs(d1) / std::abs(d2));
  r.defined = true;
  return r;
}

}  // namespace dirac1d

#endif  // DIRAC1D_ORACLES_HPP

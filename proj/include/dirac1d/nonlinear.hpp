#ifndef DIRAC1D_NONLINEAR_HPP
#define DIRAC1D_NONLINEAR_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dirac1d/eigensolver.hpp"

// Self-consistent solver for a Thirring-type nonlinearity: a density-
// dependent term W = g (phi^2 + chi~^2) enters both coupled equations
// exactly where the external potential f does (same sign in both), which is
// the condition under which the overlap identity |S| = 1/4 survives.

namespace dirac1d {

struct NonlinearOptions {
  double coupling = -1.0;       // g; attractive self-binding needs g < 0
  double mixing = 0.3;          // under-relaxation alpha in (0, 1]
  int max_iterations = 500;
  double fixed_point_tol = 1e-10;  // on ||W_{n+1} - W_n||_inf
  PotentialSpec<double> seed;   // linear seed; zero family allowed iff g < 0
  double bootstrap_width = 1.0; // width of the startup density for zero seeds
};

struct IterationRecord {
  int iteration = 0;
  double gamma = 0;
  double delta_w = 0;  // ||W_{n+1} - W_n||_inf
};

struct SelfConsistentResult {
  BoundState state;            // linear state of the frozen f_eff = seed + W
  VectorX<double> w_profile;   // W on phi_points, the potential `state` solved
  std::vector<IterationRecord> trace;
  bool converged = false;
  int iterations = 0;
};

struct SelfConsistentError : std::runtime_error {
  SelfConsistentResult best;
  SelfConsistentError(const std::string& msg, SelfConsistentResult b)
      : std::runtime_error(msg), best(std::move(b)) {}
};

/// Frozen effective potential f_eff(z) = f_seed(z) + W(z): the seed is
/// evaluated exactly, W linearly interpolated from its phi_points samples
/// (zero outside the box). At the staggered chi points this reduces to the
/// two-point average, matching the density interpolation convention.
struct EffectivePotential {
  PotentialSpec<double> seed;
  VectorX<double> w;  // on phi_points
  double z0 = 0;      // leftmost phi point
  double h = 0;
  Eigen::Index n = 0;

  double operator()(double z) const {
    double v = eval_potential(seed, z);
    const double t = (z - z0) / h;
    if (t >= 0 && t <= static_cast<double>(n)) {
      const Eigen::Index i = std::min<Eigen::Index>(
          static_cast<Eigen::Index>(t), n - 1);
      const double frac = t - static_cast<double>(i);
      v += w[i] + frac * (w[i + 1] - w[i]);
    }
    return v;
  }
};

inline EffectivePotential effective_potential(const PotentialSpec<double>& seed,
                                              const VectorX<double>& w,
                                              const Grid<double>& grid) {
  return EffectivePotential{seed, w, grid.phi_points[0], grid.spacing,
                            grid.n_cells};
}

/// Under-relaxed fixed-point iteration W_{n+1} = (1-alpha) W_n + alpha g rho_n
/// where rho_n is the density of the lowest-gamma even_phi bound state of
/// f_seed + W_n. Zero-family seeds (self-binding, g < 0) are bootstrapped
/// with W_0 = g times a normalized Gaussian density so the first linear
/// solve has a well to bind in.
inline SelfConsistentResult solve_self_consistent(
    const NonlinearOptions& opts, const Grid<double>& grid,
    const SolverOptions& solver_opts = {}) {
  if (!(opts.mixing > 0.0 && opts.mixing <= 1.0))
    throw std::invalid_argument("solve_self_consistent: mixing must be in (0, 1]");
  if (!(opts.fixed_point_tol > 0.0))
    throw std::invalid_argument("solve_self_consistent: fixed_point_tol must be > 0");
  if (opts.max_iterations < 1)
    throw std::invalid_argument("solve_self_consistent: max_iterations must be >= 1");
  const bool zero_seed = opts.seed.family == PotentialFamily::zero;
  if (zero_seed && !(opts.coupling < 0.0))
    throw std::invalid_argument(
        "solve_self_consistent: a zero-family seed requires coupling < 0");

  const Eigen::Index n = grid.n_cells;
  VectorX<double> w = VectorX<double>::Zero(n + 1);
  if (zero_seed) {
    const double bw = opts.bootstrap_width;
    const double norm = 1.0 / (bw * std::sqrt(M_PI));
    for (Eigen::Index i = 0; i <= n; ++i) {
      const double u = grid.phi_points[i] / bw;
      w[i] = opts.coupling * norm * std::exp(-u * u);
    }
  }

  SelfConsistentResult res;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const EffectivePotential feff = effective_potential(opts.seed, w, grid);
    std::vector<BoundState> states;
    try {
      states = detail::find_bound_states_fn(feff, grid, solver_opts);
    } catch (const std::runtime_error& e) {
      throw SelfConsistentError(
          "solve_self_consistent: solver failed at iterate " +
              std::to_string(it) + ": " + e.what(),
          std::move(res));
    }
    const BoundState* sel = nullptr;
    for (const auto& s : states)
      if (s.parity == Parity::even_phi) {
        sel = &s;
        break;  // sorted ascending: first even_phi is the lowest
      }
    if (!sel)
      throw SelfConsistentError(
          "solve_self_consistent: no even_phi bound state at iterate " +
              std::to_string(it),
          std::move(res));

    const VectorX<double> rho = density(sel->spinor, grid).rho;
    const VectorX<double> w_next =
        (1.0 - opts.mixing) * w + opts.mixing * opts.coupling * rho;
    const double dw = (w_next - w).cwiseAbs().maxCoeff();

    res.state = *sel;
    res.w_profile = w;
    res.trace.push_back({it, sel->gamma, dw});
    res.iterations = it + 1;
    if (dw < opts.fixed_point_tol) {
      res.converged = true;
      return res;
    }
    w = w_next;
  }
  throw SelfConsistentError(
      "solve_self_consistent: no fixed point after " +
          std::to_string(opts.max_iterations) + " iterations, last ||dW|| = " +
          std::to_string(res.trace.empty() ? 0.0 : res.trace.back().delta_w),
      std::move(res));
}

}  // namespace dirac1d

#endif  // DIRAC1D_NONLINEAR_HPP

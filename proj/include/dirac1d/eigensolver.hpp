#ifndef DIRAC1D_EIGENSOLVER_HPP
#define DIRAC1D_EIGENSOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dirac1d/core.hpp"
#include "dirac1d/potentials.hpp"

// In-gap bound states of the coupled first-order system
//
//   chi'(z) = (1 + f(z) - gamma) phi(z)
//   phi'(z) = (1 + gamma - f(z)) chi(z)
//
// by two independent routes: a symmetric staggered-grid matrix
// discretization and parity-based shooting with bisection on the
// decaying-tail mismatch.

namespace dirac1d {

enum class Parity { even_phi, odd_phi };
enum class SolveMethod { matrix, shooting };

inline const char* parity_name(Parity p) {
  return p == Parity::even_phi ? "even_phi" : "odd_phi";
}
inline const char* method_name(SolveMethod m) {
  return m == SolveMethod::matrix ? "matrix" : "shooting";
}

struct SolverOptions {
  double gamma_lo = -0.999;  // search window, strictly inside (-1, 1)
  double gamma_hi = 0.999;
  int n_refine = 2;             // grid-doubling passes in refine_state
  double bisection_tol = 1e-12; // in gamma
  int max_states = 64;
  int scan_points = 2000;       // shooting gamma mesh per parity
  int rk_substeps = 4;          // RK4 steps per grid cell (even)
  double leak_threshold = 1e-8;
  double wall_value = 1e6;      // sentinel diagonal for hard-wall phi dofs
};

inline void validate_options(const SolverOptions& o) {
  if (!(-1.0 < o.gamma_lo && o.gamma_lo < o.gamma_hi && o.gamma_hi < 1.0))
    throw std::invalid_argument("SolverOptions: gamma window must lie inside (-1, 1)");
  if (o.n_refine < 0 || o.max_states < 1 || o.scan_points < 2)
    throw std::invalid_argument("SolverOptions: bad counts");
  if (!(o.bisection_tol > 0))
    throw std::invalid_argument("SolverOptions: bisection_tol must be > 0");
  if (o.rk_substeps < 2 || o.rk_substeps % 2 != 0)
    throw std::invalid_argument("SolverOptions: rk_substeps must be even and >= 2");
}

/// Gamma-level bookkeeping filled in by refine_state. The coarse spinor of
/// the second-finest level is kept so per-quantity discretization error
/// estimates can be formed downstream.
struct RefinementInfo {
  bool refined = false;
  std::vector<double> gamma_levels;  // coarse ... fine discrete eigenvalues
  double gamma_discrete = std::numeric_limits<double>::quiet_NaN();
  double err_gamma = std::numeric_limits<double>::quiet_NaN();
  double observed_order = std::numeric_limits<double>::quiet_NaN();
  bool monotone = true;
  Spinor<double> coarse_spinor;
  Grid<double> coarse_grid;
};

struct BoundState {
  double gamma = std::numeric_limits<double>::quiet_NaN();
  Spinor<double> spinor;  // normalized, on `grid`
  Parity parity = Parity::even_phi;
  SolveMethod method = SolveMethod::matrix;
  double residual = std::numeric_limits<double>::infinity();
  double boundary_leak = std::numeric_limits<double>::infinity();
  Grid<double> grid;
  RefinementInfo refine;
};

/// Shooting discrepancy F(gamma) = chi(L) + kappa phi(L)/(gamma+1),
/// kappa = sqrt(1 - gamma^2). Vanishes exactly when the integrated solution
/// matches the free decaying tail chi/phi = -kappa/(gamma+1).
struct MatchResidual {
  double gamma = 0;
  double value = std::numeric_limits<double>::quiet_NaN();
  Parity parity = Parity::even_phi;
  bool diverged = false;
};

namespace detail {

struct Tridiag {
  Eigen::VectorXd diag;  // interleaved: chi_1/2, phi_1, chi_3/2, ..., chi_{n-1/2}
  Eigen::VectorXd off;   // alternating +1/h, -1/h
};

// Interior degrees of freedom only; the hard wall phi(+-L) = 0 is imposed by
// dropping the two boundary phi dofs. All off-diagonals are nonzero, so every
// eigenvalue of the block is simple.
template <typename F>
Tridiag interior_tridiagonal(F&& f, const Grid<double>& grid) {
  const Eigen::Index n = grid.n_cells;
  const double h = grid.spacing;
  const Eigen::Index m = 2 * n - 1;
  Tridiag t;
  t.diag.resize(m);
  t.off.resize(m - 1);
  for (Eigen::Index j = 0; j < n; ++j)
    t.diag[2 * j] = -(1.0 - f(grid.chi_points[j]));
  for (Eigen::Index i = 1; i < n; ++i)
    t.diag[2 * i - 1] = 1.0 + f(grid.phi_points[i]);
  for (Eigen::Index k = 0; k + 1 < m; ++k)
    t.off[k] = (k % 2 == 0) ? 1.0 / h : -1.0 / h;
  return t;
}

inline double tridiag_inf_norm(const Tridiag& t) {
  double m = 0;
  const Eigen::Index n = t.diag.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    double r = std::abs(t.diag[i]);
    if (i > 0) r += std::abs(t.off[i - 1]);
    if (i + 1 < n) r += std::abs(t.off[i]);
    m = std::max(m, r);
  }
  return m;
}

inline void tridiag_apply(const Tridiag& t, const Eigen::VectorXd& v,
                          Eigen::VectorXd& out) {
  const Eigen::Index m = t.diag.size();
  out.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double s = t.diag[i] * v[i];
    if (i > 0) s += t.off[i - 1] * v[i - 1];
    if (i + 1 < m) s += t.off[i] * v[i + 1];
    out[i] = s;
  }
}

/// Sturm-sequence eigenvalue count: number of eigenvalues strictly below x,
/// via the signs of the LDL^T pivots of T - xI (dstebz-style pivot guard).
struct SturmContext {
  const Tridiag& t;
  Eigen::VectorXd off2;
  double pivmin;

  explicit SturmContext(const Tridiag& t_) : t(t_) {
    off2 = t.off.array().square();
    const double safmin = std::numeric_limits<double>::min();
    pivmin = safmin * std::max(1.0, off2.size() ? off2.maxCoeff() : 1.0);
  }

  int count_below(double x) const {
    const Eigen::Index m = t.diag.size();
    int cnt = 0;
    double d = t.diag[0] - x;
    if (std::abs(d) < pivmin) d = -pivmin;
    if (d < 0) ++cnt;
    for (Eigen::Index k = 1; k < m; ++k) {
      d = (t.diag[k] - x) - off2[k - 1] / d;
      if (std::abs(d) < pivmin) d = -pivmin;
      if (d < 0) ++cnt;
    }
    return cnt;
  }
};

inline std::vector<double> tridiag_eigs_in_window(const Tridiag& t, double lo,
                                                  double hi, double tol,
                                                  int max_states) {
  SturmContext ctx(t);
  const int c_lo = ctx.count_below(lo);
  const int c_hi = ctx.count_below(hi);
  std::vector<double> out;
  for (int j = c_lo + 1; j <= c_hi; ++j) {
    if (static_cast<int>(out.size()) >= max_states) break;
    double a = lo, b = hi;
    for (int it = 0; it < 200 && (b - a) > tol; ++it) {
      const double mid = 0.5 * (a + b);
      if (ctx.count_below(mid) >= j)
        b = mid;
      else
        a = mid;
    }
    out.push_back(0.5 * (a + b));
  }
  return out;
}

/// LU factorization of T - shift I with partial pivoting (dgttrf layout:
/// multipliers in dl, two superdiagonals du/du2, swap flags per row).
struct TridiagPLU {
  Eigen::VectorXd dl, d, du, du2;
  std::vector<char> swapped;

  void factor(const Tridiag& t, double shift) {
    const Eigen::Index m = t.diag.size();
    d = t.diag.array() - shift;
    dl = t.off;
    du = t.off;
    du2 = Eigen::VectorXd::Zero(std::max<Eigen::Index>(m - 2, 0));
    swapped.assign(static_cast<std::size_t>(std::max<Eigen::Index>(m - 1, 0)), 0);
    for (Eigen::Index i = 0; i + 1 < m; ++i) {
      if (std::abs(d[i]) >= std::abs(dl[i])) {
        if (d[i] != 0.0) {
          const double fact = dl[i] / d[i];
          dl[i] = fact;
          d[i + 1] -= fact * du[i];
        } else {
          dl[i] = 0.0;
        }
        if (i + 2 < m) du2[i] = 0.0;
      } else {
        const double fact = d[i] / dl[i];
        d[i] = dl[i];
        dl[i] = fact;
        const double tmp = du[i];
        du[i] = d[i + 1];
        d[i + 1] = tmp - fact * d[i + 1];
        if (i + 2 < m) {
          du2[i] = du[i + 1];
          du[i + 1] = -fact * du[i + 1];
        }
        swapped[static_cast<std::size_t>(i)] = 1;
      }
    }
    // keep exactly singular pivots solvable; inverse iteration wants the
    // solve to blow up along the eigenvector, not to produce NaNs
    const double bump = 1e-13 * tridiag_inf_norm(t) +
                        std::numeric_limits<double>::min();
    for (Eigen::Index i = 0; i < m; ++i)
      if (d[i] == 0.0) d[i] = bump;
  }

  void solve(Eigen::VectorXd& b) const {
    const Eigen::Index m = d.size();
    for (Eigen::Index i = 0; i + 1 < m; ++i) {
      if (!swapped[static_cast<std::size_t>(i)]) {
        b[i + 1] -= dl[i] * b[i];
      } else {
        const double tmp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = tmp - dl[i] * b[i];
      }
    }
    b[m - 1] /= d[m - 1];
    if (m > 1) b[m - 2] = (b[m - 2] - du[m - 2] * b[m - 1]) / d[m - 2];
    for (Eigen::Index i = m - 3; i >= 0; --i)
      b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
  }
};

struct TridiagEigenpair {
  double value = 0;
  Eigen::VectorXd vec;
  double residual = 0;
};

inline TridiagEigenpair tridiag_eigenvector(const Tridiag& t, double approx) {
  const Eigen::Index m = t.diag.size();
  const double scale = tridiag_inf_norm(t);
  TridiagPLU plu;
  plu.factor(t, approx);

  Eigen::VectorXd v(m);
  std::uint64_t s = 0x9E3779B97F4A7C15ull;  // deterministic start vector
  for (Eigen::Index i = 0; i < m; ++i) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    v[i] = static_cast<double>(s >> 11) * (1.0 / 9007199254740992.0) - 0.5;
  }
  v.normalize();

  TridiagEigenpair best;
  best.residual = std::numeric_limits<double>::infinity();
  Eigen::VectorXd w, tv;
  for (int iter = 0; iter < 8; ++iter) {
    w = v;
    plu.solve(w);
    const double nw = w.norm();
    if (!std::isfinite(nw) || nw == 0.0) {
      plu.factor(t, approx + scale * 1e-14 * (iter + 1));
      continue;
    }
    v = w / nw;
    tridiag_apply(t, v, tv);
    const double ray = v.dot(tv);
    const double res = (tv - ray * v).norm();
    if (res < best.residual) {
      best.value = ray;
      best.vec = v;
      best.residual = res;
    }
    if (res <= 1e-13 * scale) break;
  }
  return best;
}

inline Spinor<double> spinor_from_interleaved(const Eigen::VectorXd& v,
                                              const Grid<double>& grid) {
  const Eigen::Index n = grid.n_cells;
  Spinor<double> s;
  s.phi = Eigen::VectorXd::Zero(n + 1);
  s.chi.resize(n);
  for (Eigen::Index i = 1; i < n; ++i) s.phi[i] = v[2 * i - 1];
  for (Eigen::Index j = 0; j < n; ++j) s.chi[j] = v[2 * j];
  return s;
}

}  // namespace detail

/// Reflection overlap <psi, R psi> / <psi, psi> with
/// R: (phi(z), chi(z)) -> (phi(-z), -chi(-z)). +1 for even_phi, -1 for
/// odd_phi eigenstates; the discrete reflection commutes with the staggered
/// Hamiltonian exactly.
inline double parity_overlap(const Spinor<double>& s) {
  const Eigen::Index np = s.phi.size();
  const Eigen::Index nc = s.chi.size();
  double num = 0, den = 0;
  for (Eigen::Index i = 0; i < np; ++i) {
    num += s.phi[i] * s.phi[np - 1 - i];
    den += s.phi[i] * s.phi[i];
  }
  for (Eigen::Index j = 0; j < nc; ++j) {
    num -= s.chi[j] * s.chi[nc - 1 - j];
    den += s.chi[j] * s.chi[j];
  }
  return num / den;
}

inline Parity classify_parity(const Spinor<double>& s) {
  return parity_overlap(s) >= 0 ? Parity::even_phi : Parity::odd_phi;
}

/// Global sign convention: phi(0) > 0 for even_phi, interpolated chi(0) > 0
/// for odd_phi (chi is even in that class).
inline void fix_sign(Spinor<double>& s, Parity p) {
  const Eigen::Index n = s.chi.size();
  double pivot;
  if (p == Parity::even_phi)
    pivot = s.phi[n / 2];
  else
    pivot = 0.5 * (s.chi[n / 2 - 1] + s.chi[n / 2]);
  if (pivot < 0) {
    s.phi = -s.phi;
    s.chi = -s.chi;
  }
}

inline double boundary_leak_of(const Spinor<double>& s,
                               const Grid<double>& grid) {
  const auto rho = density(s, grid).rho;
  const double peak = rho.maxCoeff();
  if (!(peak > 0)) return std::numeric_limits<double>::infinity();
  return std::max(rho[0], rho[rho.size() - 1]) / peak;
}

/// Full block Hamiltonian of size 2 n_cells + 1, ordering
/// [phi_0..phi_n, chi_1/2..chi_{n-1/2}]:
///
///   H = [ diag(1+f)   -D        ]      (D chi)_i = (chi_{i+1/2} - chi_{i-1/2}) / h
///       [ -D^T        -diag(1-f) ]
///
/// Exactly symmetric. The hard wall phi(+-L) = 0 is imposed in place: the two
/// boundary phi rows/columns are zeroed and their diagonal set to wall_value,
/// which is far outside the gap, so the in-gap spectrum equals that of the
/// reduced (interior) problem.
template <typename Scalar>
MatrixX<Scalar> assemble_hamiltonian(const PotentialSpec<Scalar>& spec,
                                     const Grid<Scalar>& grid,
                                     Scalar wall_value = Scalar(1e6)) {
  const Eigen::Index n = grid.n_cells;
  const Scalar h = grid.spacing;
  const Eigen::Index N = 2 * n + 1;
  MatrixX<Scalar> H = MatrixX<Scalar>::Zero(N, N);
  for (Eigen::Index i = 0; i <= n; ++i)
    H(i, i) = Scalar(1) + eval_potential(spec, grid.phi_points[i]);
  for (Eigen::Index j = 0; j < n; ++j)
    H(n + 1 + j, n + 1 + j) =
        -(Scalar(1) - eval_potential(spec, grid.chi_points[j]));
  for (Eigen::Index i = 1; i < n; ++i) {
    H(i, n + 1 + i) = -Scalar(1) / h;     // -D, chi_{i+1/2}
    H(n + 1 + i, i) = -Scalar(1) / h;
    H(i, n + 1 + i - 1) = Scalar(1) / h;  // -D, chi_{i-1/2}
    H(n + 1 + i - 1, i) = Scalar(1) / h;
  }
  H(0, 0) = wall_value;
  H(n, n) = wall_value;
  return H;
}

namespace detail {

template <typename F>
void check_callable_symmetry(F&& f, const Grid<double>& grid,
                             const char* who) {
  double worst = 0, max_f = 0;
  for (Eigen::Index i = 0; i < grid.phi_points.size(); ++i) {
    const double z = grid.phi_points[i];
    const double a = f(z), b = f(-z);
    worst = std::max(worst, std::abs(a - b));
    max_f = std::max({max_f, std::abs(a), std::abs(b)});
  }
  if (worst > 1e-12 * (1.0 + max_f))
    throw std::invalid_argument(std::string(who) +
                                ": potential is not symmetric");
}

template <typename F>
std::vector<BoundState> find_bound_states_fn(F&& f, const Grid<double>& grid,
                                             const SolverOptions& opts) {
  validate_options(opts);
  check_callable_symmetry(f, grid, "find_bound_states");

  const Tridiag t = interior_tridiagonal(f, grid);
  const std::vector<double> approx = tridiag_eigs_in_window(
      t, opts.gamma_lo, opts.gamma_hi, std::min(opts.bisection_tol, 1e-13),
      opts.max_states);

  std::vector<BoundState> kept;
  int leaked = 0;
  for (double g0 : approx) {
    const auto pair = tridiag_eigenvector(t, g0);
    BoundState st;
    st.grid = grid;
    st.method = SolveMethod::matrix;
    st.gamma = pair.value;
    st.residual = pair.residual;  // ||T v - gamma v||_2, ||v||_2 = 1
    st.spinor = spinor_from_interleaved(pair.vec, grid);
    st.parity = classify_parity(st.spinor);
    st.spinor = normalize(st.spinor, grid);
    fix_sign(st.spinor, st.parity);
    st.boundary_leak = boundary_leak_of(st.spinor, grid);
    if (st.gamma <= opts.gamma_lo || st.gamma >= opts.gamma_hi) continue;
    if (st.boundary_leak > opts.leak_threshold) {
      ++leaked;
      continue;
    }
    kept.push_back(std::move(st));
  }
  if (kept.empty() && leaked > 0)
    throw std::runtime_error(
        "find_bound_states: " + std::to_string(leaked) +
        " candidate state(s) exceed the boundary-leak threshold; the "
        "computational box is too small, increase the grid half-width");
  std::sort(kept.begin(), kept.end(),
            [](const BoundState& a, const BoundState& b) {
              return a.gamma < b.gamma;
            });
  return kept;
}

}  // namespace detail

/// All in-gap bound states of the staggered-grid Hamiltonian within the
/// search window: normalized, parity-classified, residual-checked and
/// boundary-leak filtered, sorted ascending in gamma.
inline std::vector<BoundState> find_bound_states(
    const PotentialSpec<double>& spec, const Grid<double>& grid,
    const SolverOptions& opts = {}) {
  const auto rep = validate_symmetry(spec, grid);
  if (!rep.ok)
    throw std::invalid_argument(
        "find_bound_states: potential fails symmetry validation, max "
        "|f(z)-f(-z)| = " +
        std::to_string(rep.max_violation) + " at |z| = " +
        std::to_string(rep.worst_z));
  return detail::find_bound_states_fn(
      [&](double z) { return eval_potential(spec, z); }, grid, opts);
}

namespace detail {

struct HalfTrajectory {
  double phi_end = 0, chi_end = 0;
  bool diverged = false;
  Eigen::VectorXd phi_nodes;  // phi at z = 0, h, ..., L   (recording only)
  Eigen::VectorXd chi_nodes;  // chi at z = h/2, ..., L-h/2
};

// RK4 on [0, L] with steps snapped to the potential's breakpoints, so each
// step lies in a smooth piece. Endpoint samples are nudged into the piece
// interior to pick up the correct one-sided limit of f.
template <typename F>
HalfTrajectory integrate_half(F&& f, double gamma, Parity parity,
                              const Grid<double>& grid, int substeps,
                              const std::vector<double>& breaks,
                              bool record) {
  const Eigen::Index half = grid.n_cells / 2;
  const double h = grid.spacing;
  const double big = 1e100;

  HalfTrajectory tr;
  double phi = (parity == Parity::even_phi) ? 1.0 : 0.0;
  double chi = (parity == Parity::even_phi) ? 0.0 : 1.0;

  if (record) {
    tr.phi_nodes.resize(half + 1);
    tr.chi_nodes.resize(half);
    tr.phi_nodes[0] = phi;
  }

  auto rk4_piece = [&](double za, double zb) {
    const double w = zb - za;
    if (w <= 0) return;
    const double nudge = 1e-9 * w;
    const double fa = f(za + nudge);
    const double fm = f(za + 0.5 * w);
    const double fb = f(zb - nudge);
    auto rhs = [&](double fv, double p, double c, double& dp, double& dc) {
      dp = (1.0 + gamma - fv) * c;
      dc = (1.0 + fv - gamma) * p;
    };
    double k1p, k1c, k2p, k2c, k3p, k3c, k4p, k4c;
    rhs(fa, phi, chi, k1p, k1c);
    rhs(fm, phi + 0.5 * w * k1p, chi + 0.5 * w * k1c, k2p, k2c);
    rhs(fm, phi + 0.5 * w * k2p, chi + 0.5 * w * k2c, k3p, k3c);
    rhs(fb, phi + w * k3p, chi + w * k3c, k4p, k4c);
    phi += w / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
    chi += w / 6.0 * (k1c + 2 * k2c + 2 * k3c + k4c);
  };

  std::size_t bk = 0;
  const Eigen::Index n_sub = half * substeps;
  const double dz = h / substeps;
  for (Eigen::Index s = 0; s < n_sub; ++s) {
    double za = s * dz;
    const double zb = (s + 1) * dz;
    while (bk < breaks.size() && breaks[bk] <= za) ++bk;
    std::size_t b = bk;
    while (b < breaks.size() && breaks[b] < zb) {
      rk4_piece(za, breaks[b]);
      za = breaks[b];
      ++b;
    }
    rk4_piece(za, zb);

    if (!std::isfinite(phi) || !std::isfinite(chi)) {
      tr.diverged = true;
      return tr;
    }
    const double mag = std::max(std::abs(phi), std::abs(chi));
    if (mag > big) {
      const double scale = 1.0 / mag;
      phi *= scale;
      chi *= scale;
      if (record) {
        tr.phi_nodes *= scale;
        tr.chi_nodes *= scale;
      }
    }
    if (record) {
      const Eigen::Index k = s + 1;
      if (k % substeps == 0) tr.phi_nodes[k / substeps] = phi;
      if (k % substeps == substeps / 2) tr.chi_nodes[k / substeps] = chi;
    }
  }
  tr.phi_end = phi;
  tr.chi_end = chi;
  return tr;
}

inline double match_value(double phi_end, double chi_end, double gamma) {
  const double kappa = std::sqrt(1.0 - gamma * gamma);
  return chi_end + kappa * phi_end / (gamma + 1.0);
}

}  // namespace detail

template <typename F>
MatchResidual shoot_fn(F&& f, double gamma, Parity parity,
                       const Grid<double>& grid,
                       const std::vector<double>& breaks, int substeps = 4) {
  if (!(std::abs(gamma) < 1.0))
    throw std::invalid_argument("shoot: |gamma| must be < 1");
  const auto tr =
      detail::integrate_half(f, gamma, parity, grid, substeps, breaks, false);
  MatchResidual r;
  r.gamma = gamma;
  r.parity = parity;
  r.diverged = tr.diverged;
  if (!tr.diverged) r.value = detail::match_value(tr.phi_end, tr.chi_end, gamma);
  return r;
}

/// Integrate the coupled equations from z = 0 outward with parity initial
/// data (even_phi: phi(0)=1, chi(0)=0; odd_phi: phi(0)=0, chi(0)=1) and
/// report the decaying-tail mismatch at the box edge. The trajectory is
/// renormalized when it grows past 1e100; rescaling by a positive factor
/// never changes the sign of the mismatch.
inline MatchResidual shoot(const PotentialSpec<double>& spec, double gamma,
                           Parity parity, const Grid<double>& grid,
                           int substeps = 4) {
  return shoot_fn([&](double z) { return eval_potential(spec, z); }, gamma,
                  parity, grid, breakpoints(spec), substeps);
}

namespace detail {

template <typename F>
BoundState reconstruct_shooting_state(F&& f, double gamma, Parity parity,
                                      const Grid<double>& grid,
                                      const std::vector<double>& breaks,
                                      int substeps) {
  const auto tr =
      integrate_half(f, gamma, parity, grid, substeps, breaks, true);
  const Eigen::Index n = grid.n_cells;
  const Eigen::Index half = n / 2;

  BoundState st;
  st.grid = grid;
  st.method = SolveMethod::shooting;
  st.gamma = gamma;
  st.parity = parity;

  Spinor<double> s;
  s.phi.resize(n + 1);
  s.chi.resize(n);
  const double sphi = (parity == Parity::even_phi) ? 1.0 : -1.0;
  const double schi = -sphi;  // chi has the opposite reflection character
  for (Eigen::Index k = 0; k <= half; ++k) {
    s.phi[half + k] = tr.phi_nodes[k];
    s.phi[half - k] = sphi * tr.phi_nodes[k];
  }
  for (Eigen::Index k = 0; k < half; ++k) {
    s.chi[half + k] = tr.chi_nodes[k];
    s.chi[half - 1 - k] = schi * tr.chi_nodes[k];
  }
  st.spinor = normalize(s, grid);
  fix_sign(st.spinor, parity);
  st.boundary_leak = boundary_leak_of(st.spinor, grid);

  const double kappa = std::sqrt(1.0 - gamma * gamma);
  const double scale =
      std::abs(tr.chi_end) + kappa * std::abs(tr.phi_end) / (gamma + 1.0);
  const double F_val = match_value(tr.phi_end, tr.chi_end, gamma);
  st.residual = std::abs(F_val) / std::max(scale, 1e-300);
  return st;
}

template <typename F>
std::vector<BoundState> find_states_shooting_fn(F&& f,
                                                const Grid<double>& grid,
                                                const SolverOptions& opts,
                                                const std::vector<double>& breaks) {
  validate_options(opts);
  check_callable_symmetry(f, grid, "find_states_shooting");

  std::vector<BoundState> kept;
  int leaked = 0;
  for (Parity parity : {Parity::even_phi, Parity::odd_phi}) {
    const int np = opts.scan_points;
    const double dg = (opts.gamma_hi - opts.gamma_lo) / (np - 1);
    double prev_g = opts.gamma_lo;
    MatchResidual prev =
        shoot_fn(f, prev_g, parity, grid, breaks, opts.rk_substeps);
    for (int i = 1; i < np; ++i) {
      const double g = opts.gamma_lo + i * dg;
      const MatchResidual cur =
          shoot_fn(f, g, parity, grid, breaks, opts.rk_substeps);
      if (!prev.diverged && !cur.diverged && prev.value * cur.value < 0) {
        double a = prev_g, b = g, Fa = prev.value;
        while (b - a > opts.bisection_tol) {
          const double mid = 0.5 * (a + b);
          const MatchResidual rm =
              shoot_fn(f, mid, parity, grid, breaks, opts.rk_substeps);
          if (rm.diverged) break;
          if (Fa * rm.value <= 0) {
            b = mid;
          } else {
            a = mid;
            Fa = rm.value;
          }
        }
        const double root = 0.5 * (a + b);
        BoundState st = reconstruct_shooting_state(f, root, parity, grid,
                                                   breaks, opts.rk_substeps);
        if (st.boundary_leak > opts.leak_threshold)
          ++leaked;
        else
          kept.push_back(std::move(st));
      }
      prev = cur;
      prev_g = g;
    }
  }
  if (kept.empty() && leaked > 0)
    throw std::runtime_error(
        "find_states_shooting: all candidate states exceed the boundary-leak "
        "threshold; increase the grid half-width");
  std::sort(kept.begin(), kept.end(),
            [](const BoundState& a, const BoundState& b) {
              return a.gamma < b.gamma;
            });
  if (static_cast<int>(kept.size()) > opts.max_states)
    kept.resize(static_cast<std::size_t>(opts.max_states));
  return kept;
}

}  // namespace detail

/// Scan the matching residual F(gamma) on a uniform mesh per parity, bisect
/// every sign change, and rebuild each root's spinor on the staggered grid.
inline std::vector<BoundState> find_states_shooting(
    const PotentialSpec<double>& spec, const Grid<double>& grid,
    const SolverOptions& opts = {}) {
  const auto rep = validate_symmetry(spec, grid);
  if (!rep.ok)
    throw std::invalid_argument(
        "find_states_shooting: potential fails symmetry validation");
  return detail::find_states_shooting_fn(
      [&](double z) { return eval_potential(spec, z); }, grid, opts,
      breakpoints(spec));
}

namespace detail {

// One solver pass on a given grid, matching a target (parity, gamma).
template <typename F>
bool solve_matching_state(F&& f, const Grid<double>& grid,
                          const SolverOptions& opts,
                          const std::vector<double>& breaks,
                          SolveMethod method, Parity parity,
                          double gamma_prev, BoundState& out) {
  std::vector<BoundState> states;
  if (method == SolveMethod::matrix) {
    states = find_bound_states_fn(f, grid, opts);
  } else {
    states = find_states_shooting_fn(f, grid, opts, breaks);
  }
  const BoundState* best = nullptr;
  for (const auto& s : states) {
    if (s.parity != parity) continue;
    if (!best || std::abs(s.gamma - gamma_prev) < std::abs(best->gamma - gamma_prev))
      best = &s;
  }
  if (!best) return false;
  out = *best;
  return true;
}

template <typename F>
BoundState refine_state_fn(F&& f, const BoundState& state,
                           const SolverOptions& opts,
                           const std::vector<double>& breaks) {
  if (state.spinor.phi.size() == 0 || state.grid.n_cells == 0 ||
      !std::isfinite(state.gamma))
    throw std::invalid_argument("refine_state: input is not a valid bound state");
  validate_options(opts);

  std::vector<BoundState> levels;
  levels.push_back(state);
  levels.back().refine = RefinementInfo{};  // refinement restarts from scratch

  bool missing_level = false;
  for (int k = 1; k <= opts.n_refine; ++k) {
    const Grid<double> fine =
        make_grid(state.grid.half_width, state.grid.n_cells << k);
    BoundState next;
    if (!solve_matching_state(f, fine, opts, breaks, state.method,
                              state.parity, levels.back().gamma, next)) {
      missing_level = true;
      break;
    }
    levels.push_back(std::move(next));
  }

  BoundState out = levels.back();
  RefinementInfo& info = out.refine;
  info.refined = levels.size() >= 2;
  info.gamma_levels.clear();
  for (const auto& s : levels) info.gamma_levels.push_back(s.gamma);
  info.gamma_discrete = out.gamma;
  info.monotone = !missing_level;

  const std::size_t m = levels.size();
  if (m >= 2) {
    const double d_last = info.gamma_levels[m - 1] - info.gamma_levels[m - 2];
    if (m >= 3) {
      const double d_prev = info.gamma_levels[m - 2] - info.gamma_levels[m - 3];
      if (d_last == 0.0) {
        info.observed_order = std::numeric_limits<double>::infinity();
      } else if (d_prev * d_last <= 0.0 || std::abs(d_last) >= std::abs(d_prev)) {
        info.monotone = false;
      } else {
        info.observed_order = std::log2(std::abs(d_prev) / std::abs(d_last));
      }
    }
    if (info.monotone) {
      // Richardson extrapolation assuming O(h^2)
      out.gamma = info.gamma_discrete + d_last / 3.0;
      info.err_gamma = std::abs(d_last) / 3.0;
    } else {
      out.gamma = info.gamma_discrete;
      info.err_gamma = std::abs(d_last);
    }
    info.coarse_spinor = levels[m - 2].spinor;
    info.coarse_grid = levels[m - 2].grid;
  } else {
    info.err_gamma = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace detail

/// Re-solve on doubled grids n_refine times, match the state across levels
/// by (parity, nearest gamma), Richardson-extrapolate gamma assuming O(h^2)
/// and attach the error estimate |gamma_fine - gamma_coarse| / 3. The
/// returned state carries the finest-grid spinor; non-monotone level
/// sequences keep the finest discrete value with a conservative error bar.
inline BoundState refine_state(const BoundState& state,
                               const PotentialSpec<double>& spec,
                               const SolverOptions& opts = {}) {
  return detail::refine_state_fn(
      [&](double z) { return eval_potential(spec, z); }, state, opts,
      breakpoints(spec));
}

}  // namespace dirac1d

#endif  // DIRAC1D_EIGENSOLVER_HPP

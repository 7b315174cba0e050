#ifndef DIRAC1D_CORE_HPP
#define DIRAC1D_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

// Working units throughout the library: lengths in Compton lengths
// lambda_C = hbar/(m0 c), energies in units of m0 c^2, potentials as
// f(z) = U(z)/(m0 c^2). Every public quantity is dimensionless.

namespace dirac1d {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Uniform staggered grid on [-L, L].
///
/// The first spinor component phi is sampled on the n_cells+1 cell edges
/// (phi_points), the second component chi on the n_cells midpoints
/// (chi_points). n_cells must be even so that z = 0 is a phi point, which
/// serves as the parity pivot. Both point sets are symmetric about z = 0
/// bit-exactly: points are generated as signed multiples of the spacing.
template <typename Scalar = double>
struct Grid {
  Scalar half_width = Scalar(0);
  Eigen::Index n_cells = 0;
  Scalar spacing = Scalar(0);
  VectorX<Scalar> phi_points;
  VectorX<Scalar> chi_points;

  Eigen::Index n_phi() const { return n_cells + 1; }
  Eigen::Index n_chi() const { return n_cells; }
};

template <typename Scalar = double>
Grid<Scalar> make_grid(Scalar half_width, Eigen::Index n_cells) {
  if (!(half_width > Scalar(0)))
    throw std::invalid_argument("make_grid: half_width must be positive");
  if (n_cells < 2 || n_cells % 2 != 0)
    throw std::invalid_argument("make_grid: n_cells must be even and >= 2");

  Grid<Scalar> g;
  g.half_width = half_width;
  g.n_cells = n_cells;
  g.spacing = Scalar(2) * half_width / Scalar(n_cells);

  const Eigen::Index half = n_cells / 2;
  g.phi_points.resize(n_cells + 1);
  for (Eigen::Index i = 0; i <= n_cells; ++i)
    g.phi_points[i] = Scalar(i - half) * g.spacing;
  g.chi_points.resize(n_cells);
  for (Eigen::Index j = 0; j < n_cells; ++j)
    g.chi_points[j] = (Scalar(j - half) + Scalar(0.5)) * g.spacing;
  return g;
}

/// Real two-component spinor (phi, chi) on a staggered grid. Bound states of
/// the symmetric problem can be taken real, so no imaginary storage exists.
template <typename Scalar = double>
struct Spinor {
  VectorX<Scalar> phi;  // on phi_points, length n_cells+1
  VectorX<Scalar> chi;  // on chi_points, length n_cells
};

namespace detail {

template <typename Scalar>
void check_spinor_shape(const Spinor<Scalar>& s, const Grid<Scalar>& g,
                        const char* where) {
  if (s.phi.size() != g.n_phi() || s.chi.size() != g.n_chi())
    throw std::invalid_argument(std::string(where) +
                                ": spinor/grid length mismatch");
}

}  // namespace detail

/// Two-point average of chi onto the phi points. Interior points get the
/// midpoint average (exact for polynomials of degree <= 1, O(h^2) for smooth
/// chi); the two endpoints get a one-sided copy of the nearest chi sample.
template <typename Derived, typename Scalar>
VectorX<Scalar> interpolate_chi_to_phi(const Eigen::MatrixBase<Derived>& chi,
                                       const Grid<Scalar>& grid) {
  if (chi.size() != grid.n_chi())
    throw std::invalid_argument("interpolate_chi_to_phi: length mismatch");
  const Eigen::Index n = grid.n_cells;
  VectorX<Scalar> out(n + 1);
  out[0] = chi[0];
  out[n] = chi[n - 1];
  out.segment(1, n - 1) =
      Scalar(0.5) * (chi.segment(0, n - 1) + chi.segment(1, n - 1));
  return out;
}

template <typename Scalar>
VectorX<Scalar> interpolate_chi_to_phi(const Spinor<Scalar>& s,
                                       const Grid<Scalar>& grid) {
  detail::check_spinor_shape(s, grid, "interpolate_chi_to_phi");
  return interpolate_chi_to_phi(s.chi, grid);
}

/// Trapezoidal integral over [-L, L] of values sampled on phi_points.
template <typename Derived, typename Scalar>
typename Derived::Scalar quadrature(const Eigen::MatrixBase<Derived>& values,
                                    const Grid<Scalar>& grid) {
  if (values.size() != grid.n_phi())
    throw std::invalid_argument("quadrature: length mismatch");
  const auto n = values.size();
  typename Derived::Scalar s = values.sum();
  s -= (values[0] + values[n - 1]) / 2;
  return s * grid.spacing;
}

/// Probability density rho = phi^2 + chi~^2 on phi_points, with chi
/// interpolated to the phi points. Nonnegative by construction; even within
/// interpolation tolerance for bound states of a symmetric potential.
template <typename Scalar = double>
struct DensityProfile {
  VectorX<Scalar> rho;  // on phi_points
};

template <typename Scalar>
DensityProfile<Scalar> density(const Spinor<Scalar>& s,
                               const Grid<Scalar>& grid) {
  detail::check_spinor_shape(s, grid, "density");
  VectorX<Scalar> chi_t = interpolate_chi_to_phi(s.chi, grid);
  DensityProfile<Scalar> d;
  d.rho = s.phi.array().square() + chi_t.array().square();
  return d;
}

template <typename Scalar>
Scalar norm_integral(const Spinor<Scalar>& s, const Grid<Scalar>& grid) {
  return quadrature(density(s, grid).rho, grid);
}

/// Rescale so that the trapezoidal integral of phi^2 + chi~^2 equals 1.
/// The direction is preserved (output = input times a positive scalar), so
/// the operation is idempotent and scale-invariant.
template <typename Scalar>
Spinor<Scalar> normalize(const Spinor<Scalar>& s, const Grid<Scalar>& grid) {
  const Scalar nrm = norm_integral(s, grid);
  if (!(nrm > Scalar(0)))
    throw std::invalid_argument("normalize: spinor has zero norm");
  const Scalar scale = Scalar(1) / std::sqrt(nrm);
  return Spinor<Scalar>{s.phi * scale, s.chi * scale};
}

}  // namespace dirac1d

#endif  // DIRAC1D_CORE_HPP

#ifndef DIRAC1D_POTENTIALS_HPP
#define DIRAC1D_POTENTIALS_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dirac1d/core.hpp"

namespace dirac1d {

enum class PotentialFamily {
  zero,
  square_well,
  gaussian_well,
  poschl_teller,
  lorentzian_well,
  tabulated
};

inline const char* family_name(PotentialFamily f) {
  switch (f) {
    case PotentialFamily::zero: return "zero";
    case PotentialFamily::square_well: return "square_well";
    case PotentialFamily::gaussian_well: return "gaussian_well";
    case PotentialFamily::poschl_teller: return "poschl_teller";
    case PotentialFamily::lorentzian_well: return "lorentzian_well";
    case PotentialFamily::tabulated: return "tabulated";
  }
  return "?";
}

/// Finite symmetric scalar potential f(z) = U(z)/(m0 c^2).
///
/// Wells are negative: f(0) = -depth for all parametric families. The flip
/// flag negates f, turning a well into a barrier of the same profile (bound
/// states then appear mirrored near the lower gap edge). Parametric families
/// are evaluated at |z|, so f(z) == f(-z) holds bit-exactly.
template <typename Scalar = double>
struct PotentialSpec {
  PotentialFamily family = PotentialFamily::zero;
  Scalar depth = Scalar(0);  // V >= 0
  Scalar width = Scalar(0);  // half-width a (square_well) or width w (others)
  bool flip = false;
  // tabulated family: strictly increasing z with matching f samples
  std::vector<Scalar> table_z;
  std::vector<Scalar> table_f;
};

template <typename Scalar = double>
PotentialSpec<Scalar> zero_potential() {
  return {};
}

namespace detail {

template <typename Scalar>
void check_well_params(Scalar depth, Scalar width, const char* who) {
  if (!(depth >= Scalar(0)))
    throw std::invalid_argument(std::string(who) + ": depth must be >= 0");
  if (!(width > Scalar(0)))
    throw std::invalid_argument(std::string(who) + ": width must be > 0");
}

}  // namespace detail

template <typename Scalar = double>
PotentialSpec<Scalar> square_well(Scalar depth, Scalar half_width,
                                  bool flip = false) {
  detail::check_well_params(depth, half_width, "square_well");
  PotentialSpec<Scalar> s;
  s.family = PotentialFamily::square_well;
  s.depth = depth;
  s.width = half_width;
  s.flip = flip;
  return s;
}

template <typename Scalar = double>
PotentialSpec<Scalar> gaussian_well(Scalar depth, Scalar width,
                                    bool flip = false) {
  detail::check_well_params(depth, width, "gaussian_well");
  PotentialSpec<Scalar> s;
  s.family = PotentialFamily::gaussian_well;
  s.depth = depth;
  s.width = width;
  s.flip = flip;
  return s;
}

/// f(z) = -V / cosh^2(z/w)
template <typename Scalar = double>
PotentialSpec<Scalar> poschl_teller(Scalar depth, Scalar width,
                                    bool flip = false) {
  detail::check_well_params(depth, width, "poschl_teller");
  PotentialSpec<Scalar> s;
  s.family = PotentialFamily::poschl_teller;
  s.depth = depth;
  s.width = width;
  s.flip = flip;
  return s;
}

template <typename Scalar = double>
PotentialSpec<Scalar> lorentzian_well(Scalar depth, Scalar width,
                                      bool flip = false) {
  detail::check_well_params(depth, width, "lorentzian_well");
  PotentialSpec<Scalar> s;
  s.family = PotentialFamily::lorentzian_well;
  s.depth = depth;
  s.width = width;
  s.flip = flip;
  return s;
}

/// Tabulated potential, used exactly as given (no symmetrization). Linear
/// interpolation between nodes, zero outside the table range.
template <typename Scalar = double>
PotentialSpec<Scalar> tabulated_potential(std::vector<Scalar> z,
                                          std::vector<Scalar> f) {
  if (z.size() != f.size() || z.size() < 2)
    throw std::invalid_argument("tabulated_potential: need >= 2 (z, f) pairs");
  for (std::size_t i = 1; i < z.size(); ++i)
    if (!(z[i] > z[i - 1]))
      throw std::invalid_argument(
          "tabulated_potential: z values must be strictly increasing");
  PotentialSpec<Scalar> s;
  s.family = PotentialFamily::tabulated;
  s.table_z = std::move(z);
  s.table_f = std::move(f);
  return s;
}

template <typename Scalar>
Scalar eval_potential(const PotentialSpec<Scalar>& spec, Scalar z) {
  Scalar v = Scalar(0);
  const Scalar az = std::abs(z);
  switch (spec.family) {
    case PotentialFamily::zero:
      break;
    case PotentialFamily::square_well:
      v = (az <= spec.width) ? -spec.depth : Scalar(0);
      break;
    case PotentialFamily::gaussian_well: {
      const Scalar u = az / spec.width;
      v = -spec.depth * std::exp(-u * u);
      break;
    }
    case PotentialFamily::poschl_teller: {
      const Scalar c = std::cosh(az / spec.width);
      v = -spec.depth / (c * c);
      break;
    }
    case PotentialFamily::lorentzian_well: {
      const Scalar u = az / spec.width;
      v = -spec.depth / (Scalar(1) + u * u);
      break;
    }
    case PotentialFamily::tabulated: {
      const auto& tz = spec.table_z;
      const auto& tf = spec.table_f;
      if (tz.size() < 2)
        throw std::invalid_argument("eval_potential: malformed tabulated spec");
      if (z < tz.front() || z > tz.back()) return Scalar(0);
      auto it = std::upper_bound(tz.begin(), tz.end(), z);
      if (it == tz.begin()) return tf.front();
      if (it == tz.end()) return tf.back();
      const std::size_t i = static_cast<std::size_t>(it - tz.begin());
      const Scalar t = (z - tz[i - 1]) / (tz[i] - tz[i - 1]);
      return tf[i - 1] + t * (tf[i] - tf[i - 1]);
    }
  }
  return spec.flip ? -v : v;
}

/// |f| at the potential center, used to scale symmetry tolerances.
template <typename Scalar>
Scalar max_abs_potential(const PotentialSpec<Scalar>& spec) {
  if (spec.family == PotentialFamily::tabulated) {
    Scalar m = Scalar(0);
    for (Scalar v : spec.table_f) m = std::max(m, std::abs(v));
    return m;
  }
  return spec.depth;
}

/// Radius beyond which |f(z)| <= |f(0)| * 1e-10 for every family.
template <typename Scalar>
Scalar z_tail(const PotentialSpec<Scalar>& spec) {
  const Scalar eps_tail = Scalar(1e-10);
  switch (spec.family) {
    case PotentialFamily::zero:
      return Scalar(0);
    case PotentialFamily::square_well:
      return spec.width * (Scalar(1) + Scalar(1e-12));
    case PotentialFamily::gaussian_well:
      return spec.width * std::sqrt(-std::log(eps_tail));
    case PotentialFamily::poschl_teller:
      // 1/cosh^2(x) <= 4 exp(-2x)
      return spec.width * (std::log(Scalar(4) / eps_tail) / Scalar(2));
    case PotentialFamily::lorentzian_well:
      return spec.width / std::sqrt(eps_tail);
    case PotentialFamily::tabulated:
      return std::max(std::abs(spec.table_z.front()),
                      std::abs(spec.table_z.back()));
  }
  return Scalar(0);
}

/// Positive-z locations where f is not smooth; shooting integration snaps
/// its steps to these so the classical order of the integrator survives.
template <typename Scalar>
std::vector<Scalar> breakpoints(const PotentialSpec<Scalar>& spec) {
  std::vector<Scalar> b;
  if (spec.family == PotentialFamily::square_well) {
    b.push_back(spec.width);
  } else if (spec.family == PotentialFamily::tabulated) {
    for (Scalar z : spec.table_z)
      if (z > Scalar(0)) b.push_back(z);
    // kinks mirrored from the negative half of the table
    for (Scalar z : spec.table_z)
      if (z < Scalar(0)) b.push_back(-z);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
  }
  return b;
}

template <typename Scalar = double>
struct SymmetryReport {
  bool ok = true;
  Scalar max_violation = Scalar(0);
  Scalar worst_z = Scalar(0);
  Scalar tolerance = Scalar(0);
};

/// Scan all grid points for |f(z) - f(-z)|. Parametric families pass with
/// violation exactly zero; tabulated data is checked as stored.
template <typename Scalar>
SymmetryReport<Scalar> validate_symmetry(const PotentialSpec<Scalar>& spec,
                                         const Grid<Scalar>& grid) {
  SymmetryReport<Scalar> rep;
  Scalar max_f = Scalar(0);
  auto scan = [&](const VectorX<Scalar>& pts) {
    for (Eigen::Index i = 0; i < pts.size(); ++i) {
      const Scalar z = pts[i];
      const Scalar a = eval_potential(spec, z);
      const Scalar b = eval_potential(spec, -z);
      max_f = std::max({max_f, std::abs(a), std::abs(b)});
      const Scalar d = std::abs(a - b);
      if (d > rep.max_violation) {
        rep.max_violation = d;
        rep.worst_z = std::abs(z);
      }
    }
  };
  scan(grid.phi_points);
  scan(grid.chi_points);
  rep.tolerance = Scalar(1e-12) * (Scalar(1) + max_f);
  rep.ok = rep.max_violation <= rep.tolerance;
  return rep;
}

template <typename Scalar = double>
struct TabulatedLoadResult {
  PotentialSpec<Scalar> spec;
  Scalar symmetrization_deviation = Scalar(0);  // max |f(z)-f(-z)| before averaging
};

namespace detail {

template <typename Scalar>
Scalar interp_table(const std::vector<Scalar>& tz, const std::vector<Scalar>& tf,
                    Scalar z) {
  if (z < tz.front() || z > tz.back()) return Scalar(0);
  auto it = std::upper_bound(tz.begin(), tz.end(), z);
  if (it == tz.begin()) return tf.front();
  if (it == tz.end()) return tf.back();
  const std::size_t i = static_cast<std::size_t>(it - tz.begin());
  const Scalar t = (z - tz[i - 1]) / (tz[i] - tz[i - 1]);
  return tf[i - 1] + t * (tf[i] - tf[i - 1]);
}

}  // namespace detail

/// Symmetrize raw table data by averaging f(z) and f(-z) on the mirrored node
/// set. The pre-symmetrization deviation is reported so callers can reject
/// tables that were asymmetric beyond their data's accuracy.
template <typename Scalar>
TabulatedLoadResult<Scalar> symmetrize_tabulated(
    const std::vector<Scalar>& z, const std::vector<Scalar>& f) {
  PotentialSpec<Scalar> raw = tabulated_potential(z, f);  // validates
  std::vector<Scalar> u;
  u.reserve(z.size());
  for (Scalar zi : z) u.push_back(std::abs(zi));
  u.push_back(Scalar(0));
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());

  TabulatedLoadResult<Scalar> out;
  std::vector<Scalar> sz, sf;
  sz.reserve(2 * u.size());
  sf.reserve(2 * u.size());
  std::vector<Scalar> half(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Scalar fp = detail::interp_table(z, f, u[i]);
    const Scalar fm = detail::interp_table(z, f, -u[i]);
    out.symmetrization_deviation =
        std::max(out.symmetrization_deviation, std::abs(fp - fm));
    half[i] = (fp + fm) / Scalar(2);
  }
  for (std::size_t i = u.size(); i-- > 1;) {
    sz.push_back(-u[i]);
    sf.push_back(half[i]);
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    sz.push_back(u[i]);
    sf.push_back(half[i]);
  }
  out.spec = tabulated_potential(std::move(sz), std::move(sf));
  return out;
}

/// Load a two-column "z f" text file (whitespace separated, '#' comments,
/// strictly increasing z) and return the symmetrized potential.
template <typename Scalar = double>
TabulatedLoadResult<Scalar> load_tabulated(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_tabulated: cannot open " + path);
  std::vector<Scalar> z, f;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    Scalar zi, fi;
    if (!(ls >> zi >> fi))
      throw std::runtime_error("load_tabulated: parse error at " + path +
                               ":" + std::to_string(lineno));
    z.push_back(zi);
    f.push_back(fi);
  }
  if (z.size() < 2)
    throw std::runtime_error("load_tabulated: need >= 2 rows in " + path);
  for (std::size_t i = 1; i < z.size(); ++i)
    if (!(z[i] > z[i - 1]))
      throw std::runtime_error(
          "load_tabulated: z values must be strictly increasing in " + path);
  return symmetrize_tabulated(z, f);
}

}  // namespace dirac1d

#endif  // DIRAC1D_POTENTIALS_HPP

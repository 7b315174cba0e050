#ifndef DIRAC1D_RUN_HPP
#define DIRAC1D_RUN_HPP

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dirac1d/eigensolver.hpp"
#include "dirac1d/nonlinear.hpp"
#include "dirac1d/observables.hpp"

// Command-line entry points: configuration ingestion, solve/sweep/thirring/
// oracle orchestration and result serialization (per-state JSON, sweep CSV,
// oracle fixture tables). Exit-code contract: 0 only when every produced
// certificate passes (or no states exist), 1 for runtime failures, 2 for
// configuration errors.

namespace dirac1d {
namespace cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridConfig {
  double half_width = 20.0;
  Eigen::Index n_cells = 2000;
};

struct SweepConfig {
  std::string param;  // "depth", "width" (or "half_width" for square_well)
  double min = 0.0;
  double max = 0.0;
  int steps = 0;      // >= 2
};

struct RunConfig {
  PotentialSpec<double> potential;
  double table_asymmetry = 0.0;  // pre-symmetrization deviation (tabulated)
  GridConfig grid;
  SolverOptions solver;
  SolveMethod method = SolveMethod::matrix;
  std::optional<NonlinearOptions> nonlinear;
  std::optional<SweepConfig> sweep;
  std::string out_dir = "out";
  int jobs = 1;
  std::string fixture_path;  // committed oracle table to diff against
};

/// Parse the JSON run configuration; throws ConfigError with line context on
/// malformed input.
RunConfig load_config(const std::string& path);

/// DIRAC1D_OUT and DIRAC1D_JOBS override the configured output directory and
/// worker count (nothing else is overridable from the environment).
void apply_env_overrides(RunConfig& cfg);

/// Exact, versioned sweep CSV schema (v1).
inline constexpr const char* kSweepCsvHeader =
    "param,value,state_index,gamma,delta_z,abs_S,abs_first_moment,pass,"
    "err_gamma,err_delta_z";

struct SweepRow {
  double value = 0;
  int state_index = -1;  // -1 marks a failed sweep point
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double delta_z = std::numeric_limits<double>::quiet_NaN();
  double abs_S = std::numeric_limits<double>::quiet_NaN();
  double abs_first_moment = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
  double err_gamma = std::numeric_limits<double>::quiet_NaN();
  double err_delta_z = std::numeric_limits<double>::quiet_NaN();
};

/// Solve and certify every sweep point (parameter points run concurrently on
/// `jobs` workers); rows come back ordered by (value, state_index) regardless
/// of scheduling.
std::vector<SweepRow> sweep_rows(const RunConfig& cfg, int jobs,
                                 std::ostream* log = nullptr);

std::string sweep_csv(const std::vector<SweepRow>& rows,
                      const std::string& param_name);

/// Per-state JSON document (gamma, parity, grid metadata, spinor arrays and
/// the certificate with exactly its documented field names).
std::string state_record_json(const BoundState& state, const Certificate& cert);

int run_solve(const RunConfig& cfg, std::ostream& out, bool verbose = false);
int run_sweep(const RunConfig& cfg, std::ostream& out, bool verbose = false);
int run_thirring(const RunConfig& cfg, std::ostream& out, bool verbose = false);
int run_oracle(const RunConfig& cfg, std::ostream& out, bool verbose = false);

}  // namespace cli
}  // namespace dirac1d

#endif  // DIRAC1D_RUN_HPP

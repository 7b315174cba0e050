#include "dirac1d/run.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "dirac1d/oracles.hpp"

namespace dirac1d {
namespace cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string fmt_g12(double v) { return fmt("%.12g", v); }
std::string fmt_g3(double v) { return fmt("%.3g", v); }

PotentialSpec<double> potential_from_json(const json& j, const fs::path& base,
                                          double* asymmetry) {
  if (!j.is_object() || !j.contains("family"))
    throw ConfigError("config: potential.family is required");
  const std::string family = j.at("family").get<std::string>();
  const bool flip = j.value("flip", false);
  auto depth = [&] { return j.at("depth").get<double>(); };
  auto width = [&](const char* key) {
    if (j.contains(key)) return j.at(key).get<double>();
    return j.at("width").get<double>();
  };
  try {
    if (family == "zero") return zero_potential();
    if (family == "square_well")
      return square_well(depth(), width("half_width"), flip);
    if (family == "gaussian_well")
      return gaussian_well(depth(), width("width"), flip);
    if (family == "poschl_teller")
      return poschl_teller(depth(), width("width"), flip);
    if (family == "lorentzian_well")
      return lorentzian_well(depth(), width("width"), flip);
    if (family == "tabulated") {
      fs::path p = j.at("table_path").get<std::string>();
      if (p.is_relative()) p = base / p;
      auto loaded = load_tabulated<double>(p.string());
      if (asymmetry) *asymmetry = loaded.symmetrization_deviation;
      loaded.spec.flip = flip;
      return loaded.spec;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad potential block: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  throw ConfigError("config: unknown potential family '" + family + "'");
}

void solver_from_json(const json& j, SolverOptions& o, SolveMethod& method) {
  if (j.contains("gamma_window")) {
    const auto& w = j.at("gamma_window");
    if (!w.is_array() || w.size() != 2)
      throw ConfigError("config: solver.gamma_window must be [lo, hi]");
    o.gamma_lo = w[0].get<double>();
    o.gamma_hi = w[1].get<double>();
  }
  o.n_refine = j.value("n_refine", o.n_refine);
  o.bisection_tol = j.value("bisection_tol", o.bisection_tol);
  o.max_states = j.value("max_states", o.max_states);
  o.scan_points = j.value("scan_points", o.scan_points);
  o.rk_substeps = j.value("rk_substeps", o.rk_substeps);
  o.leak_threshold = j.value("leak_threshold", o.leak_threshold);
  if (j.contains("method")) {
    const std::string m = j.at("method").get<std::string>();
    if (m == "matrix")
      method = SolveMethod::matrix;
    else if (m == "shooting")
      method = SolveMethod::shooting;
    else
      throw ConfigError("config: solver.method must be 'matrix' or 'shooting'");
  }
  try {
    validate_options(o);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

bool is_sweepable_param(const PotentialSpec<double>& p, const std::string& name) {
  switch (p.family) {
    case PotentialFamily::zero:
    case PotentialFamily::tabulated:
      return false;
    case PotentialFamily::square_well:
      return name == "depth" || name == "half_width" || name == "width";
    default:
      return name == "depth" || name == "width";
  }
}

PotentialSpec<double> with_param(PotentialSpec<double> p,
                                 const std::string& name, double v) {
  if (name == "depth")
    p.depth = v;
  else
    p.width = v;
  if (!(p.depth >= 0) || !(p.width > 0))
    throw std::invalid_argument("sweep: parameter value out of range (depth >= 0, width > 0)");
  return p;
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);  // allow comments
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  RunConfig cfg;
  const fs::path base = fs::path(path).parent_path();
  try {
    if (!j.contains("potential"))
      throw ConfigError("config: missing 'potential' block");
    cfg.potential =
        potential_from_json(j.at("potential"), base, &cfg.table_asymmetry);

    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      cfg.grid.half_width = g.value("half_width", cfg.grid.half_width);
      cfg.grid.n_cells = g.value("n_cells", cfg.grid.n_cells);
    }
    if (j.contains("solver"))
      solver_from_json(j.at("solver"), cfg.solver, cfg.method);

    if (j.contains("nonlinear")) {
      const auto& nl = j.at("nonlinear");
      NonlinearOptions no;
      no.coupling = nl.value("coupling", no.coupling);
      no.mixing = nl.value("mixing", no.mixing);
      no.max_iterations = nl.value("max_iterations", no.max_iterations);
      no.fixed_point_tol = nl.value("fixed_point_tol", no.fixed_point_tol);
      no.bootstrap_width = nl.value("bootstrap_width", no.bootstrap_width);
      no.seed = cfg.potential;
      cfg.nonlinear = no;
    }
    if (j.contains("sweep")) {
      const auto& sw = j.at("sweep");
      SweepConfig sc;
      sc.param = sw.at("param").get<std::string>();
      sc.min = sw.at("min").get<double>();
      sc.max = sw.at("max").get<double>();
      sc.steps = sw.at("steps").get<int>();
      if (sc.steps < 2)
        throw ConfigError("config: sweep.steps must be >= 2");
      if (!is_sweepable_param(cfg.potential, sc.param))
        throw ConfigError("config: sweep.param '" + sc.param +
                          "' is not a numeric parameter of family '" +
                          family_name(cfg.potential.family) + "'");
      cfg.sweep = sc;
    }
    if (j.contains("output")) cfg.out_dir = j.at("output").value("dir", cfg.out_dir);
    cfg.jobs = j.value("jobs", cfg.jobs);
    if (cfg.jobs < 1) throw ConfigError("config: jobs must be >= 1");
    cfg.fixture_path = j.value("fixture_path", cfg.fixture_path);
    if (!cfg.fixture_path.empty()) {
      fs::path p = cfg.fixture_path;
      if (p.is_relative()) cfg.fixture_path = (base / p).string();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  try {
    (void)make_grid(cfg.grid.half_width, cfg.grid.n_cells);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

void apply_env_overrides(RunConfig& cfg) {
  if (const char* o = std::getenv("DIRAC1D_OUT")) cfg.out_dir = o;
  if (const char* jn = std::getenv("DIRAC1D_JOBS")) {
    const int v = std::atoi(jn);
    if (v >= 1) cfg.jobs = v;
  }
}

namespace {

json certificate_json(const Certificate& c) {
  const ErrorEstimates& e = c.discretization_error_estimates;
  json est{{"err_gamma", e.err_gamma},
           {"err_overlap_S", e.err_overlap_S},
           {"err_abs_first_moment", e.err_abs_first_moment},
           {"err_variance", e.err_variance},
           {"err_delta_z", e.err_delta_z},
           {"tol_norm", e.tol_norm},
           {"tol_mean_z", e.tol_mean_z},
           {"tol_identity13", e.tol_identity13},
           {"tol_identity11", e.tol_identity11},
           {"tol_ineq14", e.tol_ineq14}};
  return json{{"gamma", c.gamma},
              {"norm_residual", c.norm_residual},
              {"mean_z", c.mean_z},
              {"abs_first_moment", c.abs_first_moment},
              {"overlap_S", c.overlap_S},
              {"variance", c.variance},
              {"delta_z", c.delta_z},
              {"strictness_margin", c.strictness_margin},
              {"identity13_residual", c.identity13_residual},
              {"identity11_residual_phi", c.identity11_residual_phi},
              {"identity11_residual_chi", c.identity11_residual_chi},
              {"ineq14_satisfied", c.ineq14_satisfied},
              {"ineq16_satisfied", c.ineq16_satisfied},
              {"discretization_error_estimates", est}};
}

}  // namespace

std::string state_record_json(const BoundState& st, const Certificate& cert) {
  json rec;
  rec["gamma"] = st.gamma;
  rec["parity"] = parity_name(st.parity);
  rec["method"] = method_name(st.method);
  rec["residual"] = st.residual;
  rec["boundary_leak"] = st.boundary_leak;
  rec["grid"] = {{"half_width", st.grid.half_width},
                 {"n_cells", st.grid.n_cells},
                 {"spacing", st.grid.spacing}};
  json refinement{{"refined", st.refine.refined},
                  {"monotone", st.refine.monotone}};
  if (st.refine.refined) {
    refinement["gamma_levels"] = st.refine.gamma_levels;
    refinement["gamma_discrete"] = st.refine.gamma_discrete;
    refinement["err_gamma"] = st.refine.err_gamma;
    refinement["observed_order"] = st.refine.observed_order;
  }
  rec["refinement"] = refinement;
  rec["spinor"] = {
      {"phi", std::vector<double>(st.spinor.phi.begin(), st.spinor.phi.end())},
      {"chi", std::vector<double>(st.spinor.chi.begin(), st.spinor.chi.end())}};
  rec["certificate"] = certificate_json(cert);
  rec["pass"] = cert.pass();
  return rec.dump(2);
}

namespace {

struct SolveOutcome {
  std::vector<BoundState> states;
  std::vector<Certificate> certs;
};

// shared solve -> refine -> certify pipeline
SolveOutcome solve_and_certify(const PotentialSpec<double>& spec,
                               const GridConfig& gc, SolveMethod method,
                               const SolverOptions& opts) {
  const Grid<double> grid = make_grid(gc.half_width, gc.n_cells);
  SolveOutcome out;
  out.states = (method == SolveMethod::matrix)
                   ? find_bound_states(spec, grid, opts)
                   : find_states_shooting(spec, grid, opts);
  for (auto& st : out.states) {
    if (opts.n_refine > 0) st = refine_state(st, spec, opts);
    out.certs.push_back(certify(st));
  }
  return out;
}

bool table_symmetry_gate(const RunConfig& cfg, std::ostream& out) {
  if (cfg.potential.family != PotentialFamily::tabulated) return true;
  const double tol = 1e-12 * (1.0 + max_abs_potential(cfg.potential));
  if (cfg.table_asymmetry > tol) {
    out << "symmetry violation: tabulated potential deviates from f(z) = "
           "f(-z) by "
        << fmt_g3(cfg.table_asymmetry) << " (tolerance " << fmt_g3(tol)
        << ")\n";
    return false;
  }
  return true;
}

void print_state_table(const std::vector<BoundState>& states,
                       const std::vector<Certificate>& certs,
                       std::ostream& out) {
  out << "idx  parity    method    gamma                 delta_z       |S|  "
         "         int|z|rho     cert\n";
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& st = states[i];
    const auto& c = certs[i];
    char line[256];
    std::snprintf(line, sizeof line,
                  "%-4zu %-9s %-9s %-21.15g %-13.8g %-13.8g %-13.8g %s",
                  i, parity_name(st.parity), method_name(st.method), st.gamma,
                  c.delta_z, std::abs(c.overlap_S), c.abs_first_moment,
                  c.pass() ? "PASS" : "FAIL");
    out << line << "\n";
  }
}

}  // namespace

int run_solve(const RunConfig& cfg, std::ostream& out, bool verbose) {
  if (!table_symmetry_gate(cfg, out)) return 1;
  SolveOutcome res;
  try {
    res = solve_and_certify(cfg.potential, cfg.grid, cfg.method, cfg.solver);
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    return 1;
  }
  if (res.states.empty()) {
    out << "no bound states found\n";
    return 0;
  }
  fs::create_directories(cfg.out_dir);
  for (std::size_t i = 0; i < res.states.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "state_%03zu.json", i);
    std::ofstream f(fs::path(cfg.out_dir) / name);
    f << state_record_json(res.states[i], res.certs[i]) << "\n";
  }
  print_state_table(res.states, res.certs, out);
  if (verbose)
    out << "wrote " << res.states.size() << " state record(s) to "
        << cfg.out_dir << "\n";
  bool all_pass = true;
  for (const auto& c : res.certs) all_pass = all_pass && c.pass();
  return all_pass ? 0 : 1;
}

std::vector<SweepRow> sweep_rows(const RunConfig& cfg, int jobs,
                                 std::ostream* log) {
  const SweepConfig& sw = *cfg.sweep;
  std::vector<double> values(static_cast<std::size_t>(sw.steps));
  for (int i = 0; i < sw.steps; ++i)
    values[static_cast<std::size_t>(i)] =
        sw.min + (sw.max - sw.min) * i / (sw.steps - 1);

  std::vector<std::vector<SweepRow>> per_point(values.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= values.size()) return;
      const double v = values[idx];
      std::vector<SweepRow>& rows = per_point[idx];
      try {
        const PotentialSpec<double> spec =
            with_param(cfg.potential, sw.param, v);
        const SolveOutcome res =
            solve_and_certify(spec, cfg.grid, cfg.method, cfg.solver);
        for (std::size_t s = 0; s < res.states.size(); ++s) {
          const Certificate& c = res.certs[s];
          SweepRow r;
          r.value = v;
          r.state_index = static_cast<int>(s);
          r.gamma = res.states[s].gamma;
          r.delta_z = c.delta_z;
          r.abs_S = std::abs(c.overlap_S);
          r.abs_first_moment = c.abs_first_moment;
          r.pass = c.pass();
          r.err_gamma = c.discretization_error_estimates.err_gamma;
          r.err_delta_z = c.discretization_error_estimates.err_delta_z;
          rows.push_back(r);
        }
      } catch (const std::exception& e) {
        SweepRow r;
        r.value = v;
        rows.assign(1, r);  // state_index -1, pass false
        if (log) {
          std::lock_guard<std::mutex> lk(log_mutex);
          *log << "sweep point " << sw.param << " = " << v
               << " failed: " << e.what() << "\n";
        }
      }
    }
  };

  const int nw = std::max(1, std::min<int>(jobs, static_cast<int>(values.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < nw; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<SweepRow> rows;
  for (const auto& pr : per_point) rows.insert(rows.end(), pr.begin(), pr.end());
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows,
                      const std::string& param_name) {
  std::ostringstream os;
  os << kSweepCsvHeader << "\n";
  for (const auto& r : rows) {
    os << param_name << ',' << fmt_g12(r.value) << ',' << r.state_index << ','
       << fmt_g12(r.gamma) << ',' << fmt_g12(r.delta_z) << ','
       << fmt_g12(r.abs_S) << ',' << fmt_g12(r.abs_first_moment) << ','
       << (r.pass ? "true" : "false") << ',' << fmt_g3(r.err_gamma) << ','
       << fmt_g3(r.err_delta_z) << "\n";
  }
  return os.str();
}

int run_sweep(const RunConfig& cfg, std::ostream& out, bool verbose) {
  if (!cfg.sweep) {
    out << "config: sweep block is required for the sweep command\n";
    return 2;
  }
  if (!table_symmetry_gate(cfg, out)) return 1;
  const auto rows = sweep_rows(cfg, cfg.jobs, verbose ? &out : nullptr);
  fs::create_directories(cfg.out_dir);
  const fs::path csv_path = fs::path(cfg.out_dir) / "sweep.csv";
  {
    std::ofstream f(csv_path, std::ios::binary);
    f << sweep_csv(rows, cfg.sweep->param);
  }
  bool all_pass = !rows.empty();
  for (const auto& r : rows) all_pass = all_pass && r.pass;
  out << "sweep: " << rows.size() << " row(s) -> " << csv_path.string() << " ("
      << (all_pass ? "all certificates pass" : "FAILURES present") << ")\n";
  return all_pass ? 0 : 1;
}

int run_thirring(const RunConfig& cfg, std::ostream& out, bool verbose) {
  if (!cfg.nonlinear) {
    out << "config: nonlinear block is required for the thirring command\n";
    return 2;
  }
  if (!table_symmetry_gate(cfg, out)) return 1;
  const Grid<double> grid = make_grid(cfg.grid.half_width, cfg.grid.n_cells);
  fs::create_directories(cfg.out_dir);

  auto write_trace = [&](const SelfConsistentResult& r) {
    std::ofstream f(fs::path(cfg.out_dir) / "thirring_trace.csv",
                    std::ios::binary);
    f << "iteration,gamma,delta_w\n";
    for (const auto& rec : r.trace)
      f << rec.iteration << ',' << fmt_g12(rec.gamma) << ','
        << fmt_g3(rec.delta_w) << "\n";
  };

  SelfConsistentResult res;
  try {
    res = solve_self_consistent(*cfg.nonlinear, grid, cfg.solver);
  } catch (const SelfConsistentError& e) {
    write_trace(e.best);
    out << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    return 1;
  }
  write_trace(res);

  BoundState st = res.state;
  if (cfg.solver.n_refine > 0) {
    const EffectivePotential feff =
        effective_potential(cfg.nonlinear->seed, res.w_profile, grid);
    st = detail::refine_state_fn(feff, st, cfg.solver,
                                 breakpoints(cfg.nonlinear->seed));
  }
  const Certificate cert = certify(st);
  {
    std::ofstream f(fs::path(cfg.out_dir) / "thirring_state.json");
    f << state_record_json(st, cert) << "\n";
  }
  out << "self-consistent state converged after " << res.iterations
      << " iteration(s): gamma = " << fmt_g12(st.gamma)
      << ", |S| = " << fmt("%.8f", std::abs(cert.overlap_S))
      << ", delta_z = " << fmt("%.8f", cert.delta_z) << ", certificate "
      << (cert.pass() ? "PASS" : "FAIL") << "\n";
  if (verbose) {
    out << "iteration trace and state record written to " << cfg.out_dir
        << "\n";
  }
  return cert.pass() ? 0 : 1;
}

namespace {

// standard square-well oracle fixture set; kept in sync with the committed
// table under tests/fixtures/
constexpr struct {
  double depth, half_width;
} kOracleFixturePairs[] = {
    {0.5, 2.0}, {0.8, 1.5}, {0.3, 4.0}, {1.2, 1.0}, {0.9, 3.0}};

std::vector<std::string> oracle_fixture_rows() {
  std::vector<std::string> rows;
  for (const auto& p : kOracleFixturePairs) {
    for (Parity parity : {Parity::even_phi, Parity::odd_phi}) {
      const auto roots = square_well_spectrum(p.depth, p.half_width, parity);
      for (double g : roots) {
        char line[160];
        std::snprintf(line, sizeof line, "square_well %.6f %.6f %s %.14g",
                      p.depth, p.half_width, parity_name(parity), g);
        rows.emplace_back(line);
      }
    }
  }
  return rows;
}

std::vector<std::string> read_fixture_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open committed fixture table: " + path);
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    rows.push_back(line);
  }
  return rows;
}

}  // namespace

int run_oracle(const RunConfig& cfg, std::ostream& out, bool verbose) {
  const PotentialFamily fam = cfg.potential.family;
  if (fam != PotentialFamily::square_well && fam != PotentialFamily::zero) {
    out << "oracle: unsupported family '" << family_name(fam)
        << "' (only square_well has a closed matching condition; zero is the "
           "empty set)\n";
    return 2;
  }

  std::vector<std::string> rows;
  if (fam == PotentialFamily::square_well) rows = oracle_fixture_rows();

  fs::create_directories(cfg.out_dir);
  const fs::path table_path = fs::path(cfg.out_dir) / "square_well_oracle.txt";
  {
    std::time_t now = std::time(nullptr);
    char date[32];
    std::strftime(date, sizeof date, "%Y-%m-%d", std::gmtime(&now));
    std::ofstream f(table_path, std::ios::binary);
    f << "# square-well transcendental oracle fixtures\n";
    f << "# generated: " << date << "\n";
    f << "# columns: family depth half_width parity gamma\n";
    for (const auto& r : rows) f << r << "\n";
  }
  if (fam == PotentialFamily::zero) {
    out << "oracle: empty fixture set (zero potential binds nothing) -> "
        << table_path.string() << "\n";
    return 0;
  }
  out << "oracle: wrote " << rows.size() << " fixture row(s) to "
      << table_path.string() << "\n";

  if (!cfg.fixture_path.empty()) {
    std::vector<std::string> committed;
    try {
      committed = read_fixture_rows(cfg.fixture_path);
    } catch (const std::exception& e) {
      out << "oracle: " << e.what() << "\n";
      return 1;
    }
    if (committed == rows) {
      out << "oracle: regenerated fixtures match the committed table ("
          << rows.size() << " rows)\n";
      return 0;
    }
    out << "oracle: regenerated fixtures DIFFER from the committed table\n";
    const std::size_t m = std::max(committed.size(), rows.size());
    for (std::size_t i = 0; i < m; ++i) {
      const std::string& a = i < committed.size() ? committed[i] : "<missing>";
      const std::string& b = i < rows.size() ? rows[i] : "<missing>";
      if (a != b) out << "  committed: " << a << "\n  regenerated: " << b << "\n";
    }
    return 1;
  }
  if (verbose) out << "oracle: no committed table configured, skipped diff\n";
  return 0;
}

}  // namespace cli
}  // namespace dirac1d

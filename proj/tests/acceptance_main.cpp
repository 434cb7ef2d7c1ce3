// Acceptance suite: reproduces the headline figure-level results with
// pinned tolerances and prints one PASS/FAIL line per criterion.
// Usage: acceptance_tests [criterion ...]   (default: run all nine)

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "arraycav/arraycav.hpp"
#include "oracles.hpp"

using namespace arraycav;
using Clock = std::chrono::steady_clock;

namespace {

const Polarization kPolX{Complex{1.0, 0.0}, Complex{0.0, 0.0}};

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) { return format_sig(v, 6); }

SimulationConfig scan_config() {
  SimulationConfig config;
  config.lattice = {1.2, 20, 20, kPolX};
  config.beam.waist_w = 15.0;
  config.detuning = {-4.0, 4.0, 41};
  return config;
}

SimulationConfig moderate_finesse_config() {
  SimulationConfig config;
  config.lattice = {1.9, 10, 10, kPolX};
  config.beam.waist_w = 25.0;
  config.cavity = CavitySpec{1000.0};
  config.detuning = {-4.0, 4.0, 41};
  return config;
}

std::vector<double> uniform_grid(double lo, double hi, int count) {
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / double(count - 1);
  grid.back() = hi;
  return grid;
}

// --- criterion 1: resonance structure of the analytic spacing scan ---------

Outcome criterion1() {
  const auto t0 = Clock::now();
  SimulationConfig config = scan_config();
  std::vector<double> grid = uniform_grid(1.05, 2.3, 60);
  grid = refine_near_resonances(grid, 2.3, /*include_exact=*/true);
  const SweepTable table = spacing_sweep(config, grid);

  double max_c = 0.0;
  for (const SweepRow& row : table.rows) max_c = std::max(max_c, row.c_free_analytic);

  std::ostringstream detail;
  bool pass = true;
  for (double s : {std::sqrt(2.0), 2.0, std::sqrt(5.0)}) {
    std::size_t idx = table.rows.size();
    for (std::size_t i = 0; i < table.rows.size(); ++i)
      if (table.rows[i].parameter == s) idx = i;
    if (idx == table.rows.size() || idx == 0 || idx + 1 == table.rows.size()) {
      pass = false;
      detail << " [no interior row at " << fmt(s) << "]";
      continue;
    }
    const double c_here = table.rows[idx].c_free_analytic;
    const bool local_min = table.rows[idx].resonant &&
                           c_here < table.rows[idx - 1].c_free_analytic &&
                           c_here < table.rows[idx + 1].c_free_analytic;
    const bool deep = c_here < 0.05 * max_c;
    // the nearest approach point below the resonance is a local maximum
    const bool max_below = idx >= 2 &&
                           table.rows[idx - 1].c_free_analytic >
                               table.rows[idx - 2].c_free_analytic &&
                           table.rows[idx - 1].c_free_analytic > c_here;
    if (!(local_min && deep && max_below)) pass = false;
    detail << " [a=" << fmt(s) << ": C=" << fmt(c_here) << (local_min ? " min" : " NOT-min")
           << (deep ? " <5%max" : " NOT-deep") << (max_below ? " peak-below" : " NO-peak-below")
           << "]";
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 5.0) pass = false;
  detail << " maxC=" << fmt(max_c) << " runtime=" << fmt(elapsed) << "s(<5s)";
  return {pass, detail.str()};
}

// --- criterion 2: numeric vs analytic cooperativity ------------------------

Outcome criterion2() {
  const auto t0 = Clock::now();
  std::ostringstream detail;
  bool pass = true;
  for (double a : {1.2, 1.3, 1.8}) {
    SimulationConfig config = scan_config();
    config.lattice.spacing_a = a;
    const double c_analytic = free_space_rates(config).cooperativity;
    const double c_numeric = numeric_resonance(config, 0).cooperativity_numeric;
    const double rel = std::abs(c_numeric - c_analytic) / c_analytic;
    if (!(rel <= 0.25)) pass = false;
    detail << " [a=" << fmt(a) << ": C_num=" << fmt(c_numeric) << " C_an=" << fmt(c_analytic)
           << " rel=" << fmt(rel) << "]";
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 300.0) pass = false;
  detail << " runtime=" << fmt(elapsed) << "s(<300s)";
  return {pass, detail.str()};
}

// --- criterion 3: moderate-finesse inefficiency point ----------------------

Outcome criterion3() {
  const SimulationConfig config = moderate_finesse_config();
  const RateBreakdown rb = cavity_rates(config);
  const double eps_analytic = rb.inefficiency_eps;

  const double c_free_numeric = numeric_resonance(config, 0).cooperativity_numeric;
  const double c_cavity_numeric = (4.0 / kPi) * config.cavity->finesse * c_free_numeric;
  const double eps_numeric = 1.0 / (1.0 + c_cavity_numeric);

  const bool analytic_ok = eps_analytic < 0.02;
  const double ratio = eps_numeric / eps_analytic;
  const bool numeric_ok = ratio >= 0.5 && ratio <= 2.0;

  std::ostringstream detail;
  detail << "eps_analytic=" << fmt(eps_analytic) << (analytic_ok ? " <0.02" : " NOT<0.02")
         << " eps_numeric=" << fmt(eps_numeric) << " ratio=" << fmt(ratio)
         << (numeric_ok ? " within-2x" : " NOT-within-2x");
  return {analytic_ok && numeric_ok, detail.str()};
}

// --- criterion 4: high-finesse minimum-inefficiency window -----------------

Outcome criterion4() {
  SimulationConfig config;
  config.lattice = {1.35, 10, 10, kPolX};
  config.beam.waist_w = 5.0;
  config.cavity = CavitySpec{10000.0};

  std::vector<double> grid = uniform_grid(1.30, 1.414, 30);
  grid = refine_near_resonances(grid, 1.414, false);
  const SweepTable table = inefficiency_curve(config, grid);

  double min_eps = 1.0, at = 0.0;
  for (const SweepRow& row : table.rows)
    if (!row.resonant && row.epsilon < min_eps) {
      min_eps = row.epsilon;
      at = row.parameter;
    }
  const bool pass = min_eps >= 1.5e-4 && min_eps <= 7e-4;
  std::ostringstream detail;
  detail << "min_eps=" << fmt(min_eps) << " at a=" << fmt(at) << " target=[1.5e-4,7e-4]";
  return {pass, detail.str()};
}

// --- criterion 5: inefficiency non-monotonicity across resonances ----------

Outcome criterion5() {
  SimulationConfig config = moderate_finesse_config();
  std::vector<double> grid = uniform_grid(1.05, 2.3, 60);
  grid = refine_near_resonances(grid, 2.3, true);
  const SweepTable table = inefficiency_curve(config, grid);

  auto window_min = [&](double lo, double hi) {
    double best = 1.0, at = 0.0;
    for (const SweepRow& row : table.rows)
      if (!row.resonant && row.parameter >= lo && row.parameter <= hi && row.epsilon < best) {
        best = row.epsilon;
        at = row.parameter;
      }
    return std::pair<double, double>{best, at};
  };
  const auto [eps19, at19] = window_min(1.6, 2.0);
  const auto [eps138, at138] = window_min(1.3, 1.45);
  const bool pass = eps19 < eps138;
  std::ostringstream detail;
  detail << "min_eps(1.6..2.0)=" << fmt(eps19) << "@a=" << fmt(at19)
         << " min_eps(1.3..1.45)=" << fmt(eps138) << "@a=" << fmt(at138)
         << (pass ? " strictly-lower" : " NOT-lower");
  return {pass, detail.str()};
}

// --- criterion 6: two waist optima near a diffraction resonance ------------

Outcome criterion6() {
  SimulationConfig config = scan_config();
  config.lattice.spacing_a = std::sqrt(2.0) + 0.1;
  const double side = config.lattice.side();

  const std::vector<double> grid = uniform_grid(2.0, 0.5 * side, 28);
  SweepOptions options;
  options.mode = SweepMode::kNumeric;
  options.threads = 0;
  const SweepTable table = waist_sweep(config, grid, options);

  std::vector<double> coop(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) coop[i] = *table.rows[i].c_free_numeric;
  const double peak = *std::max_element(coop.begin(), coop.end());

  // local maxima of the sampled C(w) on the closed scan window; the
  // diffraction-effect peak sits at the w = 2 lambda paraxiality floor
  // for this geometry, so boundary maxima count. Prominence is height
  // above the key saddle toward higher terrain (global minimum when no
  // higher terrain exists).
  int maxima = 0;
  std::ostringstream where;
  for (std::size_t i = 0; i < coop.size(); ++i) {
    const bool above_left = i == 0 || coop[i] > coop[i - 1];
    const bool above_right = i + 1 == coop.size() || coop[i] > coop[i + 1];
    if (!(above_left && above_right)) continue;
    bool left_has_higher = false, right_has_higher = false;
    double left_col = coop[i], right_col = coop[i];
    for (std::size_t j = i; j-- > 0;) {
      left_col = std::min(left_col, coop[j]);
      if (coop[j] > coop[i]) {
        left_has_higher = true;
        break;
      }
    }
    for (std::size_t j = i + 1; j < coop.size(); ++j) {
      right_col = std::min(right_col, coop[j]);
      if (coop[j] > coop[i]) {
        right_has_higher = true;
        break;
      }
    }
    double key_saddle;
    if (left_has_higher && right_has_higher)
      key_saddle = std::max(left_col, right_col);
    else if (left_has_higher)
      key_saddle = left_col;
    else if (right_has_higher)
      key_saddle = right_col;
    else
      key_saddle = std::min(left_col, right_col);  // global maximum
    if (coop[i] - key_saddle >= 0.02 * peak) {
      ++maxima;
      where << " w=" << fmt(grid[i]) << "(C=" << fmt(coop[i]) << ")";
    }
  }
  std::ostringstream detail;
  detail << maxima << " prominence-filtered maxima (need exactly 2):" << where.str();
  return {maxima == 2, detail.str()};
}

// --- criterion 7: optimal waist location ------------------------------------

Outcome criterion7() {
  std::ostringstream detail;
  bool pass = true;
  for (double a : {1.2, 1.8}) {
    SimulationConfig config = scan_config();
    config.lattice.spacing_a = a;
    const double side = config.lattice.side();
    SweepOptions options;
    options.mode = SweepMode::kNumeric;
    options.threads = 0;
    const WaistOptimum opt = optimal_waist(config, 2.0, 0.75 * side, options, 24);
    const bool in_band = opt.w_over_side >= 0.2 && opt.w_over_side <= 0.3;
    if (!in_band) pass = false;
    detail << " [a=" << fmt(a) << ": w_opt=" << fmt(opt.global.w)
           << " w/L=" << fmt(opt.w_over_side) << (in_band ? " in[0.2,0.3]" : " OUT-of-band")
           << "]";
  }
  return {pass, detail.str()};
}

// --- criterion 8: property suite --------------------------------------------

Outcome criterion8() {
  std::ostringstream detail;
  bool pass = true;
  auto check = [&](bool ok, const std::string& name) {
    if (!ok) pass = false;
    detail << " [" << name << (ok ? " ok" : " FAIL") << "]";
  };

  // eta vs quadrature <= 1e-6
  {
    bool ok = true;
    for (const auto& [w, side] : std::initializer_list<std::pair<double, double>>{
             {15.0, 24.0}, {25.0, 19.0}, {5.0, 13.5}}) {
      const double quad = oracles::integrate_2d(
          [&](double x, double y) {
            const double u = mode_profile({x, y}, w);
            return u * u;
          },
          -side / 2, side / 2, -side / 2, side / 2, 80);
      ok = ok && std::abs(overlap_eta(w, side) - quad) <= 1e-6;
    }
    check(ok, "eta-quadrature");
  }

  // gamma_diff hand sum at a = 1.2, x polarization, 1e-5 relative
  {
    const DiffractionLoss loss = gamma_diff(1.2, kPolX);
    const double ratio = loss.value / gamma_zero(1.2);
    check(std::abs(ratio - 4.72367) <= 1e-5 * 4.72367, "gamma-diff-hand-sum");
  }

  // shifted sum reduces exactly at k = 0
  {
    bool ok = true;
    for (double a : {0.9, 1.2, 1.7, 2.2})
      ok = ok && gamma_diff_shifted(a, kPolX, {0.0, 0.0}).value == gamma_diff(a, kPolX).value;
    check(ok, "shifted-k0-identity");
  }

  // cavity / free cooperativity ratio is exactly (4/pi) F
  {
    SimulationConfig config = scan_config();
    config.cavity = CavitySpec{1000.0};
    const double ratio =
        cavity_rates(config).cooperativity / free_space_rates(config).cooperativity;
    check(std::abs(ratio / ((4.0 / kPi) * 1000.0) - 1.0) <= 1e-14, "cavity-scale-exact");
  }

  // solver residual <= 1e-10 |Omega|
  {
    const LatticeSpec lattice{1.2, 10, 10, kPolX};
    const std::vector<Vec2> pos = atom_positions(lattice);
    const InteractionMatrix m = InteractionMatrix::build(pos, kPolX);
    const SteadyStateSolver solver(m, 0.0);
    const Eigen::VectorXcd omega = drive_vector(pos, BeamSpec{5.0}, lattice);
    bool ok = true;
    for (double delta : {-1.0, 0.0, 0.7}) {
      const Eigen::VectorXcd beta = solver.solve(delta, omega);
      const Eigen::VectorXcd residual =
          -omega - m.coupling() * beta - Complex(delta, 0.5) * beta;
      ok = ok && residual.norm() <= 1e-10 * omega.norm();
    }
    check(ok, "solver-residual");
  }

  // N <= 3 solves match the closed-form inverse to 1e-10
  {
    bool ok = true;
    for (double delta : {-0.8, 0.0, 1.1}) {
      const std::vector<Vec2> pos{{-0.6, 0.0}, {0.0, 0.45}, {0.7, -0.2}};
      const InteractionMatrix m = InteractionMatrix::build(pos, kPolX);
      Eigen::VectorXcd omega(3);
      omega << Complex(0.1, 0.0), Complex(0.0, -0.2), Complex(0.3, 0.1);
      const Eigen::VectorXcd mine = solve_steady_state(m, omega, delta);
      const Eigen::VectorXcd oracle = oracles::closed_form_steady_state(m.coupling(), omega, delta);
      ok = ok && (mine - oracle).norm() <= 1e-10 * oracle.norm();
    }
    check(ok, "small-N-closed-form");
  }

  // collective mode rate at k = 0 within 10% of Gamma0 + gamma_diff
  {
    const LatticeSpec lattice{1.2, 60, 60, kPolX};
    const double rate = collective_mode_rate(atom_positions(lattice), kPolX, {0.0, 0.0});
    const double target = gamma_zero(1.2) + gamma_diff(1.2, kPolX).value;
    check(std::abs(rate - target) / target <= 0.10, "collective-rate-60x60");
  }

  // subwavelength benchmark: a = 0.8, 30 x 30, w = 6: peak |r|^2 >= 0.8,
  // with passivity and the thin-sheet identity across the scan
  {
    SimulationConfig config;
    config.lattice = {0.8, 30, 30, kPolX};
    config.beam.waist_w = 6.0;
    config.detuning = {-5.0, 5.0, 41};
    const ScatteringProblem problem(config.lattice, 0.0);
    const Spectrum spectrum = problem.scan(config.beam, config.detuning, 0);
    bool passive = true, thin_sheet = true;
    for (const SpectrumPoint& p : spectrum.points) {
      passive = passive && std::abs(p.r) <= 1.0 + 1e-6 && p.balance >= -1e-6;
      thin_sheet = thin_sheet && p.t == 1.0 + p.r;
    }
    const ResonanceSummary summary = extract_resonance(
        spectrum, [&](double d) { return problem.reflection_at(d, config.beam); });
    check(passive, "passivity");
    check(thin_sheet, "thin-sheet-t=1+r");
    const double peak_r2 = summary.r0 * summary.r0;
    if (!(peak_r2 >= 0.8)) pass = false;
    detail << " [subwavelength-peak |r|^2=" << fmt(peak_r2) << (peak_r2 >= 0.8 ? " ok" : " FAIL")
           << "]";
  }

  return {pass, detail.str()};
}

// --- criterion 9: determinism ------------------------------------------------

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(ARRAYCAV_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  CliResult result;
  if (!pipe) return result;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) result.output.append(buf.data(), n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

Outcome criterion9() {
  const std::filesystem::path dir = std::filesystem::temp_directory_path();
  const std::filesystem::path analytic_cfg = dir / "arraycav_acc_analytic.json";
  const std::filesystem::path numeric_cfg = dir / "arraycav_acc_num.json";
  {
    std::ofstream out(analytic_cfg);
    out << R"({"lattice": {"a": 1.2, "nx": 20, "ny": 20}, "beam": {"waist": 15.0}})";
  }
  {
    std::ofstream out(numeric_cfg);
    out << R"({"lattice": {"a": 1.2, "nx": 6, "ny": 6}, "beam": {"waist": 4.0},)"
        << R"( "detuning": {"min": -4.0, "max": 4.0, "count": 21}})";
  }

  std::ostringstream detail;
  bool pass = true;

  const std::string analytic_args =
      "scan-spacing " + analytic_cfg.string() + " --a-min 1.05 --a-max 2.3 --steps 60";
  const CliResult a1 = run_cli(analytic_args);
  const CliResult a2 = run_cli(analytic_args);
  const bool analytic_ok = a1.exit_code == 0 && a1.output == a2.output && !a1.output.empty();
  if (!analytic_ok) pass = false;
  detail << "[analytic rerun " << (analytic_ok ? "identical" : "DIFFERS") << " "
         << a1.output.size() << "B]";

  const std::string numeric_args =
      "scan-spacing " + numeric_cfg.string() + " --a-min 1.15 --a-max 1.35 --steps 3 --numeric";
  const CliResult n1 = run_cli(numeric_args + " --threads 1");
  const CliResult n2 = run_cli(numeric_args + " --threads 2");
  const CliResult n3 = run_cli(numeric_args + " --threads 2");
  const bool numeric_ok = n1.exit_code == 0 && n1.output == n2.output && n2.output == n3.output &&
                          !n1.output.empty();
  if (!numeric_ok) pass = false;
  detail << " [numeric threads 1 vs 2 " << (numeric_ok ? "identical" : "DIFFERS") << " "
         << n1.output.size() << "B]";

  std::filesystem::remove(analytic_cfg);
  std::filesystem::remove(numeric_cfg);
  return {pass, detail.str()};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "spacing-scan resonance structure, analytic", criterion1},
      {2, "numeric vs analytic cooperativity", criterion2},
      {3, "moderate-finesse inefficiency point", criterion3},
      {4, "high-finesse minimum-inefficiency window", criterion4},
      {5, "inefficiency non-monotonicity", criterion5},
      {6, "two waist optima near resonance", criterion6},
      {7, "optimal waist location", criterion7},
      {8, "property suite", criterion8},
      {9, "determinism", criterion9},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.id) == selected.end())
      continue;
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
              << "): " << outcome.detail << "\n";
    std::cout.flush();
    if (!outcome.pass) ++failures;
  }
  return failures;
}

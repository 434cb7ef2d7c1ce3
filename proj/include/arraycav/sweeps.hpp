#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "arraycav/analytics.hpp"
#include "arraycav/common.hpp"
#include "arraycav/model.hpp"
#include "arraycav/parallel.hpp"
#include "arraycav/scattering.hpp"

namespace arraycav {

struct SweepRow {
  double parameter = 0.0;
  double eta = 0.0;
  double gamma_zero = 0.0;
  double gamma_diff = 0.0;  ///< +inf on resonant rows
  double c_free_analytic = 0.0;
  std::optional<double> c_free_numeric{};
  double c_cavity = 0.0;  ///< equals c_free_analytic without a cavity
  double r0 = 0.0;
  double epsilon = 1.0;
  bool resonant = false;
};

struct SweepTable {
  std::string parameter_name;  ///< "a" or "w"
  std::string parameter_unit = "lambda";
  std::vector<SweepRow> rows;
};

enum class SweepMode { kAnalytic, kNumeric };

struct SweepOptions {
  SweepMode mode = SweepMode::kAnalytic;
  int threads = 0;                   ///< 0 = hardware concurrency
  int atom_cap = 3600;               ///< dense-solve limit for numeric mode
  DetuningGrid detuning{-4.0, 4.0, 41};  ///< per-point numeric scan grid
};

/// Inserts cluster points approaching each diffraction resonance inside
/// the grid span from below (offsets 1e-1, 3e-2, 1e-2, 3e-3), plus the
/// resonance values themselves when requested; deduplicated and sorted.
inline std::vector<double> refine_near_resonances(std::vector<double> grid, double a_max,
                                                  bool include_exact = false) {
  if (grid.empty()) return grid;
  const double lo = *std::min_element(grid.begin(), grid.end());
  const double hi = *std::max_element(grid.begin(), grid.end());
  static constexpr double kOffsets[] = {1e-1, 3e-2, 1e-2, 3e-3};
  for (double s : resonance_spacings(a_max)) {
    if (s < lo || s > hi) continue;
    for (double off : kOffsets) {
      const double a = s - off;
      if (a >= lo && a <= hi) grid.push_back(a);
    }
    if (include_exact) grid.push_back(s);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

namespace detail {

inline SweepRow analytic_row(const SimulationConfig& config, double parameter) {
  const RateBreakdown rb = free_space_rates(config);
  SweepRow row;
  row.parameter = parameter;
  row.eta = rb.eta;
  row.gamma_zero = rb.gamma_zero;
  row.gamma_diff = rb.loss_diff;
  row.c_free_analytic = rb.cooperativity;
  row.resonant = rb.resonant_flag;
  const double scale = config.cavity ? (4.0 / kPi) * config.cavity->finesse : 1.0;
  row.c_cavity = row.resonant ? 0.0 : scale * rb.cooperativity;
  row.r0 = row.resonant ? 0.0 : row.c_cavity / (1.0 + row.c_cavity);
  row.epsilon = row.resonant ? 1.0 : 1.0 / (1.0 + row.c_cavity);
  return row;
}

inline void check_numeric_feasible(const SimulationConfig& config, const SweepOptions& options) {
  if (config.lattice.atom_count() > options.atom_cap)
    throw CapacityError("numeric sweep needs " + std::to_string(config.lattice.atom_count()) +
                        " atoms; cap is " + std::to_string(options.atom_cap));
}

inline double numeric_cooperativity(const ScatteringProblem& problem, const BeamSpec& beam,
                                    const DetuningGrid& grid) {
  const Spectrum spectrum = problem.scan(beam, grid, 1);
  const ResonanceSummary summary = extract_resonance(
      spectrum, [&](double delta) { return problem.reflection_at(delta, beam); });
  return summary.cooperativity_numeric;
}

}  // namespace detail

/// One row per lattice spacing; numeric mode adds the coupled-dipole
/// cooperativity from a detuning scan at every spacing.
inline SweepTable spacing_sweep(const SimulationConfig& base, const std::vector<double>& a_grid,
                                const SweepOptions& options = {}) {
  for (double a : a_grid)
    if (!(a > 0.0)) throw ValidationError("spacing grid values must be > 0");

  SweepTable table;
  table.parameter_name = "a";
  table.rows.resize(a_grid.size());

  std::vector<SimulationConfig> configs(a_grid.size(), base);
  for (std::size_t i = 0; i < a_grid.size(); ++i) configs[i].lattice.spacing_a = a_grid[i];

  for (std::size_t i = 0; i < a_grid.size(); ++i)
    table.rows[i] = detail::analytic_row(configs[i], a_grid[i]);

  if (options.mode == SweepMode::kNumeric) {
    detail::check_numeric_feasible(base, options);
    for (const SweepRow& row : table.rows)
      if (row.resonant)
        throw ValidationError("numeric spacing sweep grid contains a diffraction resonance");
    parallel_for(a_grid.size(), options.threads, [&](std::size_t i) {
      const ScatteringProblem problem(configs[i].lattice, configs[i].gamma_s);
      table.rows[i].c_free_numeric =
          detail::numeric_cooperativity(problem, configs[i].beam, options.detuning);
    });
  }
  return table;
}

/// One row per beam waist at fixed lattice. Numeric mode shares the
/// factorized lattice problem across all waists.
inline SweepTable waist_sweep(const SimulationConfig& base, const std::vector<double>& w_grid,
                              const SweepOptions& options = {}) {
  const double w_max_allowed = 0.75 * base.lattice.side();
  for (double w : w_grid)
    if (w < kMinParaxialWaist || w > w_max_allowed)
      throw ValidationError("waist grid values must lie in [2, 0.75 * L_a]");

  SweepTable table;
  table.parameter_name = "w";
  table.rows.resize(w_grid.size());

  std::vector<SimulationConfig> configs(w_grid.size(), base);
  for (std::size_t i = 0; i < w_grid.size(); ++i) configs[i].beam.waist_w = w_grid[i];

  for (std::size_t i = 0; i < w_grid.size(); ++i)
    table.rows[i] = detail::analytic_row(configs[i], w_grid[i]);

  if (options.mode == SweepMode::kNumeric) {
    detail::check_numeric_feasible(base, options);
    const ScatteringProblem problem(base.lattice, base.gamma_s);
    parallel_for(w_grid.size(), options.threads, [&](std::size_t i) {
      table.rows[i].c_free_numeric =
          detail::numeric_cooperativity(problem, configs[i].beam, options.detuning);
    });
  }
  return table;
}

struct WaistPeak {
  double w = 0.0;
  double c = 0.0;
};

struct WaistOptimum {
  std::vector<WaistPeak> maxima;  ///< up to two, sorted by w
  WaistPeak global{};
  double w_over_side = 0.0;
};

/// Numeric waist optimization: coarse grid, prominence-filtered interior
/// maxima (at most two), then golden-section refinement around each.
inline WaistOptimum optimal_waist(const SimulationConfig& base, double w_min, double w_max,
                                  const SweepOptions& options = {}, int coarse_points = 24) {
  if (!(w_min < w_max)) throw ValidationError("waist range must satisfy w_min < w_max");
  if (coarse_points < 4) throw ValidationError("coarse grid needs at least 4 points");
  detail::check_numeric_feasible(base, options);

  std::vector<double> grid(static_cast<std::size_t>(coarse_points));
  for (int i = 0; i < coarse_points; ++i)
    grid[static_cast<std::size_t>(i)] = w_min + (w_max - w_min) * i / double(coarse_points - 1);

  const ScatteringProblem problem(base.lattice, base.gamma_s);
  auto coop_at = [&](double w) {
    BeamSpec beam = base.beam;
    beam.waist_w = w;
    return detail::numeric_cooperativity(problem, beam, options.detuning);
  };

  std::vector<double> coop(grid.size());
  parallel_for(grid.size(), options.threads, [&](std::size_t i) { coop[i] = coop_at(grid[i]); });

  const double peak = *std::max_element(coop.begin(), coop.end());

  struct Candidate {
    std::size_t index;
    double prominence;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    if (!(coop[i] > coop[i - 1] && coop[i] > coop[i + 1])) continue;
    double valley_left = coop[i];
    for (std::size_t j = i; j-- > 0;) {
      valley_left = std::min(valley_left, coop[j]);
      if (coop[j] > coop[i]) break;
    }
    double valley_right = coop[i];
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      valley_right = std::min(valley_right, coop[j]);
      if (coop[j] > coop[i]) break;
    }
    const double prominence = coop[i] - std::max(valley_left, valley_right);
    if (prominence >= 0.02 * peak) candidates.push_back({i, prominence});
  }
  if (candidates.empty()) throw GridError("extend waist range: no interior maximum");

  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    return coop[a.index] > coop[b.index];
  });
  if (candidates.size() > 2) candidates.resize(2);
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.index < b.index; });

  WaistOptimum result;
  for (const Candidate& cand : candidates) {
    const std::size_t i = cand.index;
    const double lo = grid[i - 1], hi = grid[i + 1];
    const double xtol = 1e-3 * std::max(1.0, 0.5 * (lo + hi));
    const detail::GoldenPoint refined = detail::golden_max(coop_at, lo, hi, xtol, 40);
    WaistPeak wp;
    if (refined.f >= coop[i]) {
      wp = {refined.x, refined.f};
    } else {
      wp = {grid[i], coop[i]};
    }
    result.maxima.push_back(wp);
  }
  result.global = *std::max_element(
      result.maxima.begin(), result.maxima.end(),
      [](const WaistPeak& a, const WaistPeak& b) { return a.c < b.c; });
  result.w_over_side = result.global.w / base.lattice.side();
  return result;
}

/// Spacing sweep of the coupling inefficiency for a cavity configuration.
inline SweepTable inefficiency_curve(const SimulationConfig& base, const std::vector<double>& a_grid,
                                     const SweepOptions& options = {}) {
  if (!base.cavity) throw ValidationError("inefficiency_curve requires a cavity");
  return spacing_sweep(base, a_grid, options);
}

}  // namespace arraycav

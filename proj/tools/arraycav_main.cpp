// arraycav command-line front end: analytic rate reports, coupled-dipole
// detuning scans, and the spacing/waist/inefficiency sweeps, emitted as
// CSV or JSON for plotting.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "arraycav/arraycav.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_path;
  std::string format = "csv";
  bool no_comment = false;
  bool numeric = false;
  bool allow_small_waist = false;
  int threads = -1;
  double finesse = 0.0;
};

void add_output_flags(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--out", opts.out_path, "Write to this file instead of standard output");
  cmd->add_option("--format", opts.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  cmd->add_flag("--no-comment", opts.no_comment, "Suppress the leading '#' comment line");
}

void add_config_flags(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("config", opts.config_path, "JSON configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--threads", opts.threads, "Worker threads (0 = all cores)");
  cmd->add_flag("--allow-small-waist", opts.allow_small_waist,
                "Downgrade the 2-lambda paraxiality floor to a warning");
}

int resolve_threads_opt(const CommonOpts& opts) {
  if (opts.threads >= 0) return opts.threads;
  if (const char* env = std::getenv("ARRAYCAV_THREADS")) {
    try {
      return std::max(0, std::stoi(env));
    } catch (...) {
      throw arraycav::ValidationError("ARRAYCAV_THREADS must be an integer");
    }
  }
  return 0;
}

arraycav::SimulationConfig load_config(const CommonOpts& opts) {
  arraycav::SimulationConfig config = arraycav::load_config_file(opts.config_path);
  if (opts.finesse > 0.0) config.cavity = arraycav::CavitySpec{opts.finesse};
  if (opts.allow_small_waist && config.beam.waist_w < arraycav::kMinParaxialWaist)
    std::cerr << "warning: beam waist " << config.beam.waist_w
              << " is below the 2-lambda paraxiality floor\n";
  return arraycav::validate_config(config, {opts.allow_small_waist});
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  out << text;
}

std::vector<double> linspace(double lo, double hi, int count) {
  if (!(lo < hi)) throw arraycav::ValidationError("range minimum must be below maximum");
  if (count < 2) throw arraycav::ValidationError("steps must be >= 2");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / double(count - 1);
  out.back() = hi;
  return out;
}

void run_point(const CommonOpts& opts) {
  const arraycav::SimulationConfig config = load_config(opts);
  const arraycav::RateBreakdown rb =
      config.cavity ? arraycav::cavity_rates(config) : arraycav::free_space_rates(config);
  const arraycav::OutputOptions out_opts{!opts.no_comment};
  if (opts.format == "json") {
    arraycav::Json j = arraycav::to_json(rb);
    if (opts.numeric)
      j["numeric"] = arraycav::to_json(arraycav::numeric_resonance(config, resolve_threads_opt(opts)));
    emit(j.dump(2) + "\n", opts.out_path);
    return;
  }
  std::string text = arraycav::to_csv(rb, out_opts);
  if (opts.numeric) {
    const arraycav::ResonanceSummary s = arraycav::numeric_resonance(config, resolve_threads_opt(opts));
    text += "r0,delta_peak,linewidth_fwhm,cooperativity_numeric\n";
    text += arraycav::format_sig(s.r0) + "," + arraycav::format_sig(s.delta_peak) + "," +
            arraycav::format_sig(s.linewidth_fwhm) + "," +
            arraycav::format_sig(s.cooperativity_numeric) + "\n";
  }
  emit(text, opts.out_path);
}

void emit_table(const arraycav::SweepTable& table, const CommonOpts& opts) {
  if (opts.format == "json")
    emit(arraycav::to_json(table).dump(2) + "\n", opts.out_path);
  else
    emit(arraycav::to_csv(table, {!opts.no_comment}), opts.out_path);
}

void run_spacing_like(const CommonOpts& opts, double a_min, double a_max, int steps, bool refine,
                      bool require_cavity) {
  arraycav::SimulationConfig config = load_config(opts);
  if (require_cavity && !config.cavity)
    throw arraycav::ValidationError(
        "inefficiency requires a cavity (config cavity block or --finesse)");
  std::vector<double> grid = linspace(a_min, a_max, steps);
  if (refine)
    grid = arraycav::refine_near_resonances(grid, a_max, /*include_exact=*/!opts.numeric);
  arraycav::SweepOptions sweep_opts;
  sweep_opts.mode = opts.numeric ? arraycav::SweepMode::kNumeric : arraycav::SweepMode::kAnalytic;
  sweep_opts.threads = resolve_threads_opt(opts);
  emit_table(arraycav::spacing_sweep(config, grid, sweep_opts), opts);
}

void run_scan_waist(const CommonOpts& opts, double w_min, double w_max, int steps) {
  const arraycav::SimulationConfig config = load_config(opts);
  arraycav::SweepOptions sweep_opts;
  sweep_opts.mode = opts.numeric ? arraycav::SweepMode::kNumeric : arraycav::SweepMode::kAnalytic;
  sweep_opts.threads = resolve_threads_opt(opts);
  emit_table(arraycav::waist_sweep(config, linspace(w_min, w_max, steps), sweep_opts), opts);
}

void run_scan_detuning(const CommonOpts& opts) {
  const arraycav::SimulationConfig config = load_config(opts);
  const arraycav::Spectrum spectrum =
      arraycav::detuning_scan(config, resolve_threads_opt(opts));
  if (opts.format == "json")
    emit(arraycav::to_json(spectrum).dump(2) + "\n", opts.out_path);
  else
    emit(arraycav::to_csv(spectrum, {!opts.no_comment}), opts.out_path);
}

void run_resonances(const CommonOpts& opts, double max_spacing) {
  const std::vector<double> spacings = arraycav::resonance_spacings(max_spacing);
  if (opts.format == "json") {
    arraycav::Json j;
    j["resonances"] = spacings;
    emit(j.dump(2) + "\n", opts.out_path);
    return;
  }
  emit(arraycav::resonance_list_text(spacings), opts.out_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Light-matter coupling rates for 2D atomic arrays in free space and in a cavity"};
  app.set_version_flag("--version", arraycav::kVersion);
  app.require_subcommand(1);

  CommonOpts point_opts, spacing_opts, waist_opts, detuning_opts, ineff_opts, res_opts;
  double a_min = 0.0, a_max = 0.0, w_min = 0.0, w_max = 0.0, ineff_a_min = 0.0, ineff_a_max = 0.0;
  int spacing_steps = 0, waist_steps = 0, ineff_steps = 0;
  bool spacing_no_refine = false, ineff_no_refine = false;
  double res_max = 0.0;

  CLI::App* point = app.add_subcommand("point", "Analytic rate breakdown for one configuration");
  add_config_flags(point, point_opts);
  add_output_flags(point, point_opts);
  point_opts.format = "json";
  point->get_option("--format")->default_str("json");
  point->add_flag("--numeric", point_opts.numeric, "Add the coupled-dipole resonance summary");
  point->add_option("--finesse", point_opts.finesse, "Override the cavity finesse");

  CLI::App* spacing = app.add_subcommand("scan-spacing", "Cooperativity versus lattice spacing");
  add_config_flags(spacing, spacing_opts);
  add_output_flags(spacing, spacing_opts);
  spacing->add_option("--a-min", a_min, "Smallest spacing (lambda)")->required();
  spacing->add_option("--a-max", a_max, "Largest spacing (lambda)")->required();
  spacing->add_option("--steps", spacing_steps, "Number of uniform grid points")->required();
  spacing->add_flag("--numeric", spacing_opts.numeric, "Add coupled-dipole cooperativities");
  spacing->add_option("--finesse", spacing_opts.finesse, "Override the cavity finesse");
  spacing->add_flag("--no-refine", spacing_no_refine, "Skip resonance-approach grid refinement");

  CLI::App* waist = app.add_subcommand("scan-waist", "Cooperativity versus beam waist");
  add_config_flags(waist, waist_opts);
  add_output_flags(waist, waist_opts);
  waist->add_option("--w-min", w_min, "Smallest waist (lambda)")->required();
  waist->add_option("--w-max", w_max, "Largest waist (lambda)")->required();
  waist->add_option("--steps", waist_steps, "Number of uniform grid points")->required();
  waist->add_flag("--numeric", waist_opts.numeric, "Add coupled-dipole cooperativities");
  waist->add_option("--finesse", waist_opts.finesse, "Override the cavity finesse");

  CLI::App* detuning = app.add_subcommand("scan-detuning", "Reflection spectrum r(delta)");
  add_config_flags(detuning, detuning_opts);
  add_output_flags(detuning, detuning_opts);

  CLI::App* ineff = app.add_subcommand("inefficiency", "Coupling inefficiency versus spacing");
  add_config_flags(ineff, ineff_opts);
  add_output_flags(ineff, ineff_opts);
  ineff->add_option("--a-min", ineff_a_min, "Smallest spacing (lambda)")->required();
  ineff->add_option("--a-max", ineff_a_max, "Largest spacing (lambda)")->required();
  ineff->add_option("--steps", ineff_steps, "Number of uniform grid points")->required();
  ineff->add_flag("--numeric", ineff_opts.numeric, "Add coupled-dipole cooperativities");
  ineff->add_option("--finesse", ineff_opts.finesse, "Override the cavity finesse");
  ineff->add_flag("--no-refine", ineff_no_refine, "Skip resonance-approach grid refinement");

  CLI::App* resonances = app.add_subcommand("resonances", "Diffraction resonance spacings");
  resonances
      ->add_option("--max", res_max, "Largest spacing to enumerate (lambda), must be >= 1")
      ->required()
      ->check(CLI::Validator(
          [](std::string& value) {
            try {
              if (std::stod(value) >= 1.0) return std::string{};
            } catch (...) {
            }
            return std::string{"--max must be a number >= 1"};
          },
          "MAX>=1"));
  add_output_flags(resonances, res_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (point->parsed()) run_point(point_opts);
    if (spacing->parsed())
      run_spacing_like(spacing_opts, a_min, a_max, spacing_steps, !spacing_no_refine, false);
    if (waist->parsed()) run_scan_waist(waist_opts, w_min, w_max, waist_steps);
    if (detuning->parsed()) run_scan_detuning(detuning_opts);
    if (ineff->parsed())
      run_spacing_like(ineff_opts, ineff_a_min, ineff_a_max, ineff_steps, !ineff_no_refine, true);
    if (resonances->parsed()) run_resonances(res_opts, res_max);
  } catch (const arraycav::CapacityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const arraycav::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

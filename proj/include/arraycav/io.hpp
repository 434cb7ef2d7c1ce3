#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "arraycav/analytics.hpp"
#include "arraycav/common.hpp"
#include "arraycav/model.hpp"
#include "arraycav/scattering.hpp"
#include "arraycav/sweeps.hpp"

namespace arraycav {

using Json = nlohmann::ordered_json;

/// Fixed-significant-digit rendering; '.' decimal separator regardless of
/// the C locale.
inline std::string format_sig(double value, int digits = 9) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0.0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  std::string out(buf);
  std::replace(out.begin(), out.end(), ',', '.');
  return out;
}

struct OutputOptions {
  bool comment_header = true;
};

namespace detail {

inline std::string csv_join(std::initializer_list<std::string> cells) {
  std::string line;
  bool first = true;
  for (const std::string& c : cells) {
    if (!first) line += ',';
    line += c;
    first = false;
  }
  line += '\n';
  return line;
}

inline double json_loss(const Json& v) {
  return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

inline Json loss_json(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sweep tables
// ---------------------------------------------------------------------------

inline std::string to_csv(const SweepTable& table, const OutputOptions& options = {}) {
  std::string out;
  if (options.comment_header)
    out += "# " + std::string(table.parameter_name == "a" ? "spacing" : "waist") +
           " sweep; " + table.parameter_name + " in units of lambda; rates in units of gamma; C dimensionless\n";
  out += table.parameter_name +
         ",eta,gamma0,gamma_diff,C_free_analytic,C_free_numeric,C_cavity,r0,epsilon,resonant\n";
  for (const SweepRow& row : table.rows) {
    out += detail::csv_join(
        {format_sig(row.parameter), format_sig(row.eta), format_sig(row.gamma_zero),
         format_sig(row.gamma_diff), format_sig(row.c_free_analytic),
         row.c_free_numeric ? format_sig(*row.c_free_numeric) : "nan",
         format_sig(row.c_cavity), format_sig(row.r0), format_sig(row.epsilon),
         row.resonant ? "1" : "0"});
  }
  return out;
}

inline Json to_json(const SweepTable& table) {
  Json j;
  j["swept_parameter"] = {{"name", table.parameter_name}, {"unit", table.parameter_unit}};
  Json rows = Json::array();
  for (const SweepRow& row : table.rows) {
    Json r;
    r[table.parameter_name] = row.parameter;
    r["eta"] = row.eta;
    r["gamma0"] = row.gamma_zero;
    r["gamma_diff"] = detail::loss_json(row.gamma_diff);
    r["C_free_analytic"] = row.c_free_analytic;
    r["C_free_numeric"] = row.c_free_numeric ? Json(*row.c_free_numeric) : Json(nullptr);
    r["C_cavity"] = row.c_cavity;
    r["r0"] = row.r0;
    r["epsilon"] = row.epsilon;
    r["resonant"] = row.resonant;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

inline std::string to_csv(const Spectrum& spectrum, const OutputOptions& options = {}) {
  std::string out;
  if (options.comment_header)
    out += "# detuning scan; delta in units of gamma; r,t dimensionless field amplitudes\n";
  out += "delta,re_r,im_r,abs_r2,abs_t2,balance\n";
  for (const SpectrumPoint& p : spectrum.points) {
    out += detail::csv_join({format_sig(p.delta), format_sig(p.r.real()), format_sig(p.r.imag()),
                             format_sig(std::norm(p.r)), format_sig(std::norm(p.t)),
                             format_sig(p.balance)});
  }
  return out;
}

inline Json to_json(const Spectrum& spectrum) {
  Json rows = Json::array();
  for (const SpectrumPoint& p : spectrum.points) {
    Json r;
    r["delta"] = p.delta;
    r["re_r"] = p.r.real();
    r["im_r"] = p.r.imag();
    r["abs_r2"] = std::norm(p.r);
    r["abs_t2"] = std::norm(p.t);
    r["balance"] = p.balance;
    rows.push_back(std::move(r));
  }
  Json j;
  j["rows"] = std::move(rows);
  return j;
}

// ---------------------------------------------------------------------------
// Rate breakdowns (point reports)
// ---------------------------------------------------------------------------

inline Json to_json(const RateBreakdown& rb) {
  Json j;
  j["gamma_zero"] = rb.gamma_zero;
  j["eta"] = rb.eta;
  j["gamma_target"] = rb.gamma_target;
  j["loss_s"] = rb.loss_s;
  j["loss_overlap"] = rb.loss_overlap;
  j["loss_diff"] = detail::loss_json(rb.loss_diff);
  j["cooperativity"] = rb.cooperativity;
  j["efficiency_r0"] = rb.efficiency_r0;
  j["inefficiency_eps"] = rb.inefficiency_eps;
  j["resonant_flag"] = rb.resonant_flag;
  return j;
}

inline RateBreakdown rate_breakdown_from_json(const Json& j) {
  RateBreakdown rb;
  rb.gamma_zero = j.at("gamma_zero").get<double>();
  rb.eta = j.at("eta").get<double>();
  rb.gamma_target = j.at("gamma_target").get<double>();
  rb.loss_s = j.at("loss_s").get<double>();
  rb.loss_overlap = j.at("loss_overlap").get<double>();
  rb.loss_diff = detail::json_loss(j.at("loss_diff"));
  rb.cooperativity = j.at("cooperativity").get<double>();
  rb.efficiency_r0 = j.at("efficiency_r0").get<double>();
  rb.inefficiency_eps = j.at("inefficiency_eps").get<double>();
  rb.resonant_flag = j.at("resonant_flag").get<bool>();
  return rb;
}

inline std::string to_csv(const RateBreakdown& rb, const OutputOptions& options = {}) {
  std::string out;
  if (options.comment_header) out += "# analytic rate breakdown; rates in units of gamma\n";
  out += "gamma_zero,eta,gamma_target,loss_s,loss_overlap,loss_diff,cooperativity,"
         "efficiency_r0,inefficiency_eps,resonant_flag\n";
  out += detail::csv_join({format_sig(rb.gamma_zero), format_sig(rb.eta),
                           format_sig(rb.gamma_target), format_sig(rb.loss_s),
                           format_sig(rb.loss_overlap), format_sig(rb.loss_diff),
                           format_sig(rb.cooperativity), format_sig(rb.efficiency_r0),
                           format_sig(rb.inefficiency_eps), rb.resonant_flag ? "1" : "0"});
  return out;
}

inline Json to_json(const ResonanceSummary& summary) {
  Json j;
  j["r0"] = summary.r0;
  j["delta_peak"] = summary.delta_peak;
  j["linewidth_fwhm"] = summary.linewidth_fwhm;
  j["cooperativity_numeric"] = summary.cooperativity_numeric;
  return j;
}

// ---------------------------------------------------------------------------
// Resonance lists
// ---------------------------------------------------------------------------

inline std::string resonance_list_text(const std::vector<double>& spacings) {
  std::string out;
  for (double s : spacings) out += format_sig(s, 10) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Configuration documents
// ---------------------------------------------------------------------------

namespace detail {

inline void require_known_keys(const Json& obj, std::initializer_list<const char*> allowed,
                               const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        known = true;
        break;
      }
    if (!known) throw ValidationError("unknown key '" + it.key() + "' in " + where);
  }
}

inline double require_number(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ValidationError("missing key '" + std::string(key) + "' in " + where);
  const Json& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(std::string(key) + " in " + where + " must be a number");
  return v.get<double>();
}

inline int require_integer(const Json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ValidationError("missing key '" + std::string(key) + "' in " + where);
  const Json& v = obj.at(key);
  if (!v.is_number_integer()) throw ValidationError(std::string(key) + " in " + where + " must be an integer");
  return v.get<int>();
}

}  // namespace detail

/// Parses the JSON configuration document. Schema:
///   lattice {a, nx, ny, polarization: [re_ex, im_ex, re_ey, im_ey]}
///   beam {waist}
///   cavity {finesse}            (optional)
///   gamma_s                     (optional, default 0)
///   detuning {min, max, count}  (optional, default [-5, 5] x 81)
/// Unknown keys are rejected. Validation of values is left to
/// validate_config.
inline SimulationConfig parse_config_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config document must be a JSON object");
  detail::require_known_keys(doc, {"lattice", "beam", "cavity", "gamma_s", "detuning"}, "config");

  SimulationConfig config;

  if (!doc.contains("lattice")) throw ValidationError("missing key 'lattice' in config");
  const Json& lattice = doc.at("lattice");
  if (!lattice.is_object()) throw ValidationError("lattice must be an object");
  detail::require_known_keys(lattice, {"a", "nx", "ny", "polarization"}, "lattice");
  config.lattice.spacing_a = detail::require_number(lattice, "a", "lattice");
  config.lattice.nx = detail::require_integer(lattice, "nx", "lattice");
  config.lattice.ny = detail::require_integer(lattice, "ny", "lattice");
  if (lattice.contains("polarization")) {
    const Json& pol = lattice.at("polarization");
    if (!pol.is_array() || pol.size() != 4)
      throw ValidationError(
          "polarization must be [re_ex, im_ex, re_ey, im_ey] (in-plane components only)");
    for (const Json& v : pol)
      if (!v.is_number()) throw ValidationError("polarization components must be numbers");
    config.lattice.polarization.x = {pol[0].get<double>(), pol[1].get<double>()};
    config.lattice.polarization.y = {pol[2].get<double>(), pol[3].get<double>()};
  }

  if (!doc.contains("beam")) throw ValidationError("missing key 'beam' in config");
  const Json& beam = doc.at("beam");
  if (!beam.is_object()) throw ValidationError("beam must be an object");
  detail::require_known_keys(beam, {"waist"}, "beam");
  config.beam.waist_w = detail::require_number(beam, "waist", "beam");

  if (doc.contains("cavity")) {
    const Json& cavity = doc.at("cavity");
    if (!cavity.is_object()) throw ValidationError("cavity must be an object");
    detail::require_known_keys(cavity, {"finesse"}, "cavity");
    config.cavity = CavitySpec{detail::require_number(cavity, "finesse", "cavity")};
  }

  if (doc.contains("gamma_s")) {
    if (!doc.at("gamma_s").is_number()) throw ValidationError("gamma_s must be a number");
    config.gamma_s = doc.at("gamma_s").get<double>();
  }

  if (doc.contains("detuning")) {
    const Json& det = doc.at("detuning");
    if (!det.is_object()) throw ValidationError("detuning must be an object");
    detail::require_known_keys(det, {"min", "max", "count"}, "detuning");
    config.detuning.min = detail::require_number(det, "min", "detuning");
    config.detuning.max = detail::require_number(det, "max", "detuning");
    config.detuning.count = detail::require_integer(det, "count", "detuning");
  }

  return config;
}

inline SimulationConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_json(buf.str());
}

inline Json to_json(const SimulationConfig& config) {
  Json j;
  j["lattice"] = {{"a", config.lattice.spacing_a},
                  {"nx", config.lattice.nx},
                  {"ny", config.lattice.ny},
                  {"polarization",
                   {config.lattice.polarization.x.real(), config.lattice.polarization.x.imag(),
                    config.lattice.polarization.y.real(), config.lattice.polarization.y.imag()}}};
  j["beam"] = {{"waist", config.beam.waist_w}};
  if (config.cavity) j["cavity"] = {{"finesse", config.cavity->finesse}};
  j["gamma_s"] = config.gamma_s;
  j["detuning"] = {{"min", config.detuning.min},
                   {"max", config.detuning.max},
                   {"count", config.detuning.count}};
  return j;
}

}  // namespace arraycav

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "arraycav/common.hpp"

namespace arraycav {

// All lengths are in units of the transition wavelength lambda and all
// rates in units of the single-atom free-space decay rate gamma.

enum class BeamSide { kLeft, kRight };

/// Square (or rectangular) array geometry on the xy plane.
struct LatticeSpec {
  double spacing_a = 1.0;  ///< lattice spacing a / lambda
  int nx = 1;
  int ny = 1;
  Polarization polarization{};

  int atom_count() const { return nx * ny; }
  double side_x() const { return spacing_a * nx; }
  double side_y() const { return spacing_a * ny; }
  /// Side length L_a with L_a^2 = a^2 * N; equals side_x for nx == ny.
  double side() const { return spacing_a * std::sqrt(double(nx) * double(ny)); }
};

/// Gaussian target mode illuminating the array from one side.
struct BeamSpec {
  double waist_w = 15.0;  ///< waist w / lambda
  BeamSide side = BeamSide::kLeft;
  /// Drive amplitude is fixed; results scale trivially with it.
  static constexpr double kInputAmplitude = 1.0;
};

/// Paraxiality floor: below w = 2 lambda the paraxial mode projection is
/// unreliable, so smaller waists are rejected unless explicitly allowed.
inline constexpr double kMinParaxialWaist = 2.0;

struct CavitySpec {
  double finesse = 1.0;
};

struct DetuningGrid {
  double min = -5.0;  ///< units of gamma
  double max = 5.0;
  int count = 81;

  std::vector<double> points() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    const double step = (max - min) / double(count - 1);
    for (int i = 0; i < count; ++i) out.push_back(min + step * i);
    out.back() = max;
    return out;
  }
};

struct SimulationConfig {
  LatticeSpec lattice{};
  BeamSpec beam{};
  std::optional<CavitySpec> cavity{};
  double gamma_s = 0.0;  ///< non-collective loss rate, units of gamma
  DetuningGrid detuning{};
};

struct ValidatePolicy {
  /// Downgrades the paraxiality floor from an error to caller-side warning.
  bool allow_small_waist = false;
};

/// Checks every type invariant and returns the config unchanged on success.
/// Throws ValidationError naming the offending field otherwise.
inline SimulationConfig validate_config(SimulationConfig config, ValidatePolicy policy = {}) {
  const LatticeSpec& lat = config.lattice;
  if (!(lat.spacing_a > 0.0)) throw ValidationError("lattice.a must be > 0");
  if (lat.nx < 1) throw ValidationError("nx must be >= 1");
  if (lat.ny < 1) throw ValidationError("ny must be >= 1");
  if (std::abs(lat.polarization.norm2() - 1.0) > 1e-12)
    throw ValidationError("polarization must be a unit vector (|e_x|^2 + |e_y|^2 = 1)");

  if (!(config.beam.waist_w > 0.0)) throw ValidationError("beam.waist must be > 0");
  if (config.beam.waist_w < kMinParaxialWaist && !policy.allow_small_waist)
    throw ValidationError("beam.waist below paraxiality floor of 2 lambda");

  if (config.cavity && !(config.cavity->finesse >= 1.0))
    throw ValidationError("cavity.finesse must be >= 1");

  if (!(config.gamma_s >= 0.0)) throw ValidationError("gamma_s must be >= 0");

  if (config.detuning.count < 3) throw ValidationError("detuning.count must be >= 3");
  if (!(config.detuning.min < config.detuning.max))
    throw ValidationError("detuning.min must be < detuning.max");

  return config;
}

/// Atom positions on the centered square lattice, row-major over (j, i):
/// index n = j * nx + i maps to ((i - (nx-1)/2) a, (j - (ny-1)/2) a).
inline std::vector<Vec2> atom_positions(const LatticeSpec& lattice) {
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(lattice.atom_count()));
  const double cx = 0.5 * (lattice.nx - 1);
  const double cy = 0.5 * (lattice.ny - 1);
  for (int j = 0; j < lattice.ny; ++j)
    for (int i = 0; i < lattice.nx; ++i)
      out.push_back({(i - cx) * lattice.spacing_a, (j - cy) * lattice.spacing_a});
  return out;
}

}  // namespace arraycav

#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace arraycav {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

using Complex = std::complex<double>;

/// Raised when a configuration or argument violates a documented invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a numeric request exceeds the dense-solve atom cap.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a linear solve is too ill conditioned to trust
/// (near-dark-mode degeneracy) or fails to reach the residual target.
struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a scan grid cannot bracket the feature it is asked to
/// resolve ("widen detuning grid", "extend waist range").
struct GridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline double norm(const Vec3& v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

/// In-plane dipole polarization (e_x, e_y); unit norm after validation.
struct Polarization {
  Complex x{1.0, 0.0};
  Complex y{0.0, 0.0};

  double norm2() const { return std::norm(x) + std::norm(y); }
};

}  // namespace arraycav

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "arraycav/analytics.hpp"
#include "arraycav/common.hpp"
#include "arraycav/model.hpp"
#include "arraycav/parallel.hpp"

namespace arraycav {

/// Free-space dipole-dipole coupling projected on the in-plane dipole
/// orientation e_d, in units of gamma. With k = 2 pi, rho = k |r| and
/// c2 = |e_d* . r_hat|^2:
///   g(r) = (3/4) e^{i rho} [ (1 - c2)/rho + (1 - 3 c2)(i/rho^2 - 1/rho^3) ]
/// Im g -> 1/2 as rho -> 0 (single-atom decay gamma/2).
inline Complex green_kernel(const Vec3& r, const Polarization& pol) {
  const double dist = norm(r);
  if (!(dist > 0.0))
    throw ValidationError("green_kernel: zero separation (diagonal is handled by convention)");
  const double rho = kTwoPi * dist;
  const Complex e_dot_rhat =
      std::conj(pol.x) * (r.x / dist) + std::conj(pol.y) * (r.y / dist);
  const double c2 = std::norm(e_dot_rhat);
  const Complex phase{std::cos(rho), std::sin(rho)};
  const Complex transverse = (1.0 - c2) / rho;
  const Complex near_field = (1.0 - 3.0 * c2) * (Complex(0.0, 1.0) / (rho * rho) - 1.0 / (rho * rho * rho));
  return 0.75 * phase * (transverse + near_field);
}

/// Dense dipole-dipole coupling matrix g_nm for n != m; the diagonal is
/// held at zero (the -gamma/2 decay enters the solve, the elastic
/// self-shift is absorbed into the detuning).
class InteractionMatrix {
 public:
  static InteractionMatrix build(const std::vector<Vec2>& positions, const Polarization& pol) {
    const int n = static_cast<int>(positions.size());
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        const Vec3 r{positions[a].x - positions[b].x, positions[a].y - positions[b].y, 0.0};
        if (!(norm(r) > 0.0)) throw ValidationError("duplicate atom positions");
        const Complex val = green_kernel(r, pol);
        g(a, b) = val;
        g(b, a) = val;
      }
    return InteractionMatrix(std::move(g));
  }

  int dim() const { return static_cast<int>(coupling_.rows()); }
  const Eigen::MatrixXcd& coupling() const { return coupling_; }

 private:
  explicit InteractionMatrix(Eigen::MatrixXcd g) : coupling_(std::move(g)) {}
  Eigen::MatrixXcd coupling_;
};

namespace detail {

/// LU factorization of an upper-Hessenberg matrix with adjacent-row
/// pivoting; factor once per shift, then solve many right-hand sides
/// in O(n^2).
class HessenbergFactor {
 public:
  HessenbergFactor(const Eigen::MatrixXcd& hess, Complex shift)
      : w_(hess), swapped_(static_cast<std::size_t>(hess.rows()), false) {
    const int n = static_cast<int>(w_.rows());
    w_.diagonal().array() += shift;
    for (int k = 0; k + 1 < n; ++k) {
      if (std::abs(w_(k + 1, k)) > std::abs(w_(k, k))) {
        w_.row(k).segment(k, n - k).swap(w_.row(k + 1).segment(k, n - k));
        swapped_[static_cast<std::size_t>(k)] = true;
      }
      const Complex pivot = w_(k, k);
      if (pivot == Complex(0.0, 0.0)) throw SolveError("singular shifted system");
      const Complex mult = w_(k + 1, k) / pivot;
      if (mult != Complex(0.0, 0.0) && k + 1 < n)
        w_.row(k + 1).segment(k + 1, n - k - 1) -= mult * w_.row(k).segment(k + 1, n - k - 1);
      w_(k + 1, k) = mult;  // store the multiplier in the eliminated slot
    }
    if (w_(n - 1, n - 1) == Complex(0.0, 0.0)) throw SolveError("singular shifted system");
  }

  Eigen::VectorXcd solve(Eigen::VectorXcd b) const {
    const int n = static_cast<int>(w_.rows());
    for (int k = 0; k + 1 < n; ++k) {
      if (swapped_[static_cast<std::size_t>(k)]) std::swap(b(k), b(k + 1));
      b(k + 1) -= w_(k + 1, k) * b(k);
    }
    for (int i = n - 1; i >= 0; --i) {
      Complex acc = b(i);
      const int len = n - i - 1;
      if (len > 0) acc -= (w_.row(i).segment(i + 1, len) * b.segment(i + 1, len))(0);
      b(i) = acc / w_(i, i);
    }
    return b;
  }

 private:
  Eigen::MatrixXcd w_;
  std::vector<bool> swapped_;
};

/// Higham-style 1-norm estimate of the inverse via a handful of solves.
/// The system matrix is symmetric, so adjoint solves reduce to
/// conjugated forward solves.
template <class SolveFn>
double inverse_norm1_estimate(int n, const SolveFn& solve) {
  auto adjoint_solve = [&](const Eigen::VectorXcd& rhs) {
    return solve(rhs.conjugate().eval()).conjugate().eval();
  };
  Eigen::VectorXcd x = Eigen::VectorXcd::Constant(n, Complex(1.0 / n, 0.0));
  double est = 0.0;
  int last_j = -1;
  for (int iter = 0; iter < 5; ++iter) {
    const Eigen::VectorXcd y = solve(x);
    est = std::max(est, y.lpNorm<1>());
    Eigen::VectorXcd xi(n);
    for (int i = 0; i < n; ++i) {
      const double mag = std::abs(y(i));
      xi(i) = mag > 0.0 ? y(i) / mag : Complex(1.0, 0.0);
    }
    const Eigen::VectorXcd z = adjoint_solve(xi);
    int j = 0;
    double zmax = 0.0;
    for (int i = 0; i < n; ++i) {
      const double m = std::abs(z(i));
      if (m > zmax) {
        zmax = m;
        j = i;
      }
    }
    if (j == last_j || zmax <= std::real(z.dot(x))) break;
    last_j = j;
    x.setZero();
    x(j) = Complex(1.0, 0.0);
  }
  return est;
}

}  // namespace detail

/// Direct dense solver for the driven steady state
///   [(i delta - (1 + gamma_s)/2) I + i G] beta = -i Omega,
/// equivalently (G + z I) beta = -Omega with z = delta + i (1 + gamma_s)/2.
///
/// The coupling matrix is reduced once to Hessenberg form by a unitary
/// similarity; each detuning then costs O(n^2), which is what makes
/// detuning scans and waist sweeps over a fixed lattice cheap. Solutions
/// are iteratively refined against the original matrix until the
/// residual is below 1e-10 * |Omega|.
class SteadyStateSolver {
 public:
  static constexpr double kResidualTolerance = 1e-10;
  static constexpr double kConditionLimit = 1e12;

  explicit SteadyStateSolver(InteractionMatrix matrix, double gamma_s = 0.0)
      : matrix_(std::move(matrix)), gamma_s_(gamma_s) {
    const Eigen::MatrixXcd& g = matrix_.coupling();
    const int n = matrix_.dim();
    if (n == 1) {
      hess_ = g;
      q_ = Eigen::MatrixXcd::Identity(1, 1);
    } else {
      Eigen::HessenbergDecomposition<Eigen::MatrixXcd> hd(g);
      hess_ = hd.matrixH();
      q_ = hd.matrixQ();
    }
    col_abs_sums_.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) col_abs_sums_[static_cast<std::size_t>(j)] = g.col(j).cwiseAbs().sum();
  }

  int dim() const { return matrix_.dim(); }
  double gamma_s() const { return gamma_s_; }
  const InteractionMatrix& matrix() const { return matrix_; }

  Eigen::VectorXcd solve(double delta, const Eigen::VectorXcd& drive) const {
    const Complex shift{delta, 0.5 * (1.0 + gamma_s_)};
    const detail::HessenbergFactor factor(hess_, shift);
    auto apply_inverse = [&](const Eigen::VectorXcd& rhs) -> Eigen::VectorXcd {
      return q_ * factor.solve(q_.adjoint() * rhs);
    };

    const double cond = condition_estimate(shift, apply_inverse);
    if (cond > kConditionLimit)
      throw SolveError("near-dark-mode degeneracy: condition estimate exceeds 1e12");

    const Eigen::VectorXcd rhs = -drive;
    Eigen::VectorXcd beta = apply_inverse(rhs);
    const double target = kResidualTolerance * drive.norm();
    const Eigen::MatrixXcd& g = matrix_.coupling();
    for (int step = 0; step < 4; ++step) {
      const Eigen::VectorXcd residual = rhs - g * beta - shift * beta;
      if (residual.norm() <= target) return beta;
      beta += apply_inverse(residual);
    }
    const Eigen::VectorXcd residual = rhs - g * beta - shift * beta;
    if (residual.norm() <= target) return beta;
    throw SolveError("steady-state solve failed to reach residual tolerance");
  }

 private:
  template <class ApplyInverse>
  double condition_estimate(Complex shift, const ApplyInverse& apply_inverse) const {
    const int n = matrix_.dim();
    double norm1 = 0.0;
    for (int j = 0; j < n; ++j)
      norm1 = std::max(norm1, col_abs_sums_[static_cast<std::size_t>(j)] + std::abs(shift));
    const double inv_norm1 = detail::inverse_norm1_estimate(n, apply_inverse);
    return norm1 * inv_norm1;
  }

  InteractionMatrix matrix_;
  double gamma_s_;
  Eigen::MatrixXcd hess_;
  Eigen::MatrixXcd q_;
  std::vector<double> col_abs_sums_;
};

/// One-shot variant for callers that do not reuse the factorization.
inline Eigen::VectorXcd solve_steady_state(const InteractionMatrix& matrix,
                                           const Eigen::VectorXcd& drive, double delta,
                                           double gamma_s = 0.0) {
  SteadyStateSolver solver(matrix, gamma_s);
  return solver.solve(delta, drive);
}

/// Drive amplitudes Omega_n = sqrt(Gamma0) a u(r_n) E_in / sqrt(2); the
/// 1/sqrt(2) implements one-sided illumination of the symmetric mode.
inline Eigen::VectorXcd drive_vector(const std::vector<Vec2>& positions, const BeamSpec& beam,
                                     const LatticeSpec& lattice) {
  const double amp = std::sqrt(gamma_zero(lattice.spacing_a)) * lattice.spacing_a *
                     BeamSpec::kInputAmplitude / std::sqrt(2.0);
  Eigen::VectorXcd omega(static_cast<Eigen::Index>(positions.size()));
  for (std::size_t i = 0; i < positions.size(); ++i)
    omega(static_cast<Eigen::Index>(i)) = amp * mode_profile(positions[i], beam.waist_w);
  return omega;
}

/// Projection of the solved dipoles back onto the target mode:
/// r = i sqrt(Gamma0) a sum_n u*(r_n) beta_n / sqrt(2), and t = 1 + r.
inline Complex project_reflection(const Eigen::VectorXcd& amplitudes,
                                  const std::vector<Vec2>& positions, const BeamSpec& beam,
                                  const LatticeSpec& lattice) {
  Complex acc{0.0, 0.0};
  for (std::size_t i = 0; i < positions.size(); ++i)
    acc += mode_profile(positions[i], beam.waist_w) * amplitudes(static_cast<Eigen::Index>(i));
  return Complex(0.0, 1.0) * std::sqrt(gamma_zero(lattice.spacing_a)) * lattice.spacing_a * acc /
         std::sqrt(2.0);
}

/// Steady state at one detuning: dipole amplitudes, reflection and
/// transmission of the target mode, and the power balance.
struct DipoleSolution {
  double delta = 0.0;
  Eigen::VectorXcd amplitudes;
  Complex r{0.0, 0.0};
  Complex t{1.0, 0.0};
  double balance = 0.0;  ///< 1 - |r|^2 - |t|^2
};

struct SpectrumPoint {
  double delta = 0.0;
  Complex r{0.0, 0.0};
  Complex t{1.0, 0.0};
  double balance = 0.0;
};

struct Spectrum {
  std::vector<SpectrumPoint> points;
};

struct ResonanceSummary {
  double r0 = 0.0;                    ///< refined peak |r|
  double delta_peak = 0.0;            ///< numeric collective shift
  double linewidth_fwhm = 0.0;        ///< from half-max crossings of |r|^2
  double cooperativity_numeric = 0.0; ///< r0 / (1 - r0)
};

/// Bundles the lattice-dependent state (positions, coupling matrix,
/// factorized solver) so detuning scans and waist sweeps can share it.
class ScatteringProblem {
 public:
  explicit ScatteringProblem(const LatticeSpec& lattice, double gamma_s = 0.0)
      : lattice_(lattice),
        positions_(atom_positions(lattice)),
        solver_(InteractionMatrix::build(positions_, lattice.polarization), gamma_s) {}

  const LatticeSpec& lattice() const { return lattice_; }
  const std::vector<Vec2>& positions() const { return positions_; }
  const SteadyStateSolver& solver() const { return solver_; }

  DipoleSolution solution_at(double delta, const BeamSpec& beam) const {
    DipoleSolution sol;
    sol.delta = delta;
    const Eigen::VectorXcd omega = drive_vector(positions_, beam, lattice_);
    sol.amplitudes = solver_.solve(delta, omega);
    sol.r = project_reflection(sol.amplitudes, positions_, beam, lattice_);
    sol.t = 1.0 + sol.r;
    sol.balance = 1.0 - std::norm(sol.r) - std::norm(sol.t);
    return sol;
  }

  Complex reflection_at(double delta, const BeamSpec& beam) const {
    const Eigen::VectorXcd omega = drive_vector(positions_, beam, lattice_);
    const Eigen::VectorXcd beta = solver_.solve(delta, omega);
    return project_reflection(beta, positions_, beam, lattice_);
  }

  Spectrum scan(const BeamSpec& beam, const DetuningGrid& grid, int threads = 1) const {
    const std::vector<double> deltas = grid.points();
    Spectrum spectrum;
    spectrum.points.resize(deltas.size());
    parallel_for(deltas.size(), threads, [&](std::size_t i) {
      const DipoleSolution sol = solution_at(deltas[i], beam);
      spectrum.points[i] = {sol.delta, sol.r, sol.t, sol.balance};
    });
    return spectrum;
  }

 private:
  LatticeSpec lattice_;
  std::vector<Vec2> positions_;
  SteadyStateSolver solver_;
};

inline Spectrum detuning_scan(const SimulationConfig& config, int threads = 1) {
  const ScatteringProblem problem(config.lattice, config.gamma_s);
  return problem.scan(config.beam, config.detuning, threads);
}

namespace detail {

/// Vertex of the parabola through three points; falls back to the middle
/// abscissa when the points are collinear.
inline double parabolic_vertex(double x0, double f0, double x1, double f1, double x2, double f2) {
  const double denom = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0);
  if (denom == 0.0) return x1;
  const double num = (x1 - x0) * (x1 - x0) * (f1 - f2) - (x1 - x2) * (x1 - x2) * (f1 - f0);
  double v = x1 - 0.5 * num / denom;
  return std::clamp(v, std::min(x0, x2), std::max(x0, x2));
}

struct GoldenPoint {
  double x = 0.0;
  double f = 0.0;
};

/// Golden-section maximization on [lo, hi]; returns the best interior
/// point seen. xtol is an absolute width target.
template <class Fn>
GoldenPoint golden_max(const Fn& f, double lo, double hi, double xtol, int max_iters) {
  const double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  GoldenPoint best = f1 >= f2 ? GoldenPoint{x1, f1} : GoldenPoint{x2, f2};
  for (int it = 0; it < max_iters && (b - a) > xtol; ++it) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
    const GoldenPoint cand = f1 >= f2 ? GoldenPoint{x1, f1} : GoldenPoint{x2, f2};
    if (cand.f > best.f) best = cand;
  }
  return best;
}

}  // namespace detail

/// Peak extraction: grid maximum, parabolic refinement through the three
/// surrounding points, then golden-section polish; linewidth from
/// half-max crossings of |r|^2 located by bisection. reflect_at must
/// evaluate the same spectrum the scan sampled.
inline ResonanceSummary extract_resonance(const Spectrum& spectrum,
                                          const std::function<Complex(double)>& reflect_at) {
  const std::vector<SpectrumPoint>& pts = spectrum.points;
  if (pts.size() < 3) throw GridError("widen detuning grid: need at least 3 points");

  std::size_t imax = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (std::abs(pts[i].r) > std::abs(pts[imax].r)) imax = i;
  if (imax == 0 || imax + 1 == pts.size())
    throw GridError("widen detuning grid: peak at grid boundary");

  const double x0 = pts[imax - 1].delta, x1 = pts[imax].delta, x2 = pts[imax + 1].delta;
  const double f0 = std::abs(pts[imax - 1].r), f1 = std::abs(pts[imax].r),
               f2 = std::abs(pts[imax + 1].r);

  auto f = [&](double delta) { return std::abs(reflect_at(delta)); };

  double best_x = x1, best_f = f1;
  const double xv = detail::parabolic_vertex(x0, f0, x1, f1, x2, f2);
  const double fv = f(xv);
  if (fv > best_f) {
    best_f = fv;
    best_x = xv;
  }
  const double xtol = 1e-4 * std::max(1.0, std::abs(0.5 * (x0 + x2)));
  const detail::GoldenPoint golden = detail::golden_max(f, x0, x2, xtol, 20);
  if (golden.f > best_f) {
    best_f = golden.f;
    best_x = golden.x;
  }

  ResonanceSummary summary;
  summary.r0 = best_f;
  summary.delta_peak = best_x;

  const double half = 0.5 * best_f * best_f;
  auto power = [&](double delta) {
    const Complex r = reflect_at(delta);
    return std::norm(r);
  };
  auto bisect_crossing = [&](double below, double above) {
    for (int it = 0; it < 60 && std::abs(above - below) > 1e-10; ++it) {
      const double mid = 0.5 * (below + above);
      if (power(mid) < half)
        below = mid;
      else
        above = mid;
    }
    return 0.5 * (below + above);
  };

  std::size_t left = imax;
  while (left > 0 && std::norm(pts[left].r) >= half) --left;
  if (std::norm(pts[left].r) >= half)
    throw GridError("widen detuning grid: left half-max outside grid");
  std::size_t right = imax;
  while (right + 1 < pts.size() && std::norm(pts[right].r) >= half) ++right;
  if (std::norm(pts[right].r) >= half)
    throw GridError("widen detuning grid: right half-max outside grid");

  const double delta_left = bisect_crossing(pts[left].delta, pts[left + 1].delta);
  const double delta_right = bisect_crossing(pts[right].delta, pts[right - 1].delta);
  summary.linewidth_fwhm = delta_right - delta_left;
  summary.cooperativity_numeric =
      summary.r0 < 1.0 ? summary.r0 / (1.0 - summary.r0) : std::numeric_limits<double>::infinity();
  return summary;
}

/// Scan the configured detuning grid and extract the resonance summary.
inline ResonanceSummary numeric_resonance(const SimulationConfig& config, int threads = 1) {
  const ScatteringProblem problem(config.lattice, config.gamma_s);
  const Spectrum spectrum = problem.scan(config.beam, config.detuning, threads);
  return extract_resonance(
      spectrum, [&](double delta) { return problem.reflection_at(delta, config.beam); });
}

/// Collective decay rate of the k_perp dipole wave seen by the central
/// atom (units of gamma); approaches Gamma0 + gamma_diff at k_perp = 0
/// as the array grows. k_perp is in units of 2 pi / lambda.
inline double collective_mode_rate(const std::vector<Vec2>& positions, const Polarization& pol,
                                   Vec2 k_perp) {
  if (positions.empty()) throw ValidationError("collective_mode_rate: empty array");
  std::size_t center = 0;
  for (std::size_t i = 1; i < positions.size(); ++i)
    if (norm(positions[i]) < norm(positions[center])) center = i;
  Complex sum{0.0, 0.0};
  for (std::size_t m = 0; m < positions.size(); ++m) {
    if (m == center) continue;
    const Vec2 d{positions[center].x - positions[m].x, positions[center].y - positions[m].y};
    const double phase = kTwoPi * dot(k_perp, d);
    sum += green_kernel({d.x, d.y, 0.0}, pol) * Complex(std::cos(phase), std::sin(phase));
  }
  return 1.0 + 2.0 * std::imag(sum);
}

}  // namespace arraycav

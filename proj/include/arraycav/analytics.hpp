#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include "arraycav/common.hpp"
#include "arraycav/model.hpp"

namespace arraycav {

/// Closed-form rates for one configuration. Rates are in units of gamma.
struct RateBreakdown {
  double gamma_zero = 0.0;       ///< collective zeroth-order rate of the infinite array
  double eta = 0.0;              ///< mode overlap fraction, in (0, 1)
  double gamma_target = 0.0;     ///< coupling rate to the target mode
  double loss_s = 0.0;           ///< non-collective loss
  double loss_overlap = 0.0;     ///< (1 - eta) * gamma_zero
  double loss_diff = 0.0;        ///< diffraction loss; +inf when resonant
  double cooperativity = 0.0;    ///< C = gamma_target / total loss
  double efficiency_r0 = 0.0;    ///< r0 = C / (1 + C)
  double inefficiency_eps = 1.0; ///< eps = 1 - r0
  bool resonant_flag = false;    ///< true when loss_diff diverges
};

struct OrderIndex {
  int mx = 0;
  int my = 0;
};

inline bool operator==(const OrderIndex& a, const OrderIndex& b) {
  return a.mx == b.mx && a.my == b.my;
}

/// One propagating diffraction order and its emission rate in units of
/// the zeroth-order rate gamma_zero.
struct DiffractionOrder {
  int mx = 0;
  int my = 0;
  double rate = 0.0;
};

/// Diffraction loss; divergent means a new order is opening exactly at
/// this spacing and the infinite-array sum has no finite value.
struct DiffractionLoss {
  double value = 0.0;  ///< units of gamma; +inf when divergent
  bool divergent = false;
};

/// Dilute-ensemble reference case (typical cavity QED, no collective loss).
struct ReferenceEnsembleSpec {
  double density_rho = 1.0;  ///< atoms per lambda^3
  double length_Lz = 1.0;    ///< units of lambda
};

/// Normalized Gaussian mode amplitude u(r_perp); integral of |u|^2 over
/// the transverse plane is 1.
inline double mode_profile(Vec2 r_perp, double waist) {
  const double r2 = r_perp.x * r_perp.x + r_perp.y * r_perp.y;
  return std::sqrt(2.0 / (kPi * waist * waist)) * std::exp(-r2 / (waist * waist));
}

/// Overlap fraction of the mode with a centered La x La square footprint.
inline double overlap_eta(double waist, double side) {
  const double t = side / (std::sqrt(2.0) * waist);
  const double e = std::erf(t);
  return e * e;
}

/// Rectangular footprint variant: product of per-axis error functions.
inline double overlap_eta_rect(double waist, double side_x, double side_y) {
  return std::erf(side_x / (std::sqrt(2.0) * waist)) *
         std::erf(side_y / (std::sqrt(2.0) * waist));
}

/// Zeroth-order collective emission rate of the uniformly excited
/// infinite array: (3 / 4 pi) / a^2 in units of gamma.
inline double gamma_zero(double spacing) {
  return 3.0 / (4.0 * kPi * spacing * spacing);
}

namespace detail {

inline bool order_less(const OrderIndex& a, const OrderIndex& b) {
  const long long ra = (long long)a.mx * a.mx + (long long)a.my * a.my;
  const long long rb = (long long)b.mx * b.mx + (long long)b.my * b.my;
  if (ra != rb) return ra < rb;
  if (a.mx != b.mx) return a.mx < b.mx;
  return a.my < b.my;
}

/// Squared modulus of the complex dot product (m . e_d).
inline double projection2(double qx, double qy, const Polarization& e) {
  return std::norm(qx * e.x + qy * e.y);
}

/// Guard width for "a new order opens exactly here": any contributing
/// order with 1 - |q|^2 below this marks the whole sum divergent.
inline constexpr double kDenominatorGuard = 1e-9;

}  // namespace detail

/// All diffraction orders (mx, my) != (0, 0) with mx^2 + my^2 < a^2,
/// sorted by (mx^2 + my^2, mx, my).
inline std::vector<OrderIndex> propagating_orders(double spacing) {
  std::vector<OrderIndex> out;
  const double a2 = spacing * spacing;
  const int bound = static_cast<int>(std::ceil(spacing)) + 1;
  for (int mx = -bound; mx <= bound; ++mx)
    for (int my = -bound; my <= bound; ++my) {
      if (mx == 0 && my == 0) continue;
      if (double(mx) * mx + double(my) * my < a2) out.push_back({mx, my});
    }
  std::sort(out.begin(), out.end(), detail::order_less);
  return out;
}

/// Per-order emission rates in units of gamma_zero. Orders inside the
/// divergence guard are omitted; use gamma_diff for the flagged total.
inline std::vector<DiffractionOrder> diffraction_order_rates(double spacing,
                                                             const Polarization& pol) {
  std::vector<DiffractionOrder> out;
  const double a2 = spacing * spacing;
  for (const OrderIndex& m : propagating_orders(spacing)) {
    const double u = 1.0 - (double(m.mx) * m.mx + double(m.my) * m.my) / a2;
    if (u < detail::kDenominatorGuard) continue;
    const double num = 1.0 - detail::projection2(m.mx, m.my, pol) / a2;
    out.push_back({m.mx, m.my, num / std::sqrt(u)});
  }
  return out;
}

/// Total emission rate into higher diffraction orders (units of gamma).
/// Divergent when any order sits within the guard of its opening point.
inline DiffractionLoss gamma_diff(double spacing, const Polarization& pol) {
  const double a2 = spacing * spacing;
  const int bound = static_cast<int>(std::ceil(spacing)) + 1;
  double sum = 0.0;
  for (int mx = -bound; mx <= bound; ++mx)
    for (int my = -bound; my <= bound; ++my) {
      if (mx == 0 && my == 0) continue;
      const double u = 1.0 - (double(mx) * mx + double(my) * my) / a2;
      if (u <= -detail::kDenominatorGuard) continue;  // evanescent
      if (u < detail::kDenominatorGuard)
        return {std::numeric_limits<double>::infinity(), true};
      const double num = 1.0 - detail::projection2(mx, my, pol) / a2;
      sum += num / std::sqrt(u);
    }
  return {gamma_zero(spacing) * sum, false};
}

/// Orders contributing to the k-shifted sum: |m/a + k| < 1. k_perp is in
/// units of the free-space wavevector 2 pi / lambda.
inline std::vector<OrderIndex> shifted_contributing_orders(double spacing, Vec2 k_perp) {
  std::vector<OrderIndex> out;
  const int bound = static_cast<int>(std::ceil(spacing * (1.0 + norm(k_perp)))) + 1;
  for (int mx = -bound; mx <= bound; ++mx)
    for (int my = -bound; my <= bound; ++my) {
      if (mx == 0 && my == 0) continue;
      const double qx = mx / spacing + k_perp.x;
      const double qy = my / spacing + k_perp.y;
      if (qx * qx + qy * qy < 1.0) out.push_back({mx, my});
    }
  std::sort(out.begin(), out.end(), detail::order_less);
  return out;
}

/// Diffraction loss for a collective dipole at transverse wavevector
/// k_perp (units 2 pi / lambda): each order moves to q = m/a + k_perp.
/// Reduces exactly to gamma_diff at k_perp = (0, 0).
inline DiffractionLoss gamma_diff_shifted(double spacing, const Polarization& pol,
                                          Vec2 k_perp) {
  const int bound = static_cast<int>(std::ceil(spacing * (1.0 + norm(k_perp)))) + 1;
  double sum = 0.0;
  for (int mx = -bound; mx <= bound; ++mx)
    for (int my = -bound; my <= bound; ++my) {
      if (mx == 0 && my == 0) continue;
      const double qx = mx / spacing + k_perp.x;
      const double qy = my / spacing + k_perp.y;
      const double u = 1.0 - (qx * qx + qy * qy);
      if (u <= -detail::kDenominatorGuard) continue;
      if (u < detail::kDenominatorGuard)
        return {std::numeric_limits<double>::infinity(), true};
      const double num = 1.0 - detail::projection2(qx, qy, pol);
      sum += num / std::sqrt(u);
    }
  return {gamma_zero(spacing) * sum, false};
}

/// Spacings a <= a_max at which a new diffraction order opens:
/// sqrt(mx^2 + my^2) over integer pairs != (0, 0), sorted and distinct.
inline std::vector<double> resonance_spacings(double a_max) {
  if (!(a_max > 0.0)) throw ValidationError("a_max must be > 0");
  std::set<long long> squares;
  const int bound = static_cast<int>(std::floor(a_max)) + 1;
  const double limit = a_max * a_max * (1.0 + 1e-15);
  for (int mx = -bound; mx <= bound; ++mx)
    for (int my = -bound; my <= bound; ++my) {
      if (mx == 0 && my == 0) continue;
      const long long s = (long long)mx * mx + (long long)my * my;
      if (double(s) <= limit) squares.insert(s);
    }
  std::vector<double> out;
  out.reserve(squares.size());
  for (long long s : squares) out.push_back(std::sqrt(double(s)));
  return out;
}

namespace detail {

inline RateBreakdown combine_rates(double g0, double eta, double loss_s,
                                   const DiffractionLoss& diff, double finesse_scale) {
  RateBreakdown rb;
  rb.gamma_zero = g0;
  rb.eta = eta;
  rb.gamma_target = finesse_scale * eta * g0;
  rb.loss_s = loss_s;
  rb.loss_overlap = (1.0 - eta) * g0;
  rb.loss_diff = diff.value;
  rb.resonant_flag = diff.divergent;
  if (diff.divergent) {
    rb.cooperativity = 0.0;
    rb.efficiency_r0 = 0.0;
    rb.inefficiency_eps = 1.0;
    return rb;
  }
  const double loss = rb.loss_s + rb.loss_overlap + rb.loss_diff;
  if (loss == 0.0) {
    rb.cooperativity = std::numeric_limits<double>::infinity();
    rb.efficiency_r0 = 1.0;
    rb.inefficiency_eps = 0.0;
    return rb;
  }
  rb.cooperativity = rb.gamma_target / loss;
  rb.efficiency_r0 = rb.cooperativity / (1.0 + rb.cooperativity);
  rb.inefficiency_eps = 1.0 / (1.0 + rb.cooperativity);
  return rb;
}

inline double config_eta(const SimulationConfig& config) {
  const LatticeSpec& lat = config.lattice;
  if (lat.nx == lat.ny) return overlap_eta(config.beam.waist_w, lat.side());
  return overlap_eta_rect(config.beam.waist_w, lat.side_x(), lat.side_y());
}

}  // namespace detail

/// Free-space rates: Gamma = eta * Gamma0 against gamma_s, overlap loss
/// and diffraction loss.
inline RateBreakdown free_space_rates(const SimulationConfig& config) {
  const double g0 = gamma_zero(config.lattice.spacing_a);
  const double eta = detail::config_eta(config);
  const DiffractionLoss diff = gamma_diff(config.lattice.spacing_a, config.lattice.polarization);
  return detail::combine_rates(g0, eta, config.gamma_s, diff, 1.0);
}

/// Cavity rates: the target-mode coupling is scaled by (4 / pi) * finesse
/// while every loss channel is unchanged.
inline RateBreakdown cavity_rates(const SimulationConfig& config) {
  if (!config.cavity)
    throw ValidationError("config has no cavity; use free_space_rates");
  const double scale = (4.0 / kPi) * config.cavity->finesse;
  const double g0 = gamma_zero(config.lattice.spacing_a);
  const double eta = detail::config_eta(config);
  const DiffractionLoss diff = gamma_diff(config.lattice.spacing_a, config.lattice.polarization);
  return detail::combine_rates(g0, eta, config.gamma_s, diff, scale);
}

/// Dilute-ensemble reference: transverse spacing a_ref = 1/sqrt(rho Lz),
/// individual-atom loss gamma_loss = gamma, no diffraction channel.
/// array_side, when given, sets the footprint for the overlap eta;
/// otherwise eta = 1.
inline RateBreakdown reference_rates(const ReferenceEnsembleSpec& ref, const BeamSpec& beam,
                                     const std::optional<CavitySpec>& cavity,
                                     std::optional<double> array_side = {}) {
  if (!(ref.density_rho > 0.0)) throw ValidationError("density_rho must be > 0");
  if (!(ref.length_Lz > 0.0)) throw ValidationError("length_Lz must be > 0");
  const double a_ref = std::sqrt(1.0 / (ref.density_rho * ref.length_Lz));
  const double g0 = gamma_zero(a_ref);
  const double eta = array_side ? overlap_eta(beam.waist_w, *array_side) : 1.0;
  const double scale = cavity ? (4.0 / kPi) * cavity->finesse : 1.0;

  RateBreakdown rb;
  rb.gamma_zero = g0;
  rb.eta = eta;
  rb.gamma_target = scale * eta * g0;
  rb.loss_s = 1.0;  // bare single-atom decay
  rb.loss_overlap = 0.0;
  rb.loss_diff = 0.0;
  rb.resonant_flag = false;
  rb.cooperativity = rb.gamma_target;
  rb.efficiency_r0 = rb.cooperativity / (1.0 + rb.cooperativity);
  rb.inefficiency_eps = 1.0 / (1.0 + rb.cooperativity);
  return rb;
}

}  // namespace arraycav

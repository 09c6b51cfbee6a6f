#pragma once

#include <optional>
#include <string>
#include <vector>

#include "walktail/increment_models.hpp"
#include "walktail/numeric.hpp"

namespace walktail {

struct QuadratureConfig {
  double w_rel_tol = 1e-8;    // one-step smoothing w
  double z_rel_tol = 1e-10;   // integrated tail / z
  double abs_tol = 1e-14;
  double cache_rel_tol = 1e-9;  // interpolation budget for the w cache
};

// The designed approximation to the crossing probability: Z is the
// nonnegative variable with P(Z > t) = min[ integrated_tail(t)/|EX|, 1 ],
// v(y) = P(Z > -y) and w(y) = E v(y + X) = P(X + Z > -y).
//
// Immutable after construction; shared read-only across workers. When
// cache_depth is given, log w is tabulated over [-cache_depth, 0] at
// construction and served by interpolation (exact quadrature outside).
class Approximation {
 public:
  explicit Approximation(ModelPtr model, QuadratureConfig quad = {},
                         std::optional<double> cache_depth = std::nullopt);

  const IncrementModel& model() const { return *model_; }
  ModelPtr model_ptr() const { return model_; }
  const QuadratureConfig& quadrature() const { return quad_; }

  // inf{t : P(Z > t) < 1} and the mass P(Z = y0) when the min in the
  // definition binds at the support edge (y0 = 0 for all built-ins).
  double y0() const { return y0_; }
  double z_atom() const { return z_atom_; }

  // P(Z > t) with the convention z_tail(t) = 1 for t <= 0. z_tail_open is the
  // right-continuous tail (at an atom it carries the open value, e.g.
  // z_tail_open(0) = P(Z > 0) < 1 when Z has mass at zero); it is the version
  // that enters envelopes and conditional densities.
  double z_tail(double t) const;
  double z_tail_open(double t) const;

  double v(double y) const { return z_tail(-y); }
  double w(double y) const;        // cached when available
  double w_exact(double y) const;  // always by quadrature / exact summation

  // Auxiliary scale xi(x) = integrated_tail(x) / tail(x); diagnostic only.
  double xi(double x) const;

  bool has_w_cache() const { return w_cache_.has_value(); }

 private:
  ModelPtr model_;
  QuadratureConfig quad_;
  double abs_mean_;
  double y0_ = 0;
  double z_atom_ = 0;
  std::optional<num::ChebyshevInterpolant> w_cache_;  // log w over [-depth, 0]
  double cache_lo_ = 0;
};

// Margin row of the safety-parameter scan: inequality (margin >= 0)
//   -gamma <= (v(y)^2 - w(y)^2) / (P(X > -y) w(y))
struct MarginRow {
  double y;
  double v;
  double w;
  double tail;    // P(X > -y)
  double margin;  // ratio + gamma; +-inf when tail w == 0, 0 when v == w
};

struct SafetyParams {
  double gamma = 0.5;
  double a_star = 0;
  double kappa = 0;  // v(a_star) = P(Z > -a_star)
  std::vector<MarginRow> verified_grid;
  std::string warning;  // set e.g. for light-tailed models
};

// Grid scan for the largest a_star <= 0 with nonnegative margin at every grid
// point y <= a_star. Throws calibration_error when no prefix is feasible or
// when v(y_min) is not small enough to anchor the scan.
SafetyParams find_a_star(const Approximation& approx, double gamma, double y_min,
                         double grid_step);

// SafetyParams for an operator-chosen a_star: kappa is computed and the grid
// margins are recorded (not enforced) so the override is auditable.
SafetyParams manual_safety_params(const Approximation& approx, double gamma, double a_star,
                                  double y_min, double grid_step);

std::string safety_grid_csv(const SafetyParams& sp);

}  // namespace walktail

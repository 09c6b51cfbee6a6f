#include "walktail/approximation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "walktail/errors.hpp"

namespace walktail {

Approximation::Approximation(ModelPtr model, QuadratureConfig quad,
                             std::optional<double> cache_depth)
    : model_(std::move(model)), quad_(quad), abs_mean_(-model_->mean()) {
  if (!(model_->mean() < 0)) throw config_error("increment mean must be negative");

  const double it0 = model_->integrated_tail(0.0);
  if (it0 <= abs_mean_) {
    y0_ = 0.0;
  } else {
    double hi = 1.0;
    while (model_->integrated_tail(hi) > abs_mean_) hi *= 2;
    y0_ = num::find_root(
        [&](double t) { return model_->integrated_tail(t) - abs_mean_; }, 0.0, hi, 1e-13);
  }
  z_atom_ = std::max(0.0, 1.0 - model_->integrated_tail(y0_) / abs_mean_);

  if (cache_depth && model_->has_density()) {
    cache_lo_ = -std::fabs(*cache_depth);
    w_cache_ = num::ChebyshevInterpolant::build(
        [this](double y) { return std::log(w_exact(y)); }, cache_lo_, 0.0,
        quad_.cache_rel_tol, quad_.cache_rel_tol);
  }
}

double Approximation::z_tail_open(double t) const {
  if (t < 0) return 1.0;
  return std::min(model_->integrated_tail(t) / abs_mean_, 1.0);
}

double Approximation::z_tail(double t) const {
  if (t <= 0) return 1.0;
  return z_tail_open(t);
}

double Approximation::w_exact(double y) const {
  const double beta = -y;
  const double lo = model_->support_lower();

  if (const DiscreteSupport* d = model_->discrete()) {
    double s = 0;
    for (std::size_t i = 0; i < d->values.size(); ++i)
      s += d->probs[i] * v(y + d->values[i]);
    return s;
  }

  // v(y + t) = 1 exactly for t >= beta - y0, so that region contributes
  // tail(beta - y0) in closed form; below it v is the smooth open tail.
  const double cut = beta - y0_;
  if (cut <= lo) return 1.0;
  const double head = model_->integral_density(
      [&](double t) { return z_tail_open(beta - t); }, lo, cut, quad_.w_rel_tol,
      quad_.abs_tol);
  return head + model_->tail(cut);
}

double Approximation::w(double y) const {
  if (y >= 0) {
    // w is still below 1 on [0, -support_lower) for bounded-below models.
    const double lo = model_->support_lower();
    if (std::isfinite(lo) && y >= -lo) return 1.0;
  }
  if (w_cache_ && y >= cache_lo_ && y <= 0.0) return std::exp((*w_cache_)(y));
  return w_exact(y);
}

double Approximation::xi(double x) const {
  const double t = model_->tail(x);
  if (!(t > 0)) throw numeric_error("xi: tail vanishes at x", num::kInf);
  return model_->integrated_tail(x) / t;
}

namespace {

MarginRow margin_row(const Approximation& approx, double gamma, double y) {
  const double vv = approx.v(y);
  const double ww = approx.w(y);
  const double tl = approx.model().tail(-y);
  double ratio;
  if (vv == ww) {
    ratio = 0.0;  // zero-variance equality case
  } else if (tl * ww == 0.0) {
    ratio = (vv > ww) ? num::kInf : -num::kInf;
  } else {
    ratio = (vv * vv - ww * ww) / (tl * ww);
  }
  return {y, vv, ww, tl, ratio + gamma};
}

std::vector<double> scan_grid(double y_min, double grid_step) {
  std::vector<double> ys;
  const long long n = std::llround(std::floor(-y_min / grid_step));
  for (long long k = 0; k <= n; ++k) ys.push_back(std::min(0.0, y_min + k * grid_step));
  if (ys.back() < 0.0) ys.push_back(0.0);
  return ys;
}

}  // namespace

SafetyParams find_a_star(const Approximation& approx, double gamma, double y_min,
                         double grid_step) {
  if (!(gamma > 0 && gamma < 1)) throw config_error("gamma must lie in (0,1)");
  if (!(y_min < 0) || !(grid_step > 0))
    throw config_error("find_a_star requires y_min < 0 and grid_step > 0");
  const double v_anchor = approx.v(y_min);
  if (!(v_anchor < 1e-3) || !(v_anchor > 0)) {
    std::ostringstream os;
    os << "find_a_star: v(y_min) = " << v_anchor
       << " at y_min = " << y_min << "; pick y_min with 0 < v(y_min) < 1e-3";
    throw calibration_error(os.str());
  }

  SafetyParams sp;
  sp.gamma = gamma;
  if (approx.model().tail_class() == TailClass::light_tailed)
    sp.warning = "light-tailed model: the heavy-tailed approximation is a mismatch here";

  bool prefix_ok = true;
  bool found = false;
  for (double y : scan_grid(y_min, grid_step)) {
    MarginRow row = margin_row(approx, gamma, y);
    sp.verified_grid.push_back(row);
    if (prefix_ok && row.margin >= 0 && y <= 0) {
      sp.a_star = y;
      found = true;
    } else {
      prefix_ok = false;
    }
  }
  if (!found)
    throw calibration_error(
        "find_a_star: no feasible prefix on the grid; deepen y_min or increase gamma");
  sp.a_star = std::min(sp.a_star, 0.0);
  sp.kappa = approx.v(sp.a_star);
  return sp;
}

SafetyParams manual_safety_params(const Approximation& approx, double gamma, double a_star,
                                  double y_min, double grid_step) {
  if (!(gamma > 0 && gamma < 1)) throw config_error("gamma must lie in (0,1)");
  if (a_star > 0)
    throw config_error("a_star must be <= 0 (the paper's Table-1 'a_* = 10' is a sign slip; "
                       "pass the signed value explicitly)");
  SafetyParams sp;
  sp.gamma = gamma;
  sp.a_star = a_star;
  sp.kappa = approx.v(a_star);
  int violations = 0;
  for (double y : scan_grid(y_min, grid_step)) {
    if (y > a_star) break;
    MarginRow row = margin_row(approx, gamma, y);
    sp.verified_grid.push_back(row);
    if (row.margin < 0) ++violations;
  }
  if (violations > 0) {
    std::ostringstream os;
    os << "manual a_star = " << a_star << " violates the margin inequality at " << violations
       << " grid points (estimator stays unbiased; the variance bound is not certified)";
    sp.warning = os.str();
  }
  return sp;
}

std::string safety_grid_csv(const SafetyParams& sp) {
  std::ostringstream os;
  os << "y,v,w,tail,margin\n";
  os.setf(std::ios::scientific);
  os.precision(5);
  for (const MarginRow& r : sp.verified_grid)
    os << r.y << ',' << r.v << ',' << r.w << ',' << r.tail << ',' << r.margin << '\n';
  return os.str();
}

}  // namespace walktail

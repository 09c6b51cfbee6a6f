#pragma once

#include <functional>
#include <string>
#include <vector>

#include "walktail/increment_models.hpp"

namespace walktail {

// Finite-support integer-lattice walk for the exact oracles. The exit
// convention matches the estimator: the walk succeeds on reaching [0, inf),
// so u*(0) = 1 and the interior levels are -L..-1.
struct DiscreteWalkSpec {
  std::vector<int> support;   // strictly increasing
  std::vector<double> probs;

  DiscreteWalkSpec(std::vector<int> support, std::vector<double> probs);
  double mean() const;
  ModelPtr to_model() const;
};

struct ExactSolution {
  int L = 0;                  // levels -L..0 stored
  std::vector<double> u;      // u[k] = u*(-k); u[0] = 1

  double at(double level) const;  // 1 above 0, 0 below -L
};

// Minimal nonnegative solution of u(y) = sum_z p(z - y) u(z) with u = 1 on
// [0, inf), realized by absorbing truncation at -L. Solved twice (value
// iteration and a sparse direct solve) and cross-checked.
ExactSolution exact_u_star(const DiscreteWalkSpec& spec, int L);
// L-doubling until u stabilizes to 1e-10 relative and u(-L) is negligible.
ExactSolution exact_u_star_auto(const DiscreteWalkSpec& spec, int L_hint = 64);

using TransitionWeight = std::function<double(double y, double z)>;  // r(y, z)

// Likelihood-ratio weight of the kernel Q(y,dz) = P(y,dz) v(z)/w(y):
// r(y,z) = w(y)/v(z) with w the exact one-step sum of v.
TransitionWeight value_function_kernel(const DiscreteWalkSpec& spec,
                                       std::function<double(double)> v);
// Zero-variance weight r(y,z) = u*(y)/u*(z).
TransitionWeight zero_variance_kernel(const ExactSolution& u);

// s*(y) = E_y^Q R^2 on levels -L..0 via the series sum_n K^n eta with
// K(y,dz) = r(y,z) P(y,dz) on the interior and eta(y) the one-step crossing
// mass. Throws (unstable importance sampler) when the series diverges.
std::vector<double> exact_second_moment(const DiscreteWalkSpec& spec,
                                        const TransitionWeight& r, int L);

struct LyapunovReport {
  std::vector<double> grid;      // levels y
  std::vector<double> margins;   // (Kh)(y) - h(y) + eta(y); valid certificate <= 0
  double max_margin = 0;
};

// Drift check of a candidate Lyapunov function h against the kernel weights.
LyapunovReport lyapunov_check(const DiscreteWalkSpec& spec, const TransitionWeight& r,
                              const std::function<double(double)>& h,
                              const std::vector<double>& grid);

// The second-moment certificate behind the variance bound: for the value
// kernel of v with safety pair (gamma, a_star) and kappa = v(a_star), the
// function kappa^{-2} v(y)^2 [I(y + a* <= 0) + (1-gamma) I(y + a* > 0)]
// must satisfy the drift inequality; implies s* <= (1-gamma)^{-1} kappa^{-2} v^2.
LyapunovReport variance_certificate(const DiscreteWalkSpec& spec,
                                    const std::function<double(double)>& v, double gamma,
                                    double a_star, const std::vector<double>& grid);

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0;   // margin / error the check is about
  std::string detail;
};

struct ValidationOptions {
  // Test hook: scales the v used in the likelihood-ratio denominators of the
  // simulated zero-variance check (the transition kernel is untouched). Any
  // value != 1 must make that check fail.
  double v_scale = 1.0;
};

// The oracle suite behind `walktail validate`.
std::vector<CheckResult> run_validation_suite(const ValidationOptions& options = {});

}  // namespace walktail

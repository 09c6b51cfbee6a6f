#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace walktail::num {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Adaptive Gauss-Kronrod integration of f over [a, b]; a and b may be
// +-infinity. Throws numeric_error when the error estimate misses the target.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, double abs_tol = 1e-14);

// Same, but the integrand is split at the given interior breakpoints
// (kinks of v, support edges). Breakpoints outside (a, b) are ignored.
double integrate_split(const std::function<double(double)>& f, double a, double b,
                       const std::vector<double>& breakpoints, double rel_tol = 1e-10,
                       double abs_tol = 1e-14);

// Bracketed root of a continuous function, |interval| shrunk to tol.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double tol = 1e-12);

// Piecewise-Chebyshev interpolant with adaptive panel subdivision.
// build() splits [a, b] until probe points meet the error budget; eval() is a
// binary panel search plus a Clenshaw pass. Immutable after build.
class ChebyshevInterpolant {
 public:
  static constexpr int kDegree = 16;

  static ChebyshevInterpolant build(const std::function<double(double)>& f, double a,
                                    double b, double rel_tol = 1e-9, double abs_tol = 1e-13,
                                    int max_panels = 4096);

  double operator()(double x) const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  std::size_t panels() const { return starts_.size(); }

 private:
  double lo_ = 0, hi_ = 0;
  std::vector<double> starts_;               // panel left edges, sorted
  std::vector<double> ends_;                 // panel right edges
  std::vector<std::array<double, kDegree + 1>> coef_;
};

// Inverse standard normal CDF (Acklam's rational approximation plus one
// Halley refinement; |error| < 1e-15 over (0,1)).
double inverse_normal_cdf(double p);

double normal_cdf(double x);

// Compensated accumulator.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0, c_ = 0;
};

// Kolmogorov distribution survival function Q(t) = P(sup|B| > t).
double kolmogorov_sf(double t);

// One-sample KS against a reference CDF evaluated at the sample points.
// Returns {D_n, asymptotic p-value}.
struct KsResult {
  double statistic;
  double p_value;
};
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);
KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b);

// Dvoretzky-Kiefer-Wolfowitz band half-width at the given confidence.
double dkw_epsilon(std::size_t n, double confidence);

// Least-squares line fit; returns {slope, intercept, r_squared}.
struct LineFit {
  double slope;
  double intercept;
  double r_squared;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace walktail::num

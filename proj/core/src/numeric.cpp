#include "walktail/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "walktail/errors.hpp"

namespace walktail::num {

namespace {
using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol, double abs_tol) {
  if (a == b) return 0.0;
  double err = 0, l1 = 0;
  const double value = GK::integrate(f, a, b, 15, rel_tol, &err, &l1);
  const double target = std::max(abs_tol, rel_tol * std::max(std::fabs(value), l1 * 1e-2));
  if (err > target * 50) {
    std::ostringstream os;
    os << "quadrature did not converge on [" << a << ", " << b << "]";
    throw numeric_error(os.str(),
                        err / std::max(std::fabs(value), std::numeric_limits<double>::min()));
  }
  return value;
}

double integrate_split(const std::function<double(double)>& f, double a, double b,
                       const std::vector<double>& breakpoints, double rel_tol,
                       double abs_tol) {
  std::vector<double> cuts{a};
  for (double c : breakpoints)
    if (c > a && c < b) cuts.push_back(c);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double total = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += integrate(f, cuts[i], cuts[i + 1], rel_tol, abs_tol);
  return total;
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double flo = f(lo), fhi = f(hi);
  if (flo == 0) return lo;
  if (fhi == 0) return hi;
  if ((flo < 0) == (fhi < 0))
    throw numeric_error("find_root: no sign change in bracket", kInf);
  std::uintmax_t iters = 200;
  auto stop = [tol](double x, double y) { return std::fabs(x - y) <= tol * (1 + std::fabs(x)); };
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, stop, iters);
  return 0.5 * (r.first + r.second);
}

ChebyshevInterpolant ChebyshevInterpolant::build(const std::function<double(double)>& f,
                                                 double a, double b, double rel_tol,
                                                 double abs_tol, int max_panels) {
  ChebyshevInterpolant out;
  out.lo_ = a;
  out.hi_ = b;

  constexpr int n = kDegree;
  std::array<double, n + 1> cosv{};
  for (int k = 0; k <= n; ++k) cosv[k] = std::cos(M_PI * k / n);

  auto fit_panel = [&](double lo, double hi, std::array<double, n + 1>& coef) {
    std::array<double, n + 1> fx{};
    for (int k = 0; k <= n; ++k) {
      const double x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * cosv[k];
      fx[k] = f(x);
    }
    // Chebyshev-Lobatto coefficients (type-I DCT).
    for (int j = 0; j <= n; ++j) {
      double s = 0.5 * (fx[0] + (j % 2 ? -1.0 : 1.0) * fx[n]);
      for (int k = 1; k < n; ++k) s += fx[k] * std::cos(M_PI * j * k / n);
      coef[j] = 2.0 * s / n;
    }
    coef[0] *= 0.5;
    coef[n] *= 0.5;
  };

  auto eval_panel = [&](const std::array<double, n + 1>& coef, double lo, double hi, double x) {
    const double t = (2 * x - lo - hi) / (hi - lo);
    double b0 = 0, b1 = 0;
    for (int j = n; j >= 1; --j) {
      const double tmp = 2 * t * b0 - b1 + coef[j];
      b1 = b0;
      b0 = tmp;
    }
    return t * b0 - b1 + coef[0];
  };

  struct Pending {
    double lo, hi;
  };
  std::vector<Pending> work{{a, b}};
  struct Done {
    double lo, hi;
    std::array<double, n + 1> coef;
  };
  std::vector<Done> done;

  while (!work.empty()) {
    if (static_cast<int>(done.size() + work.size()) > max_panels)
      throw numeric_error("ChebyshevInterpolant: panel budget exhausted", kInf);
    const Pending p = work.back();
    work.pop_back();
    std::array<double, n + 1> coef{};
    fit_panel(p.lo, p.hi, coef);
    // Probe at off-node points.
    double max_err = 0, scale = abs_tol / rel_tol;
    bool ok = true;
    for (int k = 0; k < n && ok; ++k) {
      const double x = p.lo + (p.hi - p.lo) * (k + 0.5) / n;
      const double fx = f(x);
      const double err = std::fabs(eval_panel(coef, p.lo, p.hi, x) - fx);
      max_err = std::max(max_err, err);
      scale = std::max(scale, std::fabs(fx));
      if (err > std::max(abs_tol, rel_tol * scale)) ok = false;
    }
    if (ok) {
      done.push_back({p.lo, p.hi, coef});
    } else {
      const double mid = 0.5 * (p.lo + p.hi);
      work.push_back({p.lo, mid});
      work.push_back({mid, p.hi});
    }
  }

  std::sort(done.begin(), done.end(), [](const Done& x, const Done& y) { return x.lo < y.lo; });
  for (const Done& d : done) {
    out.starts_.push_back(d.lo);
    out.ends_.push_back(d.hi);
    out.coef_.push_back(d.coef);
  }
  return out;
}

double ChebyshevInterpolant::operator()(double x) const {
  const double xc = std::clamp(x, lo_, hi_);
  auto it = std::upper_bound(starts_.begin(), starts_.end(), xc);
  const std::size_t i = (it == starts_.begin()) ? 0 : (it - starts_.begin() - 1);
  const double lo = starts_[i], hi = ends_[i];
  const double t = std::clamp((2 * xc - lo - hi) / (hi - lo), -1.0, 1.0);
  double b0 = 0, b1 = 0;
  for (int j = kDegree; j >= 1; --j) {
    const double tmp = 2 * t * b0 - b1 + coef_[i][j];
    b1 = b0;
    b0 = tmp;
  }
  return t * b0 - b1 + coef_[i][0];
}

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw numeric_error("inverse_normal_cdf: p outside (0,1)", kInf);
  // Acklam's coefficients.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= phigh) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  // One Halley step against the exact CDF.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2 * M_PI) * std::exp(0.5 * x * x);
  x -= u / (1 + 0.5 * x * u);
  return x;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_sf(double t) {
  if (t <= 0) return 1.0;
  if (t < 0.2) return 1.0;
  double s = 0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    s += (k % 2 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2 * s, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = cdf(sample[i]);
    d = std::max(d, std::fabs((i + 1) / n - F));
    d = std::max(d, std::fabs(F - i / n));
  }
  const double t = d * (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n));
  return {d, kolmogorov_sf(t)};
}

KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / a.size() -
                              static_cast<double>(j) / b.size()));
  }
  const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
  const double t = d * (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne));
  return {d, kolmogorov_sf(t)};
}

double dkw_epsilon(std::size_t n, double confidence) {
  const double alpha = 1 - confidence;
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (slope * x[i] + intercept);
    ss_res += r * r;
  }
  const double ss_tot = syy - sy * sy / n;
  return {slope, intercept, ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0};
}

}  // namespace walktail::num

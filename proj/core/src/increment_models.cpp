#include "walktail/increment_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "walktail/errors.hpp"

namespace walktail {

std::string to_string(TailClass c) {
  switch (c) {
    case TailClass::regularly_varying: return "regularly_varying";
    case TailClass::weibull_type: return "weibull_type";
    case TailClass::light_tailed: return "light_tailed";
    case TailClass::discrete_finite: return "discrete_finite";
  }
  return "?";
}

double IncrementModel::density(double) const {
  throw std::logic_error(name() + ": no density");
}

double IncrementModel::regvar_index() const {
  throw std::logic_error(name() + ": not regularly varying");
}

double IncrementModel::mgf(double) const {
  throw numeric_error(name() + ": moment generating function diverges for theta > 0",
                      num::kInf);
}

double IncrementModel::sample_tilted(double, RandomStream&) const {
  throw std::logic_error(name() + ": no tilted sampler");
}

double IncrementModel::sample_given_above(double q, RandomStream& rng) const {
  for (int i = 0; i < 1 << 22; ++i) {
    const double x = sample(rng);
    if (x > q) return x;
  }
  throw sampler_error(name() + ": rejection for X | X > q stalled", q, "truncate_above");
}

double IncrementModel::sample_in_range(double q_lo, double q_hi, RandomStream& rng) const {
  for (int i = 0; i < 1 << 22; ++i) {
    const double x = sample(rng);
    if (x > q_lo && x <= q_hi) return x;
  }
  throw sampler_error(name() + ": rejection for X in range stalled", q_lo, "truncate_range");
}

double IncrementModel::integral_density(const std::function<double(double)>& g, double lo,
                                        double hi, double rel_tol, double abs_tol) const {
  const auto& self = *this;
  return num::integrate(
      [&](double t) { return g(t) * self.density(t); }, lo, hi, rel_tol, abs_tol);
}

namespace {

// ---------------------------------------------------------------------------
// Weibull-type service with deterministic arrivals: X = V - 1,
// P(V > t) = exp(-2 t^{1/2}). Everything is closed form; V = W^2 for
// W ~ Exp(2), which also removes the density singularity from quadratures.
class WeibullDetModel final : public IncrementModel {
 public:
  double tail(double t) const override {
    if (t < -1) return 1.0;
    return std::exp(-2.0 * std::sqrt(t + 1));
  }
  double density(double t) const override {
    if (t <= -1) return 0.0;
    const double r = std::sqrt(t + 1);
    return std::exp(-2.0 * r) / r;
  }
  double mean() const override { return -0.5; }
  double integrated_tail(double t) const override {
    if (t < -1) return -t - 0.5;
    const double r = std::sqrt(t + 1);
    return (r + 0.5) * std::exp(-2.0 * r);
  }
  double support_lower() const override { return -1.0; }
  TailClass tail_class() const override { return TailClass::weibull_type; }
  double sample(RandomStream& rng) const override {
    const double w = -0.5 * std::log(rng.uniform());
    return w * w - 1.0;
  }
  double sample_given_above(double q, RandomStream& rng) const override {
    const double tq = tail(q);
    return tail_inv(rng.uniform() * tq);
  }
  double sample_in_range(double q_lo, double q_hi, RandomStream& rng) const override {
    const double t_hi = tail(q_hi), t_lo = tail(q_lo);
    return tail_inv(t_hi + rng.uniform() * (t_lo - t_hi));
  }
  double integral_density(const std::function<double(double)>& g, double lo, double hi,
                          double rel_tol, double abs_tol) const override {
    // t = s^2 - 1 turns f(t) dt into 2 e^{-2s} ds.
    const double s_lo = std::sqrt(std::max(lo, -1.0) + 1);
    const double s_hi = hi == num::kInf ? num::kInf : std::sqrt(std::max(hi, -1.0) + 1);
    if (s_hi <= s_lo) return 0.0;
    return num::integrate(
        [&](double s) { return 2.0 * std::exp(-2.0 * s) * g(s * s - 1.0); }, s_lo, s_hi,
        rel_tol, abs_tol);
  }
  std::string name() const override { return "weibull_det"; }

 private:
  static double tail_inv(double tau) {
    const double r = -0.5 * std::log(tau);
    return r * r - 1.0;
  }
};

// ---------------------------------------------------------------------------
// M/G/1 with Pareto service: X = V - A, P(V > t) = (1+t)^{-2.5}, A ~ Exp(3/4)
// (traffic intensity 1/2). The increment tail has no elementary form; the
// family J_p(s) = E[(1 + s + A)^{-p}] is evaluated by adaptive quadrature and
// served from Chebyshev caches in log1p coordinates. Useful identities:
//   tail(s)            = J_{2.5}(s)                   s >= 0
//   tail(s)            = 1 - e^{3s/4} (1 - J_{2.5}(0))  s < 0
//   density(s)         = 2.5 J_{3.5}(s)               s >= 0
//   density(s)         = 2.5 e^{3s/4} J_{3.5}(0)        s < 0
//   integrated_tail(t) = J_{1.5}(t) / 1.5             t >= 0
class ParetoMG1Model final : public IncrementModel {
 public:
  static constexpr double kAlpha = 2.5;
  static constexpr double kRate = 0.75;
  static constexpr double kCacheMax = 3.0e5;

  ParetoMG1Model() {
    j15_ = build_cache(1.5);
    j25_ = build_cache(2.5);
    j35_ = build_cache(3.5);
    j25_at_0_ = j_exact(2.5, 0.0);
    j35_at_0_ = j_exact(3.5, 0.0);
  }

  double tail(double t) const override {
    if (t >= 0) return j(j25_, 2.5, t);
    return 1.0 - std::exp(kRate * t) * (1.0 - j25_at_0_);
  }
  double density(double t) const override {
    if (t >= 0) return kAlpha * j(j35_, 3.5, t);
    return kAlpha * std::exp(kRate * t) * j35_at_0_;
  }
  double mean() const override { return -2.0 / 3.0; }
  double integrated_tail(double t) const override {
    if (t >= 0) return j(j15_, 1.5, t) / 1.5;
    // int_t^0 tail + int_0^inf tail
    const double head =
        -t - (1.0 - j25_at_0_) * (1.0 - std::exp(kRate * t)) / kRate;
    return head + j15_at_0() / 1.5;
  }
  double support_lower() const override { return -num::kInf; }
  TailClass tail_class() const override { return TailClass::regularly_varying; }
  double regvar_index() const override { return kAlpha; }
  double sample(RandomStream& rng) const override {
    const double v = std::pow(rng.uniform(), -1.0 / kAlpha) - 1.0;
    const double a = -std::log(rng.uniform()) / kRate;
    return v - a;
  }
  double sample_given_above(double q, RandomStream& rng) const override {
    const double tq = tail(q);
    if (tq > 0.05) return IncrementModel::sample_given_above(q, rng);
    // Deep truncation: draw the arrival from its tilted law
    // f_A(a) (1+q+a)^{-2.5} / J_{2.5}(q) by rejection against f_A, then the
    // service from the exact truncated Pareto V | V > q + a.
    for (int i = 0; i < 1 << 22; ++i) {
      const double a = -std::log(rng.uniform()) / kRate;
      const double acc = std::pow((1.0 + q) / (1.0 + q + a), kAlpha);
      if (rng.uniform() <= acc) {
        const double c = q + a;
        const double v = (1.0 + c) * std::pow(rng.uniform(), -1.0 / kAlpha) - 1.0;
        return v - a;
      }
    }
    throw sampler_error("pareto_mg1: tilted-arrival rejection stalled", q, "truncate_above");
  }
  double integral_density(const std::function<double(double)>& g, double lo, double hi,
                          double rel_tol, double abs_tol) const override {
    double total = 0;
    const double mid = std::clamp(0.0, lo, hi);
    if (lo < mid) {
      const double c = kAlpha * j35_at_0_;
      total += num::integrate(
          [&](double t) { return g(t) * c * std::exp(kRate * t); }, lo, mid, rel_tol,
          abs_tol);
    }
    if (mid < hi) {
      total += num::integrate([&](double t) { return g(t) * density(t); }, mid, hi,
                              rel_tol, abs_tol);
    }
    return total;
  }
  std::string name() const override { return "pareto_mg1"; }

  // Exposed for the dual-route tests.
  double tail_by_quadrature(double s) const {
    if (s >= 0) return j_exact(2.5, s);
    return 1.0 - std::exp(kRate * s) * (1.0 - j_exact(2.5, 0.0));
  }

 private:
  static double j_exact(double p, double s) {
    return num::integrate(
        [p, s](double a) {
          return kRate * std::exp(-kRate * a) * std::pow(1.0 + s + a, -p);
        },
        0.0, num::kInf, 1e-12, 1e-300);
  }
  static num::ChebyshevInterpolant build_cache(double p) {
    return num::ChebyshevInterpolant::build(
        [p](double u) { return std::log(j_exact(p, std::expm1(u))); }, 0.0,
        std::log1p(kCacheMax), 1e-11, 1e-11);
  }
  double j(const num::ChebyshevInterpolant& cache, double p, double s) const {
    if (s <= kCacheMax) return std::exp(cache(std::log1p(s)));
    return j_exact(p, s);
  }
  double j15_at_0() const { return std::exp(j15_(0.0)); }

  num::ChebyshevInterpolant j15_, j25_, j35_;
  double j25_at_0_ = 0, j35_at_0_ = 0;
};

// ---------------------------------------------------------------------------
// Light-tailed two-sided exponential: X = V - A, V ~ Exp(mu), A ~ Exp(lambda),
// lambda < mu. Closed forms throughout; exponential tilting stays in the
// family: tilt by theta => ExpDiff(mu - theta, lambda + theta).
class ExpDiffModel final : public IncrementModel {
 public:
  ExpDiffModel(double mu, double lambda) : mu_(mu), lambda_(lambda) {
    if (!(lambda > 0) || !(mu > lambda))
      throw config_error("exp_diff requires 0 < lambda < mu");
  }
  double tail(double t) const override {
    if (t >= 0) return lambda_ / (lambda_ + mu_) * std::exp(-mu_ * t);
    return 1.0 - mu_ / (lambda_ + mu_) * std::exp(lambda_ * t);
  }
  double density(double t) const override {
    const double c = lambda_ * mu_ / (lambda_ + mu_);
    return t >= 0 ? c * std::exp(-mu_ * t) : c * std::exp(lambda_ * t);
  }
  double mean() const override { return 1.0 / mu_ - 1.0 / lambda_; }
  double integrated_tail(double t) const override {
    if (t >= 0) return lambda_ / (mu_ * (lambda_ + mu_)) * std::exp(-mu_ * t);
    return -t + integrated_tail(0.0) -
           mu_ / (lambda_ * (lambda_ + mu_)) * (1.0 - std::exp(lambda_ * t));
  }
  double support_lower() const override { return -num::kInf; }
  TailClass tail_class() const override { return TailClass::light_tailed; }
  double sample(RandomStream& rng) const override {
    const double u = rng.uniform();
    const double p_neg = mu_ / (lambda_ + mu_);
    if (u <= p_neg) return std::log(u / p_neg) / lambda_;
    return -std::log((1.0 - u) / (1.0 - p_neg) + 1e-300) / mu_;
  }
  double mgf(double theta) const override {
    if (theta >= mu_ || theta <= -lambda_)
      throw numeric_error("exp_diff: mgf diverges at theta", num::kInf);
    return mu_ / (mu_ - theta) * lambda_ / (lambda_ + theta);
  }
  double sample_tilted(double theta, RandomStream& rng) const override {
    ExpDiffModel tilted(mu_ - theta, lambda_ + theta);
    return tilted.sample(rng);
  }
  std::string name() const override { return "exp_diff"; }

 private:
  double mu_, lambda_;
};

// ---------------------------------------------------------------------------
class GaussianDriftModel final : public IncrementModel {
 public:
  GaussianDriftModel(double mu, double sigma) : mu_(mu), sigma_(sigma) {
    if (!(mu > 0) || !(sigma > 0))
      throw config_error("gaussian_drift requires mu > 0, sigma > 0");
  }
  double tail(double t) const override { return num::normal_cdf(-(t + mu_) / sigma_); }
  double density(double t) const override {
    const double z = (t + mu_) / sigma_;
    return std::exp(-0.5 * z * z) / (sigma_ * std::sqrt(2 * M_PI));
  }
  double mean() const override { return -mu_; }
  double integrated_tail(double t) const override {
    // E (X - t)^+ for X ~ N(-mu, sigma^2)
    const double z = (t + mu_) / sigma_;
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI);
    return sigma_ * (pdf - z * num::normal_cdf(-z));
  }
  double support_lower() const override { return -num::kInf; }
  TailClass tail_class() const override { return TailClass::light_tailed; }
  double sample(RandomStream& rng) const override {
    return -mu_ + sigma_ * num::inverse_normal_cdf(rng.uniform());
  }
  double mgf(double theta) const override {
    return std::exp(-theta * mu_ + 0.5 * theta * theta * sigma_ * sigma_);
  }
  double sample_tilted(double theta, RandomStream& rng) const override {
    return (-mu_ + theta * sigma_ * sigma_) + sigma_ * num::inverse_normal_cdf(rng.uniform());
  }
  std::string name() const override { return "gaussian_drift"; }

 private:
  double mu_, sigma_;
};

// ---------------------------------------------------------------------------
class DiscreteLatticeModel final : public IncrementModel {
 public:
  DiscreteLatticeModel(std::vector<double> values, std::vector<double> probs) {
    if (values.size() != probs.size() || values.empty())
      throw config_error("discrete_lattice: values/probs size mismatch");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    for (std::size_t i : order) {
      support_.values.push_back(values[i]);
      support_.probs.push_back(probs[i]);
    }
    double total = 0, m = 0;
    for (std::size_t i = 0; i < support_.values.size(); ++i) {
      if (support_.probs[i] < 0) throw config_error("discrete_lattice: negative probability");
      total += support_.probs[i];
      m += support_.values[i] * support_.probs[i];
    }
    if (std::fabs(total - 1.0) > 1e-12)
      throw config_error("discrete_lattice: probabilities must sum to 1");
    if (!(m < 0)) throw config_error("discrete_lattice: mean must be negative");
    mean_ = m;
    cum_.resize(support_.probs.size());
    std::partial_sum(support_.probs.begin(), support_.probs.end(), cum_.begin());
    cum_.back() = 1.0;
  }
  double tail(double t) const override {
    double s = 0;
    for (std::size_t i = 0; i < support_.values.size(); ++i)
      if (support_.values[i] > t) s += support_.probs[i];
    return s;
  }
  bool has_density() const override { return false; }
  double mean() const override { return mean_; }
  double integrated_tail(double t) const override {
    // Piecewise-linear: sum over atoms above t of p_i (x_i - t).
    double s = 0;
    for (std::size_t i = 0; i < support_.values.size(); ++i)
      if (support_.values[i] > t) s += support_.probs[i] * (support_.values[i] - t);
    return s;
  }
  double support_lower() const override { return support_.values.front(); }
  TailClass tail_class() const override { return TailClass::discrete_finite; }
  double sample(RandomStream& rng) const override {
    const double u = rng.uniform();
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
    return support_.values[it - cum_.begin()];
  }
  double mgf(double theta) const override {
    double s = 0;
    for (std::size_t i = 0; i < support_.values.size(); ++i)
      s += support_.probs[i] * std::exp(theta * support_.values[i]);
    return s;
  }
  double sample_tilted(double theta, RandomStream& rng) const override {
    const double z = mgf(theta);
    double u = rng.uniform() * z;
    for (std::size_t i = 0; i < support_.values.size(); ++i) {
      u -= support_.probs[i] * std::exp(theta * support_.values[i]);
      if (u <= 0) return support_.values[i];
    }
    return support_.values.back();
  }
  const DiscreteSupport* discrete() const override { return &support_; }
  double integral_density(const std::function<double(double)>&, double, double, double,
                          double) const override {
    throw std::logic_error("discrete_lattice: no density to integrate");
  }
  std::string name() const override { return "discrete_lattice"; }

 private:
  DiscreteSupport support_;
  std::vector<double> cum_;
  double mean_ = 0;
};

}  // namespace

ModelPtr make_pareto_mg1() { return std::make_shared<ParetoMG1Model>(); }
ModelPtr make_weibull_det() { return std::make_shared<WeibullDetModel>(); }
ModelPtr make_exp_diff(double mu, double lambda) {
  return std::make_shared<ExpDiffModel>(mu, lambda);
}
ModelPtr make_gaussian_drift(double mu, double sigma) {
  return std::make_shared<GaussianDriftModel>(mu, sigma);
}
ModelPtr make_discrete_lattice(std::vector<double> values, std::vector<double> probs) {
  return std::make_shared<DiscreteLatticeModel>(std::move(values), std::move(probs));
}

ModelPtr make_model(const std::string& name, const std::map<std::string, double>& params,
                    const std::vector<double>& values, const std::vector<double>& probs) {
  auto get = [&](const std::string& key) {
    auto it = params.find(key);
    if (it == params.end())
      throw config_error("model " + name + " requires parameter '" + key + "'");
    return it->second;
  };
  if (name == "pareto_mg1") return make_pareto_mg1();
  if (name == "weibull_det") return make_weibull_det();
  if (name == "exp_diff") return make_exp_diff(get("mu"), get("lambda"));
  if (name == "gaussian_drift") return make_gaussian_drift(get("mu"), get("sigma"));
  if (name == "discrete_lattice") {
    if (values.empty()) throw config_error("discrete_lattice requires values=/probs= lists");
    return make_discrete_lattice(values, probs);
  }
  throw config_error("unknown model '" + name + "'");
}

std::optional<TailClass> tail_class_of(const std::string& name) {
  if (name == "pareto_mg1") return TailClass::regularly_varying;
  if (name == "weibull_det") return TailClass::weibull_type;
  if (name == "exp_diff" || name == "gaussian_drift") return TailClass::light_tailed;
  if (name == "discrete_lattice") return TailClass::discrete_finite;
  return std::nullopt;
}

}  // namespace walktail

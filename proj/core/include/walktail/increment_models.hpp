#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "walktail/numeric.hpp"
#include "walktail/rng.hpp"

namespace walktail {

enum class TailClass { regularly_varying, weibull_type, light_tailed, discrete_finite };

std::string to_string(TailClass c);

struct DiscreteSupport {
  std::vector<double> values;  // strictly increasing
  std::vector<double> probs;
};

// Increment distribution X of the walk: negative mean, known tail, density
// (continuous models), integrated tail and an exact sampling recipe. Models
// are immutable after construction and safe to share across threads.
class IncrementModel {
 public:
  virtual ~IncrementModel() = default;

  virtual double tail(double t) const = 0;  // P(X > t)
  virtual double density(double t) const;   // throws for discrete models
  virtual bool has_density() const { return true; }
  virtual double mean() const = 0;
  virtual double integrated_tail(double t) const = 0;  // int_t^inf P(X > s) ds
  virtual double support_lower() const = 0;
  virtual TailClass tail_class() const = 0;
  virtual double regvar_index() const;  // alpha, regularly varying models only

  // One draw of X by inversion; consumes a fixed number of uniforms.
  virtual double sample(RandomStream& rng) const = 0;

  // E[exp(theta X)]; throws for models without a finite mgf at theta > 0.
  virtual double mgf(double theta) const;
  // One draw under the exponentially tilted law f(t) e^{theta t} / mgf(theta).
  virtual double sample_tilted(double theta, RandomStream& rng) const;

  virtual const DiscreteSupport* discrete() const { return nullptr; }

  // Exact draw of X conditioned on X > q (resp. q_lo < X <= q_hi).
  // Defaults rejection-sample from the unconditioned law; heavy-tailed
  // built-ins override with inversion / tilted-proposal schemes whose
  // acceptance stays bounded away from zero.
  virtual double sample_given_above(double q, RandomStream& rng) const;
  virtual double sample_in_range(double q_lo, double q_hi, RandomStream& rng) const;

  // int_lo^hi g(t) f_X(t) dt with a model-appropriate substitution (e.g. the
  // Weibull density has an integrable singularity at the support edge that
  // the default quadrature must not see).
  virtual double integral_density(const std::function<double(double)>& g, double lo,
                                  double hi, double rel_tol, double abs_tol) const;

  virtual std::string name() const = 0;
};

using ModelPtr = std::shared_ptr<const IncrementModel>;

// Built-ins.
ModelPtr make_pareto_mg1();                      // X = V - A, P(V>t)=(1+t)^{-2.5}, A~Exp(3/4)
ModelPtr make_weibull_det();                     // X = V - 1,  P(V>t)=exp(-2 sqrt(t))
ModelPtr make_exp_diff(double mu, double lambda);    // X = V - A, V~Exp(mu), A~Exp(lambda)
ModelPtr make_gaussian_drift(double mu, double sigma);  // X ~ N(-mu, sigma^2)
ModelPtr make_discrete_lattice(std::vector<double> values, std::vector<double> probs);

// Config-surface factory: name in {pareto_mg1, weibull_det, exp_diff,
// gaussian_drift, discrete_lattice}, parameters by key.
ModelPtr make_model(const std::string& name, const std::map<std::string, double>& params,
                    const std::vector<double>& values = {},
                    const std::vector<double>& probs = {});

// Tail class by model name without constructing the model (parse-time checks).
std::optional<TailClass> tail_class_of(const std::string& name);

}  // namespace walktail

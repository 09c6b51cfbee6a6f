#include "walktail/conditional_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "walktail/errors.hpp"

namespace walktail {

SamplerScheme scheme_from_string(const std::string& s) {
  if (s == "auto") return SamplerScheme::automatic;
  if (s == "naive") return SamplerScheme::naive;
  if (s == "regvar") return SamplerScheme::regvar;
  if (s == "stratified") return SamplerScheme::stratified;
  throw config_error("unknown sampler scheme '" + s + "'");
}

std::string to_string(SamplerScheme s) {
  switch (s) {
    case SamplerScheme::automatic: return "auto";
    case SamplerScheme::naive: return "naive";
    case SamplerScheme::regvar: return "regvar";
    case SamplerScheme::stratified: return "stratified";
  }
  return "?";
}

ConditionalSampler::ConditionalSampler(const Approximation& approx, SamplerConfig cfg)
    : approx_(approx), cfg_(cfg) {
  if (!(cfg_.theta > 0 && cfg_.theta < 1)) throw config_error("sampler.theta must lie in (0,1)");
  if (cfg_.regvar_m_override > 0) {
    m_ = cfg_.regvar_m_override;
  } else if (approx_.model().tail_class() == TailClass::regularly_varying) {
    // m >= sup_b P(Z > b) / P(Z + X > b); sup over a fixed log grid times a
    // safety factor, backstopped per call by the local ratio.
    double sup = 1.0;
    for (double b = 0.125; b <= 32768.0; b *= 2)
      sup = std::max(sup, approx_.z_tail(b) / approx_.w(-b));
    m_ = sup * cfg_.regvar_safety;
  }
}

SamplerScheme ConditionalSampler::resolve(double beta) const {
  if (cfg_.scheme != SamplerScheme::automatic) {
    if (cfg_.scheme == SamplerScheme::stratified && beta <= 1.0) return SamplerScheme::naive;
    return cfg_.scheme;
  }
  switch (approx_.model().tail_class()) {
    case TailClass::regularly_varying: return SamplerScheme::regvar;
    case TailClass::weibull_type:
      return beta > 1.0 ? SamplerScheme::stratified : SamplerScheme::naive;
    default: return SamplerScheme::naive;
  }
}

double ConditionalSampler::sample(double beta, RandomStream& rng) {
  if (approx_.model().discrete()) return sample_discrete(beta, rng);

  // Conditioning on a sure event: plain draw of X.
  if (beta <= approx_.model().support_lower()) {
    ++stats_.proposals;
    ++stats_.acceptances;
    return approx_.model().sample(rng);
  }

  switch (resolve(beta)) {
    case SamplerScheme::naive: return naive_ar(beta, rng);
    case SamplerScheme::regvar: {
      for (std::uint64_t i = 0; i < cfg_.proposal_cap; ++i) {
        auto [z, p] = propose_regvar(beta, rng);
        ++stats_.proposals;
        if (rng.uniform() <= p) {
          ++stats_.acceptances;
          return z;
        }
      }
      break;
    }
    case SamplerScheme::stratified: {
      for (std::uint64_t i = 0; i < cfg_.proposal_cap; ++i) {
        auto [z, p] = propose_stratified(beta, rng);
        ++stats_.proposals;
        if (rng.uniform() <= p) {
          ++stats_.acceptances;
          return z;
        }
      }
      break;
    }
    default: break;
  }
  std::ostringstream os;
  os << "proposal cap " << cfg_.proposal_cap << " exceeded at beta = " << beta;
  throw sampler_error(os.str(), beta, to_string(resolve(beta)));
}

double ConditionalSampler::naive_ar(double beta, RandomStream& rng) {
  if (beta > cfg_.naive_beta_ceiling) {
    std::ostringstream os;
    os << "naive AR disabled for beta = " << beta << " > ceiling " << cfg_.naive_beta_ceiling;
    throw sampler_error(os.str(), beta, "naive");
  }
  const IncrementModel& model = approx_.model();
  for (std::uint64_t i = 0; i < cfg_.proposal_cap; ++i) {
    const double x = model.sample(rng);
    ++stats_.proposals;
    const double acc = approx_.z_tail(beta - x);
    if (acc >= 1.0 || rng.uniform() <= acc) {
      ++stats_.acceptances;
      return x;
    }
  }
  std::ostringstream os;
  os << "proposal cap " << cfg_.proposal_cap << " exceeded at beta = " << beta;
  throw sampler_error(os.str(), beta, "naive");
}

double ConditionalSampler::sample_discrete(double beta, RandomStream& rng) {
  const DiscreteSupport& d = *approx_.model().discrete();
  double total = 0;
  for (std::size_t i = 0; i < d.values.size(); ++i)
    total += d.probs[i] * approx_.z_tail(beta - d.values[i]);
  if (!(total > 0)) throw sampler_error("conditional law has no mass", beta, "discrete");
  double u = rng.uniform() * total;
  ++stats_.proposals;
  ++stats_.acceptances;
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    u -= d.probs[i] * approx_.z_tail(beta - d.values[i]);
    if (u <= 0) return d.values[i];
  }
  return d.values.back();
}

double ConditionalSampler::regvar_c(double beta) const {
  const IncrementModel& model = approx_.model();
  const double zb = approx_.z_tail(beta);
  const double split = beta - cfg_.theta * beta;
  return (1.0 - model.tail(split)) * approx_.z_tail(cfg_.theta * beta) / zb +
         model.tail(split) / zb;
}

double ConditionalSampler::regvar_lambda0(double beta) const {
  const IncrementModel& model = approx_.model();
  const double split = beta - cfg_.theta * beta;
  return (1.0 - model.tail(split)) * approx_.z_tail(cfg_.theta * beta) /
         (approx_.z_tail(beta) * regvar_c(beta));
}

double ConditionalSampler::regvar_lambda1(double beta) const {
  const IncrementModel& model = approx_.model();
  const double split = beta - cfg_.theta * beta;
  return model.tail(split) / (approx_.z_tail(beta) * regvar_c(beta));
}

double ConditionalSampler::regvar_acceptance_bound(double beta) const {
  return 1.0 / (m_ * regvar_c(beta));
}

std::pair<double, double> ConditionalSampler::propose_regvar(double beta, RandomStream& rng) {
  if (approx_.model().tail_class() != TailClass::regularly_varying)
    throw sampler_error("regvar scheme requires a regularly varying model", beta, "regvar");
  const IncrementModel& model = approx_.model();
  const double split = beta - cfg_.theta * beta;
  const double wb = approx_.w(-beta);
  // m only has to dominate at the current beta.
  const double m_eff = std::max(m_, approx_.z_tail(beta) / wb);
  const double lam0 = regvar_lambda0(beta);

  double z;
  double denom;  // the envelope constant for the chosen component
  if (rng.uniform() <= lam0) {
    z = model.sample_in_range(-num::kInf, split, rng);
    denom = approx_.z_tail(cfg_.theta * beta);
  } else {
    z = model.sample_given_above(split, rng);
    denom = 1.0;
  }
  const double accept =
      approx_.z_tail(beta - z) * approx_.z_tail(beta) / (m_eff * wb * denom);
  return {z, std::min(accept, 1.0)};
}

ConditionalSampler::Envelope ConditionalSampler::build_envelope(double beta) const {
  const IncrementModel& model = approx_.model();
  Envelope env;
  env.beta = beta;
  // Envelopes may be served for betas up to one quantum away; the constants
  // are inflated so they still dominate there (|d log z_tail / du| <= 1).
  env.inflation = std::exp(1e-6 * beta);

  const double sb = std::sqrt(beta);
  const long long m = static_cast<long long>(std::floor(sb));
  const double lo0 = std::max(model.support_lower(), -num::kInf);

  auto push = [&](double lo, double hi, double constant) {
    if (!(hi > lo)) return;
    const double mass = constant * (model.tail(lo) - (hi == num::kInf ? 0.0 : model.tail(hi)));
    if (!(mass > 0)) return;
    env.lo.push_back(lo);
    env.hi.push_back(hi);
    env.constant.push_back(constant);
    env.total += mass;
    env.cum_mass.push_back(env.total);
  };

  push(lo0, 0.0, approx_.z_tail(beta) * env.inflation);
  for (long long k = 0; k < m; ++k)
    push(k * sb, (k + 1) * sb, approx_.z_tail_open(beta - (k + 1) * sb) * env.inflation);
  push(m * sb, beta, approx_.z_tail_open(0.0) * env.inflation);
  push(beta, num::kInf, 1.0);
  return env;
}

const ConditionalSampler::Envelope& ConditionalSampler::envelope_for(double beta) {
  const long long key = std::llround(std::log(std::max(beta, 1e-12)) * 1e6);
  auto it = envelope_cache_.find(key);
  if (it == envelope_cache_.end())
    it = envelope_cache_.emplace(key, build_envelope(beta)).first;
  return it->second;
}

std::pair<double, double> ConditionalSampler::propose_stratified(double beta,
                                                                 RandomStream& rng) {
  if (approx_.model().tail_class() != TailClass::weibull_type)
    throw sampler_error("stratified scheme is for Weibull-type models", beta, "stratified");
  if (!(beta > 1.0)) return {naive_ar(beta, rng), 1.0};

  const Envelope& env = envelope_for(beta);
  const double u = rng.uniform() * env.total;
  const auto it = std::lower_bound(env.cum_mass.begin(), env.cum_mass.end(), u);
  const std::size_t j = std::min<std::size_t>(it - env.cum_mass.begin(), env.lo.size() - 1);

  const IncrementModel& model = approx_.model();
  const double t = env.hi[j] == num::kInf
                       ? model.sample_given_above(env.lo[j], rng)
                       : model.sample_in_range(env.lo[j], env.hi[j], rng);
  const double accept = approx_.z_tail(beta - t) / env.constant[j];
  return {t, std::min(accept, 1.0)};
}

double ConditionalSampler::stratified_envelope_value(double beta, double t) {
  const Envelope& env = envelope_for(beta);
  for (std::size_t j = 0; j < env.lo.size(); ++j)
    if (t > env.lo[j] && (env.hi[j] == num::kInf || t <= env.hi[j]))
      return env.constant[j] * approx_.model().density(t);
  return 0.0;
}

double ConditionalSampler::stratified_expected_proposals(double beta) {
  return envelope_for(beta).total / approx_.w(-beta);
}

ReferenceCdf ReferenceCdf::build(const ConditionalSampler& sampler, double beta, double t_lo,
                                 double t_hi, int points) {
  ReferenceCdf out;
  const double lo = sampler.approx().model().support_lower();
  const double anchor = std::isfinite(lo) ? lo : t_lo;
  std::vector<double> ts;
  ts.push_back(std::max(t_lo, anchor));
  const int n_sqrt = points / 4, n_lin = points / 2, n_log = points / 4;
  if (std::isfinite(lo)) {
    // Square-root grading absorbs a density singularity at the edge.
    const double span = std::min(t_hi, lo + 4.0) - lo;
    for (int i = 1; i <= n_sqrt; ++i) {
      const double s = span * i / n_sqrt;
      ts.push_back(lo + s * s / span);
    }
  }
  const double mid_lo = std::max(t_lo, std::isfinite(lo) ? lo + 4.0 : t_lo);
  const double mid_hi = std::min(t_hi, std::max(beta * 1.25, mid_lo + 1.0));
  for (int i = 0; i <= n_lin; ++i) ts.push_back(mid_lo + (mid_hi - mid_lo) * i / n_lin);
  for (int i = 1; i <= n_log; ++i)
    ts.push_back(mid_hi * std::pow(std::max(t_hi, mid_hi * 1.0001) / mid_hi,
                                   static_cast<double>(i) / n_log));
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  for (double t : ts) {
    out.ts_.push_back(t);
    out.Fs_.push_back(sampler.conditional_cdf(beta, t));
  }
  return out;
}

double ReferenceCdf::operator()(double t) const {
  if (t <= ts_.front()) return 0.0;
  if (t >= ts_.back()) return Fs_.back();
  const auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
  const std::size_t i = it - ts_.begin();
  const double x0 = ts_[i - 1], x1 = ts_[i];
  const double f0 = Fs_[i - 1], f1 = Fs_[i];
  return f0 + (f1 - f0) * (t - x0) / (x1 - x0);
}

double ConditionalSampler::conditional_cdf(double beta, double t) const {
  const IncrementModel& model = approx_.model();
  if (const DiscreteSupport* d = model.discrete()) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < d->values.size(); ++i) {
      const double wgt = d->probs[i] * approx_.z_tail(beta - d->values[i]);
      den += wgt;
      if (d->values[i] <= t) num += wgt;
    }
    if (!(den > 0)) throw numeric_error("conditional_cdf: zero normalizer", num::kInf);
    return num / den;
  }

  const double lo = model.support_lower();
  if (t <= lo) return 0.0;
  const double denom = approx_.w_exact(-beta);
  if (!(denom > 0)) throw numeric_error("conditional_cdf: P(X + Z > beta) = 0", num::kInf);
  const double cut = beta - approx_.y0();
  const QuadratureConfig& q = approx_.quadrature();
  double head = 0;
  if (t > cut) {
    head = model.tail(cut) - (t == num::kInf ? 0.0 : model.tail(t));
  }
  const double upper = std::min(t, cut);
  double body = 0;
  if (upper > lo) {
    body = model.integral_density(
        [&](double x) { return approx_.z_tail_open(beta - x); }, lo, upper, q.w_rel_tol,
        q.abs_tol);
  }
  return std::clamp((body + head) / denom, 0.0, 1.0);
}

}  // namespace walktail

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "walktail/approximation.hpp"
#include "walktail/rng.hpp"

namespace walktail {

enum class SamplerScheme { automatic, naive, regvar, stratified };

SamplerScheme scheme_from_string(const std::string& s);
std::string to_string(SamplerScheme s);

struct SamplerConfig {
  SamplerScheme scheme = SamplerScheme::automatic;
  double theta = 0.5;                 // regvar mixture split
  std::uint64_t proposal_cap = 1'000'000;
  double naive_beta_ceiling = 50.0;   // naive AR acceptance collapses past this
  double regvar_safety = 1.1;         // multiplier on the grid sup for m
  double accept_floor = 0.05;
  double regvar_m_override = 0;       // > 0: skip the per-instance grid sup
};

struct SamplerStats {
  std::uint64_t proposals = 0;
  std::uint64_t acceptances = 0;
};

// Draws Y with law P(X in dt | X + Z > beta), i.e. density
// f_X(t) P(Z > beta - t) / P(X + Z > beta). One instance per replication:
// the stats counters and the stratified envelope cache are mutable.
class ConditionalSampler {
 public:
  ConditionalSampler(const Approximation& approx, SamplerConfig cfg = {});

  double sample(double beta, RandomStream& rng);

  // Reference CDF of the conditional law by quadrature (test oracle).
  double conditional_cdf(double beta, double t) const;

  // Scheme internals, exposed for calibration checks and tests.
  std::pair<double, double> propose_regvar(double beta, RandomStream& rng);
  std::pair<double, double> propose_stratified(double beta, RandomStream& rng);
  double naive_ar(double beta, RandomStream& rng);
  double sample_discrete(double beta, RandomStream& rng);

  // Regvar mixture ingredients (normalizer and weights; lambda0 + lambda1 = 1).
  double regvar_c(double beta) const;
  double regvar_lambda0(double beta) const;
  double regvar_lambda1(double beta) const;
  // Lower bound [m c(beta)]^{-1} on the acceptance probability.
  double regvar_acceptance_bound(double beta) const;
  double regvar_m() const { return m_; }

  // Stratified envelope diagnostics: pointwise value and the expected number
  // of proposals per accepted draw (total envelope mass / w(-beta)).
  double stratified_envelope_value(double beta, double t);
  double stratified_expected_proposals(double beta);

  const SamplerStats& stats() const { return stats_; }
  const Approximation& approx() const { return approx_; }
  const SamplerConfig& config() const { return cfg_; }

 private:
  struct Envelope {
    double beta;      // beta the envelope was built for
    double inflation;
    std::vector<double> lo, hi, constant, cum_mass;
    double total = 0;
  };
  const Envelope& envelope_for(double beta);
  Envelope build_envelope(double beta) const;
  SamplerScheme resolve(double beta) const;

  const Approximation& approx_;
  SamplerConfig cfg_;
  SamplerStats stats_;
  double m_ = 1.0;  // regvar dominating constant, grid sup * safety factor
  std::unordered_map<long long, Envelope> envelope_cache_;
};

// conditional_cdf tabulated on a graded grid (square-root graded near a
// finite support edge, log-graded past beta) with linear interpolation;
// the KS reference for continuous models.
class ReferenceCdf {
 public:
  static ReferenceCdf build(const ConditionalSampler& sampler, double beta, double t_lo,
                            double t_hi, int points = 2000);
  double operator()(double t) const;

 private:
  std::vector<double> ts_, Fs_;
};

}  // namespace walktail

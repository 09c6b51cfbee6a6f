#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "walktail/approximation.hpp"
#include "walktail/conditional_sampler.hpp"
#include "walktail/rng.hpp"

namespace walktail {

struct RunResult {
  double log_R = 0;        // log likelihood ratio; -inf encodes R = 0
  bool crossed = false;    // level 0 reached
  std::uint64_t steps = 0;
  std::uint64_t variates = 0;  // uniforms consumed

  double R() const { return crossed ? std::exp(log_R) : 0.0; }
};

// Value functions the walk-level estimator is driven by. The production pair
// is (v, w) from an Approximation; oracle tests plug in exact or deliberately
// distorted pairs. w must match E[v(. + X)] for the estimator to telescope.
class StateValue {
 public:
  virtual ~StateValue() = default;
  virtual double v(double y) const = 0;
  virtual double w(double y) const = 0;
};

class ApproxStateValue final : public StateValue {
 public:
  explicit ApproxStateValue(const Approximation& a) : a_(a) {}
  double v(double y) const override { return a_.v(y); }
  double w(double y) const override { return a_.w(y); }

 private:
  const Approximation& a_;
};

// Proposal source for one step of the importance sampler.
class IncrementProposer {
 public:
  virtual ~IncrementProposer() = default;
  virtual double draw(double beta, RandomStream& rng) = 0;
};

class SamplerProposer final : public IncrementProposer {
 public:
  explicit SamplerProposer(ConditionalSampler& s) : s_(s) {}
  double draw(double beta, RandomStream& rng) override { return s_.sample(beta, rng); }

 private:
  ConditionalSampler& s_;
};

// Exact one-step draw for discrete models under an arbitrary value function:
// mass at x_k proportional to p_k v(x_k - beta). With v from the
// approximation this coincides with the conditional law used elsewhere.
class DiscreteValueProposer final : public IncrementProposer {
 public:
  DiscreteValueProposer(ModelPtr model, const StateValue& values);
  double draw(double beta, RandomStream& rng) override;

 private:
  ModelPtr model_;
  const StateValue& values_;
};

// One replication of the state-dependent importance sampler started at -b:
// each step resamples the increment conditioned one level ahead and folds
// w(y + a_star) / v(s + a_star) into the likelihood ratio, stopping once the
// walk reaches [0, inf).
RunResult bg_replicate(const StateValue& values, IncrementProposer& proposer, double a_star,
                       double b, RandomStream& rng, std::uint64_t step_cap = 100'000'000);

// Positive root of E exp(theta X) = 1 to 1e-12 (light-tailed walks).
double solve_theta_star(const IncrementModel& model);

// Exponentially tilted (Siegmund) replication; crossing is certain.
RunResult siegmund_replicate(const IncrementModel& model, double theta_star, double b,
                             RandomStream& rng, std::uint64_t step_cap = 100'000'000);

// Plain simulation under the original measure, truncated at max_steps.
RunResult crude_replicate(const IncrementModel& model, double b, std::uint64_t max_steps,
                          RandomStream& rng);

struct Summary {
  std::string model;
  std::string estimator;
  double b = 0;
  double gamma = 0;
  double a_star = 0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  double mean = 0;
  double stderr_ = 0;
  double cv = 0;  // sample stdev / mean
  double ci_lo = 0, ci_hi = 0;
  double mean_steps = 0;
  double mean_variates = 0;
  double wall_time = 0;
  // Not part of the CSV row: second moment of R, for bound checks.
  double mean_R2 = 0;
  double stderr_R2 = 0;
};

std::string summary_csv_header();
std::string summary_csv_row(const Summary& s);
Summary parse_summary_row(const std::string& header, const std::string& row);

// Replication harness: n independent replications with streams derived from
// (seed, level_index, replication index); aggregation is compensated and
// sequential in replication order, so the result is independent of the
// worker count.
struct ReplicationPlan {
  std::function<RunResult(std::uint64_t index, RandomStream& rng)> replicate;
  std::uint64_t n = 0;
  std::uint64_t seed = 1;
  std::uint64_t level_index = 0;
  unsigned workers = 0;  // 0: hardware concurrency
};

Summary run_replications(const ReplicationPlan& plan);

}  // namespace walktail

#include "walktail/config.hpp"

namespace walktail {

struct ExperimentOutput {
  std::optional<SafetyParams> safety;  // present for the importance sampler
  std::vector<Summary> summaries;      // one per level, in config order
};

// Full pipeline: model, approximation (with w cache), calibration (unless
// a_star is overridden), then n replications per level.
ExperimentOutput run_experiment(const ExperimentConfig& cfg);

}  // namespace walktail

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "walktail/conditional_sampler.hpp"
#include "walktail/increment_models.hpp"

namespace walktail {

enum class EstimatorKind { bg, siegmund, crude };

EstimatorKind estimator_from_string(const std::string& s);
std::string to_string(EstimatorKind k);

struct ExperimentConfig {
  std::string model_name;
  std::map<std::string, double> model_params;  // mu, lambda, sigma
  std::vector<double> lattice_values;
  std::vector<double> lattice_probs;

  EstimatorKind estimator = EstimatorKind::bg;
  std::vector<double> levels;  // b

  double gamma = 0.5;
  std::optional<double> a_star;  // manual override skips calibration
  std::optional<double> y_min;   // default -max(200, 2 b_max)
  double grid_step = 0.1;

  SamplerConfig sampler;

  std::uint64_t n = 1000;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> max_steps;  // crude truncation; default 20 b / |EX|
  unsigned workers = 0;
  std::string out;

  double resolved_y_min() const;
  std::uint64_t resolved_max_steps(double b, double mean) const;
};

// key = value lines, optionally grouped under [section] headers (equivalently
// written as dotted keys, e.g. sampler.scheme). '#' starts a comment. Unknown
// keys, type mismatches and constraint violations are errors that carry the
// line number.
ExperimentConfig parse_config(const std::string& text);

ModelPtr build_model(const ExperimentConfig& cfg);

}  // namespace walktail

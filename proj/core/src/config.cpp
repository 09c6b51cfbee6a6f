#include "walktail/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "walktail/errors.hpp"

namespace walktail {

EstimatorKind estimator_from_string(const std::string& s) {
  if (s == "bg") return EstimatorKind::bg;
  if (s == "siegmund") return EstimatorKind::siegmund;
  if (s == "crude") return EstimatorKind::crude;
  throw config_error("unknown estimator '" + s + "'");
}

std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::bg: return "bg";
    case EstimatorKind::siegmund: return "siegmund";
    case EstimatorKind::crude: return "crude";
  }
  return "?";
}

double ExperimentConfig::resolved_y_min() const {
  if (y_min) return *y_min;
  double b_max = 0;
  for (double b : levels) b_max = std::max(b_max, b);
  return -std::max(200.0, 2.0 * b_max);
}

std::uint64_t ExperimentConfig::resolved_max_steps(double b, double mean) const {
  if (max_steps) return *max_steps;
  return static_cast<std::uint64_t>(std::ceil(20.0 * b / std::fabs(mean)));
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw config_error("value '" + v + "' for key '" + key + "' is not a number", line);
  }
}

std::uint64_t parse_count(const std::string& v, int line, const std::string& key) {
  const double x = parse_number(v, line, key);
  if (x < 0 || x != std::floor(x))
    throw config_error("key '" + key + "' needs a nonnegative integer", line);
  return static_cast<std::uint64_t>(x);
}

std::vector<double> parse_list(const std::string& v, int line, const std::string& key) {
  std::vector<double> out;
  std::string cur;
  std::istringstream is(v);
  while (std::getline(is, cur, ',')) out.push_back(parse_number(trim(cur), line, key));
  if (out.empty()) throw config_error("key '" + key + "' needs a comma list", line);
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line = 0;
  bool saw_model = false, saw_estimator = false;

  while (std::getline(is, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw config_error("unterminated section header", line);
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw config_error("expected key = value", line);
    std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty() || value.empty()) throw config_error("expected key = value", line);
    if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
    // Section prefixes that exist only for grouping.
    for (const char* p : {"experiment.", "model.", "calibration."}) {
      if (key.rfind(p, 0) == 0) {
        key = key.substr(std::string(p).size());
        break;
      }
    }

    if (key == "model") {
      cfg.model_name = value;
      saw_model = true;
    } else if (key == "mu" || key == "lambda" || key == "sigma") {
      cfg.model_params[key] = parse_number(value, line, key);
    } else if (key == "values") {
      cfg.lattice_values = parse_list(value, line, key);
    } else if (key == "probs") {
      cfg.lattice_probs = parse_list(value, line, key);
    } else if (key == "estimator") {
      try {
        cfg.estimator = estimator_from_string(value);
      } catch (const config_error& e) {
        throw config_error(e.what(), line);
      }
      saw_estimator = true;
    } else if (key == "b") {
      cfg.levels = parse_list(value, line, key);
    } else if (key == "gamma") {
      cfg.gamma = parse_number(value, line, key);
      if (!(cfg.gamma > 0 && cfg.gamma < 1))
        throw config_error("gamma must lie in (0,1)", line);
    } else if (key == "a_star") {
      cfg.a_star = parse_number(value, line, key);
    } else if (key == "y_min") {
      cfg.y_min = parse_number(value, line, key);
      if (!(*cfg.y_min < 0)) throw config_error("y_min must be negative", line);
    } else if (key == "grid_step") {
      cfg.grid_step = parse_number(value, line, key);
      if (!(cfg.grid_step > 0)) throw config_error("grid_step must be positive", line);
    } else if (key == "sampler.scheme") {
      try {
        cfg.sampler.scheme = scheme_from_string(value);
      } catch (const config_error& e) {
        throw config_error(e.what(), line);
      }
    } else if (key == "sampler.theta") {
      cfg.sampler.theta = parse_number(value, line, key);
      if (!(cfg.sampler.theta > 0 && cfg.sampler.theta < 1))
        throw config_error("sampler.theta must lie in (0,1)", line);
    } else if (key == "sampler.proposal_cap") {
      cfg.sampler.proposal_cap = parse_count(value, line, key);
    } else if (key == "sampler.naive_beta_ceiling") {
      cfg.sampler.naive_beta_ceiling = parse_number(value, line, key);
    } else if (key == "n") {
      cfg.n = parse_count(value, line, key);
      if (cfg.n < 1) throw config_error("n must be >= 1", line);
    } else if (key == "seed") {
      cfg.seed = parse_count(value, line, key);
    } else if (key == "max_steps") {
      cfg.max_steps = parse_count(value, line, key);
      if (*cfg.max_steps < 1) throw config_error("max_steps must be >= 1", line);
    } else if (key == "workers") {
      cfg.workers = static_cast<unsigned>(parse_count(value, line, key));
    } else if (key == "out") {
      cfg.out = value;
    } else {
      throw config_error("unknown key '" + key + "'", line);
    }
  }

  if (!saw_model) throw config_error("missing required key 'model'");
  if (!saw_estimator) throw config_error("missing required key 'estimator'");
  if (cfg.levels.empty()) throw config_error("missing required key 'b'");
  for (double b : cfg.levels)
    if (!(b > 0)) throw config_error("levels b must all be > 0");

  const auto cls = tail_class_of(cfg.model_name);
  if (!cls) throw config_error("unknown model '" + cfg.model_name + "'");
  if (cfg.estimator == EstimatorKind::siegmund &&
      (*cls == TailClass::regularly_varying || *cls == TailClass::weibull_type)) {
    throw config_error("estimator=siegmund needs a light-tailed model; '" + cfg.model_name +
                       "' is " + to_string(*cls) +
                       " and has no finite moment generating function");
  }
  if (cfg.model_name == "discrete_lattice" &&
      (cfg.lattice_values.empty() || cfg.lattice_values.size() != cfg.lattice_probs.size()))
    throw config_error("discrete_lattice needs matching values= and probs= lists");
  if (cfg.a_star && *cfg.a_star > 0)
    throw config_error("a_star must be <= 0 (signed; a positive value is a sign slip)");
  return cfg;
}

ModelPtr build_model(const ExperimentConfig& cfg) {
  return make_model(cfg.model_name, cfg.model_params, cfg.lattice_values, cfg.lattice_probs);
}

}  // namespace walktail

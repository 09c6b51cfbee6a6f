#include "walktail/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "walktail/errors.hpp"
#include "walktail/estimators.hpp"
#include "walktail/validation.hpp"

namespace walktail {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitValidation = 4;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_output(const std::string& out_path, const std::string& body) {
  if (out_path.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw config_error("cannot open output file '" + out_path + "'");
  out << body;
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out;
  std::optional<double> gamma;
  std::optional<double> a_star;
  std::optional<double> y_min;
  std::optional<double> grid_step;

  void apply(ExperimentConfig& cfg) const {
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
    if (!out.empty()) cfg.out = out;
    if (gamma) cfg.gamma = *gamma;
    if (a_star) cfg.a_star = *a_star;
    if (y_min) cfg.y_min = *y_min;
    if (grid_step) cfg.grid_step = *grid_step;
  }
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--seed", ov.seed, "master seed override");
  cmd->add_option("--workers", ov.workers, "worker pool size (0 = machine parallelism)");
  cmd->add_option("--out", ov.out, "output path (default: stdout)");
  cmd->add_option("--gamma", ov.gamma, "safety inequality gamma in (0,1)");
  cmd->add_option("--a-star", ov.a_star, "manual a_star override (<= 0)");
  cmd->add_option("--y-min", ov.y_min, "calibration grid depth");
  cmd->add_option("--grid-step", ov.grid_step, "calibration grid step");
}

int cmd_estimate(const std::string& config_path, const Overrides& ov) {
  ExperimentConfig cfg = parse_config(read_file(config_path));
  ov.apply(cfg);
  const ExperimentOutput result = run_experiment(cfg);
  std::ostringstream body;
  body << summary_csv_header() << '\n';
  for (const Summary& s : result.summaries) body << summary_csv_row(s) << '\n';
  write_output(cfg.out, body.str());
  if (result.safety && !result.safety->warning.empty())
    std::cerr << "warning: " << result.safety->warning << '\n';
  return kExitOk;
}

int cmd_find_a_star(const std::string& config_path, const Overrides& ov) {
  ExperimentConfig cfg = parse_config(read_file(config_path));
  ov.apply(cfg);
  const ModelPtr model = build_model(cfg);
  const double depth = -cfg.resolved_y_min();
  Approximation approx(model, QuadratureConfig{},
                       model->has_density() ? std::optional<double>(depth) : std::nullopt);
  SafetyParams sp = cfg.a_star
                        ? manual_safety_params(approx, cfg.gamma, *cfg.a_star,
                                               cfg.resolved_y_min(), cfg.grid_step)
                        : find_a_star(approx, cfg.gamma, cfg.resolved_y_min(), cfg.grid_step);
  std::ostringstream body;
  body << "# a_star = " << sp.a_star << ", gamma = " << sp.gamma << ", kappa = " << sp.kappa
       << '\n'
       << safety_grid_csv(sp);
  write_output(cfg.out, body.str());
  if (!sp.warning.empty()) std::cerr << "warning: " << sp.warning << '\n';
  return kExitOk;
}

int cmd_validate(const std::string& out_path) {
  const std::vector<CheckResult> checks = run_validation_suite();
  std::ostringstream table;
  bool all_pass = true;
  table << "check,pass,value,detail\n";
  for (const CheckResult& c : checks) {
    all_pass = all_pass && c.pass;
    table << c.name << ',' << (c.pass ? "pass" : "FAIL") << ',' << c.value << ','
          << c.detail << '\n';
  }
  write_output(out_path, table.str());
  if (!all_pass) {
    for (const CheckResult& c : checks)
      if (!c.pass) {
        std::cerr << "first failing check: " << c.name << " (value " << c.value << ")\n";
        break;
      }
    return kExitValidation;
  }
  return kExitOk;
}

int cmd_sampler_test(const std::string& config_path, const Overrides& ov,
                     std::vector<double> betas, std::uint64_t n_draws) {
  ExperimentConfig cfg = parse_config(read_file(config_path));
  ov.apply(cfg);
  const ModelPtr model = build_model(cfg);
  if (betas.empty()) betas = {5.0, 30.0, 100.0};
  double beta_max = 0;
  for (double b : betas) beta_max = std::max(beta_max, b);
  Approximation approx(model, QuadratureConfig{},
                       model->has_density() ? std::optional<double>(beta_max + 50)
                                            : std::nullopt);

  std::vector<SamplerScheme> schemes;
  switch (model->tail_class()) {
    case TailClass::regularly_varying:
      schemes = {SamplerScheme::regvar, SamplerScheme::naive};
      break;
    case TailClass::weibull_type:
      schemes = {SamplerScheme::stratified, SamplerScheme::naive};
      break;
    default:
      schemes = {SamplerScheme::naive};
      break;
  }

  std::ostringstream body;
  body << "scheme,beta,n,ks_distance,ks_p,acceptance\n";
  bool all_pass = true;
  for (SamplerScheme scheme : schemes) {
    for (double beta : betas) {
      SamplerConfig scfg = cfg.sampler;
      scfg.scheme = scheme;
      if (scheme == SamplerScheme::naive && beta > scfg.naive_beta_ceiling) continue;
      ConditionalSampler sampler(approx, scfg);
      RandomStream rng(cfg.seed ^ 0x5117ULL);
      std::vector<double> draws;
      draws.reserve(n_draws);
      for (std::uint64_t i = 0; i < n_draws; ++i) draws.push_back(sampler.sample(beta, rng));
      double t_hi = beta + 10;
      for (double d : draws) t_hi = std::max(t_hi, d);
      const ReferenceCdf ref =
          ReferenceCdf::build(sampler, beta, model->support_lower(), t_hi * 1.5);
      const num::KsResult ks = num::ks_test(draws, [&](double t) { return ref(t); });
      const double acc = static_cast<double>(sampler.stats().acceptances) /
                         static_cast<double>(sampler.stats().proposals);
      all_pass = all_pass && ks.p_value > 0.01;
      body << to_string(scheme) << ',' << beta << ',' << n_draws << ',' << ks.statistic
           << ',' << ks.p_value << ',' << acc << '\n';
    }
  }
  write_output(cfg.out, body.str());
  return all_pass ? kExitOk : kExitValidation;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"rare-event estimator for the maximum of a negative-drift random walk"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  std::vector<double> betas;
  std::uint64_t n_draws = 100000;
  std::string validate_out;

  CLI::App* estimate = app.add_subcommand("estimate", "run an experiment, emit summary CSV");
  estimate->add_option("--config", config_path, "config file")->required();
  add_override_flags(estimate, ov);

  CLI::App* findas = app.add_subcommand("find-a-star", "calibrate the safety parameter");
  findas->add_option("--config", config_path, "config file")->required();
  add_override_flags(findas, ov);

  CLI::App* validate = app.add_subcommand("validate", "run the exact-oracle suite");
  validate->add_option("--out", validate_out, "write the pass/fail table to a file");

  CLI::App* sampler_test = app.add_subcommand("sampler-test", "KS tests of the samplers");
  sampler_test->add_option("--config", config_path, "config file")->required();
  sampler_test->add_option("--beta", betas, "beta values (default 5 30 100)");
  sampler_test->add_option("--n", n_draws, "draws per test");
  add_override_flags(sampler_test, ov);

  std::vector<const char*> argv;
  argv.push_back("walktail");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (estimate->parsed()) return cmd_estimate(config_path, ov);
    if (findas->parsed()) return cmd_find_a_star(config_path, ov);
    if (validate->parsed()) return cmd_validate(validate_out);
    if (sampler_test->parsed()) return cmd_sampler_test(config_path, ov, betas, n_draws);
    return kExitConfig;
  } catch (const config_error& e) {
    if (e.line > 0)
      std::cerr << "config error (line " << e.line << "): " << e.what() << '\n';
    else
      std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const calibration_error& e) {
    std::cerr << "calibration failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const sampler_error& e) {
    std::cerr << "sampler failure (" << e.scheme << ", beta = " << e.beta << "): " << e.what()
              << '\n';
    return kExitNumeric;
  } catch (const run_error& e) {
    std::cerr << "run failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const unsupported_instance_error& e) {
    std::cerr << "unsupported instance: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace walktail

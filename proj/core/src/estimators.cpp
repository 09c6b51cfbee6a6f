#include "walktail/estimators.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "walktail/errors.hpp"

namespace walktail {

DiscreteValueProposer::DiscreteValueProposer(ModelPtr model, const StateValue& values)
    : model_(std::move(model)), values_(values) {
  if (!model_->discrete())
    throw std::logic_error("DiscreteValueProposer needs a discrete model");
}

double DiscreteValueProposer::draw(double beta, RandomStream& rng) {
  const DiscreteSupport& d = *model_->discrete();
  double total = 0;
  for (std::size_t i = 0; i < d.values.size(); ++i)
    total += d.probs[i] * values_.v(d.values[i] - beta);
  if (!(total > 0))
    throw sampler_error("value function vanishes on every reachable state", beta, "discrete");
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    u -= d.probs[i] * values_.v(d.values[i] - beta);
    if (u <= 0) return d.values[i];
  }
  return d.values.back();
}

RunResult bg_replicate(const StateValue& values, IncrementProposer& proposer, double a_star,
                       double b, RandomStream& rng, std::uint64_t step_cap) {
  if (!(b > 0)) throw std::invalid_argument("bg_replicate: b must be > 0");
  RunResult out;
  double s = -b;
  double log_R = 0;
  while (s < 0) {
    if (out.steps >= step_cap)
      throw run_error("bg_replicate: step cap exceeded", 0, 0);
    const double y = s;
    const double beta = -y - a_star;
    const double increment = proposer.draw(beta, rng);
    s = y + increment;
    log_R += std::log(values.w(y + a_star)) - std::log(values.v(s + a_star));
    ++out.steps;
  }
  out.crossed = true;
  out.log_R = log_R;
  out.variates = rng.draws();
  return out;
}

double solve_theta_star(const IncrementModel& model) {
  // Cumulant log E exp(theta X) is 0 at 0 with negative slope EX; the root is
  // its second zero. mgf throws for models where it diverges before turning
  // positive (heavy-tailed), which is the not-light-tailed error path.
  auto cumulant = [&](double theta) { return std::log(model.mgf(theta)); };
  double hi = 1e-3;
  while (cumulant(hi) < 0) {
    hi *= 2;
    if (hi > 1e9)
      throw numeric_error("solve_theta_star: no positive root of E exp(theta X) = 1",
                          num::kInf);
  }
  double lo = hi / 2;
  while (cumulant(lo) >= 0) lo /= 2;  // only entered when the first probe was past the root
  return num::find_root(cumulant, lo, hi, 1e-13);
}

RunResult siegmund_replicate(const IncrementModel& model, double theta_star, double b,
                             RandomStream& rng, std::uint64_t step_cap) {
  RunResult out;
  double s = -b;
  while (s < 0) {
    if (out.steps >= step_cap) throw run_error("siegmund: step cap exceeded", 0, 0);
    s += model.sample_tilted(theta_star, rng);
    ++out.steps;
  }
  out.crossed = true;
  out.log_R = theta_star * (-b - s);  // theta* (S_0 - S_tau)
  out.variates = rng.draws();
  return out;
}

RunResult crude_replicate(const IncrementModel& model, double b, std::uint64_t max_steps,
                          RandomStream& rng) {
  RunResult out;
  double s = -b;
  while (s < 0 && out.steps < max_steps) {
    s += model.sample(rng);
    ++out.steps;
  }
  out.crossed = s >= 0;
  out.log_R = out.crossed ? 0.0 : -num::kInf;
  out.variates = rng.draws();
  return out;
}

std::string summary_csv_header() {
  return "model,estimator,b,gamma,a_star,n,seed,mean,stderr,cv,ci_lo,ci_hi,mean_steps,"
         "mean_variates,wall_time";
}

namespace {
std::string sci(double x) {
  std::ostringstream os;
  os.setf(std::ios::scientific);
  os.precision(5);
  os << x;
  return os.str();
}
}  // namespace

std::string summary_csv_row(const Summary& s) {
  std::ostringstream os;
  os << s.model << ',' << s.estimator << ',' << sci(s.b) << ',' << sci(s.gamma) << ','
     << sci(s.a_star) << ',' << s.n << ',' << s.seed << ',' << sci(s.mean) << ','
     << sci(s.stderr_) << ',' << sci(s.cv) << ',' << sci(s.ci_lo) << ',' << sci(s.ci_hi)
     << ',' << sci(s.mean_steps) << ',' << sci(s.mean_variates) << ',' << sci(s.wall_time);
  return os.str();
}

Summary parse_summary_row(const std::string& header, const std::string& row) {
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    out.push_back(cur);
    return out;
  };
  const auto keys = split(header);
  const auto vals = split(row);
  if (keys.size() != vals.size()) throw config_error("CSV row does not match header");
  Summary s;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const std::string& k = keys[i];
    const std::string& v = vals[i];
    if (k == "model") s.model = v;
    else if (k == "estimator") s.estimator = v;
    else if (k == "b") s.b = std::stod(v);
    else if (k == "gamma") s.gamma = std::stod(v);
    else if (k == "a_star") s.a_star = std::stod(v);
    else if (k == "n") s.n = std::stoull(v);
    else if (k == "seed") s.seed = std::stoull(v);
    else if (k == "mean") s.mean = std::stod(v);
    else if (k == "stderr") s.stderr_ = std::stod(v);
    else if (k == "cv") s.cv = std::stod(v);
    else if (k == "ci_lo") s.ci_lo = std::stod(v);
    else if (k == "ci_hi") s.ci_hi = std::stod(v);
    else if (k == "mean_steps") s.mean_steps = std::stod(v);
    else if (k == "mean_variates") s.mean_variates = std::stod(v);
    else if (k == "wall_time") s.wall_time = std::stod(v);
    else throw config_error("unknown CSV column '" + k + "'");
  }
  return s;
}

Summary run_replications(const ReplicationPlan& plan) {
  if (plan.n == 0) throw config_error("n must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<RunResult> results(plan.n);
  std::vector<std::string> failures;
  std::mutex failure_mutex;

  unsigned workers = plan.workers ? plan.workers : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, plan.n));

  std::atomic<std::uint64_t> next{0};
  auto body = [&]() {
    for (;;) {
      const std::uint64_t i = next.fetch_add(1);
      if (i >= plan.n) return;
      RandomStream rng = RandomStream::for_replication(plan.seed, plan.level_index, i);
      try {
        results[i] = plan.replicate(i, rng);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        std::ostringstream os;
        os << "replication " << i << " (seed " << plan.seed << "): " << e.what();
        failures.push_back(os.str());
        return;
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  if (!failures.empty()) throw run_error(failures.front(), 0, plan.seed);

  // Sequential compensated aggregation in replication order: the summary is
  // identical for any worker count.
  num::KahanSum sum_R, sum_R2, sum_steps, sum_var;
  for (const RunResult& r : results) {
    const double R = r.R();
    sum_R.add(R);
    sum_R2.add(R * R);
    sum_steps.add(static_cast<double>(r.steps));
    sum_var.add(static_cast<double>(r.variates));
  }
  num::KahanSum sum_R4;
  for (const RunResult& r : results) {
    const double R2 = r.R() * r.R();
    sum_R4.add(R2 * R2);
  }

  const double n = static_cast<double>(plan.n);
  Summary s;
  s.n = plan.n;
  s.seed = plan.seed;
  s.mean = sum_R.value() / n;
  s.mean_R2 = sum_R2.value() / n;
  const double var = std::max(0.0, s.mean_R2 - s.mean * s.mean) * (n / std::max(1.0, n - 1));
  s.stderr_ = plan.n > 1 ? std::sqrt(var / n) : 0.0;
  s.cv = (s.mean != 0 && plan.n > 1) ? std::sqrt(var) / s.mean : 0.0;
  s.ci_lo = s.mean - 1.96 * s.stderr_;
  s.ci_hi = s.mean + 1.96 * s.stderr_;
  const double var_R2 =
      std::max(0.0, sum_R4.value() / n - s.mean_R2 * s.mean_R2) * (n / std::max(1.0, n - 1));
  s.stderr_R2 = plan.n > 1 ? std::sqrt(var_R2 / n) : 0.0;
  s.mean_steps = sum_steps.value() / n;
  s.mean_variates = sum_var.value() / n;
  s.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return s;
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  const ModelPtr model = build_model(cfg);

  double b_max = 0;
  for (double b : cfg.levels) b_max = std::max(b_max, b);

  std::shared_ptr<Approximation> approx;
  SamplerConfig sampler_cfg = cfg.sampler;
  if (cfg.estimator == EstimatorKind::bg) {
    const double a_guess = cfg.a_star ? *cfg.a_star : 0.0;
    const double depth = std::max(-cfg.resolved_y_min(), b_max - a_guess + 100.0);
    approx = std::make_shared<Approximation>(model, QuadratureConfig{},
                                             model->has_density()
                                                 ? std::optional<double>(depth)
                                                 : std::nullopt);
    if (cfg.a_star) {
      out.safety = manual_safety_params(*approx, cfg.gamma, *cfg.a_star,
                                        cfg.resolved_y_min(), cfg.grid_step);
    } else {
      out.safety = find_a_star(*approx, cfg.gamma, cfg.resolved_y_min(), cfg.grid_step);
    }
    if (sampler_cfg.regvar_m_override <= 0 &&
        model->tail_class() == TailClass::regularly_varying) {
      ConditionalSampler probe(*approx, sampler_cfg);
      sampler_cfg.regvar_m_override = probe.regvar_m();
    }
  }

  double theta_star = 0;
  if (cfg.estimator == EstimatorKind::siegmund) theta_star = solve_theta_star(*model);

  for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
    const double b = cfg.levels[li];
    ReplicationPlan plan;
    plan.n = cfg.n;
    plan.seed = cfg.seed;
    plan.level_index = li;
    plan.workers = cfg.workers;

    switch (cfg.estimator) {
      case EstimatorKind::bg: {
        const Approximation* ap = approx.get();
        const SafetyParams sp = *out.safety;
        plan.replicate = [ap, sp, sampler_cfg, b](std::uint64_t, RandomStream& rng) {
          ApproxStateValue values(*ap);
          ConditionalSampler sampler(*ap, sampler_cfg);
          SamplerProposer proposer(sampler);
          return bg_replicate(values, proposer, sp.a_star, b, rng);
        };
        break;
      }
      case EstimatorKind::siegmund: {
        plan.replicate = [model, theta_star, b](std::uint64_t, RandomStream& rng) {
          return siegmund_replicate(*model, theta_star, b, rng);
        };
        break;
      }
      case EstimatorKind::crude: {
        const std::uint64_t max_steps = cfg.resolved_max_steps(b, model->mean());
        plan.replicate = [model, b, max_steps](std::uint64_t, RandomStream& rng) {
          return crude_replicate(*model, b, max_steps, rng);
        };
        break;
      }
    }

    Summary s = run_replications(plan);
    s.model = cfg.model_name;
    s.estimator = to_string(cfg.estimator);
    s.b = b;
    s.gamma = cfg.estimator == EstimatorKind::bg ? cfg.gamma : 0.0;
    s.a_star = out.safety ? out.safety->a_star : 0.0;
    out.summaries.push_back(std::move(s));
  }
  return out;
}

}  // namespace walktail

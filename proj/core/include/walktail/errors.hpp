#pragma once

#include <stdexcept>
#include <string>

namespace walktail {

// Quadrature or root finding failed to reach the requested tolerance.
// achieved_tolerance carries the best relative error that was reached.
class numeric_error : public std::runtime_error {
 public:
  numeric_error(const std::string& what, double achieved_tolerance)
      : std::runtime_error(what), achieved_tolerance(achieved_tolerance) {}
  double achieved_tolerance;
};

// No admissible safety parameter was found on the calibration grid.
class calibration_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Acceptance-rejection exceeded the proposal cap, or a scheme was asked to
// operate outside its domain.
class sampler_error : public std::runtime_error {
 public:
  sampler_error(const std::string& what, double beta, const std::string& scheme)
      : std::runtime_error(what), beta(beta), scheme(scheme) {}
  double beta;
  std::string scheme;
};

// A single replication failed (step cap exceeded, propagated sampler failure).
class run_error : public std::runtime_error {
 public:
  run_error(const std::string& what, unsigned long long replication, unsigned long long seed)
      : std::runtime_error(what), replication(replication), seed(seed) {}
  unsigned long long replication;
  unsigned long long seed;
};

// Config file problem; line is 1-based, 0 when not tied to a specific line.
class config_error : public std::runtime_error {
 public:
  config_error(const std::string& what, int line = 0)
      : std::runtime_error(what), line(line) {}
  int line;
};

// Instance outside what an oracle supports (e.g. non-lattice walk spec).
class unsupported_instance_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace walktail

#pragma once

#include "ryam/yamabe.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ryam {

enum class Experiment {
  Curvature,
  Cutoff,
  ApproxStudy,
  Variation,
  Glue,
  Eigen,
  Yamabe,
  Sandwich,
  DoubleCheck,
  PscPath,
};

std::optional<Experiment> parse_experiment(std::string_view name);
std::string_view experiment_name(Experiment e);

// Bad config text or descriptor. Maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOutput {
  std::string name;  // base name of the emitted files
  std::string csv;
  std::string json;
  std::vector<Verdict> verdicts;
  bool all_hold() const;
};

// Parses and validates the config, runs the experiment and renders both files in
// memory. Throws ConfigError for invalid input; any other exception is a runtime error.
RunOutput run_experiment(Experiment e, const std::string& config_text);

// Shortest decimal that reads back to the same double ("nan", "inf", "-inf" otherwise).
std::string format_double(double x);

// FNV-1a 64 of the config's canonical JSON dump, as 16 hex digits.
std::string config_hash(const std::string& config_text);

// Threads for sweeps: RYAM_THREADS when set to a positive integer, else the hardware
// concurrency, and never more than `tasks`.
int sweep_threads(int tasks);

}  // namespace ryam

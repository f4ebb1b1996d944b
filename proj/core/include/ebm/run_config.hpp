#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ebm/environment.hpp"
#include "ebm/policies.hpp"

namespace ebm {

/// Parameters for generating a synthetic environment on the fly. A
/// generator-sourced run redraws the environment from each replication
/// seed; a file-sourced run keeps it fixed.
struct GeneratorSpec {
  enum class Mode { hierarchical, sparse };
  Mode mode = Mode::hierarchical;
  int n_instances = 10;
  int n_arms = 5;
  int dim = 3;
  ArrivalMode arrival = ArrivalMode::balanced;
  ContextDistribution context;
  int sparse_support = 1;
  double delta_scale = 1.0;
};

struct EnvSource {
  std::optional<std::string> file;
  std::optional<GeneratorSpec> generator;
};

enum class RegretMode { realized, weighted };
enum class EstimationMode { empirical_bayes, fixed_prior };

/// Full experiment description; the JSON form of this struct is the run
/// configuration file and the per-run config echo.
struct RunConfig {
  EnvSource env;
  PolicyConfig policy;
  std::int64_t horizon = 1000;
  std::vector<std::uint64_t> seeds = {1};
  RegretMode regret_mode = RegretMode::realized;
  EstimationMode estimation = EstimationMode::empirical_bayes;
  int jobs = 1;
  std::string output_dir = "run_output";
  std::vector<std::string> applied_overrides;

  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Serializes with sorted keys and full-precision floats; a config echo
/// re-parsed from this text reproduces the run byte-for-byte.
std::string serialize_run_config(const RunConfig& config);
void save_run_config(const RunConfig& config,
                     const std::filesystem::path& path);

/// Applies one `dotted.key=value` override (value parsed as JSON when
/// possible, else taken as a string) and records it in the config.
void apply_override(RunConfig& config, const std::string& assignment);

}  // namespace ebm

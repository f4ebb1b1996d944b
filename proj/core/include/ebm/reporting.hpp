#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ebm/harness.hpp"

namespace ebm {

/// Shortest decimal form that parses back to the same double; keeps CSV
/// output byte-stable across identical runs.
std::string format_double(double value);

/// Per-step trace rows for all seeds:
/// seed,t,instance,arm,optimal_arm,regret,cum_regret,cum_regret_instance_{j}.
void write_trace_csv(const std::filesystem::path& path,
                     const std::vector<RegretTrace>& traces,
                     const std::vector<std::uint64_t>& seeds, int n_instances);

/// Aggregate curves: mean/sd/q10/q50/q90 of cumulative regret, total and
/// per instance, one row per time step.
void write_aggregate_csv(const std::filesystem::path& path,
                         const AggregateResult& aggregate);

}  // namespace ebm

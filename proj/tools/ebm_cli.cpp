// Command-line front end: generate environments, run experiments, sweep
// parameter grids, and summarize stored results.

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "ebm/environment.hpp"
#include "ebm/harness.hpp"
#include "ebm/linalg.hpp"
#include "ebm/reporting.hpp"
#include "ebm/run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct GenEnvArgs {
  std::string mode = "hierarchical";
  int n_instances = 10;
  int n_arms = 5;
  int dim = 3;
  std::uint64_t seed = 1;
  std::string arrival;  // optional override for sparse mode
  std::string context = "mixture_gaussian";
  int sparse_support = 1;
  double delta_scale = 1.0;
  std::string out = "env.json";
};

int cmd_gen_env(const GenEnvArgs& args) {
  ebm::ArrivalMode arrival = ebm::ArrivalMode::balanced;
  bool sparse = false;
  if (args.mode == "hierarchical") {
    arrival = ebm::ArrivalMode::balanced;
  } else if (args.mode == "data-poor" || args.mode == "data_poor") {
    arrival = ebm::ArrivalMode::data_poor;
  } else if (args.mode == "sparse") {
    sparse = true;
  } else {
    std::cerr << "error: unknown mode '" << args.mode << "'\n";
    return kExitUsage;
  }
  if (!args.arrival.empty()) {
    if (args.arrival == "balanced") {
      arrival = ebm::ArrivalMode::balanced;
    } else if (args.arrival == "data-poor" || args.arrival == "data_poor") {
      arrival = ebm::ArrivalMode::data_poor;
    } else {
      std::cerr << "error: unknown arrival '" << args.arrival << "'\n";
      return kExitUsage;
    }
  }

  ebm::Rng rng(args.seed);
  ebm::EnvTruth env;
  try {
    env = sparse ? ebm::generate_sparse_env(args.n_instances, args.n_arms,
                                            args.dim, args.sparse_support,
                                            args.delta_scale, arrival, rng)
                 : ebm::generate_hierarchical_env(args.n_instances, args.n_arms,
                                                  args.dim, arrival, rng);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (args.context == "uniform") {
    env.context.kind = ebm::ContextKind::uniform;
  } else if (args.context != "mixture_gaussian") {
    std::cerr << "error: unknown context kind '" << args.context << "'\n";
    return kExitUsage;
  }

  try {
    ebm::save_env(env, args.out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  std::cout << "wrote " << args.out << "\n";
  std::cout << "instances " << env.n_instances << ", arms " << env.n_arms
            << ", dim " << env.dim << "\n";
  for (int k = 0; k < env.n_arms; ++k) {
    std::cout << "  arm " << k << ": min eigenvalue of prior covariance = "
              << ebm::format_double(ebm::min_eigenvalue(
                     env.prior_cov[static_cast<std::size_t>(k)]))
              << "\n";
  }
  std::cout << "arrival = [";
  for (int j = 0; j < env.n_instances; ++j) {
    std::cout << (j ? ", " : "") << ebm::format_double(env.arrival[j]);
  }
  std::cout << "]\n";
  return kExitOk;
}

struct RunArgs {
  std::string config_path;
  std::string policy;
  std::vector<std::uint64_t> seeds;
  std::int64_t horizon = -1;
  int jobs = -1;
  std::vector<std::string> overrides;
  std::string out;
};

/// Loads, overrides and resolves a run configuration. Overrides supplied
/// by dedicated flags are translated into recorded dotted-key overrides.
ebm::RunConfig resolve_config(const RunArgs& args) {
  ebm::RunConfig config = ebm::load_run_config(args.config_path);
  for (const auto& assignment : args.overrides) {
    ebm::apply_override(config, assignment);
  }
  if (!args.policy.empty()) {
    ebm::apply_override(config, "policy.kind=" + args.policy);
  }
  if (!args.seeds.empty()) {
    std::ostringstream list;
    list << "seeds=[";
    for (std::size_t i = 0; i < args.seeds.size(); ++i) {
      list << (i ? "," : "") << args.seeds[i];
    }
    list << "]";
    ebm::apply_override(config, list.str());
  }
  if (args.horizon > 0) {
    ebm::apply_override(config,
                        "horizon=" + std::to_string(args.horizon));
  }
  if (args.jobs > 0) {
    ebm::apply_override(config, "jobs=" + std::to_string(args.jobs));
  }
  if (!args.out.empty()) {
    ebm::apply_override(config, "output_dir=" + args.out);
  }
  return config;
}

void write_status(const fs::path& dir, const json& status) {
  std::ofstream out(dir / "status.json");
  out << status.dump(2) << "\n";
}

/// Runs one resolved configuration into `dir`. Returns true on success;
/// on failure the status file flags the partial outputs.
bool execute_run(const ebm::RunConfig& config, const fs::path& dir,
                 std::string* error_out = nullptr) {
  fs::create_directories(dir);
  ebm::save_run_config(config, dir / "resolved_config.json");
  try {
    const ebm::ReplicationResult result = ebm::run_replications(config);
    ebm::write_trace_csv(dir / "traces.csv", result.traces, config.seeds,
                         result.n_instances);
    ebm::write_aggregate_csv(dir / "aggregate.csv", result.aggregate);
    write_status(dir, {{"status", "ok"}});
    return true;
  } catch (const std::exception& e) {
    write_status(dir, {{"status", "failed"},
                       {"error", e.what()},
                       {"partial_outputs", true}});
    if (error_out) *error_out = e.what();
    return false;
  }
}

int cmd_run(const RunArgs& args) {
  ebm::RunConfig config;
  try {
    config = resolve_config(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  const fs::path dir(config.output_dir);
  std::string error;
  if (!execute_run(config, dir, &error)) {
    std::cerr << "error: " << error << "\n";
    std::cerr << "partial outputs flagged in " << (dir / "status.json")
              << "\n";
    return kExitRuntime;
  }
  std::cout << "wrote " << (dir / "traces.csv") << "\n";
  std::cout << "wrote " << (dir / "aggregate.csv") << "\n";
  std::cout << "wrote " << (dir / "resolved_config.json") << "\n";
  return kExitOk;
}

struct SweepArgs {
  std::string config_path;
  std::vector<std::string> vary;
  int jobs = 1;
  std::string out = "sweep_output";
};

struct GridPoint {
  std::vector<std::string> assignments;
};

std::vector<GridPoint> expand_grid(const std::vector<std::string>& vary) {
  std::vector<GridPoint> points{GridPoint{}};
  for (const auto& spec : vary) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("--vary expects key=v1,v2,...; got '" +
                                  spec + "'");
    }
    const std::string key = spec.substr(0, eq);
    std::vector<std::string> values;
    std::stringstream rest(spec.substr(eq + 1));
    std::string item;
    while (std::getline(rest, item, ',')) values.push_back(item);
    if (values.empty()) {
      throw std::invalid_argument("--vary '" + key + "' lists no values");
    }
    std::vector<GridPoint> expanded;
    expanded.reserve(points.size() * values.size());
    for (const auto& point : points) {
      for (const auto& value : values) {
        GridPoint next = point;
        next.assignments.push_back(key + "=" + value);
        expanded.push_back(std::move(next));
      }
    }
    points = std::move(expanded);
  }
  return points;
}

int cmd_sweep(const SweepArgs& args) {
  std::vector<GridPoint> points;
  ebm::RunConfig base;
  try {
    if (args.vary.empty()) {
      throw std::invalid_argument("sweep needs at least one --vary axis");
    }
    points = expand_grid(args.vary);
    base = ebm::load_run_config(args.config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const fs::path root(args.out);
  fs::create_directories(root);

  struct PointResult {
    std::string dir;
    std::vector<std::string> assignments;
    bool ok = false;
    std::string error;
  };
  std::vector<PointResult> results(points.size());

  const auto run_point = [&](std::size_t i) {
    PointResult& r = results[i];
    std::ostringstream name;
    name << "point_" << std::setw(3) << std::setfill('0') << i;
    r.dir = name.str();
    r.assignments = points[i].assignments;
    ebm::RunConfig config = base;
    try {
      for (const auto& assignment : points[i].assignments) {
        ebm::apply_override(config, assignment);
      }
      config.output_dir = (root / r.dir).string();
    } catch (const std::exception& e) {
      r.error = e.what();
      return;
    }
    r.ok = execute_run(config, root / r.dir, &r.error);
  };

  const int jobs =
      std::max(1, std::min<int>(args.jobs, static_cast<int>(points.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < points.size(); ++i) run_point(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next.fetch_add(1); i < points.size();
             i = next.fetch_add(1)) {
          run_point(i);
        }
      }));
    }
    for (auto& f : workers) f.get();
  }

  json manifest;
  manifest["points"] = json::array();
  int failures = 0;
  for (const auto& r : results) {
    json entry;
    entry["dir"] = r.dir;
    entry["overrides"] = r.assignments;
    entry["status"] = r.ok ? "ok" : "failed";
    if (!r.ok) {
      entry["error"] = r.error;
      ++failures;
    }
    manifest["points"].push_back(entry);
  }
  std::ofstream out(root / "manifest.json");
  out << manifest.dump(2) << "\n";
  std::cout << "wrote " << (root / "manifest.json") << " ("
            << points.size() - failures << "/" << points.size()
            << " points succeeded)\n";
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> runs;
  std::string sweep;
  std::string out;
};

struct ReportRow {
  std::string dir;
  std::string policy;
  std::string overrides;
  std::string horizon;
  std::string n_seeds;
  std::string final_mean;
  std::string final_sd;
  std::string status;
};

/// Pulls the final cumulative-regret row out of a run directory; any
/// missing or corrupt piece shows up in the status column instead of
/// aborting the report.
ReportRow summarize_run(const fs::path& dir, const std::string& overrides) {
  ReportRow row;
  row.dir = dir.string();
  row.overrides = overrides;
  row.status = "ok";
  try {
    std::ifstream config_in(dir / "resolved_config.json");
    if (!config_in) throw std::runtime_error("missing resolved_config.json");
    std::ostringstream buffer;
    buffer << config_in.rdbuf();
    const ebm::RunConfig config = ebm::parse_run_config(buffer.str());
    row.policy = ebm::to_string(config.policy.kind);
    row.horizon = std::to_string(config.horizon);
    row.n_seeds = std::to_string(config.seeds.size());
    if (row.overrides.empty() && !config.applied_overrides.empty()) {
      std::ostringstream joined;
      for (std::size_t i = 0; i < config.applied_overrides.size(); ++i) {
        joined << (i ? " " : "") << config.applied_overrides[i];
      }
      row.overrides = joined.str();
    }

    std::ifstream agg(dir / "aggregate.csv");
    if (!agg) throw std::runtime_error("missing aggregate.csv");
    std::string header, line, last;
    std::getline(agg, header);
    while (std::getline(agg, line)) {
      if (!line.empty()) last = line;
    }
    if (last.empty()) throw std::runtime_error("aggregate.csv has no rows");

    const auto split = [](const std::string& text) {
      std::vector<std::string> cells;
      std::stringstream ss(text);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      return cells;
    };
    const std::vector<std::string> names = split(header);
    const std::vector<std::string> cells = split(last);
    const auto find_column = [&](const std::string& name) {
      const auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end() ||
          static_cast<std::size_t>(it - names.begin()) >= cells.size()) {
        throw std::runtime_error("aggregate.csv lacks column " + name);
      }
      return cells[static_cast<std::size_t>(it - names.begin())];
    };
    row.final_mean = find_column("cum_regret_mean");
    row.final_sd = find_column("cum_regret_sd");
  } catch (const std::exception& e) {
    row.status = e.what();
  }
  return row;
}

int cmd_report(const ReportArgs& args) {
  std::vector<std::pair<fs::path, std::string>> targets;
  for (const auto& dir : args.runs) targets.push_back({dir, ""});
  if (!args.sweep.empty()) {
    try {
      std::ifstream in(fs::path(args.sweep) / "manifest.json");
      if (!in) throw std::runtime_error("missing manifest.json");
      json manifest;
      in >> manifest;
      for (const auto& entry : manifest.at("points")) {
        std::string overrides;
        for (const auto& o : entry.value("overrides", json::array())) {
          overrides += (overrides.empty() ? "" : " ") + o.get<std::string>();
        }
        targets.push_back(
            {fs::path(args.sweep) / entry.at("dir").get<std::string>(),
             overrides});
      }
    } catch (const std::exception& e) {
      std::cerr << "error: cannot read sweep manifest: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  if (targets.empty()) {
    std::cerr << "error: nothing to report; pass --runs or --sweep\n";
    return kExitUsage;
  }
  std::sort(targets.begin(), targets.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<ReportRow> rows;
  rows.reserve(targets.size());
  for (const auto& [dir, overrides] : targets) {
    rows.push_back(summarize_run(dir, overrides));
  }

  const std::vector<std::string> headers = {
      "run", "policy", "overrides", "horizon",
      "seeds", "final_regret_mean", "final_regret_sd", "status"};
  const auto field = [](const ReportRow& r, std::size_t i) -> const std::string& {
    switch (i) {
      case 0: return r.dir;
      case 1: return r.policy;
      case 2: return r.overrides;
      case 3: return r.horizon;
      case 4: return r.n_seeds;
      case 5: return r.final_mean;
      case 6: return r.final_sd;
      default: return r.status;
    }
  };

  std::vector<std::size_t> widths(headers.size());
  for (std::size_t i = 0; i < headers.size(); ++i) {
    widths[i] = headers[i].size();
    for (const auto& row : rows) widths[i] = std::max(widths[i], field(row, i).size());
  }
  for (std::size_t i = 0; i < headers.size(); ++i) {
    std::cout << std::left << std::setw(static_cast<int>(widths[i]) + 2)
              << headers[i];
  }
  std::cout << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < headers.size(); ++i) {
      std::cout << std::left << std::setw(static_cast<int>(widths[i]) + 2)
                << field(row, i);
    }
    std::cout << "\n";
  }

  if (!args.out.empty()) {
    std::ofstream csv(args.out);
    if (!csv) {
      std::cerr << "error: cannot write " << args.out << "\n";
      return kExitRuntime;
    }
    for (std::size_t i = 0; i < headers.size(); ++i) {
      csv << (i ? "," : "") << headers[i];
    }
    csv << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < headers.size(); ++i) {
        std::string cell = field(row, i);
        std::replace(cell.begin(), cell.end(), ',', ';');
        csv << (i ? "," : "") << cell;
      }
      csv << "\n";
    }
    std::cout << "wrote " << args.out << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical multi-bandit simulator and regret harness"};
  app.require_subcommand(1);

  GenEnvArgs gen_args;
  CLI::App* gen = app.add_subcommand(
      "gen-env", "Generate a synthetic environment file");
  gen->add_option("--mode", gen_args.mode,
                  "hierarchical | data-poor | sparse")
      ->capture_default_str();
  gen->add_option("--n-instances", gen_args.n_instances)
      ->check(CLI::PositiveNumber);
  gen->add_option("--n-arms", gen_args.n_arms)->check(CLI::PositiveNumber);
  gen->add_option("--dim", gen_args.dim)->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_args.seed);
  gen->add_option("--arrival", gen_args.arrival,
                  "balanced | data-poor (sparse mode only)");
  gen->add_option("--context", gen_args.context,
                  "mixture_gaussian | uniform")
      ->capture_default_str();
  gen->add_option("--sparse-support", gen_args.sparse_support,
                  "nonzero deviation coordinates (sparse mode)");
  gen->add_option("--delta-scale", gen_args.delta_scale);
  gen->add_option("--out", gen_args.out)->capture_default_str();

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "Run a configured experiment");
  run->add_option("--config", run_args.config_path, "run configuration JSON")
      ->required();
  run->add_option("--policy", run_args.policy,
                  "override policy.kind (ebmTS, ebmUCB, LinTS, LinUCB, "
                  "ols_greedy, Oracle)");
  run->add_option("--seeds", run_args.seeds,
                  "replace the seed list (repeatable)");
  run->add_option("--horizon", run_args.horizon);
  run->add_option("--jobs", run_args.jobs, "parallel replications");
  run->add_option("--set", run_args.overrides,
                  "dotted-key override, e.g. policy.a=0.1 (repeatable)");
  run->add_option("--out", run_args.out, "output directory");

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run a cartesian grid of configurations");
  sweep->add_option("--config", sweep_args.config_path)->required();
  sweep->add_option("--vary", sweep_args.vary,
                    "grid axis key=v1,v2,... (repeatable)");
  sweep->add_option("--jobs", sweep_args.jobs, "concurrent grid points");
  sweep->add_option("--out", sweep_args.out)->capture_default_str();

  ReportArgs report_args;
  CLI::App* report = app.add_subcommand(
      "report", "Summarize final regret over stored runs");
  report->add_option("--runs", report_args.runs,
                     "run directories (repeatable)");
  report->add_option("--sweep", report_args.sweep, "sweep output directory");
  report->add_option("--out", report_args.out, "also write a CSV table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_env(gen_args);
    if (*run) return cmd_run(run_args);
    if (*sweep) return cmd_sweep(sweep_args);
    if (*report) return cmd_report(report_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

// Exercises the installed command-line surface end to end through
// subprocess invocations.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "ebm/environment.hpp"

#ifndef EBM_CLI_PATH
#error "EBM_CLI_PATH must point at the CLI binary"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = "\"" EBM_CLI_PATH "\"";

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() /
          ("ebm_cli_test_" + std::to_string(std::rand()));
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }
  fs::path operator/(const std::string& name) const { return dir / name; }
};

int run_cli(const std::string& args) {
  const std::string command = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

int count_lines(const std::string& text) {
  int lines = 0;
  for (const char c : text) {
    if (c == '\n') ++lines;
  }
  return lines;
}

void write_config(const fs::path& path, const fs::path& env_file,
                  const std::string& extra = "") {
  std::ofstream out(path);
  out << R"({
  "env": {"file": ")" << env_file.string() << R"("},
  "policy": {"kind": "ebmUCB"},
  "horizon": 40,
  "seeds": [1, 2])" << extra << R"(
})";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gen-env writes a loadable file") {
  Sandbox box;
  const fs::path env_file = box / "env.json";
  CHECK(run_cli("gen-env --mode hierarchical --n-instances 10 --n-arms 5 "
                "--dim 3 --seed 7 --out " + env_file.string()) == 0);
  const ebm::EnvTruth env = ebm::load_env(env_file);
  CHECK(env.n_instances == 10);
  CHECK(env.n_arms == 5);
  CHECK(env.dim == 3);
}

TEST_CASE("gen-env data-poor mode writes the normalized arrivals") {
  Sandbox box;
  const fs::path env_file = box / "poor.json";
  CHECK(run_cli("gen-env --mode data-poor --n-instances 3 --n-arms 2 --dim 2 "
                "--seed 3 --out " + env_file.string()) == 0);
  const ebm::EnvTruth env = ebm::load_env(env_file);
  CHECK(env.arrival[0] == doctest::Approx(0.1 / 2.1).epsilon(1e-12));
  CHECK(env.arrival[1] == doctest::Approx(1.0 / 2.1).epsilon(1e-12));
}

TEST_CASE("gen-env rejects invalid dimensions with a usage error") {
  Sandbox box;
  CHECK(run_cli("gen-env --dim 0 --out " + (box / "x.json").string()) == 1);
}

TEST_CASE("run produces traces, aggregates and the config echo") {
  Sandbox box;
  const fs::path env_file = box / "env.json";
  REQUIRE(run_cli("gen-env --n-instances 3 --n-arms 2 --dim 2 --seed 5 --out " +
                  env_file.string()) == 0);
  write_config(box / "config.json", env_file);
  const fs::path out = box / "run";
  CHECK(run_cli("run --config " + (box / "config.json").string() + " --out " +
                out.string()) == 0);

  const std::string aggregate = slurp(out / "aggregate.csv");
  CHECK(count_lines(aggregate) == 41);  // header + one row per step
  const std::string traces = slurp(out / "traces.csv");
  CHECK(count_lines(traces) == 81);  // header + horizon rows per seed

  const json echo = json::parse(slurp(out / "resolved_config.json"));
  CHECK(echo["policy"]["lambda"].get<double>() == 0.001);
  CHECK(echo["policy"]["a"].get<double>() == 0.1);
  const json status = json::parse(slurp(out / "status.json"));
  CHECK(status["status"] == "ok");
}

TEST_CASE("run with duplicated seeds reports zero spread") {
  Sandbox box;
  const fs::path env_file = box / "env.json";
  REQUIRE(run_cli("gen-env --n-instances 2 --n-arms 2 --dim 2 --seed 9 --out " +
                  env_file.string()) == 0);
  write_config(box / "config.json", env_file);
  const fs::path out = box / "run";
  CHECK(run_cli("run --config " + (box / "config.json").string() +
                " --seeds 5 --seeds 5 --out " + out.string()) == 0);
  std::istringstream aggregate(slurp(out / "aggregate.csv"));
  std::string line;
  std::getline(aggregate, line);  // header: sd is the third column
  while (std::getline(aggregate, line)) {
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    std::getline(row, cell, ',');
    std::getline(row, cell, ',');
    CHECK(cell == "0");
  }
  const json echo = json::parse(slurp(out / "resolved_config.json"));
  CHECK(echo["seeds"] == json::array({5, 5}));
  CHECK(!echo["applied_overrides"].empty());
}

TEST_CASE("run supports dotted overrides and weighted accounting") {
  Sandbox box;
  const fs::path env_file = box / "env.json";
  REQUIRE(run_cli("gen-env --n-instances 2 --n-arms 2 --dim 2 --seed 4 --out " +
                  env_file.string()) == 0);
  write_config(box / "config.json", env_file);
  const fs::path out = box / "run";
  CHECK(run_cli("run --config " + (box / "config.json").string() +
                " --set regret_mode=weighted --set policy.a=0.2 --out " +
                out.string()) == 0);
  const json echo = json::parse(slurp(out / "resolved_config.json"));
  CHECK(echo["regret_mode"] == "weighted");
  CHECK(echo["policy"]["a"].get<double>() == 0.2);
}

TEST_CASE("run rejects overrides outside the schema") {
  Sandbox box;
  const fs::path env_file = box / "env.json";
  REQUIRE(run_cli("gen-env --n-instances 2 --n-arms 2 --dim 2 --seed 4 --out " +
                  env_file.string()) == 0);
  write_config(box / "config.json", env_file);
  CHECK(run_cli("run --config " + (box / "config.json").string() +
                " --set policy.bogus=1 --out " + (box / "r").string()) == 1);
}

TEST_CASE("sweep expands the grid and report summarizes it") {
  Sandbox box;
  const fs::path env_file = box / "env.json";
  REQUIRE(run_cli("gen-env --n-instances 2 --n-arms 2 --dim 2 --seed 2 --out " +
                  env_file.string()) == 0);
  write_config(box / "config.json", env_file);
  const fs::path sweep_dir = box / "sweep";
  CHECK(run_cli("sweep --config " + (box / "config.json").string() +
                " --vary policy.kind=ebmTS,ebmUCB --vary horizon=20,30 " +
                "--jobs 2 --out " + sweep_dir.string()) == 0);
  const json manifest = json::parse(slurp(sweep_dir / "manifest.json"));
  REQUIRE(manifest["points"].size() == 4);
  for (const auto& point : manifest["points"]) {
    CHECK(point["status"] == "ok");
    CHECK(fs::exists(sweep_dir / point["dir"].get<std::string>() /
                     "traces.csv"));
  }

  const fs::path report_csv = box / "report.csv";
  CHECK(run_cli("report --sweep " + sweep_dir.string() + " --out " +
                report_csv.string()) == 0);
  CHECK(count_lines(slurp(report_csv)) == 5);  // header + 4 grid points

  // identical inputs give a byte-identical report
  const fs::path report_again = box / "report2.csv";
  CHECK(run_cli("report --sweep " + sweep_dir.string() + " --out " +
                report_again.string()) == 0);
  CHECK(slurp(report_csv) == slurp(report_again));
}

TEST_CASE("sweep can vary the context distribution of a generator") {
  Sandbox box;
  std::ofstream config(box / "config.json");
  config << R"({
  "env": {"generator": {"n_instances": 2, "n_arms": 2, "dim": 2}},
  "policy": {"kind": "ebmUCB"},
  "horizon": 30,
  "seeds": [1]
})";
  config.close();
  const fs::path sweep_dir = box / "sweep";
  CHECK(run_cli("sweep --config " + (box / "config.json").string() +
                " --vary env.generator.context.kind=uniform,mixture_gaussian" +
                " --out " + sweep_dir.string()) == 0);
  const json manifest = json::parse(slurp(sweep_dir / "manifest.json"));
  REQUIRE(manifest["points"].size() == 2);
  for (const auto& point : manifest["points"]) CHECK(point["status"] == "ok");
  const json first = json::parse(
      slurp(sweep_dir / manifest["points"][0]["dir"].get<std::string>() /
            "resolved_config.json"));
  CHECK(first["env"]["generator"]["context"]["kind"] == "uniform");
}

TEST_CASE("sweep rejects an empty grid") {
  Sandbox box;
  const fs::path env_file = box / "env.json";
  REQUIRE(run_cli("gen-env --n-instances 2 --n-arms 2 --dim 2 --seed 2 --out " +
                  env_file.string()) == 0);
  write_config(box / "config.json", env_file);
  CHECK(run_cli("sweep --config " + (box / "config.json").string() +
                " --out " + (box / "s").string()) == 1);
}

TEST_CASE("report lists corrupt runs without failing") {
  Sandbox box;
  fs::create_directories(box / "broken");
  const fs::path report_csv = box / "report.csv";
  CHECK(run_cli("report --runs " + (box / "broken").string() + " --out " +
                report_csv.string()) == 0);
  const std::string report = slurp(report_csv);
  CHECK(count_lines(report) == 2);
  CHECK(report.find("missing") != std::string::npos);
}

TEST_CASE("single-run report has one row") {
  Sandbox box;
  const fs::path env_file = box / "env.json";
  REQUIRE(run_cli("gen-env --n-instances 2 --n-arms 2 --dim 2 --seed 6 --out " +
                  env_file.string()) == 0);
  write_config(box / "config.json", env_file);
  const fs::path out = box / "run";
  REQUIRE(run_cli("run --config " + (box / "config.json").string() +
                  " --out " + out.string()) == 0);
  const fs::path report_csv = box / "report.csv";
  CHECK(run_cli("report --runs " + out.string() + " --out " +
                report_csv.string()) == 0);
  CHECK(count_lines(slurp(report_csv)) == 2);
}

}  // TEST_SUITE

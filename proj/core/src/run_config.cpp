#include "ebm/run_config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace ebm {

using nlohmann::json;

namespace {

[[noreturn]] void bad_config(const std::string& msg) {
  throw std::invalid_argument("run config: " + msg);
}

void reject_unknown_keys(const json& node, std::initializer_list<const char*> known,
                         const std::string& scope) {
  for (const auto& [key, value] : node.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (key == k) { ok = true; break; }
    }
    if (!ok) bad_config("unknown key '" + scope + key + "'");
  }
}

json context_to_json(const ContextDistribution& c) {
  if (c.kind == ContextKind::mixture_gaussian) {
    return {{"kind", "mixture_gaussian"},
            {"params",
             {{"weight", c.weight},
              {"mean_low", c.mean_low},
              {"mean_high", c.mean_high},
              {"sd", c.sd}}}};
  }
  return {{"kind", "uniform"}, {"params", {{"low", c.low}, {"high", c.high}}}};
}

ContextDistribution context_from_json(const json& node) {
  ContextDistribution c;
  reject_unknown_keys(node, {"kind", "params"}, "env.generator.context.");
  const std::string kind = node.at("kind").get<std::string>();
  const json params = node.value("params", json::object());
  if (kind == "mixture_gaussian") {
    c.kind = ContextKind::mixture_gaussian;
    c.weight = params.value("weight", 0.5);
    c.mean_low = params.value("mean_low", -1.0);
    c.mean_high = params.value("mean_high", 1.0);
    c.sd = params.value("sd", 1.0);
  } else if (kind == "uniform") {
    c.kind = ContextKind::uniform;
    c.low = params.value("low", -1.0);
    c.high = params.value("high", 1.0);
  } else {
    bad_config("context.kind '" + kind + "' is not recognized");
  }
  return c;
}

json generator_to_json(const GeneratorSpec& g) {
  json node;
  node["mode"] = g.mode == GeneratorSpec::Mode::hierarchical ? "hierarchical"
                                                             : "sparse";
  node["n_instances"] = g.n_instances;
  node["n_arms"] = g.n_arms;
  node["dim"] = g.dim;
  node["arrival"] =
      g.arrival == ArrivalMode::balanced ? "balanced" : "data_poor";
  node["context"] = context_to_json(g.context);
  if (g.mode == GeneratorSpec::Mode::sparse) {
    node["sparse_support"] = g.sparse_support;
    node["delta_scale"] = g.delta_scale;
  }
  return node;
}

GeneratorSpec generator_from_json(const json& node) {
  GeneratorSpec g;
  reject_unknown_keys(node,
                      {"mode", "n_instances", "n_arms", "dim", "arrival",
                       "context", "sparse_support", "delta_scale"},
                      "env.generator.");
  const std::string mode = node.value("mode", "hierarchical");
  if (mode == "hierarchical") {
    g.mode = GeneratorSpec::Mode::hierarchical;
  } else if (mode == "sparse") {
    g.mode = GeneratorSpec::Mode::sparse;
  } else {
    bad_config("env.generator.mode '" + mode + "' is not recognized");
  }
  g.n_instances = node.value("n_instances", 10);
  g.n_arms = node.value("n_arms", 5);
  g.dim = node.value("dim", 3);
  const std::string arrival = node.value("arrival", "balanced");
  if (arrival == "balanced") {
    g.arrival = ArrivalMode::balanced;
  } else if (arrival == "data_poor" || arrival == "data-poor") {
    g.arrival = ArrivalMode::data_poor;
  } else {
    bad_config("env.generator.arrival '" + arrival + "' is not recognized");
  }
  if (node.contains("context")) g.context = context_from_json(node["context"]);
  g.sparse_support = node.value("sparse_support", 1);
  g.delta_scale = node.value("delta_scale", 1.0);
  return g;
}

json policy_to_json(const PolicyConfig& p) {
  return {{"kind", to_string(p.kind)},
          {"a", p.a},
          {"lambda", p.lambda},
          {"min_pulls_per_arm", p.min_pulls_per_arm},
          {"tie_break", "lowest_index"}};
}

PolicyConfig policy_from_json(const json& node) {
  PolicyConfig p;
  reject_unknown_keys(node, {"kind", "a", "lambda", "min_pulls_per_arm",
                             "tie_break"},
                      "policy.");
  if (node.contains("kind")) {
    p.kind = policy_kind_from_string(node["kind"].get<std::string>());
  }
  p.a = node.value("a", 0.1);
  p.lambda = node.value("lambda", 0.001);
  p.min_pulls_per_arm = node.value("min_pulls_per_arm", 1);
  const std::string tie = node.value("tie_break", "lowest_index");
  if (tie != "lowest_index") {
    bad_config("policy.tie_break '" + tie + "' is not supported");
  }
  return p;
}

json config_to_json(const RunConfig& c) {
  json node;
  json env;
  if (c.env.file) env["file"] = *c.env.file;
  if (c.env.generator) env["generator"] = generator_to_json(*c.env.generator);
  node["env"] = env;
  node["policy"] = policy_to_json(c.policy);
  node["horizon"] = c.horizon;
  node["seeds"] = c.seeds;
  node["regret_mode"] =
      c.regret_mode == RegretMode::realized ? "realized" : "weighted";
  node["estimation"] = c.estimation == EstimationMode::empirical_bayes
                           ? "empirical_bayes"
                           : "fixed_prior";
  node["jobs"] = c.jobs;
  node["output_dir"] = c.output_dir;
  if (!c.applied_overrides.empty()) {
    node["applied_overrides"] = c.applied_overrides;
  }
  return node;
}

RunConfig config_from_json(const json& node) {
  RunConfig c;
  reject_unknown_keys(node,
                      {"env", "policy", "horizon", "seeds", "regret_mode",
                       "estimation", "jobs", "output_dir",
                       "applied_overrides"},
                      "");
  if (!node.contains("env")) bad_config("missing key 'env'");
  const json& env = node["env"];
  reject_unknown_keys(env, {"file", "generator"}, "env.");
  if (env.contains("file")) c.env.file = env["file"].get<std::string>();
  if (env.contains("generator")) {
    c.env.generator = generator_from_json(env["generator"]);
  }
  if (node.contains("policy")) c.policy = policy_from_json(node["policy"]);
  c.horizon = node.value("horizon", std::int64_t{1000});
  if (node.contains("seeds")) {
    c.seeds = node["seeds"].get<std::vector<std::uint64_t>>();
  }
  const std::string mode = node.value("regret_mode", "realized");
  if (mode == "realized") {
    c.regret_mode = RegretMode::realized;
  } else if (mode == "weighted") {
    c.regret_mode = RegretMode::weighted;
  } else {
    bad_config("regret_mode '" + mode + "' is not recognized");
  }
  const std::string est = node.value("estimation", "empirical_bayes");
  if (est == "empirical_bayes") {
    c.estimation = EstimationMode::empirical_bayes;
  } else if (est == "fixed_prior") {
    c.estimation = EstimationMode::fixed_prior;
  } else {
    bad_config("estimation '" + est + "' is not recognized");
  }
  c.jobs = node.value("jobs", 1);
  c.output_dir = node.value("output_dir", std::string("run_output"));
  if (node.contains("applied_overrides")) {
    c.applied_overrides =
        node["applied_overrides"].get<std::vector<std::string>>();
  }
  c.validate();
  return c;
}

}  // namespace

void RunConfig::validate() const {
  if (!env.file && !env.generator) {
    bad_config("env must name a file or a generator");
  }
  if (env.file && env.generator) {
    bad_config("env cannot name both a file and a generator");
  }
  policy.validate();
  if (horizon < 1) bad_config("horizon must be >= 1");
  if (seeds.empty()) bad_config("seeds must be nonempty");
  if (jobs < 1) bad_config("jobs must be >= 1");
}

RunConfig parse_run_config(const std::string& json_text) {
  json node;
  try {
    node = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad_config(std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(node);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

std::string serialize_run_config(const RunConfig& config) {
  return config_to_json(config).dump(2) + "\n";
}

void save_run_config(const RunConfig& config,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write config file " + path.string());
  }
  out << serialize_run_config(config);
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    bad_config("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string value_text = assignment.substr(eq + 1);

  json value;
  try {
    value = json::parse(value_text);
  } catch (const json::parse_error&) {
    value = value_text;  // bare strings need no quotes
  }

  json root = config_to_json(config);
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) bad_config("override key '" + key + "' is malformed");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }

  const std::vector<std::string> overrides = config.applied_overrides;
  config = config_from_json(root);  // rejects keys outside the schema
  config.applied_overrides = overrides;
  config.applied_overrides.push_back(assignment);
}

}  // namespace ebm

#include "ebm/environment.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>

#include "ebm/linalg.hpp"

namespace ebm {

using nlohmann::json;

void ContextDistribution::validate() const {
  switch (kind) {
    case ContextKind::mixture_gaussian:
      if (weight < 0.0 || weight > 1.0) {
        throw EnvFormatError("context.params.weight must lie in [0, 1]");
      }
      if (sd <= 0.0) {
        throw EnvFormatError("context.params.sd must be > 0");
      }
      break;
    case ContextKind::uniform:
      if (!(low < high)) {
        throw EnvFormatError("context.params bounds must satisfy low < high");
      }
      break;
  }
}

void EnvTruth::validate() const {
  if (n_instances < 1) throw EnvFormatError("n_instances must be >= 1");
  if (n_arms < 1) throw EnvFormatError("n_arms must be >= 1");
  if (dim < 1) throw EnvFormatError("dim must be >= 1");
  if (static_cast<int>(coeffs.size()) != n_instances) {
    throw EnvFormatError("beta: expected " + std::to_string(n_instances) +
                         " instance rows");
  }
  for (const auto& row : coeffs) {
    if (static_cast<int>(row.size()) != n_arms) {
      throw EnvFormatError("beta: expected " + std::to_string(n_arms) +
                           " arms per instance");
    }
    for (const auto& b : row) {
      if (b.size() != dim) {
        throw EnvFormatError("beta: vector length does not match dim");
      }
    }
  }
  if (static_cast<int>(shared_coeffs.size()) != n_arms) {
    throw EnvFormatError("beta0: expected one vector per arm");
  }
  for (const auto& b : shared_coeffs) {
    if (b.size() != dim) {
      throw EnvFormatError("beta0: vector length does not match dim");
    }
  }
  if (static_cast<int>(prior_cov.size()) != n_arms) {
    throw EnvFormatError("sigma_prior: expected one matrix per arm");
  }
  for (const auto& s : prior_cov) {
    if (s.rows() != dim || s.cols() != dim) {
      throw EnvFormatError("sigma_prior: matrix shape does not match dim");
    }
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) {
      throw EnvFormatError("sigma_prior: matrix is not symmetric");
    }
    if (min_eigenvalue(s) <= 0.0) {
      throw EnvFormatError("sigma_prior: matrix is not positive definite");
    }
  }
  if (static_cast<int>(noise_sd.size()) != n_arms) {
    throw EnvFormatError("noise_sd: expected one value per arm");
  }
  for (double s : noise_sd) {
    if (s < 0.0) throw EnvFormatError("noise_sd: values must be >= 0");
  }
  if (static_cast<int>(arrival.size()) != n_instances) {
    throw EnvFormatError("arrival: expected one probability per instance");
  }
  if (arrival.minCoeff() < 0.0) {
    throw EnvFormatError("arrival: probabilities must be >= 0");
  }
  if (std::abs(arrival.sum() - 1.0) > 1e-12) {
    throw EnvFormatError("arrival: probabilities must sum to 1");
  }
  context.validate();
}

double EnvTruth::max_coeff_norm() const {
  double best = 0.0;
  for (const auto& row : coeffs) {
    for (const auto& b : row) best = std::max(best, b.norm());
  }
  return best;
}

Eigen::VectorXd make_arrival(int n_instances, ArrivalMode mode) {
  Eigen::VectorXd p(n_instances);
  switch (mode) {
    case ArrivalMode::balanced:
      p.setConstant(1.0 / n_instances);
      break;
    case ArrivalMode::data_poor: {
      // Instance 0 arrives at a tenth of the common rate; normalizing
      // 0.1 q + (N-1) q = 1 gives q = 1 / (N - 0.9).
      const double q = 1.0 / (n_instances - 0.9);
      p.setConstant(q);
      p[0] = 0.1 * q;
      break;
    }
  }
  return p;
}

namespace {

Eigen::VectorXd standard_normal_vector(int dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.normal();
  return v;
}

void check_generator_sizes(int n_instances, int n_arms, int dim) {
  if (n_instances < 1 || n_arms < 1 || dim < 1) {
    throw std::invalid_argument(
        "environment generator: n_instances, n_arms and dim must be >= 1");
  }
}

}  // namespace

EnvTruth generate_hierarchical_env(int n_instances, int n_arms, int dim,
                                   ArrivalMode mode, Rng& rng) {
  check_generator_sizes(n_instances, n_arms, dim);
  EnvTruth env;
  env.n_instances = n_instances;
  env.n_arms = n_arms;
  env.dim = dim;
  env.arrival = make_arrival(n_instances, mode);
  env.noise_sd.assign(static_cast<std::size_t>(n_arms), 1.0);
  env.shared_coeffs.reserve(static_cast<std::size_t>(n_arms));
  env.prior_cov.reserve(static_cast<std::size_t>(n_arms));
  for (int k = 0; k < n_arms; ++k) {
    env.shared_coeffs.push_back(standard_normal_vector(dim, rng));
    const Eigen::VectorXd b = standard_normal_vector(dim, rng);
    env.prior_cov.push_back(b * b.transpose() +
                            Eigen::MatrixXd::Identity(dim, dim));
  }
  env.coeffs.resize(static_cast<std::size_t>(n_instances));
  for (auto& row : env.coeffs) {
    row.reserve(static_cast<std::size_t>(n_arms));
    for (int k = 0; k < n_arms; ++k) {
      row.push_back(sample_gaussian(env.shared_coeffs[static_cast<std::size_t>(k)],
                                    env.prior_cov[static_cast<std::size_t>(k)],
                                    rng, "generate_hierarchical_env"));
    }
  }
  env.validate();
  return env;
}

EnvTruth generate_sparse_env(int n_instances, int n_arms, int dim, int support,
                             double delta_scale, ArrivalMode mode, Rng& rng) {
  check_generator_sizes(n_instances, n_arms, dim);
  if (support < 0 || support > dim) {
    throw std::invalid_argument(
        "generate_sparse_env: support must lie in [0, dim]");
  }
  EnvTruth env;
  env.n_instances = n_instances;
  env.n_arms = n_arms;
  env.dim = dim;
  env.arrival = make_arrival(n_instances, mode);
  env.noise_sd.assign(static_cast<std::size_t>(n_arms), 1.0);
  for (int k = 0; k < n_arms; ++k) {
    env.shared_coeffs.push_back(standard_normal_vector(dim, rng));
    // Bookkeeping only; estimators never see the truth.
    env.prior_cov.push_back(delta_scale * delta_scale *
                            Eigen::MatrixXd::Identity(dim, dim));
  }
  env.coeffs.resize(static_cast<std::size_t>(n_instances));
  for (auto& row : env.coeffs) {
    for (int k = 0; k < n_arms; ++k) {
      Eigen::VectorXd beta = env.shared_coeffs[static_cast<std::size_t>(k)];
      // Draw `support` distinct coordinates without replacement.
      std::vector<int> idx(static_cast<std::size_t>(dim));
      std::iota(idx.begin(), idx.end(), 0);
      for (int s = 0; s < support; ++s) {
        const auto pick = static_cast<std::size_t>(
            rng.below(static_cast<std::uint64_t>(dim - s)));
        std::swap(idx[static_cast<std::size_t>(s)],
                  idx[static_cast<std::size_t>(s) + pick]);
        beta[idx[static_cast<std::size_t>(s)]] += delta_scale * rng.normal();
      }
      row.push_back(std::move(beta));
    }
  }
  env.validate();
  return env;
}

Eigen::VectorXd sample_context(const ContextDistribution& dist, int dim,
                               Rng& rng) {
  dist.validate();
  Eigen::VectorXd x(dim);
  switch (dist.kind) {
    case ContextKind::mixture_gaussian:
      for (int i = 0; i < dim; ++i) {
        const double center =
            rng.uniform01() < dist.weight ? dist.mean_low : dist.mean_high;
        x[i] = center + dist.sd * rng.normal();
      }
      break;
    case ContextKind::uniform:
      for (int i = 0; i < dim; ++i) x[i] = rng.uniform(dist.low, dist.high);
      break;
  }
  return x;
}

int sample_arrival(const Eigen::VectorXd& arrival, Rng& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (int j = 0; j < arrival.size(); ++j) {
    acc += arrival[j];
    if (u < acc) return j;
  }
  return static_cast<int>(arrival.size()) - 1;
}

double sample_reward(const EnvTruth& env, int instance, int arm,
                     const Eigen::VectorXd& x, Rng& rng) {
  const auto& beta = env.coeffs[static_cast<std::size_t>(instance)]
                               [static_cast<std::size_t>(arm)];
  return x.dot(beta) +
         env.noise_sd[static_cast<std::size_t>(arm)] * rng.normal();
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

Eigen::VectorXd vector_from_json(const json& node, int dim, const std::string& key) {
  if (!node.is_array() || static_cast<int>(node.size()) != dim) {
    throw EnvFormatError(key + ": expected an array of length " +
                         std::to_string(dim));
  }
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) {
    if (!node[static_cast<std::size_t>(i)].is_number()) {
      throw EnvFormatError(key + ": entries must be numbers");
    }
    v[i] = node[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& node, int dim,
                                 const std::string& key) {
  if (!node.is_array() || static_cast<int>(node.size()) != dim) {
    throw EnvFormatError(key + ": expected " + std::to_string(dim) + " rows");
  }
  Eigen::MatrixXd m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    m.row(r) = vector_from_json(node[static_cast<std::size_t>(r)], dim, key)
                   .transpose();
  }
  return m;
}

const json& require_key(const json& doc, const std::string& key) {
  const auto it = doc.find(key);
  if (it == doc.end()) throw EnvFormatError("missing key: " + key);
  return *it;
}

int require_int(const json& doc, const std::string& key) {
  const json& node = require_key(doc, key);
  if (!node.is_number_integer()) {
    throw EnvFormatError(key + ": expected an integer");
  }
  return node.get<int>();
}

json context_to_json(const ContextDistribution& c) {
  json params;
  switch (c.kind) {
    case ContextKind::mixture_gaussian:
      params = {{"weight", c.weight},
                {"mean_low", c.mean_low},
                {"mean_high", c.mean_high},
                {"sd", c.sd}};
      return {{"kind", "mixture_gaussian"}, {"params", params}};
    case ContextKind::uniform:
      params = {{"low", c.low}, {"high", c.high}};
      return {{"kind", "uniform"}, {"params", params}};
  }
  throw std::logic_error("unknown context kind");
}

double require_param(const json& params, const std::string& key) {
  const auto it = params.find(key);
  if (it == params.end() || !it->is_number()) {
    throw EnvFormatError("context.params." + key + ": expected a number");
  }
  return it->get<double>();
}

ContextDistribution context_from_json(const json& node) {
  ContextDistribution c;
  const auto kind_it = node.find("kind");
  if (kind_it == node.end() || !kind_it->is_string()) {
    throw EnvFormatError("context.kind: expected a string");
  }
  const auto params_it = node.find("params");
  if (params_it == node.end() || !params_it->is_object()) {
    throw EnvFormatError("context.params: expected an object");
  }
  const std::string kind_name = kind_it->get<std::string>();
  if (kind_name == "mixture_gaussian") {
    c.kind = ContextKind::mixture_gaussian;
    c.weight = require_param(*params_it, "weight");
    c.mean_low = require_param(*params_it, "mean_low");
    c.mean_high = require_param(*params_it, "mean_high");
    c.sd = require_param(*params_it, "sd");
  } else if (kind_name == "uniform") {
    c.kind = ContextKind::uniform;
    c.low = require_param(*params_it, "low");
    c.high = require_param(*params_it, "high");
  } else {
    throw EnvFormatError("context.kind: unknown kind '" + kind_name + "'");
  }
  return c;
}

}  // namespace

void save_env(const EnvTruth& env, const std::filesystem::path& path) {
  env.validate();
  json doc;
  doc["n_instances"] = env.n_instances;
  doc["n_arms"] = env.n_arms;
  doc["dim"] = env.dim;
  json beta = json::array();
  for (const auto& row : env.coeffs) {
    json arms = json::array();
    for (const auto& b : row) arms.push_back(vector_to_json(b));
    beta.push_back(arms);
  }
  doc["beta"] = beta;
  json beta0 = json::array();
  for (const auto& b : env.shared_coeffs) beta0.push_back(vector_to_json(b));
  doc["beta0"] = beta0;
  json sigma_prior = json::array();
  for (const auto& s : env.prior_cov) sigma_prior.push_back(matrix_to_json(s));
  doc["sigma_prior"] = sigma_prior;
  doc["noise_sd"] = env.noise_sd;
  doc["arrival"] = vector_to_json(env.arrival);
  doc["context"] = context_to_json(env.context);

  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("save_env: cannot open " + path.string());
  }
  out << doc.dump(2) << "\n";
}

EnvTruth load_env(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_env: cannot open " + path.string());
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw EnvFormatError("malformed environment file: " +
                         std::string(e.what()));
  }

  EnvTruth env;
  env.n_instances = require_int(doc, "n_instances");
  env.n_arms = require_int(doc, "n_arms");
  env.dim = require_int(doc, "dim");
  if (env.n_instances < 1) throw EnvFormatError("n_instances must be >= 1");
  if (env.n_arms < 1) throw EnvFormatError("n_arms must be >= 1");
  if (env.dim < 1) throw EnvFormatError("dim must be >= 1");

  const json& beta = require_key(doc, "beta");
  if (!beta.is_array() || static_cast<int>(beta.size()) != env.n_instances) {
    throw EnvFormatError("beta: expected one row per instance");
  }
  env.coeffs.resize(static_cast<std::size_t>(env.n_instances));
  for (int j = 0; j < env.n_instances; ++j) {
    const json& arms = beta[static_cast<std::size_t>(j)];
    if (!arms.is_array() || static_cast<int>(arms.size()) != env.n_arms) {
      throw EnvFormatError("beta: expected one vector per arm");
    }
    for (int k = 0; k < env.n_arms; ++k) {
      env.coeffs[static_cast<std::size_t>(j)].push_back(vector_from_json(
          arms[static_cast<std::size_t>(k)], env.dim, "beta"));
    }
  }

  const json& beta0 = require_key(doc, "beta0");
  if (!beta0.is_array() || static_cast<int>(beta0.size()) != env.n_arms) {
    throw EnvFormatError("beta0: expected one vector per arm");
  }
  for (int k = 0; k < env.n_arms; ++k) {
    env.shared_coeffs.push_back(vector_from_json(
        beta0[static_cast<std::size_t>(k)], env.dim, "beta0"));
  }

  const json& sigma_prior = require_key(doc, "sigma_prior");
  if (!sigma_prior.is_array() ||
      static_cast<int>(sigma_prior.size()) != env.n_arms) {
    throw EnvFormatError("sigma_prior: expected one matrix per arm");
  }
  for (int k = 0; k < env.n_arms; ++k) {
    env.prior_cov.push_back(matrix_from_json(
        sigma_prior[static_cast<std::size_t>(k)], env.dim, "sigma_prior"));
  }

  const json& noise = require_key(doc, "noise_sd");
  if (!noise.is_array() || static_cast<int>(noise.size()) != env.n_arms) {
    throw EnvFormatError("noise_sd: expected one value per arm");
  }
  for (const auto& v : noise) {
    if (!v.is_number()) throw EnvFormatError("noise_sd: entries must be numbers");
    env.noise_sd.push_back(v.get<double>());
  }

  env.arrival = vector_from_json(require_key(doc, "arrival"), env.n_instances,
                                 "arrival");
  env.context = context_from_json(require_key(doc, "context"));

  env.validate();
  return env;
}

}  // namespace ebm

#include "ebm/reporting.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace ebm {

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  return out;
}

}  // namespace

void write_trace_csv(const std::filesystem::path& path,
                     const std::vector<RegretTrace>& traces,
                     const std::vector<std::uint64_t>& seeds,
                     int n_instances) {
  if (traces.size() != seeds.size()) {
    throw std::invalid_argument("write_trace_csv: traces/seeds mismatch");
  }
  auto out = open_for_write(path);
  out << "seed,t,instance,arm,optimal_arm,regret,cum_regret";
  for (int j = 0; j < n_instances; ++j) {
    out << ",cum_regret_instance_" << j;
  }
  out << "\n";
  for (std::size_t s = 0; s < traces.size(); ++s) {
    const auto& trace = traces[s];
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
      const auto& step = trace.steps[i];
      out << seeds[s] << ',' << step.t << ',' << step.instance << ','
          << step.arm << ',' << step.optimal_arm << ','
          << format_double(step.regret) << ','
          << format_double(trace.cumulative[i]);
      for (int j = 0; j < n_instances; ++j) {
        out << ',' << format_double(trace.per_instance_cumulative(
                          static_cast<Eigen::Index>(i), j));
      }
      out << "\n";
    }
  }
}

void write_aggregate_csv(const std::filesystem::path& path,
                         const AggregateResult& aggregate) {
  auto out = open_for_write(path);
  const auto& total = aggregate.total;
  out << "t,cum_regret_mean,cum_regret_sd,cum_regret_q10,cum_regret_q50,"
         "cum_regret_q90";
  const int n_instances = static_cast<int>(aggregate.per_instance.size());
  for (int j = 0; j < n_instances; ++j) {
    const std::string base = "cum_regret_instance_" + std::to_string(j);
    out << ',' << base << "_mean," << base << "_sd," << base << "_q10,"
        << base << "_q50," << base << "_q90";
  }
  out << "\n";
  for (Eigen::Index t = 0; t < total.mean.size(); ++t) {
    out << (t + 1) << ',' << format_double(total.mean[t]) << ','
        << format_double(total.sd[t]) << ',' << format_double(total.q10[t])
        << ',' << format_double(total.q50[t]) << ','
        << format_double(total.q90[t]);
    for (const auto& inst : aggregate.per_instance) {
      out << ',' << format_double(inst.mean[t]) << ','
          << format_double(inst.sd[t]) << ',' << format_double(inst.q10[t])
          << ',' << format_double(inst.q50[t]) << ','
          << format_double(inst.q90[t]);
    }
    out << "\n";
  }
}

}  // namespace ebm

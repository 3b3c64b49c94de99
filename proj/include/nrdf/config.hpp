#pragma once

// Run configuration, stored as a YAML document:
//
//   horizon: 20                # n, stages 0..n
//   source:
//     alpha: 0.4               # stationary binary symmetric chain, or
//     # alphas: [0.1, ...]     # one flip probability per stage 1..n, or
//     # kernels: [[[..]], ..]  # per stage 1..n, rows x_t, columns x_{t-1}
//     initial: [0.5, 0.5]      # P_0(x_0); uniform when omitted
//   y_size: 2                  # optional; scalar or per stage 0..n, defaults to |X_t|
//   distortion: hamming        # or {matrices: [...]}: one matrix or one per stage 0..n
//   grid_levels: 10            # N, scalar or per stage 1..n
//   s: -2                      # scalar or per stage 0..n, all <= 0
//   epsilon: 1.0e-6
//   max_iter: 10000
//   workers: 1
//   out_dir: out
//   log_base: nats             # nats | bits, affects console summaries only
//   p0_output: [0.5, 0.5]      # optional fixed P_0(y_0)
//   trace_every: 1             # convergence trace sampling, 0 disables
//   grid_cap: 1000000
//   table_cap_mb: 4096
//   sweep_s: [-0.5, -1, -2, -4]
//   bench_workers: [1, 8]
//   oracle: {pred: [0.5, 0.5], s: -2}

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nrdf/backward.hpp"
#include "nrdf/model.hpp"

namespace nrdf {

struct SourceSpec {
  std::optional<double> alpha;
  std::vector<double> alphas;
  std::vector<Matrix> kernels;
  std::optional<std::vector<double>> initial;

  bool operator==(const SourceSpec&) const = default;
};

struct OracleSpec {
  std::vector<double> pred;
  double s = 0.0;
  std::optional<Matrix> rho;  // Hamming when absent

  bool operator==(const OracleSpec&) const = default;
};

struct RunConfig {
  std::size_t horizon = 0;
  SourceSpec source;
  std::vector<std::size_t> y_size;        // empty: same as the source alphabet
  std::vector<Matrix> distortion;         // empty: Hamming
  std::vector<std::size_t> grid_levels{10};
  std::vector<double> s{-2.0};
  double epsilon = 1e-6;
  std::size_t max_iter = 10'000;
  int workers = 1;
  std::string out_dir = "out";
  std::string log_base = "nats";
  std::optional<std::vector<double>> p0_output;
  std::size_t trace_every = 1;
  std::size_t grid_cap = kDefaultGridCap;
  std::size_t table_cap_mb = kDefaultTableCapBytes >> 20;
  std::vector<double> sweep_s;
  std::vector<int> bench_workers;
  std::optional<OracleSpec> oracle;

  bool operator==(const RunConfig&) const = default;
};

// Everything a solve needs, built and validated from a RunConfig.
struct Problem {
  MarkovSource source;
  DistortionModel distortion;
  LagrangeSchedule schedule;
  StageAlphabets alphabets;
  std::vector<std::size_t> levels;  // per stage 1..n
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string to_yaml(const RunConfig& config);

// Throws Error(Validation) on the first violated constraint.
void validate(const RunConfig& config);
Problem build_problem(const RunConfig& config);

BackwardOptions backward_options(const RunConfig& config);

}  // namespace nrdf

#pragma once

// Command implementations behind the `nrdf` executable, plus the writers for
// every artifact they produce. CSV headers are fixed per format version:
//
//   stages.csv       t,rate_nats,rate_bits,distortion,grid_index,belief,iterations,final_gap,
//                    lookahead_rate_nats,projection_distance,output_kernel,policy,marginal
//   convergence.csv  t,branch,iteration,objective,gap
//   sweep.csv        s,avg_distortion,avg_rate_nats,avg_rate_bits,status
//   bench.csv        workers,wall_seconds,cells_solved,cells_per_sec,checksum,speedup
//
// Multi-valued CSV fields (belief, kernels, policy) are ';'-separated,
// column-major over the conditioning symbol.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nrdf/backward.hpp"
#include "nrdf/config.hpp"
#include "nrdf/forward.hpp"

namespace nrdf {

inline constexpr int kCsvFormatVersion = 1;

struct SolveResult {
  BackwardTables tables;
  Trajectory trajectory;
};

SolveResult solve(const Problem& problem, const RunConfig& config);
Trajectory forward_from(const BackwardTables& tables, const Problem& problem, const RunConfig& config);

std::string stage_csv(const Trajectory& trajectory);
std::string convergence_csv(const Trajectory& trajectory);
std::string trajectory_json(const Trajectory& trajectory, const BackwardTables* tables, const RunConfig& config);

struct SweepRow {
  double s = 0.0;
  double avg_distortion = 0.0;
  double avg_rate = 0.0;  // nats
  std::string status = "ok";
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by distortion
  bool monotone = true;        // rate non-increasing in distortion over the ok rows
};

SweepResult run_sweep(const RunConfig& config, std::span<const double> s_list);
std::string sweep_csv(const SweepResult& sweep);

struct BenchRow {
  int workers = 1;
  double wall_seconds = 0.0;
  std::size_t cells = 0;
  std::uint64_t checksum = 0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  bool deterministic = true;
};

BenchResult run_bench(const RunConfig& config, std::span<const int> workers);
std::string bench_csv(const BenchResult& bench);

StagePoint oracle_point(std::span<const double> pred, const Matrix& rho, double s, double epsilon,
                        std::size_t max_iter);

// Command entry points; they return the process exit code and write their
// artifacts under config.out_dir.
int cmd_backward(const RunConfig& config, std::ostream& log);
int cmd_forward(const RunConfig& config, std::ostream& log);
int cmd_solve(const RunConfig& config, std::ostream& log);
int cmd_sweep(const RunConfig& config, std::span<const double> s_list, std::ostream& log);
int cmd_bench(const RunConfig& config, std::span<const int> workers, std::ostream& log);
int cmd_oracle(std::span<const double> pred, const Matrix& rho, double s, const RunConfig& config,
               std::ostream& log);

std::filesystem::path checkpoint_path(const RunConfig& config);

}  // namespace nrdf

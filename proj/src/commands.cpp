#include "nrdf/commands.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "nrdf/checkpoint.hpp"

namespace nrdf {

namespace {

constexpr double kLn2 = std::numbers::ln2;

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string joined(std::span<const double> v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += num(v[i]);
  }
  return out;
}

template <class Stochastic>
std::string columns_joined(const Stochastic& m) {
  std::vector<double> flat;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    for (std::size_t r = 0; r < m.rows(); ++r) flat.push_back(m(r, c));
  }
  return joined(flat);
}

std::string policy_joined(const Policy& p) {
  std::vector<double> flat;
  for (std::size_t yp = 0; yp < p.branch_count(); ++yp) {
    for (std::size_t x = 0; x < p.x_size(); ++x) {
      for (std::size_t y = 0; y < p.y_size(); ++y) flat.push_back(p(yp, x, y));
    }
  }
  return joined(flat);
}

template <class Stochastic>
nlohmann::json columns_json(const Stochastic& m) {
  nlohmann::json cols = nlohmann::json::array();
  for (std::size_t c = 0; c < m.cols(); ++c) cols.push_back(m.column(c));
  return cols;
}

// Writes through a temporary so a failed run never leaves a half-written file.
void write_file(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw Error(ErrorKind::Io, "failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot move " + tmp.string() + " into place: " + ec.message());
}

std::filesystem::path prepare_out_dir(const RunConfig& config) {
  const std::filesystem::path dir(config.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

double in_unit(double nats, const RunConfig& config) { return config.log_base == "bits" ? nats / kLn2 : nats; }

void summarize(const Trajectory& traj, const RunConfig& config, std::ostream& log) {
  const char* unit = config.log_base == "bits" ? "bits" : "nats";
  log << "stages: " << traj.stages.size() << "\n"
      << "total rate: " << num(in_unit(traj.total_sum, config)) << " " << unit << "\n"
      << "average rate: " << num(in_unit(traj.total_avg, config)) << " " << unit << "\n"
      << "average distortion: " << num(traj.average_distortion) << "\n";
}

int completion_code(const BackwardTables* tables, const Trajectory& traj, std::ostream& log) {
  const std::size_t bad = tables ? tables->nonconverged_cells() : 0;
  if (bad > 0 || !traj.all_converged) {
    log << "warning: " << bad << " backward cells did not reach the stopping tolerance\n";
    return 2;
  }
  return 0;
}

}  // namespace

std::filesystem::path checkpoint_path(const RunConfig& config) {
  return std::filesystem::path(config.out_dir) / "tables.bin";
}

SolveResult solve(const Problem& problem, const RunConfig& config) {
  auto grids = make_grids(problem.alphabets, problem.levels, config.grid_cap);
  BackwardTables tables =
      backward_pass(problem.source, problem.distortion, std::move(grids), problem.schedule, backward_options(config));
  Trajectory traj = forward_from(tables, problem, config);
  return SolveResult{std::move(tables), std::move(traj)};
}

Trajectory forward_from(const BackwardTables& tables, const Problem& problem, const RunConfig& config) {
  ForwardOptions fo;
  fo.trace_every = config.trace_every;
  if (config.p0_output) fo.p0_output = ProbVector(*config.p0_output);
  return forward_pass(tables, problem.source, problem.distortion, problem.schedule, fo);
}

std::string stage_csv(const Trajectory& traj) {
  std::ostringstream out;
  out << "t,rate_nats,rate_bits,distortion,grid_index,belief,iterations,final_gap,"
         "lookahead_rate_nats,projection_distance,output_kernel,policy,marginal\n";
  for (const StageRecord& r : traj.stages) {
    const std::size_t iters = r.iterations.empty() ? 0 : *std::max_element(r.iterations.begin(), r.iterations.end());
    const double gap = r.final_gap.empty() ? 0.0 : *std::max_element(r.final_gap.begin(), r.final_gap.end());
    out << r.t << ',' << num(r.rate) << ',' << num(r.rate / kLn2) << ',' << num(r.distortion) << ','
        << (r.grid_index ? std::to_string(*r.grid_index) : std::string()) << ','
        << (r.belief ? columns_joined(*r.belief) : std::string()) << ',' << iters << ',' << num(gap) << ','
        << num(r.lookahead_rate) << ',' << num(r.projection_distance) << ',' << columns_joined(r.output) << ','
        << policy_joined(r.policy) << ',' << joined(r.marginal.values()) << '\n';
  }
  return out.str();
}

std::string convergence_csv(const Trajectory& traj) {
  std::ostringstream out;
  out << "t,branch,iteration,objective,gap\n";
  for (const StageRecord& r : traj.stages) {
    for (std::size_t b = 0; b < r.traces.size(); ++b) {
      for (const AmTraceEntry& e : r.traces[b]) {
        out << r.t << ',' << b << ',' << e.iteration << ',' << num(e.objective) << ',' << num(e.gap) << '\n';
      }
    }
  }
  return out.str();
}

std::string trajectory_json(const Trajectory& traj, const BackwardTables* tables, const RunConfig& config) {
  nlohmann::json j;
  j["format_version"] = kCsvFormatVersion;
  j["horizon"] = traj.stages.empty() ? 0 : traj.stages.size() - 1;
  const std::size_t bad = tables ? tables->nonconverged_cells() : 0;
  j["complete"] = bad == 0 && traj.all_converged;
  j["nonconverged_cells"] = bad;
  j["total_sum_nats"] = traj.total_sum;
  j["total_sum_bits"] = traj.total_sum / kLn2;
  j["total_avg_nats"] = traj.total_avg;
  j["total_avg_bits"] = traj.total_avg / kLn2;
  j["average_distortion"] = traj.average_distortion;
  j["log_base"] = config.log_base;
  nlohmann::json stages = nlohmann::json::array();
  for (const StageRecord& r : traj.stages) {
    nlohmann::json s;
    s["t"] = r.t;
    s["rate_nats"] = r.rate;
    s["rate_bits"] = r.rate / kLn2;
    s["distortion"] = r.distortion;
    s["lookahead_rate_nats"] = r.lookahead_rate;
    s["grid_index"] = r.grid_index ? nlohmann::json(*r.grid_index) : nlohmann::json(nullptr);
    s["belief"] = r.belief ? columns_json(*r.belief) : nlohmann::json(nullptr);
    s["output_kernel"] = columns_json(r.output);
    nlohmann::json policy = nlohmann::json::array();
    for (std::size_t yp = 0; yp < r.policy.branch_count(); ++yp) {
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t x = 0; x < r.policy.x_size(); ++x) {
        const auto row = r.policy.branch(yp).row(x);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
      }
      policy.push_back(rows);
    }
    s["policy"] = policy;
    s["marginal"] = std::vector<double>(r.marginal.values().begin(), r.marginal.values().end());
    s["iterations"] = r.iterations;
    s["final_gap"] = r.final_gap;
    s["projection_distance"] = r.projection_distance;
    s["max_table_mismatch"] = r.max_table_mismatch;
    stages.push_back(std::move(s));
  }
  j["stages"] = std::move(stages);
  return j.dump(2) + "\n";
}

SweepResult run_sweep(const RunConfig& config, std::span<const double> s_list) {
  SweepResult out;
  for (double s : s_list) {
    SweepRow row;
    row.s = s;
    try {
      RunConfig c = config;
      c.s = {s};
      c.trace_every = 0;
      const Problem problem = build_problem(c);
      const SolveResult res = solve(problem, c);
      row.avg_distortion = res.trajectory.average_distortion;
      row.avg_rate = res.trajectory.total_avg;
      if (res.tables.nonconverged_cells() > 0 || !res.trajectory.all_converged) row.status = "nonconverged";
    } catch (const Error& e) {
      row.status = std::string("error: ") + e.what();
    }
    out.rows.push_back(std::move(row));
  }
  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const SweepRow& a, const SweepRow& b) { return a.avg_distortion < b.avg_distortion; });
  const SweepRow* prev = nullptr;
  for (const SweepRow& r : out.rows) {
    if (r.status.rfind("error", 0) == 0) continue;
    if (prev && r.avg_rate > prev->avg_rate) out.monotone = false;
    prev = &r;
  }
  return out;
}

std::string sweep_csv(const SweepResult& sweep) {
  std::ostringstream out;
  out << "s,avg_distortion,avg_rate_nats,avg_rate_bits,status\n";
  for (const SweepRow& r : sweep.rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    out << num(r.s) << ',' << num(r.avg_distortion) << ',' << num(r.avg_rate) << ',' << num(r.avg_rate / kLn2)
        << ',' << status << '\n';
  }
  out << "# monotone_nonincreasing=" << (sweep.monotone ? "true" : "false") << '\n';
  return out.str();
}

BenchResult run_bench(const RunConfig& config, std::span<const int> workers) {
  const Problem problem = build_problem(config);
  BenchResult out;
  for (int w : workers) {
    RunConfig c = config;
    c.workers = w;
    auto grids = make_grids(problem.alphabets, problem.levels, c.grid_cap);
    const auto start = std::chrono::steady_clock::now();
    const BackwardTables tables =
        backward_pass(problem.source, problem.distortion, std::move(grids), problem.schedule, backward_options(c));
    const auto stop = std::chrono::steady_clock::now();
    BenchRow row;
    row.workers = w;
    row.wall_seconds = std::chrono::duration<double>(stop - start).count();
    row.cells = tables.total_cells();
    row.checksum = tables_checksum(tables);
    if (!out.rows.empty() && row.checksum != out.rows.front().checksum) out.deterministic = false;
    out.rows.push_back(row);
  }
  return out;
}

std::string bench_csv(const BenchResult& bench) {
  std::ostringstream out;
  out << "workers,wall_seconds,cells_solved,cells_per_sec,checksum,speedup\n";
  for (const BenchRow& r : bench.rows) {
    const double base = bench.rows.front().wall_seconds;
    std::ostringstream hex;
    hex << std::hex << r.checksum;
    out << r.workers << ',' << num(r.wall_seconds) << ',' << r.cells << ','
        << num(r.wall_seconds > 0 ? static_cast<double>(r.cells) / r.wall_seconds : 0.0) << ',' << hex.str() << ','
        << num(r.wall_seconds > 0 ? base / r.wall_seconds : 0.0) << '\n';
  }
  return out.str();
}

StagePoint oracle_point(std::span<const double> pred, const Matrix& rho, double s, double epsilon,
                        std::size_t max_iter) {
  const std::vector<double> zeros(rho.cols(), 0.0);
  const AmResult r = run_branch_am(pred, rho, s, zeros, AmOptions{epsilon, max_iter, false});
  if (!r.converged) throw Error(ErrorKind::NonConvergence, "oracle: no convergence within max_iter");
  return r.point;
}

int cmd_backward(const RunConfig& config, std::ostream& log) {
  const Problem problem = build_problem(config);
  const auto dir = prepare_out_dir(config);
  auto grids = make_grids(problem.alphabets, problem.levels, config.grid_cap);
  const BackwardTables tables =
      backward_pass(problem.source, problem.distortion, std::move(grids), problem.schedule, backward_options(config));
  save_tables(tables, checkpoint_path(config));
  log << "cells: " << tables.total_cells() << ", nonconverged: " << tables.nonconverged_cells() << "\n"
      << "checkpoint: " << checkpoint_path(config).string() << "\n";
  (void)dir;
  return tables.nonconverged_cells() > 0 ? 2 : 0;
}

int cmd_forward(const RunConfig& config, std::ostream& log) {
  const Problem problem = build_problem(config);
  const auto dir = prepare_out_dir(config);
  const BackwardTables tables = load_tables(checkpoint_path(config));
  const Trajectory traj = forward_from(tables, problem, config);
  write_file(dir / "stages.csv", stage_csv(traj));
  write_file(dir / "convergence.csv", convergence_csv(traj));
  write_file(dir / "trajectory.json", trajectory_json(traj, &tables, config));
  summarize(traj, config, log);
  return completion_code(&tables, traj, log);
}

int cmd_solve(const RunConfig& config, std::ostream& log) {
  const Problem problem = build_problem(config);
  const auto dir = prepare_out_dir(config);
  const SolveResult res = solve(problem, config);
  save_tables(res.tables, checkpoint_path(config));
  write_file(dir / "stages.csv", stage_csv(res.trajectory));
  write_file(dir / "convergence.csv", convergence_csv(res.trajectory));
  write_file(dir / "trajectory.json", trajectory_json(res.trajectory, &res.tables, config));
  summarize(res.trajectory, config, log);
  return completion_code(&res.tables, res.trajectory, log);
}

int cmd_sweep(const RunConfig& config, std::span<const double> s_list, std::ostream& log) {
  validate(config);
  if (s_list.empty()) throw Error(ErrorKind::Validation, "sweep: no s values given");
  for (double s : s_list) {
    if (!(s <= 0.0)) throw Error(ErrorKind::Validation, "sweep: every s must be <= 0");
  }
  const auto dir = prepare_out_dir(config);
  const SweepResult sweep = run_sweep(config, s_list);
  write_file(dir / "sweep.csv", sweep_csv(sweep));
  for (const SweepRow& r : sweep.rows) {
    log << "s=" << num(r.s) << " D=" << num(r.avg_distortion) << " R=" << num(in_unit(r.avg_rate, config)) << " "
        << config.log_base << " (" << r.status << ")\n";
  }
  log << "monotone: " << (sweep.monotone ? "yes" : "no") << "\n";
  return 0;
}

int cmd_bench(const RunConfig& config, std::span<const int> workers, std::ostream& log) {
  if (workers.empty()) throw Error(ErrorKind::Validation, "bench: no worker counts given");
  const auto dir = prepare_out_dir(config);
  const BenchResult bench = run_bench(config, workers);
  write_file(dir / "bench.csv", bench_csv(bench));
  log << bench_csv(bench);
  if (!bench.deterministic) {
    log << "error: tables differ across worker counts\n";
    return 2;
  }
  return 0;
}

int cmd_oracle(std::span<const double> pred, const Matrix& rho, double s, const RunConfig& config,
               std::ostream& log) {
  if (!(s <= 0.0)) throw Error(ErrorKind::Validation, "oracle: s must be <= 0");
  const StagePoint p = oracle_point(pred, rho, s, config.epsilon, config.max_iter);
  log << "rate_nats=" << num(p.rate) << " rate_bits=" << num(p.rate / kLn2) << " distortion=" << num(p.distortion)
      << "\n";
  return 0;
}

}  // namespace nrdf

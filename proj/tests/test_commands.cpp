#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nrdf/checkpoint.hpp"
#include "nrdf/commands.hpp"
#include "test_support.hpp"

using namespace nrdf;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

RunConfig config_in(const std::string& yaml, const char* dir) {
  RunConfig c = parse_config(yaml);
  c.out_dir = (fs::temp_directory_path() / "nrdf_commands_test" / dir).string();
  fs::remove_all(c.out_dir);
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST_CASE("solve with no future stages is the classical point") {
  const RunConfig c = config_in("horizon: 0\nsource: {kernels: [[[0.5, 0.5], [0.5, 0.5]]]}\ns: -2\n", "n0");
  std::ostringstream log;
  CHECK(cmd_solve(c, log) == 0);
  const auto j = nlohmann::json::parse(slurp(fs::path(c.out_dir) / "trajectory.json"));
  CHECK(std::abs(j["total_avg_nats"].get<double>() - 0.3278133254727376) < 1e-5);
  CHECK(std::abs(j["total_avg_bits"].get<double>() - 0.3278133254727376 / std::log(2.0)) < 1e-5);
  CHECK(j["complete"].get<bool>());
  CHECK(fs::exists(checkpoint_path(c)));
}

TEST_CASE("solve artifacts") {
  const RunConfig c = config_in("horizon: 4\nsource: {alphas: [0.1, 0.4, 0.2, 0.3]}\ngrid_levels: 4\n"
                                "trace_every: 2\n",
                                "artifacts");
  std::ostringstream log;
  REQUIRE(cmd_solve(c, log) == 0);
  const fs::path dir(c.out_dir);
  const std::string stages = slurp(dir / "stages.csv");
  CHECK(first_line(stages) ==
        "t,rate_nats,rate_bits,distortion,grid_index,belief,iterations,final_gap,"
        "lookahead_rate_nats,projection_distance,output_kernel,policy,marginal");
  CHECK(std::count(stages.begin(), stages.end(), '\n') == 6);
  const std::string conv = slurp(dir / "convergence.csv");
  CHECK(first_line(conv) == "t,branch,iteration,objective,gap");
  CHECK(conv.find("\n1,") == std::string::npos);  // only even stages traced
  CHECK(conv.find("\n2,") != std::string::npos);
  for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().extension() != ".partial");

  SUBCASE("forward from the checkpoint reproduces the solve") {
    std::ostringstream log2;
    fs::remove(dir / "stages.csv");
    CHECK(cmd_forward(c, log2) == 0);
    CHECK(slurp(dir / "stages.csv") == stages);
  }
  SUBCASE("identical configs give identical bytes") {
    RunConfig c2 = c;
    c2.out_dir += "_again";
    std::ostringstream log2;
    REQUIRE(cmd_solve(c2, log2) == 0);
    CHECK(slurp(fs::path(c2.out_dir) / "stages.csv") == stages);
    CHECK(slurp(fs::path(c2.out_dir) / "convergence.csv") == conv);
  }
}

TEST_CASE("zero price solve has an all-zero rate column") {
  const RunConfig c = config_in("horizon: 3\nsource: {alpha: 0.3}\ngrid_levels: 3\ns: 0\n", "zero");
  std::ostringstream log;
  REQUIRE(cmd_solve(c, log) == 0);
  const auto j = nlohmann::json::parse(slurp(fs::path(c.out_dir) / "trajectory.json"));
  for (const auto& s : j["stages"]) CHECK(std::abs(s["rate_nats"].get<double>()) < 1e-12);
}

TEST_CASE("time-varying source: rates follow the flip probabilities") {
  const RunConfig c = config_in("horizon: 6\nsource: {alphas: [0.05, 0.45, 0.05, 0.45, 0.05, 0.45]}\n"
                                "grid_levels: 6\n",
                                "varying");
  const Problem p = build_problem(c);
  const SolveResult r = solve(p, c);
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t t = 1; t < r.trajectory.stages.size(); ++t) {
    lo = std::min(lo, r.trajectory.stages[t].rate);
    hi = std::max(hi, r.trajectory.stages[t].rate);
    for (const auto& tr : r.trajectory.stages[t].traces) CHECK(tr.back().gap <= c.epsilon);
  }
  CHECK(hi - lo > 1e-2);
}

TEST_CASE("sweep") {
  SUBCASE("memoryless source follows the classical curve") {
    const RunConfig c = config_in("horizon: 2\nsource: {kernels: [[[0.5, 0.5], [0.5, 0.5]]]}\ngrid_levels: 3\n",
                                  "sweep_memoryless");
    const std::vector<double> s{-0.5, -1, -2, -4};
    const SweepResult r = run_sweep(c, s);
    REQUIRE(r.rows.size() == 4);
    CHECK(r.monotone);
    for (const SweepRow& row : r.rows) {
      CAPTURE(row.s);
      const StagePoint want = testing::binary_rdf_point(row.s);
      CHECK(row.status == "ok");
      CHECK(std::abs(row.avg_rate - want.rate) < 1e-3);
      CHECK(std::abs(row.avg_distortion - want.distortion) < 1e-3);
    }
  }
  SUBCASE("zero price row") {
    const RunConfig c = config_in("horizon: 1\nsource: {alpha: 0.4}\ngrid_levels: 2\n", "sweep_zero");
    const SweepResult r = run_sweep(c, std::vector<double>{0.0});
    CHECK(r.rows[0].avg_rate == Approx(0.0));
    CHECK(r.rows[0].avg_distortion == Approx(0.5));
  }
  SUBCASE("duplicates are identical") {
    const RunConfig c = config_in("horizon: 2\nsource: {alpha: 0.4}\ngrid_levels: 3\n", "sweep_dup");
    const SweepResult r = run_sweep(c, std::vector<double>{-1.5, -1.5});
    CHECK(r.rows[0].avg_rate == r.rows[1].avg_rate);
    CHECK(r.rows[0].avg_distortion == r.rows[1].avg_distortion);
    std::ostringstream log;
    CHECK(cmd_sweep(c, std::vector<double>{-1.5, -1.5}, log) == 0);
    const std::string csv = slurp(fs::path(c.out_dir) / "sweep.csv");
    CHECK(first_line(csv) == "s,avg_distortion,avg_rate_nats,avg_rate_bits,status");
    CHECK(csv.find("# monotone_nonincreasing=true") != std::string::npos);
  }
  SUBCASE("failed points are recorded") {
    RunConfig c = config_in("horizon: 1\nsource: {alpha: 0.4}\ngrid_levels: 2\n", "sweep_fail");
    c.max_iter = 1;
    c.epsilon = 1e-15;
    const SweepResult r = run_sweep(c, std::vector<double>{-1.0, -2.0});
    CHECK(r.rows.size() == 2);
    CHECK(r.rows[0].status == "nonconverged");
  }
}

TEST_CASE("bench") {
  const RunConfig c = config_in("horizon: 3\nsource: {alpha: 0.4}\ngrid_levels: 4\n", "bench");
  const BenchResult b = run_bench(c, std::vector<int>{1, 2, 3});
  CHECK(b.deterministic);
  REQUIRE(b.rows.size() == 3);
  CHECK(b.rows[0].cells == 16 * 16 * 2 * 2 + 16 * 2);
  CHECK(b.rows[1].checksum == b.rows[0].checksum);
  const std::string csv = bench_csv(b);
  CHECK(first_line(csv) == "workers,wall_seconds,cells_solved,cells_per_sec,checksum,speedup");
  std::ostringstream log;
  CHECK(cmd_bench(c, std::vector<int>{1}, log) == 0);
}

TEST_CASE("oracle") {
  const RunConfig c;
  const Matrix h = testing::hamming(2);
  const StagePoint a = oracle_point(std::vector<double>{0.5, 0.5}, h, -2.0, 1e-6, 10000);
  CHECK(std::abs(a.rate - 0.3278133254727376) < 1e-5);
  CHECK(std::abs(a.distortion - 0.11920292202211755) < 1e-5);
  const StagePoint z = oracle_point(std::vector<double>{0.5, 0.5}, h, 0.0, 1e-6, 10000);
  CHECK(std::abs(z.rate) < 1e-12);
  CHECK(z.distortion == Approx(0.5));
  const StagePoint d = oracle_point(std::vector<double>{1.0, 0.0}, h, -2.0, 1e-6, 10000);
  CHECK(std::abs(d.rate) < 1e-12);
  // the stray output mass decays geometrically; it is below the stopping tolerance
  CHECK(std::abs(d.distortion) < 1e-6);
  std::ostringstream log;
  CHECK(cmd_oracle(std::vector<double>{0.5, 0.5}, h, -2.0, c, log) == 0);
  CHECK(log.str().find("rate_nats=0.3278") == 0);
  CHECK_THROWS_AS(cmd_oracle(std::vector<double>{0.5, 0.5}, h, 1.0, c, log), Error);
}

TEST_CASE("exit codes") {
  CHECK(exit_code(ErrorKind::Validation) == 1);
  CHECK(exit_code(ErrorKind::NonConvergence) == 2);
  CHECK(exit_code(ErrorKind::Io) == 3);
  CHECK(exit_code(ErrorKind::CorruptFile) == 3);
  RunConfig c = config_in("horizon: 1\nsource: {alpha: 0.4}\ngrid_levels: 2\n", "nonconv");
  c.max_iter = 1;
  c.epsilon = 1e-15;
  std::ostringstream log;
  CHECK(cmd_solve(c, log) == 2);
  const auto j = nlohmann::json::parse(slurp(fs::path(c.out_dir) / "trajectory.json"));
  CHECK_FALSE(j["complete"].get<bool>());
  RunConfig missing = config_in("horizon: 1\nsource: {alpha: 0.4}\ngrid_levels: 2\n", "missing");
  try {
    cmd_forward(missing, log);
    FAIL("expected an I/O error");
  } catch (const Error& e) {
    CHECK(exit_code(e.kind()) == 3);
  }
}

// nrdf: solver front end.
//
//   nrdf solve|backward|forward|sweep|bench|oracle --config <path> [--workers k] [--out dir]
//
// Exit codes: 0 success, 1 validation, 2 numerical non-convergence, 3 I/O.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "nrdf/commands.hpp"
#include "nrdf/config.hpp"
#include "nrdf/errors.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<std::size_t> levels;
  std::optional<double> s;
  std::optional<std::size_t> horizon;
};

void add_common(CLI::App* cmd, Overrides& o, bool config_required) {
  auto* opt = cmd->add_option("--config,-c", o.config_path, "YAML run configuration");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--workers,-w", o.workers, "worker threads for the backward pass");
  cmd->add_option("--out,-o", o.out, "output directory");
  cmd->add_option("--N", o.levels, "override quantization levels for every stage");
  cmd->add_option("--s", o.s, "override the Lagrange multiplier for every stage");
  cmd->add_option("--n", o.horizon, "override the horizon");
}

nrdf::RunConfig resolve(const Overrides& o) {
  nrdf::RunConfig c = o.config_path.empty() ? nrdf::RunConfig{} : nrdf::load_config(o.config_path);
  if (o.workers) c.workers = *o.workers;
  if (o.out) c.out_dir = *o.out;
  if (o.levels) c.grid_levels = {*o.levels};
  if (o.s) c.s = {*o.s};
  if (o.horizon) c.horizon = *o.horizon;
  nrdf::validate(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonanticipative rate-distortion bounds for finite-alphabet Markov sources"};
  app.require_subcommand(1);

  Overrides o;
  std::vector<double> s_list;
  std::vector<int> worker_list;
  std::vector<double> pred;

  auto* solve = app.add_subcommand("solve", "backward pass, forward pass and all artifacts");
  add_common(solve, o, true);
  auto* backward = app.add_subcommand("backward", "backward pass only; writes the checkpoint");
  add_common(backward, o, true);
  auto* forward = app.add_subcommand("forward", "forward pass from an existing checkpoint");
  add_common(forward, o, true);
  auto* sweep = app.add_subcommand("sweep", "one full solve per s value");
  add_common(sweep, o, true);
  sweep->add_option("--s-list", s_list, "s values (defaults to sweep_s from the config)")->delimiter(',');
  auto* bench = app.add_subcommand("bench", "time the backward pass across worker counts");
  add_common(bench, o, true);
  bench->add_option("--workers-list", worker_list, "worker counts (defaults to bench_workers)")->delimiter(',');
  auto* oracle = app.add_subcommand("oracle", "classical single-stage rate-distortion point");
  add_common(oracle, o, false);
  oracle->add_option("--pred", pred, "source distribution")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    const nrdf::RunConfig config = resolve(o);
    if (*solve) return nrdf::cmd_solve(config, std::cout);
    if (*backward) return nrdf::cmd_backward(config, std::cout);
    if (*forward) return nrdf::cmd_forward(config, std::cout);
    if (*sweep) {
      if (s_list.empty()) s_list = config.sweep_s;
      return nrdf::cmd_sweep(config, s_list, std::cout);
    }
    if (*bench) {
      if (worker_list.empty()) worker_list = config.bench_workers;
      if (worker_list.empty()) worker_list = {config.workers};
      return nrdf::cmd_bench(config, worker_list, std::cout);
    }
    if (*oracle) {
      double s = o.s.value_or(config.oracle ? config.oracle->s : 0.0);
      if (pred.empty() && config.oracle) pred = config.oracle->pred;
      if (pred.empty()) throw nrdf::Error(nrdf::ErrorKind::Validation, "oracle: give --pred or oracle.pred");
      nrdf::Matrix rho;
      if (config.oracle && config.oracle->rho) {
        rho = *config.oracle->rho;
      } else {
        nrdf::StageAlphabets a{{pred.size()}, {pred.size()}};
        rho = nrdf::DistortionModel::hamming(a).stage(0);
      }
      return nrdf::cmd_oracle(pred, rho, s, config, std::cout);
    }
  } catch (const nrdf::Error& e) {
    std::cerr << "nrdf: " << e.what() << "\n";
    return nrdf::exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "nrdf: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

#pragma once

// Online forward computation over stored backward tables.
//
// Stage 0 runs a single-branch minimization on P_0(x_0) with look-ahead
// min over b' of value[1][y_0][b'], and its projected posterior fixes the
// stage-1 grid point. Each later stage picks the next grid point minimizing
// the output-marginal-weighted stored rate, then re-solves the chosen cell to
// recover the policy and output kernel. Reported stage rates are the pure
// conditional mutual information; the stored look-ahead-inclusive rates are
// kept alongside.

#include <cstddef>
#include <optional>
#include <vector>

#include "nrdf/am_stage.hpp"
#include "nrdf/backward.hpp"
#include "nrdf/grid.hpp"
#include "nrdf/model.hpp"

namespace nrdf {

struct ForwardOptions {
  // Fixed P_0(y_0) instead of the optimized stage-0 output.
  std::optional<ProbVector> p0_output;
  // Record AM convergence traces for stages t with t % trace_every == 0; 0 disables.
  std::size_t trace_every = 0;
};

struct StageRecord {
  std::size_t t = 0;
  std::optional<std::size_t> grid_index;  // b*_t, absent at t = 0
  std::optional<Belief> belief;           // P*_t(x_{t-1} | y_{t-1}), absent at t = 0
  Policy policy;
  OutputKernel output;
  ProbVector marginal;                    // P_t(y_t)
  double rate = 0.0;                      // nats, I(X_t; Y_t | Y_{t-1})
  double distortion = 0.0;
  double lookahead_rate = 0.0;            // marginal-weighted rate with look-ahead
  std::vector<std::size_t> iterations;    // per branch
  std::vector<double> final_gap;          // per branch
  double max_table_mismatch = 0.0;        // |re-run rate - stored rate|, t >= 1
  // L1 distance from the projected Bayes update of the previous stage to b*_t.
  double projection_distance = 0.0;
  std::vector<std::vector<AmTraceEntry>> traces;  // per branch, when traced
};

struct Trajectory {
  std::vector<StageRecord> stages;
  double total_sum = 0.0;  // nats
  double total_avg = 0.0;  // total_sum / (n + 1)
  double average_distortion = 0.0;
  bool all_converged = true;
};

struct Stage0Result {
  Policy policy;              // one branch: P_0(y_0 | x_0)
  ProbVector output;          // P_0(y_0)
  Belief posterior;           // P_1(x_0 | y_0)
  std::optional<GridIndex> next_index;  // projection onto B_1 when n >= 1
  StagePoint point;           // rate without look-ahead
  double lookahead_rate = 0.0;
  std::size_t iterations = 0;
  double final_gap = 0.0;
  bool converged = false;
  std::vector<AmTraceEntry> trace;
};

Stage0Result init_stage0(const ProbVector& p0, const Matrix& rho0, double s0, std::span<const double> lookahead,
                         const AmOptions& am, const BeliefGrid* next_grid,
                         const std::optional<ProbVector>& p0_output = std::nullopt);

// Marginal-weighted stored rate of every next grid point b' from b*_t = current.
std::vector<double> next_belief_costs(std::size_t t, std::size_t current, const BackwardTables& tables,
                                      const ProbVector& prev_marginal);

// argmin of next_belief_costs; ties go to the lowest index. forward_pass
// additionally separates near-ties by Bayes consistency.
GridIndex best_next_belief(std::size_t t, std::size_t current, const BackwardTables& tables,
                           const ProbVector& prev_marginal);

Trajectory forward_pass(const BackwardTables& tables, const MarkovSource& source,
                        const DistortionModel& distortion, const LagrangeSchedule& schedule,
                        const ForwardOptions& options = {});

}  // namespace nrdf

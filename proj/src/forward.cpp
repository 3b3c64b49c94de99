#include "nrdf/forward.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nrdf {

Stage0Result init_stage0(const ProbVector& p0, const Matrix& rho0, double s0, std::span<const double> lookahead,
                         const AmOptions& am, const BeliefGrid* next_grid,
                         const std::optional<ProbVector>& p0_output) {
  const std::vector<double> pred(p0.values().begin(), p0.values().end());
  const std::vector<double> zeros(rho0.cols(), 0.0);
  Stage0Result out;
  Matrix policy;
  std::vector<double> output;

  if (p0_output) {
    // Given output: the policy is the single KKT response to it.
    if (p0_output->size() != rho0.cols()) throw Error(ErrorKind::Shape, "stage 0: P_0(y_0) override has the wrong size");
    for (double v : p0_output->values()) {
      if (!(v > 0.0)) throw Error(ErrorKind::Validation, "stage 0: P_0(y_0) override must be strictly positive");
    }
    std::vector<double> shifted(lookahead.begin(), lookahead.end());
    const double m = *std::min_element(shifted.begin(), shifted.end());
    for (double& v : shifted) v -= m;
    policy = policy_update(p0_output->values(), exponent_weights(rho0, s0, shifted));
    output.assign(p0_output->values().begin(), p0_output->values().end());
    const std::vector<double> induced = induced_output(pred, policy);
    out.point.rate = branch_objective(pred, policy, induced, zeros);
    out.lookahead_rate = branch_objective(pred, policy, induced, lookahead);
    out.iterations = 1;
    out.converged = true;
  } else {
    AmResult res = run_branch_am(pred, rho0, s0, lookahead, am);
    policy = std::move(res.policy);
    output = std::move(res.output);
    out.point.rate = branch_objective(pred, policy, output, zeros);
    out.lookahead_rate = res.point.rate;
    out.iterations = res.iterations;
    out.final_gap = res.final_gap;
    out.converged = res.converged;
    out.trace = std::move(res.trace);
  }
  out.point.distortion = branch_distortion(pred, policy, rho0);
  out.policy = Policy({policy});
  out.output = ProbVector::normalized(output);

  const PredictiveBelief single = PredictiveBelief::from_columns({pred});
  out.posterior = posterior_from_prediction(single, out.policy).belief;
  if (next_grid) out.next_index = project(out.posterior, *next_grid);
  return out;
}

std::vector<double> next_belief_costs(std::size_t t, std::size_t current, const BackwardTables& tables,
                                      const ProbVector& prev_marginal) {
  const StageTable& st = tables.stage(t);
  if (prev_marginal.size() != st.branches) throw Error(ErrorKind::Shape, "best_next_belief: marginal size mismatch");
  if (current >= st.current_points) throw Error(ErrorKind::Shape, "best_next_belief: grid index out of range");
  std::vector<double> costs(st.next_points, 0.0);
  for (std::size_t bn = 0; bn < st.next_points; ++bn) {
    for (std::size_t y = 0; y < st.branches; ++y) costs[bn] += st.rate[st.index(current, bn, y)] * prev_marginal[y];
  }
  return costs;
}

GridIndex best_next_belief(std::size_t t, std::size_t current, const BackwardTables& tables,
                           const ProbVector& prev_marginal) {
  const std::vector<double> costs = next_belief_costs(t, current, tables, prev_marginal);
  return GridIndex{static_cast<std::size_t>(std::min_element(costs.begin(), costs.end()) - costs.begin())};
}

namespace {

// Mirror-image grid points of a symmetric model have equal stored costs up to
// rounding, and the lowest-index rule would then pick an arbitrary one of
// them. Candidates within epsilon of the best cost are therefore ranked by how
// close each is to the Bayes posterior of its own re-solved cell; remaining
// ties go to the lowest index.
std::size_t pick_next(std::size_t t, std::size_t current, const PredictiveBelief& pred, const Matrix& rho, double s,
                      AmOptions am, const BackwardTables& tables, const ProbVector& prev_marginal) {
  const std::vector<double> costs = next_belief_costs(t, current, tables, prev_marginal);
  const double best = *std::min_element(costs.begin(), costs.end());
  std::vector<std::size_t> tied;
  for (std::size_t bn = 0; bn < costs.size(); ++bn) {
    if (costs[bn] <= best + tables.epsilon) tied.push_back(bn);
  }
  if (tied.size() == 1 || t == tables.horizon) return tied.front();

  am.record_trace = false;
  std::size_t pick = tied.front();
  double pick_distance = INFINITY;
  for (std::size_t bn : tied) {
    const std::vector<double> look = lookahead_for(tables, t, bn);
    std::vector<Matrix> branches;
    for (std::size_t y = 0; y < pred.cols(); ++y) {
      branches.push_back(run_branch_am(pred.column(y), rho, s, look, am).policy);
    }
    const BayesUpdate upd = posterior_from_prediction(pred, Policy(std::move(branches)));
    const double d = l1_distance(upd.belief, tables.grid(t + 1).point(bn));
    if (d < pick_distance) {
      pick_distance = d;
      pick = bn;
    }
  }
  return pick;
}

}  // namespace

Trajectory forward_pass(const BackwardTables& tables, const MarkovSource& source,
                        const DistortionModel& distortion, const LagrangeSchedule& schedule,
                        const ForwardOptions& options) {
  const std::size_t n = source.horizon();
  if (tables.horizon != n || !(tables.schedule == schedule) ||
      tables.model_fingerprint != model_fingerprint(source, distortion)) {
    throw Error(ErrorKind::Validation, "forward: tables were computed for a different configuration");
  }
  const double tolerance = 10.0 * tables.epsilon;
  const auto traced = [&](std::size_t t) { return options.trace_every > 0 && t % options.trace_every == 0; };

  Trajectory traj;
  traj.stages.reserve(n + 1);

  // Stage 0.
  AmOptions am{tables.epsilon, tables.max_iter, traced(0)};
  std::vector<double> look0(distortion.stage(0).cols(), 0.0);
  if (n >= 1) {
    const ValueTable& v1 = tables.value(1);
    for (std::size_t y = 0; y < v1.branches; ++y) {
      double m = v1(y, 0);
      for (std::size_t b = 1; b < v1.points; ++b) m = std::min(m, v1(y, b));
      look0[y] = m;
    }
  }
  Stage0Result s0 = init_stage0(source.initial(), distortion.stage(0), schedule[0], look0, am,
                                n >= 1 ? &tables.grid(1) : nullptr, options.p0_output);
  {
    StageRecord rec;
    rec.t = 0;
    rec.policy = s0.policy;
    rec.output = OutputKernel::from_columns({std::vector<double>(s0.output.values().begin(), s0.output.values().end())});
    rec.marginal = s0.output;
    rec.rate = s0.point.rate;
    rec.distortion = s0.point.distortion;
    rec.lookahead_rate = s0.lookahead_rate;
    rec.iterations = {s0.iterations};
    rec.final_gap = {s0.final_gap};
    if (!s0.trace.empty()) rec.traces.push_back(std::move(s0.trace));
    traj.all_converged = s0.converged;
    traj.stages.push_back(std::move(rec));
  }
  if (n == 0) {
    traj.total_sum = traj.stages[0].rate;
    traj.total_avg = traj.total_sum;
    traj.average_distortion = traj.stages[0].distortion;
    return traj;
  }

  std::size_t current = s0.next_index->value;
  double pending_distance = l1_distance(s0.posterior, tables.grid(1).point(current));

  for (std::size_t t = 1; t <= n; ++t) {
    const ProbVector& prev_marginal = traj.stages.back().marginal;
    const Belief belief = tables.grid(t).point(current);
    const PredictiveBelief pred = predictive_belief(source.kernel(t), belief);
    const Matrix& rho = distortion.stage(t);
    const StageTable& st = tables.stage(t);
    am.record_trace = traced(t);
    const std::size_t next = pick_next(t, current, pred, rho, schedule[t], am, tables, prev_marginal);
    const std::vector<double> look = lookahead_for(tables, t, next);
    const std::vector<double> zeros(look.size(), 0.0);

    StageRecord rec;
    rec.t = t;
    rec.grid_index = current;
    rec.belief = belief;
    rec.projection_distance = pending_distance;

    std::vector<Matrix> branches;
    std::vector<std::vector<double>> outputs;
    for (std::size_t y = 0; y < pred.cols(); ++y) {
      const std::vector<double> col = pred.column(y);
      AmResult res = run_branch_am(col, rho, schedule[t], look, am);
      const double stored = st.rate[st.index(current, next, y)];
      const double mismatch = std::abs(res.point.rate - stored);
      if (!(mismatch <= tolerance)) {
        throw Error(ErrorKind::Consistency, "forward: stage " + std::to_string(t) + " branch " + std::to_string(y) +
                                                " re-run rate differs from the stored table by " +
                                                std::to_string(mismatch));
      }
      rec.max_table_mismatch = std::max(rec.max_table_mismatch, mismatch);
      const double w = prev_marginal[y];
      rec.rate += w * branch_objective(col, res.policy, res.output, zeros);
      rec.distortion += w * res.point.distortion;
      rec.lookahead_rate += w * res.point.rate;
      rec.iterations.push_back(res.iterations);
      rec.final_gap.push_back(res.final_gap);
      traj.all_converged = traj.all_converged && res.converged;
      if (am.record_trace) rec.traces.push_back(std::move(res.trace));
      branches.push_back(std::move(res.policy));
      outputs.push_back(std::move(res.output));
    }
    rec.policy = Policy(std::move(branches));
    rec.output = OutputKernel::from_columns(outputs);
    rec.marginal = output_marginal_step(prev_marginal, rec.output);

    if (t < n) {
      const BayesUpdate upd = posterior_from_prediction(pred, rec.policy);
      pending_distance = l1_distance(upd.belief, tables.grid(t + 1).point(next));
    }
    current = next;
    traj.stages.push_back(std::move(rec));
  }

  for (const StageRecord& r : traj.stages) {
    traj.total_sum += r.rate;
    traj.average_distortion += r.distortion;
  }
  traj.total_avg = traj.total_sum / static_cast<double>(n + 1);
  traj.average_distortion /= static_cast<double>(n + 1);
  return traj;
}

}  // namespace nrdf

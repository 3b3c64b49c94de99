#include "nrdf/backward.hpp"

#include <omp.h>

#include <bit>
#include <exception>
#include <string>

namespace nrdf {

namespace {

class Fnv1a {
 public:
  void add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h_ ^= (v >> (8 * i)) & 0xffu;
      h_ *= 0x100000001b3ull;
    }
  }
  void add(double v) { add(std::bit_cast<std::uint64_t>(v)); }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ull;
};

// Inputs of one stage, shared read-only by every cell task.
struct StageInputs {
  std::vector<std::vector<std::vector<double>>> preds;  // [b][y_prev] -> column over x_t
  std::vector<std::vector<double>> lookaheads;          // [b_next] -> vector over y_t
  const Matrix* rho = nullptr;
  double s = 0.0;
};

BackwardTables prepare(const MarkovSource& source, const DistortionModel& distortion,
                       std::vector<BeliefGrid> grids, const LagrangeSchedule& schedule,
                       const BackwardOptions& options) {
  const StageAlphabets alpha = alphabets_of(source, distortion);
  const std::size_t n = source.horizon();
  if (schedule.horizon() != n) throw Error(ErrorKind::Shape, "backward: schedule length does not match horizon");
  if (grids.size() != n + 1) throw Error(ErrorKind::Shape, "backward: need grids for stages 1..n+1");
  if (options.workers < 1) throw Error(ErrorKind::Validation, "backward: worker count must be >= 1");
  if (!(options.epsilon > 0.0) || options.max_iter == 0) {
    throw Error(ErrorKind::Validation, "backward: epsilon must be positive and max_iter nonzero");
  }
  for (std::size_t t = 1; t <= n + 1; ++t) {
    const BeliefGrid& g = grids[t - 1];
    if (g.x_size() != alpha.x_sizes[t - 1] || g.y_size() != alpha.y_sizes[t - 1]) {
      throw Error(ErrorKind::Shape, "backward: grid for stage " + std::to_string(t) + " has the wrong shape");
    }
  }
  if (grids[n].size() != 1) throw Error(ErrorKind::Shape, "backward: terminal grid must have a single point");

  std::size_t bytes = 0;
  for (std::size_t t = 1; t <= n; ++t) {
    const std::size_t cells = grids[t - 1].size() * grids[t].size() * alpha.y_sizes[t - 1];
    bytes += cells * (3 * sizeof(double) + sizeof(std::uint32_t) + 1);
    bytes += grids[t - 1].size() * alpha.y_sizes[t - 1] * sizeof(double);
  }
  if (bytes > options.table_cap_bytes) {
    throw Error(ErrorKind::TableTooLarge, "backward: tables need about " + std::to_string(bytes >> 20) +
                                              " MiB, above the cap of " +
                                              std::to_string(options.table_cap_bytes >> 20) + " MiB");
  }

  BackwardTables tables;
  tables.horizon = n;
  tables.schedule = schedule;
  tables.epsilon = options.epsilon;
  tables.max_iter = options.max_iter;
  tables.model_fingerprint = model_fingerprint(source, distortion);
  tables.grids = std::move(grids);
  tables.stages.resize(n);
  tables.values.resize(n + 1);
  for (std::size_t t = 1; t <= n; ++t) {
    StageTable& st = tables.stages[t - 1];
    st.current_points = tables.grids[t - 1].size();
    st.next_points = tables.grids[t].size();
    st.branches = alpha.y_sizes[t - 1];
    const std::size_t cells = st.cells();
    st.rate.assign(cells, 0.0);
    st.dist.assign(cells, 0.0);
    st.gap.assign(cells, 0.0);
    st.iters.assign(cells, 0);
    st.converged.assign(cells, 0);
  }
  tables.values[n] = ValueTable{1, alpha.y_sizes[n], std::vector<double>(alpha.y_sizes[n], 0.0)};
  return tables;
}

StageInputs stage_inputs(const BackwardTables& tables, const MarkovSource& source,
                         const DistortionModel& distortion, std::size_t t) {
  StageInputs in;
  const BeliefGrid& grid = tables.grid(t);
  in.preds.resize(grid.size());
  for (std::size_t b = 0; b < grid.size(); ++b) {
    const PredictiveBelief pred = predictive_belief(source.kernel(t), grid.point(b));
    in.preds[b].resize(pred.cols());
    for (std::size_t y = 0; y < pred.cols(); ++y) in.preds[b][y] = pred.column(y);
  }
  const std::size_t next_points = tables.grid(t + 1).size();
  in.lookaheads.resize(next_points);
  for (std::size_t bn = 0; bn < next_points; ++bn) in.lookaheads[bn] = lookahead_for(tables, t, bn);
  in.rho = &distortion.stage(t);
  in.s = tables.schedule[t];
  return in;
}

void solve_pair(const StageInputs& in, const AmOptions& am, std::size_t b, std::size_t bn, StageTable& st) {
  for (std::size_t y = 0; y < st.branches; ++y) {
    const AmResult r = run_branch_am(in.preds[b][y], *in.rho, in.s, in.lookaheads[bn], am);
    const std::size_t i = st.index(b, bn, y);
    st.rate[i] = r.point.rate;
    st.dist[i] = r.point.distortion;
    st.gap[i] = r.final_gap;
    st.iters[i] = static_cast<std::uint32_t>(r.iterations);
    st.converged[i] = r.converged ? 1 : 0;
  }
}

void close_values(BackwardTables& tables, std::size_t t) {
  const StageTable& st = tables.stage(t);
  ValueTable v{st.current_points, st.branches, std::vector<double>(st.current_points * st.branches)};
  for (std::size_t y = 0; y < st.branches; ++y) {
    for (std::size_t b = 0; b < st.current_points; ++b) {
      double best = st.rate[st.index(b, 0, y)];
      for (std::size_t bn = 1; bn < st.next_points; ++bn) {
        const double r = st.rate[st.index(b, bn, y)];
        if (r < best) best = r;
      }
      v.values[y * st.current_points + b] = best;
    }
  }
  tables.values[t - 1] = std::move(v);
}

AmOptions am_options(const BackwardOptions& options) {
  AmOptions am;
  am.epsilon = options.epsilon;
  am.max_iter = options.max_iter;
  return am;
}

}  // namespace

std::size_t BackwardTables::total_cells() const {
  std::size_t n = 0;
  for (const StageTable& st : stages) n += st.cells();
  return n;
}

std::size_t BackwardTables::nonconverged_cells() const {
  std::size_t n = 0;
  for (const StageTable& st : stages) {
    for (std::uint8_t c : st.converged) n += c ? 0 : 1;
  }
  return n;
}

std::uint64_t model_fingerprint(const MarkovSource& source, const DistortionModel& distortion) {
  Fnv1a h;
  h.add(static_cast<std::uint64_t>(source.horizon()));
  for (double v : source.initial().values()) h.add(v);
  for (std::size_t t = 1; t <= source.horizon(); ++t) {
    const Matrix& k = source.kernel(t).matrix();
    h.add(static_cast<std::uint64_t>(k.rows()));
    h.add(static_cast<std::uint64_t>(k.cols()));
    for (double v : k.data()) h.add(v);
  }
  for (std::size_t t = 0; t <= distortion.horizon(); ++t) {
    const Matrix& r = distortion.stage(t);
    h.add(static_cast<std::uint64_t>(r.rows()));
    h.add(static_cast<std::uint64_t>(r.cols()));
    for (double v : r.data()) h.add(v);
  }
  return h.value();
}

std::vector<BeliefGrid> make_grids(const StageAlphabets& alphabets, std::span<const std::size_t> levels,
                                   std::size_t cap) {
  const std::size_t n = alphabets.horizon();
  if (levels.size() != n) throw Error(ErrorKind::Shape, "make_grids: need one level count per stage 1..n");
  std::vector<BeliefGrid> grids;
  grids.reserve(n + 1);
  for (std::size_t t = 1; t <= n; ++t) {
    grids.push_back(generate_grid(alphabets.x_sizes[t - 1], alphabets.y_sizes[t - 1], levels[t - 1], cap));
  }
  grids.push_back(generate_grid(alphabets.x_sizes[n], alphabets.y_sizes[n], 1, cap));
  return grids;
}

std::vector<double> lookahead_for(const BackwardTables& tables, std::size_t t, std::size_t b_next) {
  const ValueTable& v = tables.value(t + 1);
  std::vector<double> out(v.branches);
  for (std::size_t y = 0; y < v.branches; ++y) out[y] = v(y, b_next);
  return out;
}

BackwardTables backward_pass_reference(const MarkovSource& source, const DistortionModel& distortion,
                                       std::vector<BeliefGrid> grids, const LagrangeSchedule& schedule,
                                       const BackwardOptions& options) {
  BackwardTables tables = prepare(source, distortion, std::move(grids), schedule, options);
  const AmOptions am = am_options(options);
  for (std::size_t t = tables.horizon; t >= 1; --t) {
    const StageInputs in = stage_inputs(tables, source, distortion, t);
    StageTable& st = tables.stages[t - 1];
    for (std::size_t b = 0; b < st.current_points; ++b) {
      for (std::size_t bn = 0; bn < st.next_points; ++bn) solve_pair(in, am, b, bn, st);
    }
    close_values(tables, t);
  }
  return tables;
}

BackwardTables backward_pass(const MarkovSource& source, const DistortionModel& distortion,
                             std::vector<BeliefGrid> grids, const LagrangeSchedule& schedule,
                             const BackwardOptions& options) {
  BackwardTables tables = prepare(source, distortion, std::move(grids), schedule, options);
  const AmOptions am = am_options(options);
  for (std::size_t t = tables.horizon; t >= 1; --t) {
    const StageInputs in = stage_inputs(tables, source, distortion, t);
    StageTable& st = tables.stages[t - 1];
    const std::int64_t pairs = static_cast<std::int64_t>(st.current_points * st.next_points);
    std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 16) num_threads(options.workers)
    for (std::int64_t p = 0; p < pairs; ++p) {
      try {
        const auto up = static_cast<std::size_t>(p);
        solve_pair(in, am, up / st.next_points, up % st.next_points, st);
      } catch (...) {
#pragma omp critical(nrdf_backward_failure)
        if (!failure) failure = std::current_exception();
      }
    }

    if (failure) std::rethrow_exception(failure);
    close_values(tables, t);
  }
  return tables;
}

}  // namespace nrdf

#pragma once

// Offline backward sweep over stages t = n..1.
//
// For every stage t, current grid point b in B_t, next grid point b' in
// B_{t+1} and branch y_{t-1}, the cell runs alternating minimization with
// prediction K_t * b[:, y_{t-1}] and look-ahead value[t+1][.][b']. The value
// closure value[t][y][b] = min over b' of rate[t][b][b'][y] feeds stage t-1.
// B_{n+1} is a single placeholder point whose value is identically zero.
//
// backward_pass distributes the (b, b') cells of a stage over OpenMP threads;
// backward_pass_reference is the plain serial loop and must agree bit for bit.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nrdf/am_stage.hpp"
#include "nrdf/grid.hpp"
#include "nrdf/model.hpp"

namespace nrdf {

inline constexpr std::size_t kDefaultTableCapBytes = std::size_t{4} << 30;

struct BackwardOptions {
  double epsilon = 1e-6;
  std::size_t max_iter = 10'000;
  int workers = 1;
  std::size_t table_cap_bytes = kDefaultTableCapBytes;
};

struct StageTable {
  std::size_t current_points = 0;  // |B_t|
  std::size_t next_points = 0;     // |B_{t+1}|
  std::size_t branches = 0;        // |Y_{t-1}|
  std::vector<double> rate;        // nats, look-ahead included
  std::vector<double> dist;
  std::vector<double> gap;
  std::vector<std::uint32_t> iters;
  std::vector<std::uint8_t> converged;

  std::size_t index(std::size_t b, std::size_t b_next, std::size_t y_prev) const {
    return (b * next_points + b_next) * branches + y_prev;
  }
  std::size_t cells() const { return current_points * next_points * branches; }

  bool operator==(const StageTable&) const = default;
};

struct ValueTable {
  std::size_t points = 0;
  std::size_t branches = 0;
  std::vector<double> values;  // [y * points + b]

  double operator()(std::size_t y, std::size_t b) const { return values[y * points + b]; }

  bool operator==(const ValueTable&) const = default;
};

struct BackwardTables {
  std::size_t horizon = 0;
  LagrangeSchedule schedule{std::vector<double>{0.0}};
  double epsilon = 0.0;
  std::size_t max_iter = 0;
  std::uint64_t model_fingerprint = 0;
  std::vector<BeliefGrid> grids;    // grids[t - 1] is B_t, t = 1..n+1
  std::vector<StageTable> stages;   // stages[t - 1], t = 1..n
  std::vector<ValueTable> values;   // values[t - 1], t = 1..n+1

  const BeliefGrid& grid(std::size_t t) const { return grids.at(t - 1); }
  const StageTable& stage(std::size_t t) const { return stages.at(t - 1); }
  const ValueTable& value(std::size_t t) const { return values.at(t - 1); }

  std::size_t total_cells() const;
  std::size_t nonconverged_cells() const;

  bool operator==(const BackwardTables&) const = default;
};

// Hash of the numbers defining the source and distortion model; tables carry
// it so the forward pass can refuse a mismatched model.
std::uint64_t model_fingerprint(const MarkovSource& source, const DistortionModel& distortion);

// B_1..B_n from per-stage levels (levels[t - 1] for B_t), plus the
// single-point B_{n+1}.
std::vector<BeliefGrid> make_grids(const StageAlphabets& alphabets, std::span<const std::size_t> levels,
                                   std::size_t cap = kDefaultGridCap);

BackwardTables backward_pass(const MarkovSource& source, const DistortionModel& distortion,
                             std::vector<BeliefGrid> grids, const LagrangeSchedule& schedule,
                             const BackwardOptions& options);

BackwardTables backward_pass_reference(const MarkovSource& source, const DistortionModel& distortion,
                                       std::vector<BeliefGrid> grids, const LagrangeSchedule& schedule,
                                       const BackwardOptions& options);

// Look-ahead vector over y_t seen by cells of stage t that target b_next.
std::vector<double> lookahead_for(const BackwardTables& tables, std::size_t t, std::size_t b_next);

}  // namespace nrdf

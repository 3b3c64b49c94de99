#pragma once

#include <cstddef>
#include <vector>

#include "nrdf/model.hpp"

namespace nrdf {

inline constexpr std::size_t kDefaultGridCap = 1'000'000;

struct GridIndex {
  std::size_t value = 0;
  bool operator==(const GridIndex&) const = default;
};

/// Finite quantization of the belief space P(x_{t-1} | y_{t-1}).
///
/// Each belief column is drawn from a fixed candidate list. For a binary
/// alphabet the candidates are (1 - a_i, a_i) with a_i = i / (N + 1),
/// i = 1..N. For larger alphabets they are the strictly positive lattice
/// points k / (N + |X| - 1) of the simplex, which reduces to the binary rule
/// when |X| = 2. A grid point picks one candidate per column; points are
/// ordered lexicographically by candidate index with column 0 most
/// significant.
class BeliefGrid {
 public:
  BeliefGrid() = default;
  BeliefGrid(std::size_t x_size, std::size_t y_size, std::size_t levels,
             std::vector<std::vector<double>> candidates, std::size_t cap);

  std::size_t x_size() const noexcept { return x_size_; }
  std::size_t y_size() const noexcept { return y_size_; }
  std::size_t levels() const noexcept { return levels_; }
  std::size_t size() const noexcept { return size_; }

  const std::vector<std::vector<double>>& candidates() const noexcept { return candidates_; }
  // Candidate index used by each column of point i.
  std::vector<std::size_t> level_indices(std::size_t i) const;
  std::size_t index_of(const std::vector<std::size_t>& level_indices) const;
  Belief point(std::size_t i) const;

  bool operator==(const BeliefGrid&) const = default;

 private:
  std::size_t x_size_ = 0;
  std::size_t y_size_ = 0;
  std::size_t levels_ = 0;
  std::size_t size_ = 0;
  std::vector<std::vector<double>> candidates_;
};

std::vector<std::vector<double>> column_candidates(std::size_t x_size, std::size_t levels);

BeliefGrid generate_grid(std::size_t x_size, std::size_t y_size, std::size_t levels,
                         std::size_t cap = kDefaultGridCap);

double l1_distance(const Belief& a, const Belief& b);

// Nearest grid point in total L1 distance; ties go to the lowest index.
GridIndex project(const Belief& belief, const BeliefGrid& grid);

}  // namespace nrdf

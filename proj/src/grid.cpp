#include "nrdf/grid.hpp"

#include <cmath>
#include <string>

namespace nrdf {

namespace {

// Enumerates compositions of `total` into `parts` positive integers, with the
// trailing parts varying slowest-to-fastest left to right and the first part
// taking whatever remains.
void compose(std::size_t total, std::size_t parts, std::vector<std::size_t>& tail,
             std::vector<std::vector<std::size_t>>& out) {
  const std::size_t used = [&] {
    std::size_t u = 0;
    for (std::size_t v : tail) u += v;
    return u;
  }();
  if (tail.size() + 1 == parts) {
    if (used < total) {
      std::vector<std::size_t> c{total - used};
      c.insert(c.end(), tail.begin(), tail.end());
      out.push_back(std::move(c));
    }
    return;
  }
  const std::size_t remaining_slots = parts - tail.size() - 1;
  for (std::size_t k = 1; used + k + remaining_slots <= total; ++k) {
    tail.push_back(k);
    compose(total, parts, tail, out);
    tail.pop_back();
  }
}

}  // namespace

std::vector<std::vector<double>> column_candidates(std::size_t x_size, std::size_t levels) {
  if (levels == 0) throw Error(ErrorKind::Validation, "grid: quantization levels must be >= 1");
  if (x_size == 0) throw Error(ErrorKind::Shape, "grid: empty alphabet");
  if (x_size == 1) return {{1.0}};

  const std::size_t q = levels + x_size - 1;
  std::vector<std::vector<std::size_t>> comps;
  std::vector<std::size_t> tail;
  compose(q, x_size, tail, comps);

  std::vector<std::vector<double>> out;
  out.reserve(comps.size());
  for (const auto& c : comps) {
    std::vector<double> col(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) col[i] = static_cast<double>(c[i]) / static_cast<double>(q);
    out.push_back(std::move(col));
  }
  return out;
}

BeliefGrid::BeliefGrid(std::size_t x_size, std::size_t y_size, std::size_t levels,
                       std::vector<std::vector<double>> candidates, std::size_t cap)
    : x_size_(x_size), y_size_(y_size), levels_(levels), candidates_(std::move(candidates)) {
  if (y_size_ == 0 || candidates_.empty()) throw Error(ErrorKind::Shape, "grid: empty grid");
  double size = std::pow(static_cast<double>(candidates_.size()), static_cast<double>(y_size_));
  if (size > static_cast<double>(cap)) {
    throw Error(ErrorKind::GridTooLarge, "grid: " + std::to_string(candidates_.size()) + "^" +
                                             std::to_string(y_size_) + " points exceeds the cap of " +
                                             std::to_string(cap));
  }
  size_ = 1;
  for (std::size_t i = 0; i < y_size_; ++i) size_ *= candidates_.size();
}

std::vector<std::size_t> BeliefGrid::level_indices(std::size_t i) const {
  std::vector<std::size_t> idx(y_size_);
  const std::size_t base = candidates_.size();
  for (std::size_t c = y_size_; c-- > 0;) {
    idx[c] = i % base;
    i /= base;
  }
  return idx;
}

std::size_t BeliefGrid::index_of(const std::vector<std::size_t>& level_indices) const {
  std::size_t i = 0;
  for (std::size_t li : level_indices) i = i * candidates_.size() + li;
  return i;
}

Belief BeliefGrid::point(std::size_t i) const {
  if (i >= size_) throw Error(ErrorKind::Shape, "grid: index out of range");
  const auto idx = level_indices(i);
  std::vector<std::vector<double>> cols;
  cols.reserve(y_size_);
  for (std::size_t li : idx) cols.push_back(candidates_[li]);
  return Belief::from_columns(cols);
}

BeliefGrid generate_grid(std::size_t x_size, std::size_t y_size, std::size_t levels, std::size_t cap) {
  return BeliefGrid(x_size, y_size, levels, column_candidates(x_size, levels), cap);
}

double l1_distance(const Belief& a, const Belief& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(ErrorKind::Shape, "l1_distance: shape mismatch");
  double d = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) d += std::abs(a(r, c) - b(r, c));
  }
  return d;
}

GridIndex project(const Belief& belief, const BeliefGrid& grid) {
  if (belief.rows() != grid.x_size() || belief.cols() != grid.y_size()) {
    throw Error(ErrorKind::Shape, "project: belief shape does not match the grid");
  }
  // The L1 distance separates over columns, so the per-column nearest
  // candidates (lowest index on ties) give the lowest-index global minimizer.
  const auto& cands = grid.candidates();
  std::vector<std::size_t> best(grid.y_size(), 0);
  for (std::size_t c = 0; c < grid.y_size(); ++c) {
    double best_d = INFINITY;
    for (std::size_t k = 0; k < cands.size(); ++k) {
      double d = 0.0;
      for (std::size_t r = 0; r < grid.x_size(); ++r) d += std::abs(belief(r, c) - cands[k][r]);
      if (d < best_d) {
        best_d = d;
        best[c] = k;
      }
    }
  }
  return GridIndex{grid.index_of(best)};
}

}  // namespace nrdf

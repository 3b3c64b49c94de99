#pragma once

// Probability objects and stage-level functionals.
//
// Orientation convention, used everywhere: a conditional distribution
// P(a|b) stored as a matrix has the conditioning variable b on the columns,
// so every column is a probability vector. The one exception is Policy, which
// keeps one row-stochastic matrix (rows x_t, columns y_t) per branch y_{t-1}.
// All logarithms are natural; rates are in nats.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "nrdf/errors.hpp"

namespace nrdf {

inline constexpr double kSumTolerance = 1e-12;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::vector<double> column(std::size_t c) const;

  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Nonnegative entries summing to one within kSumTolerance.
class ProbVector {
 public:
  ProbVector() = default;
  explicit ProbVector(std::vector<double> values);

  static ProbVector uniform(std::size_t n);
  static ProbVector point_mass(std::size_t n, std::size_t at);
  // Rescales nonnegative weights to sum to one.
  static ProbVector normalized(std::vector<double> weights);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const ProbVector&) const = default;

 private:
  std::vector<double> values_;
};

void check_probability(std::span<const double> values, const char* what);

// Column-stochastic matrix; Tag distinguishes the domain role.
template <class Tag>
class ColumnStochastic {
 public:
  ColumnStochastic() = default;
  explicit ColumnStochastic(Matrix m) : m_(std::move(m)) {
    for (std::size_t c = 0; c < m_.cols(); ++c) {
      check_probability(m_.column(c), Tag::name);
    }
  }

  static ColumnStochastic from_columns(const std::vector<std::vector<double>>& columns) {
    if (columns.empty()) throw Error(ErrorKind::Shape, std::string(Tag::name) + ": no columns");
    Matrix m(columns.front().size(), columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (columns[c].size() != m.rows()) {
        throw Error(ErrorKind::Shape, std::string(Tag::name) + ": ragged columns");
      }
      for (std::size_t r = 0; r < m.rows(); ++r) m(r, c) = columns[c][r];
    }
    return ColumnStochastic(std::move(m));
  }

  std::size_t rows() const noexcept { return m_.rows(); }
  std::size_t cols() const noexcept { return m_.cols(); }
  double operator()(std::size_t r, std::size_t c) const { return m_(r, c); }
  std::vector<double> column(std::size_t c) const { return m_.column(c); }
  const Matrix& matrix() const noexcept { return m_; }

  bool operator==(const ColumnStochastic&) const = default;

 private:
  Matrix m_;
};

struct KernelTag { static constexpr const char* name = "transition kernel"; };
struct BeliefTag { static constexpr const char* name = "belief"; };
struct PredictiveTag { static constexpr const char* name = "predictive belief"; };
struct OutputTag { static constexpr const char* name = "output kernel"; };

// K[x_t][x_{t-1}] = P_t(x_t | x_{t-1}).
using TransitionKernel = ColumnStochastic<KernelTag>;
// B[x_{t-1}][y_{t-1}] = P_t(x_{t-1} | y_{t-1}).
using Belief = ColumnStochastic<BeliefTag>;
// M[x_t][y_{t-1}] = sum over x_{t-1} of P_t(x_t | x_{t-1}) P_t(x_{t-1} | y_{t-1}).
using PredictiveBelief = ColumnStochastic<PredictiveTag>;
// Q[y_t][y_{t-1}] = P_t(y_t | y_{t-1}).
using OutputKernel = ColumnStochastic<OutputTag>;

// P_t(y_t | y_{t-1}, x_t): branch(y_{t-1}) is a |X_t| x |Y_t| row-stochastic matrix.
class Policy {
 public:
  Policy() = default;
  explicit Policy(std::vector<Matrix> branches);

  std::size_t branch_count() const noexcept { return branches_.size(); }
  std::size_t x_size() const noexcept { return branches_.empty() ? 0 : branches_.front().rows(); }
  std::size_t y_size() const noexcept { return branches_.empty() ? 0 : branches_.front().cols(); }
  const Matrix& branch(std::size_t y_prev) const { return branches_.at(y_prev); }
  double operator()(std::size_t y_prev, std::size_t x, std::size_t y) const {
    return branches_[y_prev](x, y);
  }

  bool operator==(const Policy&) const = default;

 private:
  std::vector<Matrix> branches_;
};

struct StageAlphabets {
  std::vector<std::size_t> x_sizes;  // |X_t|, t = 0..n
  std::vector<std::size_t> y_sizes;  // |Y_t|, t = 0..n

  std::size_t horizon() const noexcept { return x_sizes.empty() ? 0 : x_sizes.size() - 1; }
};

class MarkovSource {
 public:
  // kernels[t-1] is the stage-t kernel, t = 1..n.
  MarkovSource(ProbVector initial, std::vector<TransitionKernel> kernels);

  // Binary symmetric chain with flip probability alpha_t at stage t.
  static MarkovSource binary_symmetric(std::span<const double> alphas, ProbVector initial);

  std::size_t horizon() const noexcept { return kernels_.size(); }
  const ProbVector& initial() const noexcept { return initial_; }
  const TransitionKernel& kernel(std::size_t t) const { return kernels_.at(t - 1); }
  std::size_t x_size(std::size_t t) const;

 private:
  ProbVector initial_;
  std::vector<TransitionKernel> kernels_;
};

class DistortionModel {
 public:
  // rho[t][x_t][y_t], t = 0..n.
  explicit DistortionModel(std::vector<Matrix> per_stage);

  static DistortionModel hamming(const StageAlphabets& alphabets);

  std::size_t horizon() const noexcept { return stages_.size() - 1; }
  const Matrix& stage(std::size_t t) const { return stages_.at(t); }

 private:
  std::vector<Matrix> stages_;
};

class LagrangeSchedule {
 public:
  explicit LagrangeSchedule(std::vector<double> s);
  static LagrangeSchedule constant(std::size_t horizon, double s);

  std::size_t horizon() const noexcept { return s_.size() - 1; }
  double operator[](std::size_t t) const { return s_.at(t); }
  std::span<const double> values() const noexcept { return s_; }

  bool operator==(const LagrangeSchedule&) const = default;

 private:
  std::vector<double> s_;
};

struct StagePoint {
  double rate = 0.0;        // nats
  double distortion = 0.0;
};

// Validates that source and distortion agree and returns the alphabets.
StageAlphabets alphabets_of(const MarkovSource& source, const DistortionModel& distortion);

PredictiveBelief predictive_belief(const TransitionKernel& kernel, const Belief& belief);

// Branch-level forms. pred is P(x_t | y_{t-1}) for one branch, policy is that
// branch's |X| x |Y| matrix, output is P(y_t | y_{t-1}) for the branch.
double branch_objective(std::span<const double> pred, const Matrix& policy,
                        std::span<const double> output, std::span<const double> lookahead);
double branch_distortion(std::span<const double> pred, const Matrix& policy, const Matrix& rho);
std::vector<double> induced_output(std::span<const double> pred, const Matrix& policy);

// sum_{x,y} M(x|y') P(y|y',x) [ log(P(y|y',x) / Q(y|y')) + lookahead(y) ] for branch y'.
double stage_objective(const PredictiveBelief& pred, const Policy& policy, const OutputKernel& output,
                       std::span<const double> lookahead, std::size_t branch);
double stage_distortion(const PredictiveBelief& pred, const Policy& policy, const Matrix& rho,
                        std::size_t branch);

struct BayesUpdate {
  Belief belief;
  // unreachable[y] is set when y_t has zero probability; that column is uniform.
  std::vector<bool> unreachable;

  bool any_unreachable() const;
};

// Posterior P(x_t | y_t) from the prediction P(x_t | y_{t-1}) and the policy,
// summing over y_{t-1} without weighting.
BayesUpdate posterior_from_prediction(const PredictiveBelief& pred, const Policy& policy);
BayesUpdate bayes_belief_update(const Belief& belief, const Policy& policy, const TransitionKernel& kernel);

ProbVector output_marginal_step(const ProbVector& prev, const OutputKernel& output);

}  // namespace nrdf

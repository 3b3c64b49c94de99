#include "nrdf/model.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace nrdf {

namespace {

void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) throw Error(kind, what);
}

std::vector<double> normalize(std::vector<double> w) {
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  require(sum > 0.0 && std::isfinite(sum), ErrorKind::Validation, "normalize: zero total mass");
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<std::vector<double>> v;
  for (const auto& r : rows) v.emplace_back(r);
  return from_rows(v);
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r].size() == cols, ErrorKind::Shape, "matrix: ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void check_probability(std::span<const double> values, const char* what) {
  require(!values.empty(), ErrorKind::Validation, std::string(what) + ": empty distribution");
  double sum = 0.0;
  for (double v : values) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::Validation,
            std::string(what) + ": negative or non-finite probability");
    sum += v;
  }
  require(std::abs(sum - 1.0) <= kSumTolerance, ErrorKind::Validation,
          std::string(what) + ": probabilities do not sum to one");
}

ProbVector::ProbVector(std::vector<double> values) : values_(std::move(values)) {
  check_probability(values_, "probability vector");
}

ProbVector ProbVector::uniform(std::size_t n) {
  require(n > 0, ErrorKind::Shape, "uniform: empty alphabet");
  return ProbVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

ProbVector ProbVector::point_mass(std::size_t n, std::size_t at) {
  require(at < n, ErrorKind::Shape, "point_mass: index out of range");
  std::vector<double> v(n, 0.0);
  v[at] = 1.0;
  return ProbVector(std::move(v));
}

ProbVector ProbVector::normalized(std::vector<double> weights) {
  return ProbVector(normalize(std::move(weights)));
}

Policy::Policy(std::vector<Matrix> branches) : branches_(std::move(branches)) {
  require(!branches_.empty(), ErrorKind::Shape, "policy: no branches");
  for (const Matrix& b : branches_) {
    require(b.rows() == x_size() && b.cols() == y_size(), ErrorKind::Shape, "policy: branch shapes differ");
    for (std::size_t x = 0; x < b.rows(); ++x) check_probability(b.row(x), "policy row");
  }
}

MarkovSource::MarkovSource(ProbVector initial, std::vector<TransitionKernel> kernels)
    : initial_(std::move(initial)), kernels_(std::move(kernels)) {
  std::size_t prev = initial_.size();
  for (std::size_t i = 0; i < kernels_.size(); ++i) {
    require(kernels_[i].cols() == prev, ErrorKind::Shape,
            "source: kernel " + std::to_string(i + 1) + " columns do not match previous alphabet");
    prev = kernels_[i].rows();
  }
}

MarkovSource MarkovSource::binary_symmetric(std::span<const double> alphas, ProbVector initial) {
  require(initial.size() == 2, ErrorKind::Shape, "binary source: initial distribution must be binary");
  std::vector<TransitionKernel> kernels;
  kernels.reserve(alphas.size());
  for (double a : alphas) {
    require(a > 0.0 && a < 1.0, ErrorKind::Validation, "binary source: alpha must lie in (0,1)");
    kernels.emplace_back(Matrix::from_rows({{1.0 - a, a}, {a, 1.0 - a}}));
  }
  return MarkovSource(std::move(initial), std::move(kernels));
}

std::size_t MarkovSource::x_size(std::size_t t) const {
  return t == 0 ? initial_.size() : kernel(t).rows();
}

DistortionModel::DistortionModel(std::vector<Matrix> per_stage) : stages_(std::move(per_stage)) {
  require(!stages_.empty(), ErrorKind::Shape, "distortion: no stages");
  for (const Matrix& m : stages_) {
    require(m.rows() > 0 && m.cols() > 0, ErrorKind::Shape, "distortion: empty stage matrix");
    for (double v : m.data()) {
      require(std::isfinite(v) && v >= 0.0, ErrorKind::Validation, "distortion: entries must be nonnegative");
    }
  }
}

DistortionModel DistortionModel::hamming(const StageAlphabets& alphabets) {
  std::vector<Matrix> stages;
  for (std::size_t t = 0; t < alphabets.x_sizes.size(); ++t) {
    Matrix m(alphabets.x_sizes[t], alphabets.y_sizes.at(t), 1.0);
    for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) m(i, i) = 0.0;
    stages.push_back(std::move(m));
  }
  return DistortionModel(std::move(stages));
}

LagrangeSchedule::LagrangeSchedule(std::vector<double> s) : s_(std::move(s)) {
  require(!s_.empty(), ErrorKind::Validation, "lagrange schedule: empty");
  for (double v : s_) {
    require(std::isfinite(v) && v <= 0.0, ErrorKind::Validation, "lagrange schedule: every s_t must be <= 0");
  }
}

LagrangeSchedule LagrangeSchedule::constant(std::size_t horizon, double s) {
  return LagrangeSchedule(std::vector<double>(horizon + 1, s));
}

StageAlphabets alphabets_of(const MarkovSource& source, const DistortionModel& distortion) {
  require(source.horizon() == distortion.horizon(), ErrorKind::Shape,
          "source and distortion horizons differ");
  StageAlphabets a;
  for (std::size_t t = 0; t <= source.horizon(); ++t) {
    require(distortion.stage(t).rows() == source.x_size(t), ErrorKind::Shape,
            "distortion rows at stage " + std::to_string(t) + " do not match the source alphabet");
    a.x_sizes.push_back(source.x_size(t));
    a.y_sizes.push_back(distortion.stage(t).cols());
  }
  return a;
}

PredictiveBelief predictive_belief(const TransitionKernel& kernel, const Belief& belief) {
  require(kernel.cols() == belief.rows(), ErrorKind::Shape, "predictive_belief: kernel/belief shape mismatch");
  std::vector<std::vector<double>> cols(belief.cols());
  for (std::size_t y = 0; y < belief.cols(); ++y) {
    std::vector<double> col(kernel.rows(), 0.0);
    for (std::size_t x = 0; x < kernel.rows(); ++x) {
      for (std::size_t xp = 0; xp < kernel.cols(); ++xp) col[x] += kernel(x, xp) * belief(xp, y);
    }
    cols[y] = normalize(std::move(col));
  }
  return PredictiveBelief::from_columns(cols);
}

double branch_objective(std::span<const double> pred, const Matrix& policy,
                        std::span<const double> output, std::span<const double> lookahead) {
  require(pred.size() == policy.rows() && output.size() == policy.cols() && lookahead.size() == policy.cols(),
          ErrorKind::Shape, "stage_objective: shape mismatch");
  double total = 0.0;
  for (std::size_t x = 0; x < policy.rows(); ++x) {
    if (pred[x] == 0.0) continue;
    double row = 0.0;
    for (std::size_t y = 0; y < policy.cols(); ++y) {
      const double p = policy(x, y);
      if (p == 0.0) continue;
      require(output[y] > 0.0, ErrorKind::Support,
              "stage_objective: policy puts mass on an output symbol with zero probability");
      row += p * (std::log(p) - std::log(output[y]) + lookahead[y]);
    }
    total += pred[x] * row;
  }
  return total;
}

double branch_distortion(std::span<const double> pred, const Matrix& policy, const Matrix& rho) {
  require(pred.size() == policy.rows() && rho.rows() == policy.rows() && rho.cols() == policy.cols(),
          ErrorKind::Shape, "stage_distortion: shape mismatch");
  double total = 0.0;
  for (std::size_t x = 0; x < policy.rows(); ++x) {
    double row = 0.0;
    for (std::size_t y = 0; y < policy.cols(); ++y) row += policy(x, y) * rho(x, y);
    total += pred[x] * row;
  }
  return total;
}

std::vector<double> induced_output(std::span<const double> pred, const Matrix& policy) {
  require(pred.size() == policy.rows(), ErrorKind::Shape, "induced_output: shape mismatch");
  std::vector<double> q(policy.cols(), 0.0);
  for (std::size_t x = 0; x < policy.rows(); ++x) {
    for (std::size_t y = 0; y < policy.cols(); ++y) q[y] += pred[x] * policy(x, y);
  }
  return normalize(std::move(q));
}

namespace {

void check_stage_shapes(const PredictiveBelief& pred, const Policy& policy, std::size_t branch) {
  require(pred.cols() == policy.branch_count() && pred.rows() == policy.x_size(), ErrorKind::Shape,
          "stage functional: prediction and policy shapes differ");
  require(branch < policy.branch_count(), ErrorKind::Shape, "stage functional: branch out of range");
}

}  // namespace

double stage_objective(const PredictiveBelief& pred, const Policy& policy, const OutputKernel& output,
                       std::span<const double> lookahead, std::size_t branch) {
  check_stage_shapes(pred, policy, branch);
  require(output.cols() == policy.branch_count() && output.rows() == policy.y_size(), ErrorKind::Shape,
          "stage_objective: output kernel shape mismatch");
  return branch_objective(pred.column(branch), policy.branch(branch), output.column(branch), lookahead);
}

double stage_distortion(const PredictiveBelief& pred, const Policy& policy, const Matrix& rho,
                        std::size_t branch) {
  check_stage_shapes(pred, policy, branch);
  return branch_distortion(pred.column(branch), policy.branch(branch), rho);
}

bool BayesUpdate::any_unreachable() const {
  for (bool u : unreachable) {
    if (u) return true;
  }
  return false;
}

BayesUpdate posterior_from_prediction(const PredictiveBelief& pred, const Policy& policy) {
  require(pred.cols() == policy.branch_count() && pred.rows() == policy.x_size(), ErrorKind::Shape,
          "bayes update: prediction and policy shapes differ");
  const std::size_t nx = policy.x_size();
  const std::size_t ny = policy.y_size();
  BayesUpdate out;
  out.unreachable.assign(ny, false);
  std::vector<std::vector<double>> cols(ny);
  for (std::size_t y = 0; y < ny; ++y) {
    std::vector<double> w(nx, 0.0);
    double total = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      for (std::size_t yp = 0; yp < policy.branch_count(); ++yp) w[x] += policy(yp, x, y) * pred(x, yp);
      total += w[x];
    }
    if (total > 0.0) {
      cols[y] = normalize(std::move(w));
    } else {
      cols[y].assign(nx, 1.0 / static_cast<double>(nx));
      out.unreachable[y] = true;
    }
  }
  out.belief = Belief::from_columns(cols);
  return out;
}

BayesUpdate bayes_belief_update(const Belief& belief, const Policy& policy, const TransitionKernel& kernel) {
  return posterior_from_prediction(predictive_belief(kernel, belief), policy);
}

ProbVector output_marginal_step(const ProbVector& prev, const OutputKernel& output) {
  require(prev.size() == output.cols(), ErrorKind::Shape, "output_marginal_step: shape mismatch");
  std::vector<double> next(output.rows(), 0.0);
  for (std::size_t y = 0; y < output.rows(); ++y) {
    for (std::size_t yp = 0; yp < output.cols(); ++yp) next[y] += output(y, yp) * prev[yp];
  }
  return ProbVector::normalized(std::move(next));
}

}  // namespace nrdf

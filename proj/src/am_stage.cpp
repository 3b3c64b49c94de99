#include "nrdf/am_stage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nrdf {

namespace {

void check_shapes(std::span<const double> output, std::span<const double> pred, const ExponentWeights& a) {
  if (output.size() != a.log_weights.cols() || pred.size() != a.log_weights.rows()) {
    throw Error(ErrorKind::Shape, "alternating minimization: shape mismatch");
  }
}

// One evaluation of the KKT maps at output Q: per-row normalizers, the
// coefficients c(y) and (optionally) the policy.
struct Sweep {
  std::vector<double> log_z;  // log sum_y Q(y) A(x, y)
  std::vector<double> c;
};

Sweep evaluate(std::span<const double> q, std::span<const double> pred, const ExponentWeights& a,
               Matrix* policy) {
  const std::size_t nx = a.log_weights.rows();
  const std::size_t ny = a.log_weights.cols();
  Sweep sw{std::vector<double>(nx), std::vector<double>(ny, 0.0)};
  if (!a.log_domain) {
    for (std::size_t x = 0; x < nx; ++x) {
      double z = 0.0;
      for (std::size_t y = 0; y < ny; ++y) z += q[y] * a.weights(x, y);
      sw.log_z[x] = std::log(z);
      const double inv = 1.0 / z;
      for (std::size_t y = 0; y < ny; ++y) {
        const double r = a.weights(x, y) * inv;
        sw.c[y] += pred[x] * r;
        if (policy) (*policy)(x, y) = q[y] * r;
      }
    }
    return sw;
  }
  for (std::size_t x = 0; x < nx; ++x) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < ny; ++y) {
      if (q[y] > 0.0) m = std::max(m, std::log(q[y]) + a.log_weights(x, y));
    }
    double acc = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
      if (q[y] > 0.0) acc += std::exp(std::log(q[y]) + a.log_weights(x, y) - m);
    }
    sw.log_z[x] = m + std::log(acc);
    for (std::size_t y = 0; y < ny; ++y) {
      const double r = std::exp(a.log_weights(x, y) - sw.log_z[x]);
      sw.c[y] += pred[x] * r;
      if (policy) (*policy)(x, y) = q[y] > 0.0 ? std::exp(std::log(q[y]) + a.log_weights(x, y) - sw.log_z[x]) : 0.0;
    }
  }
  return sw;
}

StoppingGap gap_from(std::span<const double> q, std::vector<double> c) {
  StoppingGap g;
  g.lower_term = -std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y < c.size(); ++y) {
    if (c[y] > 0.0) {
      const double lc = std::log(c[y]);
      g.lower_term = std::max(g.lower_term, lc);
      g.upper_term += q[y] * c[y] * lc;
    }
  }
  g.c = std::move(c);
  return g;
}

std::vector<double> rescale(std::span<const double> q, std::span<const double> c) {
  std::vector<double> out(q.size());
  double sum = 0.0;
  for (std::size_t y = 0; y < q.size(); ++y) {
    out[y] = q[y] * c[y];
    sum += out[y];
  }
  for (double& v : out) v /= sum;
  return out;
}

}  // namespace

ExponentWeights exponent_weights(const Matrix& rho, double s, std::span<const double> lookahead) {
  if (lookahead.size() != rho.cols()) throw Error(ErrorKind::Shape, "exponent_weights: lookahead size mismatch");
  ExponentWeights a{Matrix(rho.rows(), rho.cols()), Matrix(rho.rows(), rho.cols()), false};
  for (std::size_t x = 0; x < rho.rows(); ++x) {
    for (std::size_t y = 0; y < rho.cols(); ++y) {
      if (!std::isfinite(lookahead[y])) throw Error(ErrorKind::Validation, "exponent_weights: non-finite lookahead");
      const double e = s * rho(x, y) - lookahead[y];
      a.log_weights(x, y) = e;
      if (std::abs(e) > kLogDomainThreshold) a.log_domain = true;
    }
  }
  if (!a.log_domain) {
    for (std::size_t x = 0; x < rho.rows(); ++x) {
      for (std::size_t y = 0; y < rho.cols(); ++y) a.weights(x, y) = std::exp(a.log_weights(x, y));
    }
  }
  return a;
}

Matrix policy_update(std::span<const double> prev_output, const ExponentWeights& a) {
  const std::vector<double> unused(a.log_weights.rows(), 0.0);
  check_shapes(prev_output, unused, a);
  Matrix policy(a.log_weights.rows(), a.log_weights.cols());
  evaluate(prev_output, unused, a, &policy);
  return policy;
}

std::vector<double> output_update(std::span<const double> prev_output, std::span<const double> pred,
                                  const ExponentWeights& a) {
  check_shapes(prev_output, pred, a);
  const Sweep sw = evaluate(prev_output, pred, a, nullptr);
  return rescale(prev_output, sw.c);
}

StoppingGap stopping_gap(std::span<const double> output, std::span<const double> pred, const ExponentWeights& a) {
  check_shapes(output, pred, a);
  return gap_from(output, evaluate(output, pred, a, nullptr).c);
}

AmResult run_branch_am(std::span<const double> pred, const Matrix& rho, double s,
                       std::span<const double> lookahead, const AmOptions& options,
                       std::optional<std::span<const double>> init_output) {
  if (!(options.epsilon > 0.0)) throw Error(ErrorKind::Validation, "run_branch_am: epsilon must be positive");
  if (options.max_iter == 0) throw Error(ErrorKind::Validation, "run_branch_am: max_iter must be positive");
  if (!(s <= 0.0)) throw Error(ErrorKind::Validation, "run_branch_am: s must be <= 0");
  if (pred.size() != rho.rows() || lookahead.size() != rho.cols()) {
    throw Error(ErrorKind::Shape, "run_branch_am: shape mismatch");
  }
  check_probability(pred, "predictive belief column");

  const std::size_t nx = rho.rows();
  const std::size_t ny = rho.cols();

  std::vector<double> q(ny, 1.0 / static_cast<double>(ny));
  if (init_output) {
    if (init_output->size() != ny) throw Error(ErrorKind::Shape, "run_branch_am: init_output size mismatch");
    check_probability(*init_output, "initial output");
    for (double v : *init_output) {
      if (!(v > 0.0)) throw Error(ErrorKind::Validation, "run_branch_am: initial output must be strictly positive");
    }
    q.assign(init_output->begin(), init_output->end());
  }

  // A uniform shift of the look-ahead leaves every update unchanged, so the
  // weights are built from the shifted values to keep exponents <= 0.
  const double shift = *std::min_element(lookahead.begin(), lookahead.end());
  std::vector<double> shifted(lookahead.begin(), lookahead.end());
  for (double& v : shifted) v -= shift;
  const ExponentWeights a = exponent_weights(rho, s, shifted);

  AmResult res;
  res.policy = Matrix(nx, ny);
  for (std::size_t k = 0; k < options.max_iter; ++k) {
    const Sweep sw = evaluate(q, pred, a, &res.policy);
    const StoppingGap g = gap_from(q, sw.c);
    std::vector<double> next = rescale(q, g.c);
    res.iterations = k + 1;
    res.final_gap = g.gap();

    if (options.record_trace) {
      double base = shift;
      for (std::size_t x = 0; x < nx; ++x) base -= pred[x] * sw.log_z[x];
      AmTraceEntry e;
      e.iteration = k + 1;
      e.objective = branch_objective(pred, res.policy, next, lookahead) - s * branch_distortion(pred, res.policy, rho);
      e.upper_bound = base - g.upper_term;
      e.lower_bound = base - g.lower_term;
      e.gap = g.gap();
      res.trace.push_back(e);
    }
    q = std::move(next);
    if (res.final_gap <= options.epsilon) {
      res.converged = true;
      break;
    }
  }
  res.output = std::move(q);
  res.point.rate = branch_objective(pred, res.policy, res.output, lookahead);
  res.point.distortion = branch_distortion(pred, res.policy, rho);
  return res;
}

}  // namespace nrdf

#pragma once

// Alternating minimization for a single DP cell: one stage, one branch
// y_{t-1}, one predictive belief and a fixed look-ahead cost over y_t.
// With a zero look-ahead this is the classical Blahut-Arimoto iteration.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "nrdf/model.hpp"

namespace nrdf {

// Exponents beyond this magnitude switch the updates to log-sum-exp form.
inline constexpr double kLogDomainThreshold = 500.0;

struct ExponentWeights {
  Matrix log_weights;  // s * rho(x, y) - lookahead(y)
  Matrix weights;      // exp of the above; unused when log_domain is set
  bool log_domain = false;
};

ExponentWeights exponent_weights(const Matrix& rho, double s, std::span<const double> lookahead);

// P(y | x) = Q(y) A(x, y) / sum_y' Q(y') A(x, y'), one row per x.
Matrix policy_update(std::span<const double> prev_output, const ExponentWeights& a);

// Q'(y) = Q(y) c(y): the output induced by policy_update(Q).
std::vector<double> output_update(std::span<const double> prev_output, std::span<const double> pred,
                                  const ExponentWeights& a);

struct StoppingGap {
  double upper_term = 0.0;  // sum_y Q(y) c(y) log c(y)
  double lower_term = 0.0;  // max_y log c(y)
  std::vector<double> c;

  // Upper bound minus lower bound on the cell value; always >= 0.
  double gap() const noexcept { return lower_term - upper_term; }
};

StoppingGap stopping_gap(std::span<const double> output, std::span<const double> pred, const ExponentWeights& a);

struct AmOptions {
  double epsilon = 1e-6;
  std::size_t max_iter = 10'000;
  bool record_trace = false;
};

struct AmTraceEntry {
  std::size_t iteration = 0;
  double objective = 0.0;    // I - s D at the iterate after the sweep
  double upper_bound = 0.0;  // bounds on the optimal value of I - s D
  double lower_bound = 0.0;
  double gap = 0.0;
};

struct AmResult {
  Matrix policy;                // |X| x |Y|, the branch slice of P(y_t | y_{t-1}, x_t)
  std::vector<double> output;   // P(y_t | y_{t-1})
  StagePoint point;             // rate includes the look-ahead term
  std::size_t iterations = 0;
  double final_gap = 0.0;
  bool converged = false;
  std::vector<AmTraceEntry> trace;
};

AmResult run_branch_am(std::span<const double> pred, const Matrix& rho, double s,
                       std::span<const double> lookahead, const AmOptions& options = {},
                       std::optional<std::span<const double>> init_output = std::nullopt);

}  // namespace nrdf

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nrdf/forward.hpp"
#include "test_support.hpp"

using namespace nrdf;
using doctest::Approx;

namespace {

const Matrix kHamming = testing::hamming(2);
const std::vector<double> kZero{0.0, 0.0};

// Hand-built tables: one stage, one current point, three next points.
BackwardTables hand_tables(const std::vector<std::vector<double>>& slices) {
  BackwardTables t;
  t.horizon = 1;
  StageTable st;
  st.current_points = 1;
  st.next_points = slices.size();
  st.branches = slices.front().size();
  for (const auto& s : slices) st.rate.insert(st.rate.end(), s.begin(), s.end());
  t.stages.push_back(st);
  return t;
}

}  // namespace

TEST_CASE("init_stage0") {
  SUBCASE("classical point without a future") {
    const Stage0Result r = init_stage0(ProbVector::uniform(2), kHamming, -2.0, kZero, {}, nullptr);
    CHECK(r.converged);
    CHECK(std::abs(r.point.rate - 0.3278133254727376) < 1e-5);
    CHECK(std::abs(r.point.distortion - 0.11920292202211755) < 1e-5);
    CHECK_FALSE(r.next_index.has_value());
    // posterior P(x_0 | y_0) of the test channel
    CHECK(r.posterior(0, 0) == Approx(0.8807970779778824).epsilon(1e-5));
  }
  SUBCASE("zero price") {
    const Stage0Result r = init_stage0(ProbVector::uniform(2), kHamming, 0.0, kZero, {}, nullptr);
    CHECK(std::abs(r.point.rate) < 1e-12);
    CHECK(r.point.distortion == Approx(0.5));
    CHECK(r.output[0] == Approx(0.5));
  }
  SUBCASE("deterministic source") {
    for (double s : {-0.5, -3.0}) {
      const Stage0Result r = init_stage0(ProbVector::point_mass(2, 0), kHamming, s, kZero, {}, nullptr);
      CHECK(std::abs(r.point.rate) < 1e-12);
    }
  }
  SUBCASE("projection onto the next grid") {
    const BeliefGrid g = generate_grid(2, 2, 3);
    const Stage0Result r = init_stage0(ProbVector::uniform(2), kHamming, -2.0, kZero, {}, &g);
    REQUIRE(r.next_index.has_value());
    CHECK(r.next_index->value == project(r.posterior, g).value);
    CHECK(r.next_index->value == 2);  // columns near (0.88, 0.12) and (0.12, 0.88)
  }
  SUBCASE("fixed output override") {
    const Stage0Result r =
        init_stage0(ProbVector::uniform(2), kHamming, -2.0, kZero, {}, nullptr, ProbVector::uniform(2));
    CHECK(r.output == ProbVector::uniform(2));
    CHECK(r.iterations == 1);
    // uniform is the optimal output here, so one response reaches the classical point
    CHECK(std::abs(r.point.rate - 0.3278133254727376) < 1e-12);
    CHECK_THROWS_AS(init_stage0(ProbVector::uniform(2), kHamming, -2.0, kZero, {}, nullptr, ProbVector({1.0, 0.0})),
                    Error);
  }
}

TEST_CASE("best_next_belief") {
  SUBCASE("single next point") {
    const BackwardTables t = hand_tables({{0.7, 0.3}});
    CHECK(best_next_belief(1, 0, t, ProbVector::uniform(2)).value == 0);
  }
  SUBCASE("point-mass marginal reads one slice") {
    const BackwardTables t = hand_tables({{1.0, 0.2}, {0.5, 0.5}, {0.4, 0.9}});
    CHECK(best_next_belief(1, 0, t, ProbVector::point_mass(2, 0)).value == 2);
    CHECK(best_next_belief(1, 0, t, ProbVector::point_mass(2, 1)).value == 0);
  }
  SUBCASE("weighted average") {
    // averages 0.6, 0.5, 0.65
    const BackwardTables t = hand_tables({{1.0, 0.2}, {0.5, 0.5}, {0.4, 0.9}});
    CHECK(best_next_belief(1, 0, t, ProbVector::uniform(2)).value == 1);
  }
  SUBCASE("ties to the lowest index") {
    const BackwardTables t = hand_tables({{0.5, 0.5}, {0.2, 0.8}, {0.5, 0.5}});
    CHECK(best_next_belief(1, 0, t, ProbVector::uniform(2)).value == 0);
  }
}

TEST_CASE("forward pass with zero horizon reduces to stage 0") {
  const auto p = testing::binary_problem({}, -2.0);
  const auto tables = backward_pass(p.source, p.distortion, p.grids(1), p.schedule, {});
  const Trajectory tr = forward_pass(tables, p.source, p.distortion, p.schedule);
  REQUIRE(tr.stages.size() == 1);
  CHECK(std::abs(tr.total_sum - 0.3278133254727376) < 1e-5);
  CHECK(tr.total_avg == tr.total_sum);
  CHECK(std::abs(tr.average_distortion - 0.11920292202211755) < 1e-5);
}

TEST_CASE("zero price gives zero rates and the no-information distortion") {
  const auto p = testing::binary_problem({0.4, 0.2, 0.1}, 0.0);
  const auto tables = backward_pass(p.source, p.distortion, p.grids(3), p.schedule, {});
  const Trajectory tr = forward_pass(tables, p.source, p.distortion, p.schedule);
  CHECK(tr.total_avg == Approx(0.0));
  for (const StageRecord& r : tr.stages) {
    CHECK(std::abs(r.rate) < 1e-12);
    CHECK(r.distortion == Approx(0.5));
  }
}

TEST_CASE("trajectory invariants") {
  const auto p = testing::binary_problem({0.4, 0.1, 0.3, 0.2, 0.45}, -2.0);
  const auto tables = backward_pass(p.source, p.distortion, p.grids(6), p.schedule, {});
  ForwardOptions o;
  o.trace_every = 2;
  const Trajectory tr = forward_pass(tables, p.source, p.distortion, p.schedule, o);
  REQUIRE(tr.stages.size() == 6);
  CHECK(tr.all_converged);
  double sum = 0.0;
  ProbVector m = tr.stages[0].marginal;
  for (std::size_t t = 0; t < tr.stages.size(); ++t) {
    const StageRecord& r = tr.stages[t];
    CHECK(r.t == t);
    CHECK(r.rate >= -1e-12);
    CHECK(r.rate <= std::log(2.0) + 1e-12);
    CHECK(r.distortion >= 0.0);
    CHECK(r.max_table_mismatch <= 10 * tables.epsilon);
    CHECK(r.traces.empty() == (t % 2 != 0));
    if (t >= 1) {
      REQUIRE(r.grid_index.has_value());
      CHECK(*r.grid_index < tables.grid(t).size());
      CHECK(*r.belief == tables.grid(t).point(*r.grid_index));
      m = output_marginal_step(m, r.output);
      for (std::size_t y = 0; y < 2; ++y) CHECK(r.marginal[y] == Approx(m[y]).epsilon(1e-14));
    }
    sum += r.rate;
  }
  CHECK(tr.total_sum == Approx(sum).epsilon(1e-14));
  CHECK(tr.total_avg == Approx(sum / 6).epsilon(1e-14));
  for (const auto& branch : tr.stages[2].traces) CHECK(branch.back().gap <= 1e-6);
}

TEST_CASE("memoryless source: each stage is the classical point") {
  // Kernel columns identical: x_t is independent of x_{t-1}, so the belief
  // is irrelevant and every stage should hit the classical rate at its distortion.
  const TransitionKernel k = TransitionKernel::from_columns({{0.5, 0.5}, {0.5, 0.5}});
  MarkovSource src(ProbVector::uniform(2), {k, k, k});
  const StageAlphabets a{{2, 2, 2, 2}, {2, 2, 2, 2}};
  const DistortionModel d = DistortionModel::hamming(a);
  const auto sched = LagrangeSchedule::constant(3, -1.0);
  const std::vector<std::size_t> lv{4, 4, 4};
  const auto tables = backward_pass(src, d, make_grids(a, lv), sched, {});
  const Trajectory tr = forward_pass(tables, src, d, sched);
  for (const StageRecord& r : tr.stages) {
    CHECK(std::abs(r.rate - (std::log(2.0) - testing::binary_entropy(r.distortion))) < 1e-3);
  }
}

TEST_CASE("forward refuses mismatched tables") {
  const auto p = testing::binary_problem({0.4, 0.4}, -2.0);
  const auto q = testing::binary_problem({0.4, 0.3}, -2.0);
  const auto tables = backward_pass(p.source, p.distortion, p.grids(3), p.schedule, {});
  try {
    forward_pass(tables, q.source, q.distortion, q.schedule);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
  }
  CHECK_THROWS_AS(forward_pass(tables, p.source, p.distortion, LagrangeSchedule::constant(2, -1.0)), Error);

  SUBCASE("tampered rate triggers the consistency check") {
    BackwardTables bad = tables;
    for (double& r : bad.stages[1].rate) r += 1.0;
    try {
      forward_pass(bad, p.source, p.distortion, p.schedule);
      FAIL("expected a consistency error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Consistency);
    }
  }
}

TEST_CASE("mirror-image ties resolve toward the Bayes posterior") {
  const auto p = testing::binary_problem(std::vector<double>(6, 0.4), -2.0);
  const auto tables = backward_pass(p.source, p.distortion, p.grids(6), p.schedule, {});
  const Trajectory tr = forward_pass(tables, p.source, p.distortion, p.schedule);
  for (std::size_t t = 1; t < tr.stages.size(); ++t) {
    const Belief& b = *tr.stages[t].belief;
    CHECK(b(0, 0) == b(1, 1));
    CHECK(b(1, 0) == b(0, 1));
  }
  // the plain argmin still reports a lowest-index representative with the same cost
  const auto costs = next_belief_costs(2, *tr.stages[2].grid_index, tables, tr.stages[1].marginal);
  const std::size_t plain = best_next_belief(2, *tr.stages[2].grid_index, tables, tr.stages[1].marginal).value;
  CHECK(plain <= *tr.stages[3].grid_index);
  CHECK(std::abs(costs[plain] - costs[*tr.stages[3].grid_index]) <= tables.epsilon);
}

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "nodeflow/verifier.hpp"
#include "random_problems.hpp"

using namespace nodeflow;

namespace {

constexpr int kInstances = 10000;

std::string failed_checks(const AuditReport& r) {
  std::ostringstream os;
  for (const auto& c : r.checks)
    if (!c.pass) os << c.name << " worst " << c.worst << " at " << c.where << "; ";
  return os.str();
}

double max_gap(const FlowMatrix& a, const FlowMatrix& b) {
  double gap = 0.0;
  for (std::size_t i = 0; i < a.inputs(); ++i)
    for (std::size_t j = 0; j < a.outputs(); ++j)
      for (std::size_t c = 0; c < a.commodities(); ++c)
        gap = std::max(gap, std::abs(a(i, j, c) - b(i, j, c)));
  return gap;
}

}  // namespace

TEST(Property, AuditPassesOnRandomProblems) {
  std::mt19937_64 rng(1);
  std::vector<int> stuck;
  for (int t = 0; t < kInstances; ++t) {
    const NodeProblem p = fixtures::random_problem(rng);
    const Solution s = solve_mimo(p, {.record_trace = false});
    if (!s.trace.converged) {
      stuck.push_back(t);
      continue;
    }
    const AuditReport r = audit(p, s.flows);
    EXPECT_TRUE(r.ok()) << "instance " << t << ": " << failed_checks(r);
  }
  // see InfeasibleZeroPriorityInstance
  EXPECT_LE(stuck.size(), 1u);
}

// Both links have zero priority and no flow satisfies Definition 1 together
// with the relaxed FIFO bounds; the solver must say so instead of looping.
TEST(Property, InfeasibleZeroPriorityInstance) {
  std::mt19937_64 rng(1);
  NodeProblem p;
  for (int t = 0; t <= 9074; ++t) p = fixtures::random_problem(rng);
  ASSERT_EQ(p.inputs, 2u);
  ASSERT_EQ(p.priority[0], 0.0);
  ASSERT_EQ(p.priority[1], 0.0);
  const Solution s = solve_mimo(p, {.record_trace = false});
  EXPECT_FALSE(s.trace.converged);
  EXPECT_EQ(s.trace.consistency_passes, SolveOptions{}.max_consistency_passes);
  EXPECT_FALSE(audit(p, s.flows).ok());
}

TEST(Property, PositivePrioritiesAlwaysSettle) {
  std::mt19937_64 rng(11);
  fixtures::RandomSpec spec;
  spec.zero_priority = 0.0;
  for (int t = 0; t < 3000; ++t) {
    const NodeProblem p = fixtures::random_problem(rng, spec);
    const Solution s = solve_mimo(p, {.record_trace = false});
    ASSERT_TRUE(s.trace.converged) << t;
    EXPECT_TRUE(audit(p, s.flows).ok()) << t;
  }
}

TEST(Property, SingleOutputMatchesMerge) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 1000; ++t) {
    const NodeProblem p = fixtures::random_problem(rng, {}, 0, 1);
    const double tol = 1e-12 * detail::problem_scale(p);
    EXPECT_LE(max_gap(solve_mimo(p).flows, solve_miso(p).flows), tol) << t;
  }
}

TEST(Property, SingleInputMatchesDiverge) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 1000; ++t) {
    const NodeProblem p = fixtures::random_problem(rng, {}, 1, 0);
    const double tol = 1e-12 * detail::problem_scale(p);
    EXPECT_LE(max_gap(solve_mimo(p).flows, solve_simo(p).flows), tol) << t;
  }
}

TEST(Property, RelabelingLinksRelabelsFlows) {
  std::mt19937_64 rng(4);
  int compared = 0;
  for (int t = 0; t < 3000; ++t) {
    const NodeProblem p = fixtures::random_problem(rng);
    const auto in = fixtures::shuffled(p.inputs, rng);
    const auto out = fixtures::shuffled(p.outputs, rng);
    const Solution a = solve_mimo(p, {.record_trace = false});
    const Solution b = solve_mimo(fixtures::permuted(p, in, out), {.record_trace = false});
    if (!a.trace.converged || !b.trace.converged) continue;
    ++compared;
    const double tol = 1e-9 * detail::problem_scale(p);
    for (std::size_t i = 0; i < p.inputs; ++i)
      for (std::size_t j = 0; j < p.outputs; ++j)
        for (std::size_t c = 0; c < p.commodities; ++c)
          ASSERT_NEAR(a.flows(i, j, c), b.flows(in[i], out[j], c), tol)
              << "instance " << t << " movement " << i << "->" << j;
  }
  EXPECT_GT(compared, 2990);
}

TEST(Property, PriorityScaleInvariance) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 3000; ++t) {
    NodeProblem p = fixtures::random_problem(rng);
    const Solution base = solve_mimo(p, {.record_trace = false});
    if (!base.trace.converged) continue;
    const double tol = 1e-9 * detail::problem_scale(p);
    for (double lambda : {1e-3, 0.37, 1e3}) {
      NodeProblem q = p;
      for (double& x : q.priority) x *= lambda;
      EXPECT_LE(max_gap(base.flows, solve_mimo(q, {.record_trace = false}).flows), tol)
          << "instance " << t << " lambda " << lambda;
    }
  }
}

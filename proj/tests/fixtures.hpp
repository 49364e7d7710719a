#pragma once

#include "nodeflow/node_problem.hpp"

namespace fixtures {

using nodeflow::IntervalSet;
using nodeflow::NodeProblem;

// 4x4 node of Example One; capacity priorities.
inline NodeProblem example_one(bool partial_fifo = true) {
  NodeProblem p = NodeProblem::sized(4, 4);
  const double S[4] = {500, 2000, 800, 1700};
  const double F[4] = {1000, 2000, 1000, 2000};
  const double beta[4][4] = {{0, 0.1, 0.3, 0.6},
                             {0.05, 0, 0.15, 0.8},
                             {0.125, 0.125, 0, 0.75},
                             {1.0 / 17, 8.0 / 17, 8.0 / 17, 0}};
  p.capacity = std::vector<double>(F, F + 4);
  for (std::size_t i = 0; i < 4; ++i) {
    p.demand(i, 0) = S[i];
    p.priority[i] = F[i];
    for (std::size_t j = 0; j < 4; ++j) p.split(i, j, 0) = beta[i][j];
  }
  p.supply = {1000, 2000, 1000, 2000};
  if (partial_fifo) {
    const auto E = IntervalSet::empty();
    const auto lo = IntervalSet::make({{0.0, 0.5}});
    const auto hi = IntervalSet::make({{0.5, 1.0}});
    // outputs 5..8 are indices 0..3; eta(i, restricting, restricted)
    p.restriction(1, 0, 2) = E;
    p.restriction(1, 0, 3) = hi;
    p.restriction(1, 2, 0) = E;
    p.restriction(1, 2, 3) = lo;
    p.restriction(3, 0, 1) = lo;
    p.restriction(3, 0, 2) = E;
    p.restriction(3, 2, 0) = E;
    p.restriction(3, 2, 1) = hi;
  }
  return p;
}

enum class Scheme { kCapacity, kDemand, kOnramp };

// 3x2 managed-lane node of Example Two, two commodities, full FIFO.
inline NodeProblem example_two(Scheme scheme) {
  NodeProblem p = NodeProblem::sized(3, 2, 2);
  const double S[3][2] = {{1700, 200}, {0, 500}, {400, 200}};
  const double b2[3] = {0.2, 0.1, 0.5};
  for (std::size_t i = 0; i < 3; ++i) {
    p.demand(i, 0) = S[i][0];
    p.demand(i, 1) = S[i][1];
    p.split(i, 0, 0) = 1.0;
    p.split(i, 0, 1) = b2[i];
    p.split(i, 1, 1) = 1.0 - b2[i];
  }
  p.capacity = std::vector<double>{4000, 2000, 1000};
  p.supply = {2000, 1000};
  switch (scheme) {
    case Scheme::kCapacity: nodeflow::use_capacity_priorities(p); break;
    case Scheme::kDemand: nodeflow::use_demand_priorities(p); break;
    case Scheme::kOnramp: nodeflow::use_onramp_preference(p, 2); break;
  }
  return p;
}

}  // namespace fixtures

#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "nodeflow/node_problem.hpp"

namespace fixtures {

struct RandomSpec {
  std::size_t max_inputs = 6;
  std::size_t max_outputs = 6;
  std::size_t max_commodities = 3;
  double zero_priority = 0.15;
  double full_eta = 0.3;
  double empty_eta = 0.3;
};

inline nodeflow::IntervalSet random_eta(std::mt19937_64& rng, const RandomSpec& spec) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  if (r < spec.full_eta) return nodeflow::IntervalSet::full();
  if (r < spec.full_eta + spec.empty_eta) return nodeflow::IntervalSet::empty();
  std::vector<nodeflow::Span> spans;
  const int n = 1 + static_cast<int>(u(rng) * 2);
  for (int k = 0; k < n; ++k) {
    // lane fractions on a 1/8 grid most of the time, arbitrary otherwise
    double a = u(rng), b = u(rng);
    if (u(rng) < 0.7) {
      a = std::round(a * 8) / 8;
      b = std::round(b * 8) / 8;
    }
    if (a > b) std::swap(a, b);
    spans.push_back({a, b});
  }
  return nodeflow::IntervalSet::make(spans);
}

inline nodeflow::NodeProblem random_problem(std::mt19937_64& rng, const RandomSpec& spec = {},
                                            std::size_t m = 0, std::size_t n = 0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pick = [&](std::size_t hi) { return 1 + static_cast<std::size_t>(u(rng) * hi) % hi; };
  if (m == 0) m = pick(spec.max_inputs);
  if (n == 0) n = pick(spec.max_outputs);
  const std::size_t c = pick(spec.max_commodities);
  auto p = nodeflow::NodeProblem::sized(m, n, c);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < c; ++k) {
      p.demand(i, k) = u(rng) < 0.1 ? 0.0 : 2000.0 * u(rng);
      std::vector<double> w(n);
      double sum = 0.0;
      for (auto& x : w) {
        x = u(rng) < 0.25 ? 0.0 : u(rng);
        sum += x;
      }
      if (sum == 0.0) {
        w[static_cast<std::size_t>(u(rng) * n) % n] = 1.0;
        sum = 1.0;
      }
      // zero weights stay exactly zero, no round-off residue movements
      for (std::size_t j = 0; j < n; ++j) p.split(i, j, k) = w[j] / sum;
    }
    p.priority[i] = u(rng) < spec.zero_priority ? 0.0 : 0.1 + 3.0 * u(rng);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a != b) p.restriction(i, a, b) = random_eta(rng, spec);
  }
  for (auto& r : p.supply) r = u(rng) < 0.1 ? 0.0 : 2500.0 * u(rng);
  std::vector<double> cap(m);
  for (std::size_t i = 0; i < m; ++i) cap[i] = std::max(1.0, p.total_demand(i)) * (1.05 + 2 * u(rng));
  p.capacity = cap;
  return p;
}

// Relabels inputs by `in` and outputs by `out`: input i becomes in[i].
inline nodeflow::NodeProblem permuted(const nodeflow::NodeProblem& p,
                                      const std::vector<std::size_t>& in,
                                      const std::vector<std::size_t>& out) {
  auto q = nodeflow::NodeProblem::sized(p.inputs, p.outputs, p.commodities);
  for (std::size_t i = 0; i < p.inputs; ++i) {
    q.priority[in[i]] = p.priority[i];
    for (std::size_t c = 0; c < p.commodities; ++c) {
      q.demand(in[i], c) = p.demand(i, c);
      for (std::size_t j = 0; j < p.outputs; ++j) q.split(in[i], out[j], c) = p.split(i, j, c);
    }
    for (std::size_t a = 0; a < p.outputs; ++a)
      for (std::size_t b = 0; b < p.outputs; ++b)
        q.restriction(in[i], out[a], out[b]) = p.restriction(i, a, b);
  }
  for (std::size_t j = 0; j < p.outputs; ++j) q.supply[out[j]] = p.supply[j];
  if (p.capacity) {
    std::vector<double> cap(p.inputs);
    for (std::size_t i = 0; i < p.inputs; ++i) cap[in[i]] = (*p.capacity)[i];
    q.capacity = cap;
  }
  return q;
}

inline std::vector<std::size_t> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = k;
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

}  // namespace fixtures

#ifndef NODEFLOW_VERIFIER_HPP
#define NODEFLOW_VERIFIER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nodeflow/interval_set.hpp"
#include "nodeflow/node_problem.hpp"
#include "nodeflow/solver.hpp"

namespace nodeflow {

constexpr double kAuditTolerance = 1e-9;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ConstraintCheck {
  std::string name;
  bool pass = true;
  double worst = 0.0;  // largest violation found, 0 when none
  std::string where{};  // location of the worst violation
};

/// Why an unsatisfied movement cannot carry more flow.
struct MaximalityWitness {
  std::size_t input = 0;
  std::size_t output = 0;
  std::string kind;  // "supply", "relaxed_fifo" or "none"
};

struct AuditReport {
  std::vector<ConstraintCheck> checks;
  std::vector<std::vector<std::size_t>> restricting;         // W_i, Definition 1
  std::vector<std::vector<std::size_t>> restricting_as_printed;  // Definition 2 text
  Grid<IntervalSet> active_restriction;  // [i][j]: union of eta_{j',j}, j' in W_i \ {j}
  Grid<double> fifo_bound;               // [i][j]: right side of the relaxed FIFO bound
  std::vector<MaximalityWitness> witnesses;

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
  }
  const ConstraintCheck& check(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    throw std::out_of_range("no audit check named " + name);
  }
};

/// A(Q) for Q = eta x [f/S_from * S_to, S_to]. Zero when S_from is zero.
inline double rectangle_area(double flow_from, double demand_from, double demand_to,
                             const IntervalSet& eta) {
  if (demand_from <= 0.0) return 0.0;
  return eta.measure() * (1.0 - flow_from / demand_from) * demand_to;
}

struct Rectangle {
  IntervalSet eta;
  double progress = 0.0;  // x = f_{i,j'} / S_{i,j'}; the rectangle spans [x, 1]
};

/// Area of a union of rectangles sharing the base S (inclusion–exclusion).
inline double union_area(const std::vector<Rectangle>& rects, double base) {
  const std::size_t n = rects.size();
  if (n > 20) throw std::invalid_argument("union_area: too many rectangles");
  double area = 0.0;
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    IntervalSet common = IntervalSet::full();
    double x = 0.0;
    int bits = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (!(mask & (std::size_t{1} << r))) continue;
      common = intersect(common, rects[r].eta);
      x = std::max(x, rects[r].progress);
      ++bits;
    }
    const double a = common.measure() * (1.0 - x) * base;
    area += (bits % 2 == 1) ? a : -a;
  }
  return std::max(0.0, area);
}

/// Same area by sweeping lanes: ∫ (1 - min x over covering rectangles) dy.
inline double union_area_sweep(const std::vector<Rectangle>& rects, double base) {
  std::vector<double> cuts{0.0, 1.0};
  for (const auto& r : rects)
    for (const Span& s : r.eta.spans()) {
      cuts.push_back(s.lo);
      cuts.push_back(s.hi);
    }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double area = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double mid = 0.5 * (cuts[c] + cuts[c + 1]);
    double x = 1.0;
    for (const auto& r : rects)
      if (r.eta.contains(mid)) x = std::min(x, r.progress);
    area += (cuts[c + 1] - cuts[c]) * (1.0 - x);
  }
  return area * base;
}

namespace detail {

inline void check_dimensions(const NodeProblem& p, const FlowMatrix& f) {
  if (f.inputs() != p.inputs || f.outputs() != p.outputs || f.commodities() != p.commodities)
    throw DimensionError("flow matrix is " + std::to_string(f.inputs()) + "x" +
                         std::to_string(f.outputs()) + "x" + std::to_string(f.commodities()) +
                         " but the problem is " + std::to_string(p.inputs) + "x" +
                         std::to_string(p.outputs) + "x" + std::to_string(p.commodities));
}

inline double problem_scale(const NodeProblem& p) {
  double s = 1.0;
  for (std::size_t i = 0; i < p.inputs; ++i) s = std::max(s, p.total_demand(i));
  for (double r : p.supply) s = std::max(s, r);
  return s;
}

inline std::string at(std::size_t i, std::size_t j) {
  return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

}  // namespace detail

/// Checks `f` against the MIMO problem: non-negativity, demand, supply,
/// proportionality, priority (a)/(b) over W_i, relaxed FIFO, and that every
/// unsatisfied movement has a tight constraint.
inline AuditReport audit(const NodeProblem& p, const FlowMatrix& f) {
  detail::check_dimensions(p, f);
  if (!validate(p).empty()) throw ValidationError(validate(p));
  const std::size_t M = p.inputs, N = p.outputs, C = p.commodities;
  const double tol = kAuditTolerance * detail::problem_scale(p);
  const OrientedDemand od = oriented_demands(p);
  const Grid<double> po = oriented_priorities(p, od);
  const std::vector<double> ones(M, 1.0);
  const Grid<double> eq = oriented_priorities(ones, od);
  auto equal = [&](std::size_t i, std::size_t j) { return eq(i, j); };

  AuditReport rep;
  auto record = [](ConstraintCheck& c, double violation, const std::string& where, double t) {
    if (violation > c.worst) {
      c.worst = violation;
      c.where = where;
    }
    if (violation > t) c.pass = false;
  };

  ConstraintCheck nonneg{.name = "non_negativity"}, demand{.name = "demand"},
      supply{.name = "supply"},
      prop{.name = "proportionality"};
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      const double fij = f.movement(i, j), sij = od.total(i, j);
      for (std::size_t c = 0; c < C; ++c) {
        const std::string w = detail::at(i, j) + " c" + std::to_string(c);
        record(nonneg, -f(i, j, c), w, tol);
        record(demand, f(i, j, c) - od.s(i, j, c), w, tol);
        if (sij > 0.0) record(prop, std::abs(f(i, j, c) - fij * od.s(i, j, c) / sij), w, tol);
        else record(prop, std::abs(f(i, j, c)), w, tol);
      }
    }
  std::vector<bool> exhausted(N);
  for (std::size_t j = 0; j < N; ++j) {
    record(supply, f.outflow(j) - p.supply[j], "output " + std::to_string(j), tol);
    exhausted[j] = f.outflow(j) >= p.supply[j] - tol;
  }

  // Restricting outputs.
  rep.restricting.resize(M);
  rep.restricting_as_printed.resize(M);
  for (std::size_t i = 0; i < M; ++i) {
    double si = 0.0;
    for (std::size_t j = 0; j < N; ++j) si += od.total(i, j);
    // relative to the movement itself so that tiny demands still count
    const bool unsatisfied = f.inflow(i) < si * (1.0 - kAuditTolerance);
    for (std::size_t j = 0; j < N; ++j) {
      if (od.total(i, j) <= 0.0) continue;
      bool dominates = true, some = false;
      for (std::size_t k = 0; k < M; ++k) {
        if (k == i) continue;
        // two zero-priority inputs compare as if their priorities were equal
        const bool both_zero = p.priority[i] == 0.0 && p.priority[k] == 0.0;
        const double pk = both_zero ? equal(k, j) : po(k, j);
        const double pi = both_zero ? equal(i, j) : po(i, j);
        const bool ge = pk * f.movement(i, j) >= pi * f.movement(k, j) - tol * std::max(pk, pi);
        dominates = dominates && ge;
        some = some || ge;
      }
      if (unsatisfied && exhausted[j] &&
          f.movement(i, j) < od.total(i, j) * (1.0 - kAuditTolerance) && dominates)
        rep.restricting[i].push_back(j);
      if (p.supply[j] > od.total(i, j) && some) rep.restricting_as_printed[i].push_back(j);
    }
  }

  ConstraintCheck prio_a{.name = "priority_a"}, prio_b{.name = "priority_b"},
      fifo{.name = "relaxed_fifo"},
      maximal{.name = "maximality"};
  for (std::size_t i = 0; i < M; ++i) {
    double si = 0.0;
    for (std::size_t j = 0; j < N; ++j) si += od.total(i, j);
    if (M > 1 && f.inflow(i) < si - tol && rep.restricting[i].empty())
      record(prio_a, si - f.inflow(i), "input " + std::to_string(i), tol);
    for (std::size_t j : rep.restricting[i]) {
      double psum = 0.0;
      for (std::size_t k = 0; k < M; ++k) psum += po(k, j);
      if (psum <= 0.0) continue;
      record(prio_b, po(i, j) / psum * p.supply[j] - f.movement(i, j), detail::at(i, j), tol);
    }
  }

  rep.active_restriction = Grid<IntervalSet>(M, N);
  rep.fifo_bound = Grid<double>(M, N);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < N; ++j) {
      const double sij = od.total(i, j);
      std::vector<Rectangle> rects;
      IntervalSet active;
      for (std::size_t jp : rep.restricting[i]) {
        if (jp == j) continue;
        active = unite(active, p.restriction(i, jp, j));
        rects.push_back({p.restriction(i, jp, j), f.movement(i, jp) / od.total(i, jp)});
      }
      rep.active_restriction(i, j) = active;
      const double bound = sij - union_area(rects, sij);
      rep.fifo_bound(i, j) = bound;
      record(fifo, f.movement(i, j) - bound, detail::at(i, j), tol);

      if (f.movement(i, j) >= sij - tol) continue;
      MaximalityWitness w{i, j, "none"};
      if (exhausted[j]) w.kind = "supply";
      else if (f.movement(i, j) >= bound - tol) w.kind = "relaxed_fifo";
      if (w.kind == "none") record(maximal, sij - f.movement(i, j), detail::at(i, j), tol);
      rep.witnesses.push_back(w);
    }

  rep.checks = {nonneg, demand, supply, prop, prio_a, prio_b, fifo, maximal};
  return rep;
}

/// Upper bounds from the merge priority constraint written out for M = 2, 3.
/// Needs one output and positive priorities.
inline std::vector<double> closed_form_miso(const NodeProblem& p) {
  if (p.outputs != 1 || (p.inputs != 2 && p.inputs != 3))
    throw std::invalid_argument("closed_form_miso supports N = 1 and M in {2, 3}");
  const double R = p.supply[0];
  std::vector<double> S(p.inputs), pr = p.priority;
  for (std::size_t i = 0; i < p.inputs; ++i)
    for (std::size_t c = 0; c < p.commodities; ++c) S[i] += p.split(i, 0, c) * p.demand(i, c);
  if (p.inputs == 2) {
    return {std::max(pr[0] / (pr[0] + pr[1]) * R, R - S[1]),
            std::max(pr[1] / (pr[0] + pr[1]) * R, R - S[0])};
  }
  const double total = pr[0] + pr[1] + pr[2];
  std::vector<double> out(3);
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t a = (i + 1) % 3, b = (i + 2) % 3;
    out[i] = std::max({pr[i] / total * R, pr[i] / (pr[i] + pr[a]) * (R - S[b]),
                       pr[i] / (pr[i] + pr[b]) * (R - S[a]), R - S[a] - S[b]});
  }
  return out;
}

/// Full-FIFO diverge: every movement gets the same fraction of its demand,
/// set by the output with the smallest supply-to-demand ratio.
inline std::vector<double> closed_form_simo_fifo(const NodeProblem& p) {
  if (p.inputs != 1) throw std::invalid_argument("closed_form_simo_fifo needs M = 1");
  const OrientedDemand od = oriented_demands(p);
  double ratio = 1.0;
  for (std::size_t j = 0; j < p.outputs; ++j)
    if (od.total(0, j) > 0.0) ratio = std::min(ratio, p.supply[j] / od.total(0, j));
  std::vector<double> out(p.outputs);
  for (std::size_t j = 0; j < p.outputs; ++j) out[j] = ratio * od.total(0, j);
  return out;
}

struct InvarianceResult {
  std::size_t input = 0;
  bool tested = false;
  bool pass = true;
  double max_diff = 0.0;
  std::string note{};
};

/// Raises each supply-constrained input's demand to its capacity (same
/// commodity mix and split ratios), re-solves, and compares all flows.
///
/// Only inputs whose every movement is either restricted by its own output
/// or fully covered by active restriction intervals are tested; a movement
/// with uncovered lanes legitimately grows with demand. `reprioritize` lets
/// callers recompute priorities from the new demands.
inline std::vector<InvarianceResult> check_invariance(
    const NodeProblem& p, const FlowMatrix& f,
    const std::function<void(NodeProblem&)>& reprioritize = {}, double tol = 1e-9) {
  std::vector<InvarianceResult> out;
  if (!p.capacity) {
    for (std::size_t i = 0; i < p.inputs; ++i)
      out.push_back({i, false, true, 0.0, "skipped: no capacities"});
    return out;
  }
  const AuditReport rep = audit(p, f);
  const OrientedDemand od = oriented_demands(p);
  const double scale = detail::problem_scale(p);
  for (std::size_t i = 0; i < p.inputs; ++i) {
    InvarianceResult r{.input = i};
    const double si = p.total_demand(i), fi = (*p.capacity)[i];
    if (f.inflow(i) >= si - kAuditTolerance * scale) {
      r.note = "skipped: demand satisfied";
    } else if (fi <= si) {
      r.note = "skipped: capacity does not exceed demand";
    } else {
      bool covered = true;
      const auto& W = rep.restricting[i];
      for (std::size_t j = 0; j < p.outputs && covered; ++j) {
        if (od.total(i, j) <= 0.0) continue;
        if (std::find(W.begin(), W.end(), j) != W.end()) continue;
        covered = rep.active_restriction(i, j).is_full();
      }
      if (!covered) r.note = "skipped: partially restricted movement";
      else r.tested = true;
    }
    if (r.tested) {
      NodeProblem q = p;
      for (std::size_t c = 0; c < q.commodities; ++c) q.demand(i, c) *= fi / si;
      if (reprioritize) reprioritize(q);
      const FlowMatrix g = solve_mimo(q, {.record_trace = false}).flows;
      for (std::size_t a = 0; a < p.inputs; ++a)
        for (std::size_t b = 0; b < p.outputs; ++b)
          for (std::size_t c = 0; c < p.commodities; ++c)
            r.max_diff = std::max(r.max_diff, std::abs(g(a, b, c) - f(a, b, c)));
      r.pass = r.max_diff <= tol * scale;
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace nodeflow

#endif  // NODEFLOW_VERIFIER_HPP

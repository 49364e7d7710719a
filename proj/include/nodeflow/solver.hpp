#ifndef NODEFLOW_SOLVER_HPP
#define NODEFLOW_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nodeflow/interval_set.hpp"
#include "nodeflow/node_problem.hpp"

namespace nodeflow {

/// Absolute slack (veh/timestep) for "demand fits in the allocation" tests.
constexpr double kFlowTolerance = 1e-9;
constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Branch { kFreeFlow, kCongested };

/// Why a movement received its final flow.
enum class AssignReason {
  kDemandServed,     // input link finished before any output ran out
  kSupplyShare,      // priority share of an exhausted output
  kCappedAtOutput,   // running demand fit inside the exhausted output's share
  kFullyRestricted,  // running restriction union reached [0,1]
};

struct Assignment {
  std::size_t input = 0;
  std::size_t output = 0;
  double flow = 0.0;  // summed over commodities
  AssignReason reason = AssignReason::kDemandServed;
};

struct Rescaling {
  std::size_t input = 0;
  std::size_t output = 0;
  double before = 0.0;
  double after = 0.0;
};

/// One pass through the main loop.
struct IterationRecord {
  std::size_t k = 0;
  std::vector<std::size_t> unprocessed_outputs;  // V(k)
  std::vector<double> effective_priority;        // p~_i(k), 0 for inactive links
  Grid<double> oriented_priority;                // p~_{i,j}(k), 0 outside U_j(k)
  std::vector<double> a;                         // a_j(k); +inf where undefined
  std::vector<double> remaining_supply;          // R~_j(k) at the start
  std::size_t most_restrictive = 0;              // j*(k)
  double a_star = 0.0;                           // a_{j*}(k)
  double fill_time = 0.0;  // when j* runs out, with running demands as caps
  bool capped_fill = false;  // fill_time differs from a_{j*}
  std::vector<std::size_t> congested_outputs;  // j* plus outputs filling at the same time
  Branch branch = Branch::kFreeFlow;
  std::vector<std::size_t> unconstrained_inputs;  // Ũ(k)
  std::vector<Assignment> assignments;
  std::vector<Rescaling> rescalings;
};

/// Per-iteration record of a solve. Replaying `assignments` rebuilds the flows.
struct SolverTrace {
  std::vector<IterationRecord> iterations;
  std::size_t consistency_passes = 1;
  bool converged = true;
};

struct SolveOptions {
  bool record_trace = true;
  std::size_t max_consistency_passes = 64;
};

struct Solution {
  FlowMatrix flows;
  SolverTrace trace;
};

/// p~_i: the given priorities when some active link has positive priority,
/// otherwise 1/|active| for every active link. Inactive links get 0.
inline std::vector<double> reassign_zero_priorities(std::span<const double> priority,
                                                    const std::vector<bool>& active) {
  std::vector<double> out(priority.size(), 0.0);
  std::size_t count = 0;
  bool any_positive = false;
  for (std::size_t i = 0; i < priority.size(); ++i) {
    if (!active[i]) continue;
    ++count;
    any_positive = any_positive || priority[i] > 0.0;
  }
  for (std::size_t i = 0; i < priority.size(); ++i) {
    if (!active[i]) continue;
    out[i] = any_positive ? priority[i] : 1.0 / static_cast<double>(count);
  }
  return out;
}

/// Running oriented demand after output `j*` becomes restricting for the
/// movement: subtracts the rectangle of height |eta_new| - |active ∩ eta_new|
/// and width (1 - served_into_jstar / original_into_jstar), scaled by the
/// original oriented demand.
inline double restriction_update(double running, const IntervalSet& active,
                                 const IntervalSet& eta_new, double served_into_jstar,
                                 double original_into_jstar, double original) {
  if (original_into_jstar <= 0.0) return running;
  const double height = eta_new.measure() - intersect_measure(active, eta_new);
  const double width = 1.0 - served_into_jstar / original_into_jstar;
  return std::max(0.0, running - original * height * width);
}

namespace detail {

// Restriction events of one input link: progress fraction at which each
// output became restricting (nullopt if never).
using EventRow = std::vector<std::optional<double>>;

// Fraction of the movement i->j that stays unblocked: ∫ b(y) dy where b(y)
// is the smallest progress of any event whose interval covers lane y. The
// movement's own output never restricts it.
inline double unblocked_fraction(const NodeProblem& p, std::size_t i, std::size_t j,
                                 const EventRow& events) {
  std::vector<double> cuts{0.0, 1.0};
  bool any = false;
  for (std::size_t e = 0; e < events.size(); ++e) {
    if (!events[e] || e == j) continue;
    for (const Span& s : p.restriction(i, e, j).spans()) {
      cuts.push_back(s.lo);
      cuts.push_back(s.hi);
      any = true;
    }
  }
  if (!any) return 1.0;
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double blocked = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double lo = cuts[c], hi = cuts[c + 1];
    const double mid = 0.5 * (lo + hi);
    double b = 1.0;
    for (std::size_t e = 0; e < events.size(); ++e) {
      if (events[e] && e != j && p.restriction(i, e, j).contains(mid))
        b = std::min(b, *events[e]);
    }
    blocked += (hi - lo) * (1.0 - b);
  }
  return 1.0 - blocked;
}

inline bool fully_restricted(const NodeProblem& p, std::size_t i, std::size_t j,
                             const EventRow& events) {
  IntervalSet u;
  for (std::size_t e = 0; e < events.size(); ++e)
    if (events[e] && e != j) u = unite(u, p.restriction(i, e, j));
  return u.is_full();
}

// Restriction events implied by a finished flow matrix: output exhausted,
// input and movement unsatisfied, and no competitor ahead in
// priority-normalized flow. Zero-priority pairs compare as equals.
inline std::vector<EventRow> restricting_events(const NodeProblem& p, const OrientedDemand& od,
                                                const FlowMatrix& f) {
  const std::size_t M = p.inputs, N = p.outputs;
  std::vector<double> si(M, 0.0);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < N; ++j) si[i] += od.total(i, j);
  double scale = 1.0;
  for (double v : si) scale = std::max(scale, v);
  for (double r : p.supply) scale = std::max(scale, r);
  const double tol = kFlowTolerance * scale;
  const Grid<double> po = oriented_priorities(p, od);
  const std::vector<double> ones(M, 1.0);
  const Grid<double> eq = oriented_priorities(ones, od);
  std::vector<EventRow> ev(M, EventRow(N));
  for (std::size_t i = 0; i < M; ++i) {
    if (f.inflow(i) >= si[i] * (1.0 - kFlowTolerance)) continue;
    for (std::size_t j = 0; j < N; ++j) {
      const double s = od.total(i, j);
      if (s <= 0.0 || f.outflow(j) < p.supply[j] - tol) continue;
      if (f.movement(i, j) >= s * (1.0 - kFlowTolerance)) continue;
      bool ahead = true;
      for (std::size_t k = 0; k < M && ahead; ++k) {
        if (k == i) continue;
        const bool both_zero = p.priority[i] == 0.0 && p.priority[k] == 0.0;
        const double pk = both_zero ? eq(k, j) : po(k, j);
        const double pi = both_zero ? eq(i, j) : po(i, j);
        ahead = pk * f.movement(i, j) >= pi * f.movement(k, j) - tol * std::max(pk, pi);
      }
      if (ahead) ev[i][j] = f.movement(i, j) / s;
    }
  }
  return ev;
}

// True when no movement exceeds the bound set by the implied restrictions
// and every unsatisfied movement is stopped by supply or by that bound.
inline bool settled(const NodeProblem& p, const OrientedDemand& od, const FlowMatrix& f,
                    const std::vector<EventRow>& events) {
  double scale = 1.0;
  for (std::size_t i = 0; i < p.inputs; ++i) {
    double si = 0.0;
    for (std::size_t j = 0; j < p.outputs; ++j) si += od.total(i, j);
    scale = std::max(scale, si);
  }
  for (double r : p.supply) scale = std::max(scale, r);
  const double tol = kFlowTolerance * scale;
  for (std::size_t i = 0; i < p.inputs; ++i)
    for (std::size_t j = 0; j < p.outputs; ++j) {
      const double s = od.total(i, j);
      if (s <= 0.0) continue;
      const double fij = f.movement(i, j);
      const double bound = s * unblocked_fraction(p, i, j, events[i]);
      if (fij > bound + tol) return false;
      if (f.outflow(j) > p.supply[j] + tol) return false;
      const bool stopped = fij >= s - tol || f.outflow(j) >= p.supply[j] - tol ||
                           fij >= bound - tol;
      if (!stopped) return false;
    }
  return true;
}

struct PassResult {
  FlowMatrix flows;
  Grid<unsigned char> assigned;  // [i][j]
  std::vector<EventRow> events;  // restrictions raised in this pass
  SolverTrace trace;
};

class MimoPass {
 public:
  MimoPass(const NodeProblem& p, const OrientedDemand& od,
           std::vector<EventRow> seeded, bool record)
      : p_(p), od_(od), M_(p.inputs), N_(p.outputs), record_(record),
        flows_(M_, N_, p.commodities), assigned_(M_, N_, 1, false),
        in_u_(M_, N_, 1, false), cap_(M_, N_), remaining_(p.supply),
        events_(std::move(seeded)), actual_(M_, EventRow(N_)), total_(M_, 0.0) {
    for (std::size_t i = 0; i < M_; ++i) {
      for (std::size_t j = 0; j < N_; ++j) total_[i] += od_.total(i, j);
      for (std::size_t j = 0; j < N_; ++j) {
        if (od_.total(i, j) > 0.0) in_u_(i, j) = true;
        else assigned_(i, j) = true;
      }
      refresh_caps(i);
    }
    po_ = oriented_priorities(p_, od_);
    eq_ = oriented_priorities(std::vector<double>(M_, 1.0), od_);
    double scale = 1.0;
    for (double v : total_) scale = std::max(scale, v);
    for (double r : p_.supply) scale = std::max(scale, r);
    tol_ = kFlowTolerance * scale;
  }

  PassResult run() {
    SolverTrace trace;
    const std::size_t limit = M_ + N_ + 2;
    for (std::size_t k = 0;; ++k) {
      if (k > limit) throw std::logic_error("node solver failed to terminate");
      std::vector<std::size_t> V;
      std::vector<bool> active(M_, false);
      for (std::size_t j = 0; j < N_; ++j) {
        bool nonempty = false;
        for (std::size_t i = 0; i < M_; ++i)
          if (in_u_(i, j)) { nonempty = true; active[i] = true; }
        if (nonempty) V.push_back(j);
      }
      if (V.empty()) break;

      IterationRecord rec;
      rec.k = k;
      rec.unprocessed_outputs = V;
      rec.remaining_supply = remaining_;
      ptilde_ = reassign_zero_priorities(p_.priority, active);
      rate_ = Grid<double>(M_, N_);
      for (std::size_t i = 0; i < M_; ++i)
        for (std::size_t j = 0; j < N_; ++j)
          if (in_u_(i, j)) rate_(i, j) = ptilde_[i] * od_.total(i, j) / total_[i];

      std::vector<double> a(N_, kInfinity);
      for (std::size_t j : V) {
        double sum = 0.0;
        for (std::size_t i = 0; i < M_; ++i)
          if (in_u_(i, j)) sum += rate_(i, j);
        if (sum > 0.0) a[j] = remaining_[j] / sum;
      }
      // Fill times account for movements that stop at their running demand;
      // they equal a_j whenever no running demand binds first.
      std::vector<double> t(N_, kInfinity);
      for (std::size_t j : V) t[j] = capped_fill_time(j);
      const std::size_t jstar = argmin(V, t);
      const double tau = t[jstar];

      std::vector<std::size_t> unconstrained;
      if (tau == kInfinity) {
        for (std::size_t i = 0; i < M_; ++i)
          if (active[i] && ptilde_[i] > 0.0) unconstrained.push_back(i);
      } else {
        unconstrained = done_links(jstar, tau);
      }

      rec.most_restrictive = jstar;
      rec.a_star = a[jstar];
      rec.fill_time = tau;
      rec.capped_fill = tau != a[jstar];
      if (record_) {
        rec.effective_priority = ptilde_;
        rec.oriented_priority = rate_;
        rec.a = a;
      }

      if (!unconstrained.empty()) {
        rec.branch = Branch::kFreeFlow;
        rec.unconstrained_inputs = unconstrained;
        for (std::size_t i : unconstrained)
          for (std::size_t j = 0; j < N_; ++j)
            if (in_u_(i, j)) assign(i, j, cap_(i, j), AssignReason::kDemandServed, rec);
      } else {
        rec.branch = Branch::kCongested;
        // outputs running out at the same instant restrict simultaneously
        const double slack = 1e-12 * std::max(1.0, tau);
        for (std::size_t j : V)
          if (t[j] <= tau + slack) rec.congested_outputs.push_back(j);
        congest(rec.congested_outputs, tau, rec);
      }
      if (record_) trace.iterations.push_back(std::move(rec));
    }
    return PassResult{std::move(flows_), std::move(assigned_), std::move(actual_),
                      std::move(trace)};
  }

 private:
  static std::size_t argmin(const std::vector<std::size_t>& V, const std::vector<double>& v) {
    std::size_t best = V.front();
    for (std::size_t j : V)
      if (v[j] < v[best]) best = j;
    return best;
  }

  // Inputs of U_{j*} whose every unassigned movement reaches its running
  // demand before time `tau`.
  std::vector<std::size_t> done_links(std::size_t jstar, double tau) const {
    std::vector<std::size_t> out;
    if (tau == kInfinity) return out;
    for (std::size_t i = 0; i < M_; ++i) {
      if (!in_u_(i, jstar) || ptilde_[i] <= 0.0) continue;
      bool done = true;
      for (std::size_t j = 0; j < N_ && done; ++j)
        if (in_u_(i, j) && cap_(i, j) > rate_(i, j) * tau + kFlowTolerance) done = false;
      if (done) out.push_back(i);
    }
    return out;
  }

  // Time at which output j runs out when each movement stops at its running
  // demand; +inf if it never does.
  double capped_fill_time(std::size_t j) const {
    struct Mv { double t, cap, rate; };
    std::vector<Mv> mv;
    double caps = 0.0, rates = 0.0;
    for (std::size_t i = 0; i < M_; ++i) {
      if (!in_u_(i, j) || rate_(i, j) <= 0.0) continue;
      mv.push_back({cap_(i, j) / rate_(i, j), cap_(i, j), rate_(i, j)});
      caps += cap_(i, j);
      rates += rate_(i, j);
    }
    if (caps <= remaining_[j] + kFlowTolerance) return kInfinity;
    std::sort(mv.begin(), mv.end(), [](const Mv& x, const Mv& y) { return x.t < y.t; });
    double served = 0.0;
    for (const Mv& m : mv) {
      const double t = (remaining_[j] - served) / rates;
      if (t <= m.t) return t;
      served += m.cap;
      rates -= m.rate;
    }
    return kInfinity;
  }

  void congest(const std::vector<std::size_t>& outputs, double tau, IterationRecord& rec) {
    // Shares use the running demands from before this batch: every movement
    // of a link progresses at the same fraction, so simultaneous restrictions
    // cannot cut into each other's shares.
    std::vector<bool> restricted(M_, false);
    struct Pending { std::size_t i, j; double flow; AssignReason why; };
    std::vector<Pending> pending;
    for (std::size_t j : outputs)
      for (std::size_t i = 0; i < M_; ++i) {
        if (!in_u_(i, j)) continue;
        const double share = rate_(i, j) * tau;
        if (rate_(i, j) > 0.0 && cap_(i, j) < share - kFlowTolerance)
          pending.push_back({i, j, cap_(i, j), AssignReason::kCappedAtOutput});
        else
          pending.push_back({i, j, std::min(share, cap_(i, j)), AssignReason::kSupplyShare});
      }
    for (const auto& q : pending) assign(q.i, q.j, q.flow, q.why, rec);
    // Only a movement that no competitor leads in priority-normalized flow
    // is held back by the output; anything pre-assigned above its share
    // takes that role away.
    for (std::size_t j : outputs)
      for (std::size_t i = 0; i < M_; ++i) {
        const double s = od_.total(i, j);
        if (s <= 0.0 || actual_[i][j] || flows_.movement(i, j) >= s * (1.0 - kFlowTolerance))
          continue;
        if (!leads(i, j)) continue;
        events_[i][j] = actual_[i][j] = flows_.movement(i, j) / s;
        restricted[i] = true;
      }
    for (std::size_t j : outputs) remaining_[j] = 0.0;
    for (std::size_t i = 0; i < M_; ++i) {
      if (!restricted[i]) continue;
      std::vector<double> before(N_);
      for (std::size_t j = 0; j < N_; ++j) before[j] = cap_(i, j);
      refresh_caps(i);
      for (std::size_t j = 0; j < N_; ++j) {
        if (!in_u_(i, j)) continue;
        if (record_ && cap_(i, j) != before[j])
          rec.rescalings.push_back({i, j, before[j], cap_(i, j)});
        // fully blocked at zero costs no supply; a positive cap still has to
        // be granted by its output
        if (cap_(i, j) <= 0.0 && fully_restricted(p_, i, j, events_[i]))
          assign(i, j, 0.0, AssignReason::kFullyRestricted, rec);
      }
    }
  }

  bool leads(std::size_t i, std::size_t j) const {
    const double fij = flows_.movement(i, j);
    for (std::size_t k = 0; k < M_; ++k) {
      if (k == i) continue;
      const bool both_zero = p_.priority[i] == 0.0 && p_.priority[k] == 0.0;
      const double pk = both_zero ? eq_(k, j) : po_(k, j);
      const double pi = both_zero ? eq_(i, j) : po_(i, j);
      if (pk * fij < pi * flows_.movement(k, j) - tol_ * std::max(pk, pi)) return false;
    }
    return true;
  }

  void refresh_caps(std::size_t i) {
    for (std::size_t j = 0; j < N_; ++j) {
      if (assigned_(i, j)) continue;
      cap_(i, j) = od_.total(i, j) * unblocked_fraction(p_, i, j, events_[i]);
    }
  }

  void assign(std::size_t i, std::size_t j, double flow, AssignReason why,
              IterationRecord& rec) {
    flow = std::max(0.0, std::min(flow, od_.total(i, j)));
    const double s = od_.total(i, j);
    for (std::size_t c = 0; c < p_.commodities; ++c)
      flows_(i, j, c) = s > 0.0 ? flow * (od_.s(i, j, c) / s) : 0.0;
    assigned_(i, j) = true;
    in_u_(i, j) = false;
    remaining_[j] = std::max(0.0, remaining_[j] - flow);
    if (record_) rec.assignments.push_back({i, j, flow, why});
  }

  const NodeProblem& p_;
  const OrientedDemand& od_;
  std::size_t M_, N_;
  bool record_;
  FlowMatrix flows_;
  Grid<unsigned char> assigned_;
  Grid<unsigned char> in_u_;
  Grid<double> cap_;
  std::vector<double> remaining_;
  std::vector<EventRow> events_;  // seeded from the previous pass, then actual
  std::vector<EventRow> actual_;  // raised in this pass only
  std::vector<double> total_;
  std::vector<double> ptilde_;
  Grid<double> po_, eq_;
  double tol_ = kFlowTolerance;
  Grid<double> rate_;
};

}  // namespace detail

/// General multi-input multi-output solve with relaxed FIFO.
///
/// Each iteration finds the output whose remaining supply runs out first
/// under oriented-priority rates. Inputs that finish before that moment are
/// served in full; otherwise the output's supply is split by priority and
/// its restriction intervals cut the running demands of the affected
/// inputs' other movements. A movement is final once its input is served,
/// its output is exhausted, or its running restriction union is [0,1].
inline Solution solve_mimo(const NodeProblem& p, const SolveOptions& opt = {}) {
  require_valid(p);
  const OrientedDemand od = oriented_demands(p);
  std::vector<detail::EventRow> seeded(p.inputs, detail::EventRow(p.outputs));

  Solution best;
  std::optional<Solution> fallback;
  for (std::size_t pass = 1;; ++pass) {
    detail::MimoPass run(p, od, seeded, opt.record_trace);
    detail::PassResult r = run.run();
    r.events = detail::restricting_events(p, od, r.flows);

    // A movement finalized early must still respect restrictions its input
    // picked up later; otherwise re-run with this pass's restrictions known
    // upfront.
    const bool settled = detail::settled(p, od, r.flows, r.events);
    bool consistent = settled;
    // A restriction that was anticipated but did not recur may have held a
    // movement back below what its output would otherwise grant.
    for (std::size_t i = 0; i < p.inputs && consistent; ++i)
      for (std::size_t j = 0; j < p.outputs; ++j) {
        const auto& was = seeded[i][j];
        const auto& now = r.events[i][j];
        if (was && (!now || std::abs(*was - *now) > 1e-10)) {
          consistent = false;
          break;
        }
      }
    r.trace.consistency_passes = pass;
    if (consistent) {
      best = Solution{std::move(r.flows), std::move(r.trace)};
      break;
    }
    if (pass >= opt.max_consistency_passes) {
      // no pass repeated its own restrictions; a pass that at least met
      // every constraint beats the last one
      if (!fallback) {
        best = Solution{std::move(r.flows), std::move(r.trace)};
        best.trace.converged = false;
      } else {
        best = std::move(*fallback);
        best.trace.consistency_passes = pass;
      }
      break;
    }
    if (settled) fallback = Solution{r.flows, r.trace};
    seeded = std::move(r.events);
  }
  return best;
}

/// Merge (single output). Inputs whose demand fits their priority share of
/// the remaining supply are served and removed; once none fits, the rest
/// split the remaining supply in proportion to priority.
inline Solution solve_miso(const NodeProblem& p, const SolveOptions& opt = {}) {
  require_valid(p);
  if (p.outputs != 1) throw std::invalid_argument("solve_miso needs exactly one output");
  const std::size_t M = p.inputs, C = p.commodities;
  Solution sol{FlowMatrix(M, 1, C), {}};
  std::vector<double> S(M, 0.0), Sc(M * C, 0.0);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t c = 0; c < C; ++c) {
      Sc[i * C + c] = p.split(i, 0, c) * p.demand(i, c);
      S[i] += Sc[i * C + c];
    }
  double R = p.supply[0];
  std::vector<bool> U(M);
  for (std::size_t i = 0; i < M; ++i) U[i] = S[i] > 0.0;

  for (std::size_t k = 0; std::find(U.begin(), U.end(), true) != U.end(); ++k) {
    const auto pt = reassign_zero_priorities(p.priority, U);
    double psum = 0.0;
    for (std::size_t i = 0; i < M; ++i)
      if (U[i]) psum += pt[i];
    IterationRecord rec;
    rec.k = k;
    rec.unprocessed_outputs = {0};
    rec.remaining_supply = {R};
    rec.effective_priority = pt;
    rec.a = {R / psum};
    rec.a_star = R / psum;
    for (std::size_t i = 0; i < M; ++i)
      if (U[i] && S[i] <= pt[i] * (R / psum) + kFlowTolerance) rec.unconstrained_inputs.push_back(i);
    if (!rec.unconstrained_inputs.empty()) {
      rec.branch = Branch::kFreeFlow;
      for (std::size_t i : rec.unconstrained_inputs) {
        for (std::size_t c = 0; c < C; ++c) sol.flows(i, 0, c) = Sc[i * C + c];
        R = std::max(0.0, R - S[i]);
        U[i] = false;
        rec.assignments.push_back({i, 0, S[i], AssignReason::kDemandServed});
      }
    } else {
      rec.branch = Branch::kCongested;
      for (std::size_t i = 0; i < M; ++i) {
        if (!U[i]) continue;
        const double f = pt[i] / psum * R;
        for (std::size_t c = 0; c < C; ++c) sol.flows(i, 0, c) = Sc[i * C + c] * (f / S[i]);
        U[i] = false;
        rec.assignments.push_back({i, 0, f, AssignReason::kSupplyShare});
      }
      R = 0.0;
    }
    if (opt.record_trace) sol.trace.iterations.push_back(std::move(rec));
  }
  return sol;
}

/// Diverge (single input) with relaxed FIFO. Among outputs whose running
/// demand exceeds supply, the one with the smallest supply-to-demand ratio
/// is filled; its restriction intervals then cut the running demands of the
/// other outputs. When no output is oversubscribed, all running demands flow.
inline Solution solve_simo(const NodeProblem& p, const SolveOptions& opt = {}) {
  require_valid(p);
  if (p.inputs != 1) throw std::invalid_argument("solve_simo needs exactly one input");
  const std::size_t N = p.outputs, C = p.commodities;
  const OrientedDemand od = oriented_demands(p);
  Solution sol{FlowMatrix(1, N, C), {}};
  std::vector<double> running(N);
  std::vector<IntervalSet> active(N);
  std::vector<bool> V(N);
  for (std::size_t j = 0; j < N; ++j) {
    running[j] = od.total(0, j);
    V[j] = running[j] > 0.0;
  }
  auto set_flow = [&](std::size_t j, double f, AssignReason why, IterationRecord& rec) {
    const double s = od.total(0, j);
    for (std::size_t c = 0; c < C; ++c) sol.flows(0, j, c) = f * (od.s(0, j, c) / s);
    V[j] = false;
    rec.assignments.push_back({0, j, f, why});
  };

  for (std::size_t k = 0; std::find(V.begin(), V.end(), true) != V.end(); ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.a.assign(N, kInfinity);
    std::optional<std::size_t> jstar;
    for (std::size_t j = 0; j < N; ++j) {
      if (!V[j]) continue;
      rec.unprocessed_outputs.push_back(j);
      rec.a[j] = p.supply[j] / running[j];
      // an output the running demand exactly meets still runs out
      if (running[j] < p.supply[j] - kFlowTolerance) continue;
      const double ratio = p.supply[j] / od.total(0, j);
      if (!jstar || ratio < p.supply[*jstar] / od.total(0, *jstar)) jstar = j;
    }
    if (!jstar) {
      rec.branch = Branch::kFreeFlow;
      rec.unconstrained_inputs = {0};
      for (std::size_t j = 0; j < N; ++j)
        if (V[j]) set_flow(j, running[j], AssignReason::kDemandServed, rec);
    } else {
      const std::size_t js = *jstar;
      rec.branch = Branch::kCongested;
      rec.most_restrictive = js;
      rec.a_star = rec.a[js];
      const double f = std::min(p.supply[js], running[js]);
      set_flow(js, f, AssignReason::kSupplyShare, rec);
      // A movement cut to its supply by the restriction is itself held
      // back by that output, so its restriction applies in turn.
      std::vector<std::pair<std::size_t, double>> work{{js, f}};
      while (!work.empty()) {
        const auto [je, fe] = work.back();
        work.pop_back();
        for (std::size_t j = 0; j < N; ++j) {
          if (!V[j]) continue;
          const IntervalSet& eta = p.restriction(0, je, j);
          const double before = running[j];
          running[j] = restriction_update(running[j], active[j], eta, fe, od.total(0, je),
                                          od.total(0, j));
          active[j] = unite(active[j], eta);
          if (running[j] != before) rec.rescalings.push_back({0, j, before, running[j]});
          if (!active[j].is_full()) continue;
          set_flow(j, running[j], AssignReason::kFullyRestricted, rec);
          if (running[j] >= p.supply[j] - kFlowTolerance &&
              running[j] < od.total(0, j) * (1.0 - kFlowTolerance))
            work.push_back({j, running[j]});
        }
      }
    }
    if (opt.record_trace) sol.trace.iterations.push_back(std::move(rec));
  }
  return sol;
}

/// Rebuilds a FlowMatrix from trace assignments (commodity shares follow demand).
inline FlowMatrix replay(const NodeProblem& p, const SolverTrace& trace) {
  const OrientedDemand od = oriented_demands(p);
  FlowMatrix f(p.inputs, p.outputs, p.commodities);
  for (const auto& it : trace.iterations)
    for (const auto& a : it.assignments) {
      const double s = od.total(a.input, a.output);
      for (std::size_t c = 0; c < p.commodities; ++c)
        f(a.input, a.output, c) = s > 0.0 ? a.flow * (od.s(a.input, a.output, c) / s) : 0.0;
    }
  return f;
}

}  // namespace nodeflow

#endif  // NODEFLOW_SOLVER_HPP

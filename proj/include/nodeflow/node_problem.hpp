#ifndef NODEFLOW_NODE_PROBLEM_HPP
#define NODEFLOW_NODE_PROBLEM_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nodeflow/interval_set.hpp"

namespace nodeflow {

/// Dense row-major array with up to three indices.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t d0, std::size_t d1, std::size_t d2 = 1, const T& init = T{})
      : d0_(d0), d1_(d1), d2_(d2), data_(d0 * d1 * d2, init) {}

  T& operator()(std::size_t a, std::size_t b, std::size_t c = 0) {
    return data_[(a * d1_ + b) * d2_ + c];
  }
  const T& operator()(std::size_t a, std::size_t b, std::size_t c = 0) const {
    return data_[(a * d1_ + b) * d2_ + c];
  }

  std::size_t dim0() const { return d0_; }
  std::size_t dim1() const { return d1_; }
  std::size_t dim2() const { return d2_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t d0_ = 0, d1_ = 0, d2_ = 0;
  std::vector<T> data_;
};

/// Inputs of a single junction solve. Units are vehicles per timestep for
/// demands, supplies and capacities; priorities are ratio-scale weights.
struct NodeProblem {
  std::size_t inputs = 0;       // M
  std::size_t outputs = 0;      // N
  std::size_t commodities = 1;  // C

  Grid<double> demand;       // [i][c]
  Grid<double> split;        // [i][j][c]
  std::vector<double> supply;    // [j]
  std::vector<double> priority;  // [i]
  std::optional<std::vector<double>> capacity;  // [i]
  Grid<IntervalSet> restriction;  // [i][j'][j]: restricting j', restricted j

  // Display labels; default to 1..M and M+1..M+N.
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;

  /// Zero demands, zero splits, full-FIFO restrictions.
  static NodeProblem sized(std::size_t m, std::size_t n, std::size_t c = 1) {
    NodeProblem p;
    p.inputs = m;
    p.outputs = n;
    p.commodities = c;
    p.demand = Grid<double>(m, c);
    p.split = Grid<double>(m, n, c);
    p.supply.assign(n, 0.0);
    p.priority.assign(m, 0.0);
    p.restriction = Grid<IntervalSet>(m, n, n, IntervalSet::full());
    for (std::size_t i = 0; i < m; ++i) p.input_names.push_back(std::to_string(i + 1));
    for (std::size_t j = 0; j < n; ++j) p.output_names.push_back(std::to_string(m + j + 1));
    return p;
  }

  double total_demand(std::size_t i) const {
    double s = 0.0;
    for (std::size_t c = 0; c < commodities; ++c) s += demand(i, c);
    return s;
  }

  /// Sets the same restriction interval for every off-diagonal pair.
  void set_all_restrictions(const IntervalSet& eta) {
    for (std::size_t i = 0; i < inputs; ++i)
      for (std::size_t a = 0; a < outputs; ++a)
        for (std::size_t b = 0; b < outputs; ++b)
          restriction(i, a, b) = a == b ? IntervalSet::full() : eta;
  }
};

struct Violation {
  std::string code;
  std::string message;
};

constexpr double kSplitSumTolerance = 1e-12;

/// Every invariant violation of `p`; empty means the problem is valid.
inline std::vector<Violation> validate(const NodeProblem& p) {
  std::vector<Violation> out;
  const auto M = p.inputs, N = p.outputs, C = p.commodities;
  auto add = [&](std::string code, std::string msg) {
    out.push_back({std::move(code), std::move(msg)});
  };
  if (M == 0 || N == 0 || C == 0) {
    add("dimensions", "node needs at least one input, one output and one commodity");
    return out;
  }
  if (p.demand.dim0() != M || p.demand.dim1() != C)
    add("dimensions", "demand must be M x C");
  if (p.split.dim0() != M || p.split.dim1() != N || p.split.dim2() != C)
    add("dimensions", "split must be M x N x C");
  if (p.supply.size() != N) add("dimensions", "supply must have N entries");
  if (p.priority.size() != M) add("dimensions", "priority must have M entries");
  if (p.capacity && p.capacity->size() != M)
    add("dimensions", "capacity must have M entries");
  if (p.restriction.dim0() != M || p.restriction.dim1() != N || p.restriction.dim2() != N)
    add("dimensions", "restriction must be M x N x N");
  if (!out.empty()) return out;

  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t c = 0; c < C; ++c) {
      const double s = p.demand(i, c);
      if (!(s >= 0.0) || !std::isfinite(s))
        add("demand", "demand[" + std::to_string(i) + "][" + std::to_string(c) +
                          "] must be finite and nonnegative");
      double sum = 0.0;
      bool bad = false;
      for (std::size_t j = 0; j < N; ++j) {
        const double b = p.split(i, j, c);
        if (!(b >= 0.0 && b <= 1.0)) bad = true;
        sum += b;
      }
      if (bad)
        add("split", "split[" + std::to_string(i) + "][*][" + std::to_string(c) +
                         "] has entries outside [0,1]");
      if (s > 0.0 && std::abs(sum - 1.0) > kSplitSumTolerance)
        add("split", "split ratios of input " + std::to_string(i) + ", commodity " +
                         std::to_string(c) + " sum to " + std::to_string(sum) +
                         " instead of 1");
    }
    if (!(p.priority[i] >= 0.0) || !std::isfinite(p.priority[i]))
      add("priority", "priority[" + std::to_string(i) + "] must be finite and nonnegative");
    if (p.capacity && !((*p.capacity)[i] >= 0.0))
      add("capacity", "capacity[" + std::to_string(i) + "] must be nonnegative");
    for (std::size_t j = 0; j < N; ++j) {
      if (!p.restriction(i, j, j).is_full())
        add("restriction", "eta[" + std::to_string(i) + "][" + std::to_string(j) + "][" +
                               std::to_string(j) + "]: diagonal must be full [0,1]");
    }
  }
  for (std::size_t j = 0; j < N; ++j) {
    if (!(p.supply[j] >= 0.0) || !std::isfinite(p.supply[j]))
      add("supply", "supply[" + std::to_string(j) + "] must be finite and nonnegative");
  }
  return out;
}

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Violation> v)
      : std::runtime_error(summary(v)), violations_(std::move(v)) {}
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  static std::string summary(const std::vector<Violation>& v) {
    std::string s = "invalid node problem";
    for (const auto& x : v) s += "; " + x.message;
    return s;
  }
  std::vector<Violation> violations_;
};

inline void require_valid(const NodeProblem& p) {
  auto v = validate(p);
  if (!v.empty()) throw ValidationError(std::move(v));
}

/// Per-movement demands S_{i,j}^c = split * demand and their commodity totals.
struct OrientedDemand {
  Grid<double> s;      // [i][j][c]
  Grid<double> total;  // [i][j]
};

inline OrientedDemand oriented_demands(const NodeProblem& p) {
  OrientedDemand d{Grid<double>(p.inputs, p.outputs, p.commodities),
                   Grid<double>(p.inputs, p.outputs)};
  for (std::size_t i = 0; i < p.inputs; ++i)
    for (std::size_t j = 0; j < p.outputs; ++j) {
      double t = 0.0;
      for (std::size_t c = 0; c < p.commodities; ++c) {
        d.s(i, j, c) = p.split(i, j, c) * p.demand(i, c);
        t += d.s(i, j, c);
      }
      d.total(i, j) = t;
    }
  return d;
}

/// p_{i,j} = p_i * S_{i,j} / S_i. Inputs with zero total demand get zeros.
inline Grid<double> oriented_priorities(std::span<const double> priority,
                                        const OrientedDemand& d) {
  const std::size_t M = d.total.dim0(), N = d.total.dim1();
  Grid<double> out(M, N);
  for (std::size_t i = 0; i < M; ++i) {
    double s_i = 0.0;
    for (std::size_t j = 0; j < N; ++j) s_i += d.total(i, j);
    if (s_i <= 0.0) continue;
    for (std::size_t j = 0; j < N; ++j) out(i, j) = priority[i] * d.total(i, j) / s_i;
  }
  return out;
}

inline Grid<double> oriented_priorities(const NodeProblem& p, const OrientedDemand& d) {
  return oriented_priorities(std::span<const double>(p.priority), d);
}

/// Solution f_{i,j}^c of a node problem.
class FlowMatrix {
 public:
  FlowMatrix() = default;
  FlowMatrix(std::size_t m, std::size_t n, std::size_t c) : f_(m, n, c) {}

  double& operator()(std::size_t i, std::size_t j, std::size_t c) { return f_(i, j, c); }
  double operator()(std::size_t i, std::size_t j, std::size_t c) const { return f_(i, j, c); }

  std::size_t inputs() const { return f_.dim0(); }
  std::size_t outputs() const { return f_.dim1(); }
  std::size_t commodities() const { return f_.dim2(); }

  double movement(std::size_t i, std::size_t j) const {
    double s = 0.0;
    for (std::size_t c = 0; c < commodities(); ++c) s += f_(i, j, c);
    return s;
  }
  double inflow(std::size_t i) const {
    double s = 0.0;
    for (std::size_t j = 0; j < outputs(); ++j) s += movement(i, j);
    return s;
  }
  double outflow(std::size_t j) const {
    double s = 0.0;
    for (std::size_t i = 0; i < inputs(); ++i) s += movement(i, j);
    return s;
  }
  const Grid<double>& raw() const { return f_; }

  friend bool operator==(const FlowMatrix&, const FlowMatrix&) = default;

 private:
  Grid<double> f_;
};

// ---------------------------------------------------------------------------
// Priority presets

enum class PriorityPreset { kExplicit, kCapacity, kOnrampPreference, kDemand };

/// Capacity-proportional priorities p_i := F_i.
inline void use_capacity_priorities(NodeProblem& p) {
  if (!p.capacity) throw std::invalid_argument("capacity preset needs link capacities");
  p.priority = *p.capacity;
}

/// All inputs get zero priority except `favored`, which gets 1.
inline void use_onramp_preference(NodeProblem& p, std::size_t favored) {
  if (favored >= p.inputs) throw std::out_of_range("onramp index out of range");
  p.priority.assign(p.inputs, 0.0);
  p.priority[favored] = 1.0;
}

/// p_i := S_i. Breaks the invariance principle; see priority_warnings().
inline void use_demand_priorities(NodeProblem& p) {
  for (std::size_t i = 0; i < p.inputs; ++i) p.priority[i] = p.total_demand(i);
}

/// Warns when priorities are a positive multiple of the total demands:
/// priorities that depend on demand violate the invariance principle.
inline std::vector<std::string> priority_warnings(const NodeProblem& p) {
  std::vector<std::string> w;
  if (p.inputs < 2) return w;
  double ratio = -1.0;
  for (std::size_t i = 0; i < p.inputs; ++i) {
    const double s = p.total_demand(i);
    if (s <= 0.0 || p.priority[i] <= 0.0) return w;
    const double r = p.priority[i] / s;
    if (ratio < 0.0) ratio = r;
    else if (std::abs(r - ratio) > 1e-12 * ratio) return w;
  }
  w.push_back(
      "priorities are proportional to demands; flows will not satisfy the "
      "invariance principle (priorities should not be functions of demand)");
  return w;
}

}  // namespace nodeflow

#endif  // NODEFLOW_NODE_PROBLEM_HPP

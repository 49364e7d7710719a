#ifndef NODEFLOW_NETWORK_HPP
#define NODEFLOW_NETWORK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nodeflow/solver.hpp"

namespace nodeflow {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Triangular fundamental diagram. Capacity and jam density are per lane.
struct FundamentalDiagram {
  double free_speed = 100.0;  // km/h
  double wave_speed = 25.0;   // km/h
  double capacity = 2000.0;   // veh/h/lane
  double jam_density = 150.0;  // veh/km/lane
};

struct Link {
  std::string name;
  double length = 1.0;  // km
  int lanes = 1;
  FundamentalDiagram fd;
  std::size_t cells = 0;        // 0: as many as the CFL condition allows
  std::vector<double> initial;  // veh/km per commodity, uniform over cells

  double capacity() const { return fd.capacity * lanes; }
  double jam_density() const { return fd.jam_density * lanes; }
  double demand(double k) const { return std::clamp(fd.free_speed * k, 0.0, capacity()); }
  double supply(double k) const {
    return std::clamp(fd.wave_speed * (jam_density() - k), 0.0, capacity());
  }
};

/// Piecewise-constant profile: value of the last piece with from <= t.
template <typename T>
struct Piece {
  double from = 0.0;  // s
  T value{};
};

template <typename T>
const T& at_time(const std::vector<Piece<T>>& profile, double t) {
  const Piece<T>* cur = &profile.front();
  for (const auto& p : profile)
    if (p.from <= t) cur = &p;
  return cur->value;
}

struct Source {
  std::string link;
  std::vector<Piece<std::vector<double>>> rate;  // veh/h per commodity
};

/// Downstream boundary. Without a profile the link discharges at capacity.
struct Sink {
  std::string link;
  std::vector<Piece<double>> capacity;  // veh/h
};

struct Junction {
  std::string name;
  std::vector<std::string> inputs, outputs;
  PriorityPreset priorities = PriorityPreset::kCapacity;
  std::vector<double> priority;  // explicit values
  std::string favored;           // onramp preference
  std::vector<Piece<Grid<double>>> split;  // [i][j][c]
  Grid<IntervalSet> eta;  // [i][j'][j]
};

struct Network {
  double dt = 5.0;  // s
  std::size_t commodities = 1;
  std::vector<Link> links;
  std::vector<Source> sources;
  std::vector<Sink> sinks;
  std::vector<Junction> junctions;
};

struct JunctionStep {
  NodeProblem problem;  // veh/h
  Solution solution;
};

struct Frame {
  double t = 0.0;
  std::vector<std::vector<std::vector<double>>> density;  // [link][cell][c] veh/km
  std::vector<std::vector<std::vector<double>>> outflow;  // [link][cell][c] veh/h during the step
  std::vector<std::vector<double>> queue;                 // [source][c] veh, end of step
};

struct Totals {
  std::vector<double> entered, exited, inside;  // per commodity, veh

  double imbalance(std::size_t c) const { return inside[c] + exited[c] - entered[c]; }
};

class Simulator {
 public:
  explicit Simulator(Network net) : net_(std::move(net)) { compile(); }

  const Network& network() const { return net_; }
  double time() const { return t_; }
  std::size_t cells(std::size_t link) const { return k_[link].size(); }
  double cell_length(std::size_t link) const { return dx_[link]; }

  /// Advances one timestep. Fills `frame` with the state at the start of the
  /// step and the flows during it.
  std::vector<JunctionStep> step(Frame* frame = nullptr) {
    const std::size_t C = net_.commodities, L = net_.links.size();
    const double h = net_.dt / 3600.0;

    // read phase: every cell's demand and supply
    std::vector<std::vector<double>> D(L), R(L);
    for (std::size_t l = 0; l < L; ++l) {
      const auto& link = net_.links[l];
      for (const auto& cell : k_[l]) {
        const double k = total(cell);
        D[l].push_back(link.demand(k));
        R[l].push_back(link.supply(k));
      }
    }
    auto mix = [&](std::size_t l, std::size_t x, double q) {
      std::vector<double> out(C, 0.0);
      const double k = total(k_[l][x]);
      if (k > 0.0)
        for (std::size_t c = 0; c < C; ++c) out[c] = q * k_[l][x][c] / k;
      return out;
    };

    // flow phase: out[l][x][c] leaves cell x, in[l][x][c] enters it (veh/h)
    std::vector<std::vector<std::vector<double>>> out(L), in(L);
    for (std::size_t l = 0; l < L; ++l) {
      out[l].assign(k_[l].size(), std::vector<double>(C, 0.0));
      in[l].assign(k_[l].size(), std::vector<double>(C, 0.0));
      for (std::size_t x = 0; x + 1 < k_[l].size(); ++x) {
        out[l][x] = mix(l, x, std::min(D[l][x], R[l][x + 1]));
        in[l][x + 1] = out[l][x];
      }
    }

    for (std::size_t s = 0; s < net_.sources.size(); ++s) {
      const std::size_t l = source_link_[s];
      const auto& rate = at_time(net_.sources[s].rate, t_);
      std::vector<double> want(C);
      double total_want = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        want[c] = rate[c] + queue_[s][c] / h;
        total_want += want[c];
      }
      const double q = std::min(total_want, R[l][0]);
      for (std::size_t c = 0; c < C; ++c) {
        const double qc = total_want > 0.0 ? q * want[c] / total_want : 0.0;
        in[l][0][c] = qc;
        queue_[s][c] = std::max(0.0, queue_[s][c] + (rate[c] - qc) * h);
        totals_.entered[c] += rate[c] * h;
      }
    }

    for (std::size_t l = 0; l < L; ++l) {
      if (!sink_[l]) continue;
      const std::size_t x = k_[l].size() - 1;
      const auto& sk = *sink_[l];
      const double cap = sk < 0 ? net_.links[l].capacity()
                                : at_time(net_.sinks[static_cast<std::size_t>(sk)].capacity, t_);
      out[l][x] = mix(l, x, std::min(D[l][x], cap));
      for (std::size_t c = 0; c < C; ++c) totals_.exited[c] += out[l][x][c] * h;
    }

    // junction solves only read D, R and k_; each writes its own boundary cells
    std::vector<JunctionStep> solved;
    solved.reserve(net_.junctions.size());
    for (std::size_t n = 0; n < net_.junctions.size(); ++n) {
      const auto& jn = net_.junctions[n];
      const auto& in_links = junction_in_[n];
      const auto& out_links = junction_out_[n];
      NodeProblem p = problems_[n];
      p.split = at_time(jn.split, t_);
      for (std::size_t i = 0; i < in_links.size(); ++i) {
        const std::size_t l = in_links[i], x = k_[l].size() - 1;
        const auto d = mix(l, x, D[l][x]);
        for (std::size_t c = 0; c < C; ++c) p.demand(i, c) = d[c];
      }
      for (std::size_t j = 0; j < out_links.size(); ++j) p.supply[j] = R[out_links[j]][0];
      Solution sol = solve_mimo(p, {.record_trace = false});
      for (std::size_t i = 0; i < in_links.size(); ++i) {
        const std::size_t l = in_links[i], x = k_[l].size() - 1;
        for (std::size_t j = 0; j < out_links.size(); ++j)
          for (std::size_t c = 0; c < C; ++c) {
            out[l][x][c] += sol.flows(i, j, c);
            in[out_links[j]][0][c] += sol.flows(i, j, c);
          }
      }
      solved.push_back({std::move(p), std::move(sol)});
    }

    if (frame) {
      frame->t = t_;
      frame->density = k_;
      frame->outflow = out;
      frame->queue = queue_;
    }

    // write phase
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t x = 0; x < k_[l].size(); ++x)
        for (std::size_t c = 0; c < C; ++c)
          k_[l][x][c] = std::max(0.0, k_[l][x][c] + (in[l][x][c] - out[l][x][c]) * h / dx_[l]);
    t_ += net_.dt;
    return solved;
  }

  Totals totals() const {
    Totals t = totals_;
    t.inside.assign(net_.commodities, 0.0);
    for (std::size_t l = 0; l < k_.size(); ++l)
      for (const auto& cell : k_[l])
        for (std::size_t c = 0; c < net_.commodities; ++c) t.inside[c] += cell[c] * dx_[l];
    for (const auto& q : queue_)
      for (std::size_t c = 0; c < net_.commodities; ++c) t.inside[c] += q[c];
    return t;
  }

  std::size_t link_index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown link '" + name + "'");
    return it->second;
  }

 private:
  static double total(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }

  void compile() {
    const std::size_t C = net_.commodities;
    if (C == 0) throw ConfigError("network needs at least one commodity");
    if (!(net_.dt > 0.0)) throw ConfigError("timestep must be positive");
    const double h = net_.dt / 3600.0;

    for (std::size_t l = 0; l < net_.links.size(); ++l) {
      auto& link = net_.links[l];
      if (!index_.emplace(link.name, l).second)
        throw ConfigError("duplicate link '" + link.name + "'");
      const auto& fd = link.fd;
      if (!(link.length > 0.0) || link.lanes < 1 || !(fd.free_speed > 0.0) ||
          !(fd.wave_speed > 0.0) || !(fd.capacity > 0.0) || !(fd.jam_density > 0.0))
        throw ConfigError("link '" + link.name + "' has a nonpositive parameter");
      const double reach = fd.free_speed * h;
      std::size_t n = link.cells;
      if (n == 0) n = std::max<std::size_t>(1, static_cast<std::size_t>(link.length / reach));
      dx_.push_back(link.length / static_cast<double>(n));
      if (reach > dx_.back() * (1 + 1e-12))
        throw ConfigError("link '" + link.name + "' violates CFL: free-flow speed covers " +
                          std::to_string(reach) + " km per step, cells are " +
                          std::to_string(dx_.back()) + " km");
      if (fd.wave_speed * h > dx_.back() * (1 + 1e-12))
        throw ConfigError("link '" + link.name + "' violates CFL for the congestion wave");
      std::vector<double> k0(C, 0.0);
      if (!link.initial.empty()) {
        if (link.initial.size() != C)
          throw ConfigError("link '" + link.name + "' initial density needs one value per commodity");
        k0 = link.initial;
        if (total(k0) > link.jam_density())
          throw ConfigError("link '" + link.name + "' initial density exceeds jam density");
      }
      k_.emplace_back(n, k0);
    }

    const std::size_t L = net_.links.size();
    std::vector<std::string> upstream(L), downstream(L);
    auto claim = [&](std::vector<std::string>& slot, std::size_t l, const std::string& who,
                     const char* end) {
      if (!slot[l].empty())
        throw ConfigError("link '" + net_.links[l].name + "' " + end + " is claimed by both " +
                          slot[l] + " and " + who);
      slot[l] = who;
    };

    for (const auto& s : net_.sources) {
      const std::size_t l = link_index(s.link);
      claim(upstream, l, "source", "upstream end");
      if (s.rate.empty()) throw ConfigError("source on '" + s.link + "' has no rate profile");
      for (const auto& pc : s.rate)
        if (pc.value.size() != C || std::any_of(pc.value.begin(), pc.value.end(),
                                                [](double r) { return !(r >= 0.0); }))
          throw ConfigError("source on '" + s.link + "' needs a nonnegative rate per commodity");
      source_link_.push_back(l);
      queue_.emplace_back(C, 0.0);
    }

    sink_.assign(L, std::nullopt);
    for (std::size_t s = 0; s < net_.sinks.size(); ++s) {
      const std::size_t l = link_index(net_.sinks[s].link);
      claim(downstream, l, "sink", "downstream end");
      if (net_.sinks[s].capacity.empty())
        net_.sinks[s].capacity.push_back({0.0, net_.links[l].capacity()});
      sink_[l] = static_cast<long>(s);
    }

    for (const auto& jn : net_.junctions) {
      const std::size_t M = jn.inputs.size(), N = jn.outputs.size();
      if (M == 0 || N == 0)
        throw ConfigError("junction '" + jn.name + "' needs inputs and outputs");
      std::vector<std::size_t> ins, outs;
      for (const auto& name : jn.inputs) {
        ins.push_back(link_index(name));
        claim(downstream, ins.back(), "junction '" + jn.name + "'", "downstream end");
      }
      for (const auto& name : jn.outputs) {
        outs.push_back(link_index(name));
        claim(upstream, outs.back(), "junction '" + jn.name + "'", "upstream end");
      }
      if (jn.split.empty()) throw ConfigError("junction '" + jn.name + "' has no split ratios");

      NodeProblem p = NodeProblem::sized(M, N, C);
      p.input_names = jn.inputs;
      p.output_names = jn.outputs;
      std::vector<double> cap;
      for (std::size_t l : ins) cap.push_back(net_.links[l].capacity());
      p.capacity = cap;
      if (jn.eta.dim0() != 0) p.restriction = jn.eta;
      switch (jn.priorities) {
        case PriorityPreset::kCapacity: use_capacity_priorities(p); break;
        case PriorityPreset::kExplicit:
          if (jn.priority.size() != M)
            throw ConfigError("junction '" + jn.name + "' needs one priority per input");
          p.priority = jn.priority;
          break;
        case PriorityPreset::kOnrampPreference: {
          auto it = std::find(jn.inputs.begin(), jn.inputs.end(), jn.favored);
          if (it == jn.inputs.end())
            throw ConfigError("junction '" + jn.name + "' favors unknown input '" + jn.favored + "'");
          use_onramp_preference(p, static_cast<std::size_t>(it - jn.inputs.begin()));
          break;
        }
        case PriorityPreset::kDemand:
          throw ConfigError("junction '" + jn.name + "': demand priorities are not a preset");
      }
      for (const auto& pc : jn.split) {
        NodeProblem q = p;
        q.split = pc.value;
        for (std::size_t i = 0; i < M; ++i)
          for (std::size_t c = 0; c < C; ++c) q.demand(i, c) = 1.0;
        auto v = validate(q);
        if (!v.empty())
          throw ConfigError("junction '" + jn.name + "' split at t=" + std::to_string(pc.from) +
                            ": " + v.front().message);
      }
      problems_.push_back(std::move(p));
      junction_in_.push_back(std::move(ins));
      junction_out_.push_back(std::move(outs));
    }

    // links that end nowhere discharge freely
    for (std::size_t l = 0; l < L; ++l)
      if (downstream[l].empty()) sink_[l] = -1;

    totals_.entered.assign(C, 0.0);
    totals_.exited.assign(C, 0.0);
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t c = 0; c < C; ++c) totals_.entered[c] += k_[l][0][c] * net_.links[l].length;
  }

  Network net_;
  double t_ = 0.0;
  std::map<std::string, std::size_t> index_;
  std::vector<double> dx_;
  std::vector<std::vector<std::vector<double>>> k_;  // [link][cell][c]
  std::vector<std::size_t> source_link_;
  std::vector<std::vector<double>> queue_;  // [source][c]
  std::vector<std::optional<long>> sink_;   // -1: free discharge
  std::vector<NodeProblem> problems_;
  std::vector<std::vector<std::size_t>> junction_in_, junction_out_;
  Totals totals_;
};

struct Trajectory {
  std::vector<Frame> frames;
  std::vector<std::vector<FlowMatrix>> junction_flows;  // [step][junction]
  Totals totals;
};

/// Runs for `horizon` seconds (rounded to whole steps). `on_step` sees every
/// junction solve, e.g. for auditing.
inline Trajectory run(const Network& net, double horizon,
                      const std::function<void(const Frame&, const std::vector<JunctionStep>&)>&
                          on_step = {}) {
  if (!(horizon >= 0.0)) throw ConfigError("horizon must be nonnegative");
  Simulator sim(net);
  Trajectory tr;
  const auto steps = static_cast<std::size_t>(std::llround(horizon / net.dt));
  tr.frames.reserve(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    Frame f;
    auto js = sim.step(&f);
    if (on_step) on_step(f, js);
    std::vector<FlowMatrix> flows;
    for (auto& j : js) flows.push_back(std::move(j.solution.flows));
    tr.junction_flows.push_back(std::move(flows));
    tr.frames.push_back(std::move(f));
  }
  tr.totals = sim.totals();
  return tr;
}

}  // namespace nodeflow

#endif

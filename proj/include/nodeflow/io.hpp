#ifndef NODEFLOW_IO_HPP
#define NODEFLOW_IO_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nodeflow/network.hpp"
#include "nodeflow/verifier.hpp"

namespace nodeflow::io {

using json = nlohmann::json;

constexpr int kSchemaVersion = 1;

/// File missing, unreadable or not JSON.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed JSON that does not match the schema. `path` points at the
/// offending value, e.g. "inputs[2].split".
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

inline json load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

namespace detail {

class Object {
 public:
  Object(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw SchemaError(path_, "expected an object");
  }

  // unknown keys are errors, so typos do not silently fall back to defaults
  void allow(std::initializer_list<const char*> keys) const {
    for (const auto& [k, v] : j_.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
        throw SchemaError(path_ + "." + k, "unknown field");
    }
  }
  bool has(const char* key) const { return j_.contains(key); }
  const json& raw(const char* key) const {
    if (!has(key)) throw SchemaError(path_ + "." + key, "missing");
    return j_.at(key);
  }
  std::string at(const char* key) const { return path_ + "." + key; }

  double number(const char* key) const { return as_number(raw(key), at(key)); }
  double number(const char* key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }
  std::string string(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_string()) throw SchemaError(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::size_t count(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw SchemaError(at(key), "expected a nonnegative integer");
    return v.get<std::size_t>();
  }
  const json& array(const char* key) const {
    const auto& v = raw(key);
    if (!v.is_array()) throw SchemaError(at(key), "expected an array");
    return v;
  }
  std::vector<double> numbers(const char* key) const { return as_numbers(raw(key), at(key)); }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw SchemaError(path, "expected a number");
    return v.get<double>();
  }
  static std::vector<double> as_numbers(const json& v, const std::string& path) {
    if (!v.is_array()) throw SchemaError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k)
      out.push_back(as_number(v[k], path + "[" + std::to_string(k) + "]"));
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

inline void header(const Object& o, const char* kind) {
  if (o.count("schema_version") != static_cast<std::size_t>(kSchemaVersion))
    throw SchemaError(o.at("schema_version"),
                      "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  if (o.string("kind") != kind)
    throw SchemaError(o.at("kind"), std::string("expected \"") + kind + "\"");
}

inline IntervalSet spans(const json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path, "expected an array of [lo, hi] pairs");
  std::vector<Span> s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto pair = Object::as_numbers(v[k], path + "[" + std::to_string(k) + "]");
    if (pair.size() != 2) throw SchemaError(path + "[" + std::to_string(k) + "]", "expected [lo, hi]");
    s.push_back({pair[0], pair[1]});
  }
  try {
    return IntervalSet::make(s);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path, e.what());
  }
}

inline json spans(const IntervalSet& set) {
  json out = json::array();
  for (const auto& s : set.spans()) out.push_back({s.lo, s.hi});
  return out;
}

inline std::size_t lookup(const std::vector<std::string>& names, const std::string& name,
                          const std::string& path) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw SchemaError(path, "unknown link '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

inline std::vector<std::string> names(const json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path, "expected an array of names");
  std::vector<std::string> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_string()) throw SchemaError(path + "[" + std::to_string(k) + "]", "expected a string");
    out.push_back(v[k].get<std::string>());
  }
  for (std::size_t a = 0; a < out.size(); ++a)
    for (std::size_t b = a + 1; b < out.size(); ++b)
      if (out[a] == out[b]) throw SchemaError(path, "duplicate name '" + out[a] + "'");
  return out;
}

// {"restricting": {"restricted": [[lo, hi], ...]}}; omitted pairs stay full
inline void read_eta(const json& v, const std::string& path, std::size_t i,
                     const std::vector<std::string>& outputs, Grid<IntervalSet>& eta) {
  if (!v.is_object()) throw SchemaError(path, "expected an object keyed by output name");
  for (const auto& [from, row] : v.items()) {
    const auto a = lookup(outputs, from, path + "." + from);
    if (!row.is_object()) throw SchemaError(path + "." + from, "expected an object keyed by output name");
    for (const auto& [to, s] : row.items()) {
      const auto b = lookup(outputs, to, path + "." + from + "." + to);
      eta(i, a, b) = spans(s, path + "." + from + "." + to);
    }
  }
}

inline json write_eta(const Grid<IntervalSet>& eta, std::size_t i,
                      const std::vector<std::string>& outputs) {
  json out = json::object();
  for (std::size_t a = 0; a < outputs.size(); ++a)
    for (std::size_t b = 0; b < outputs.size(); ++b)
      if (!eta(i, a, b).is_full()) out[outputs[a]][outputs[b]] = spans(eta(i, a, b));
  return out;
}

// {"output": [per commodity]}; omitted outputs get 0
inline void read_split(const json& v, const std::string& path, std::size_t i,
                       const std::vector<std::string>& outputs, std::size_t C, Grid<double>& split) {
  if (!v.is_object()) throw SchemaError(path, "expected an object keyed by output name");
  for (const auto& [to, row] : v.items()) {
    const auto j = lookup(outputs, to, path + "." + to);
    const auto b = Object::as_numbers(row, path + "." + to);
    if (b.size() != C)
      throw SchemaError(path + "." + to, "expected " + std::to_string(C) + " split ratios");
    for (std::size_t c = 0; c < C; ++c) split(i, j, c) = b[c];
  }
}

inline PriorityPreset preset(const std::string& s, const std::string& path) {
  if (s == "explicit") return PriorityPreset::kExplicit;
  if (s == "capacity") return PriorityPreset::kCapacity;
  if (s == "onramp") return PriorityPreset::kOnrampPreference;
  throw SchemaError(path, "unknown priority preset '" + s + "' (explicit, capacity, onramp)");
}

inline const char* preset_name(PriorityPreset p) {
  switch (p) {
    case PriorityPreset::kCapacity: return "capacity";
    case PriorityPreset::kOnrampPreference: return "onramp";
    default: return "explicit";
  }
}

}  // namespace detail

/// A node document together with the priority preset it asks for.
struct NodeScenario {
  NodeProblem problem;
  PriorityPreset preset = PriorityPreset::kExplicit;
  std::string favored;  // onramp preset

  /// Applies `preset` (or `override`) to a copy of the problem.
  NodeProblem resolved(std::optional<PriorityPreset> override = {},
                       const std::string& favored_override = "") const {
    NodeProblem p = problem;
    const auto which = override.value_or(preset);
    const auto& fav = favored_override.empty() ? favored : favored_override;
    switch (which) {
      case PriorityPreset::kCapacity:
        if (!p.capacity) throw SchemaError("inputs", "capacity priorities need every input's capacity");
        use_capacity_priorities(p);
        break;
      case PriorityPreset::kOnrampPreference:
        use_onramp_preference(p, detail::lookup(p.input_names, fav, "favored_input"));
        break;
      case PriorityPreset::kDemand: use_demand_priorities(p); break;
      case PriorityPreset::kExplicit: break;
    }
    return p;
  }
};

inline std::string kind(const json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string())
    throw SchemaError("$", "document has no \"kind\"");
  return doc["kind"].get<std::string>();
}

inline NodeScenario node_from_json(const json& doc) {
  detail::Object o(doc, "$");
  o.allow({"schema_version", "kind", "name", "commodities", "priority_preset", "favored_input",
           "inputs", "outputs"});
  detail::header(o, "node");
  const std::size_t C = o.has("commodities") ? o.count("commodities") : 1;
  if (C == 0) throw SchemaError(o.at("commodities"), "must be at least 1");

  const auto& ins = o.array("inputs");
  const auto& outs = o.array("outputs");
  NodeScenario sc;
  NodeProblem& p = sc.problem;
  p = NodeProblem::sized(ins.size(), outs.size(), C);
  if (ins.empty() || outs.empty()) throw SchemaError("$", "node needs inputs and outputs");

  for (std::size_t j = 0; j < outs.size(); ++j) {
    detail::Object out(outs[j], "$.outputs[" + std::to_string(j) + "]");
    out.allow({"name", "supply"});
    p.output_names[j] = out.string("name");
    p.supply[j] = out.number("supply");
  }
  detail::names(json(p.output_names), "$.outputs");

  bool all_cap = true, any_priority = false;
  std::vector<double> cap(ins.size(), 0.0);
  for (std::size_t i = 0; i < ins.size(); ++i) {
    detail::Object in(ins[i], "$.inputs[" + std::to_string(i) + "]");
    in.allow({"name", "demand", "capacity", "priority", "split", "eta"});
    p.input_names[i] = in.string("name");
    const auto d = in.numbers("demand");
    if (d.size() != C)
      throw SchemaError(in.at("demand"), "expected " + std::to_string(C) + " values");
    for (std::size_t c = 0; c < C; ++c) p.demand(i, c) = d[c];
    if (in.has("capacity")) cap[i] = in.number("capacity");
    else all_cap = false;
    if (in.has("priority")) {
      p.priority[i] = in.number("priority");
      any_priority = true;
    }
    detail::read_split(in.raw("split"), in.at("split"), i, p.output_names, C, p.split);
    if (in.has("eta")) detail::read_eta(in.raw("eta"), in.at("eta"), i, p.output_names, p.restriction);
  }
  detail::names(json(p.input_names), "$.inputs");
  if (all_cap) p.capacity = cap;

  if (o.has("priority_preset"))
    sc.preset = detail::preset(o.string("priority_preset"), o.at("priority_preset"));
  if (o.has("favored_input")) sc.favored = o.string("favored_input");
  if (sc.preset == PriorityPreset::kExplicit && !any_priority)
    throw SchemaError("$.inputs", "explicit priorities need a \"priority\" on each input");
  return sc;
}

inline json to_json(const NodeScenario& sc) {
  const NodeProblem& p = sc.problem;
  json doc{{"schema_version", kSchemaVersion}, {"kind", "node"}, {"commodities", p.commodities}};
  doc["priority_preset"] = detail::preset_name(sc.preset);
  if (!sc.favored.empty()) doc["favored_input"] = sc.favored;
  for (std::size_t i = 0; i < p.inputs; ++i) {
    json in{{"name", p.input_names[i]}};
    std::vector<double> d;
    for (std::size_t c = 0; c < p.commodities; ++c) d.push_back(p.demand(i, c));
    in["demand"] = d;
    if (p.capacity) in["capacity"] = (*p.capacity)[i];
    in["priority"] = p.priority[i];
    json split = json::object();
    for (std::size_t j = 0; j < p.outputs; ++j) {
      std::vector<double> b;
      bool any = false;
      for (std::size_t c = 0; c < p.commodities; ++c) {
        b.push_back(p.split(i, j, c));
        any = any || b.back() != 0.0;
      }
      if (any) split[p.output_names[j]] = b;
    }
    in["split"] = split;
    auto eta = detail::write_eta(p.restriction, i, p.output_names);
    if (!eta.empty()) in["eta"] = eta;
    doc["inputs"].push_back(in);
  }
  for (std::size_t j = 0; j < p.outputs; ++j)
    doc["outputs"].push_back({{"name", p.output_names[j]}, {"supply", p.supply[j]}});
  return doc;
}

/// Flow document. Extra solve metadata is written but optional on read.
inline json to_json(const NodeProblem& p, const Solution& s) {
  json doc{{"schema_version", kSchemaVersion},
           {"kind", "flows"},
           {"commodities", p.commodities},
           {"inputs", p.input_names},
           {"outputs", p.output_names},
           {"converged", s.trace.converged},
           {"consistency_passes", s.trace.consistency_passes}};
  json f = json::array();
  for (std::size_t i = 0; i < p.inputs; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < p.outputs; ++j) {
      std::vector<double> v;
      for (std::size_t c = 0; c < p.commodities; ++c) v.push_back(s.flows(i, j, c));
      row.push_back(v);
    }
    f.push_back(row);
  }
  doc["flows"] = f;
  return doc;
}

/// Reads a flow document; link names must match `p` in order.
inline FlowMatrix flows_from_json(const json& doc, const NodeProblem& p) {
  detail::Object o(doc, "$");
  o.allow({"schema_version", "kind", "commodities", "inputs", "outputs", "flows", "converged",
           "consistency_passes"});
  detail::header(o, "flows");
  const auto ins = detail::names(o.raw("inputs"), o.at("inputs"));
  const auto outs = detail::names(o.raw("outputs"), o.at("outputs"));
  const std::size_t C = o.count("commodities");
  if (ins.size() != p.inputs || outs.size() != p.outputs || C != p.commodities)
    throw DimensionError("flows are " + std::to_string(ins.size()) + "x" +
                         std::to_string(outs.size()) + "x" + std::to_string(C) + ", node is " +
                         std::to_string(p.inputs) + "x" + std::to_string(p.outputs) + "x" +
                         std::to_string(p.commodities));
  if (ins != p.input_names || outs != p.output_names)
    throw DimensionError("flow link names do not match the node's");
  const auto& f = o.array("flows");
  FlowMatrix out(p.inputs, p.outputs, p.commodities);
  if (f.size() != p.inputs) throw DimensionError("flows need one row per input");
  for (std::size_t i = 0; i < p.inputs; ++i) {
    const std::string row = "$.flows[" + std::to_string(i) + "]";
    if (!f[i].is_array() || f[i].size() != p.outputs)
      throw DimensionError(row + " needs one entry per output");
    for (std::size_t j = 0; j < p.outputs; ++j) {
      const auto v = detail::Object::as_numbers(f[i][j], row + "[" + std::to_string(j) + "]");
      if (v.size() != p.commodities)
        throw DimensionError(row + "[" + std::to_string(j) + "] needs one value per commodity");
      for (std::size_t c = 0; c < p.commodities; ++c) out(i, j, c) = v[c];
    }
  }
  return out;
}

inline json to_json(const AuditReport& r, const NodeProblem& p) {
  json doc{{"ok", r.ok()}};
  for (const auto& c : r.checks)
    doc["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"worst", c.worst},
                             {"where", c.where}});
  json w = json::object();
  for (std::size_t i = 0; i < p.inputs; ++i) {
    std::vector<std::string> n;
    for (std::size_t j : r.restricting[i]) n.push_back(p.output_names[j]);
    w[p.input_names[i]] = n;
  }
  doc["restricting"] = w;
  return doc;
}

// network documents

namespace detail {

inline Grid<double> split_matrix(const json& v, const std::string& path,
                                 const std::vector<std::string>& ins,
                                 const std::vector<std::string>& outs, std::size_t C) {
  if (!v.is_object()) throw SchemaError(path, "expected an object keyed by input name");
  Grid<double> g(ins.size(), outs.size(), C);
  for (const auto& [from, row] : v.items())
    read_split(row, path + "." + from, lookup(ins, from, path + "." + from), outs, C, g);
  return g;
}

inline double start_time(const Object& o, double prev, std::size_t k) {
  const double t = o.number("from", 0.0);
  if (k == 0 && t != 0.0) throw SchemaError(o.at("from"), "first piece must start at 0");
  if (k > 0 && !(t > prev)) throw SchemaError(o.at("from"), "pieces must be in increasing time");
  return t;
}

}  // namespace detail

inline Network network_from_json(const json& doc) {
  detail::Object o(doc, "$");
  o.allow({"schema_version", "kind", "name", "dt", "commodities", "links", "sources", "sinks",
           "junctions"});
  detail::header(o, "network");
  Network net;
  net.dt = o.number("dt");
  net.commodities = o.has("commodities") ? o.count("commodities") : 1;
  const std::size_t C = net.commodities;

  const auto& links = o.array("links");
  for (std::size_t l = 0; l < links.size(); ++l) {
    detail::Object lo(links[l], "$.links[" + std::to_string(l) + "]");
    lo.allow({"name", "length", "lanes", "free_speed", "wave_speed", "capacity", "jam_density",
              "cells", "initial_density"});
    Link k;
    k.name = lo.string("name");
    k.length = lo.number("length");
    k.lanes = static_cast<int>(lo.has("lanes") ? lo.count("lanes") : 1);
    k.fd.free_speed = lo.number("free_speed", k.fd.free_speed);
    k.fd.wave_speed = lo.number("wave_speed", k.fd.wave_speed);
    k.fd.capacity = lo.number("capacity", k.fd.capacity);
    k.fd.jam_density = lo.number("jam_density", k.fd.jam_density);
    if (lo.has("cells")) k.cells = lo.count("cells");
    if (lo.has("initial_density")) k.initial = lo.numbers("initial_density");
    net.links.push_back(std::move(k));
  }

  if (o.has("sources")) {
    const auto& src = o.array("sources");
    for (std::size_t s = 0; s < src.size(); ++s) {
      const std::string path = "$.sources[" + std::to_string(s) + "]";
      detail::Object so(src[s], path);
      so.allow({"link", "profile"});
      Source x{.link = so.string("link"), .rate = {}};
      const auto& prof = so.array("profile");
      double prev = 0.0;
      for (std::size_t k = 0; k < prof.size(); ++k) {
        detail::Object po(prof[k], path + ".profile[" + std::to_string(k) + "]");
        po.allow({"from", "rate"});
        prev = detail::start_time(po, prev, k);
        auto r = po.numbers("rate");
        if (r.size() != C) throw SchemaError(po.at("rate"), "expected one rate per commodity");
        x.rate.push_back({prev, std::move(r)});
      }
      net.sources.push_back(std::move(x));
    }
  }

  if (o.has("sinks")) {
    const auto& snk = o.array("sinks");
    for (std::size_t s = 0; s < snk.size(); ++s) {
      const std::string path = "$.sinks[" + std::to_string(s) + "]";
      detail::Object so(snk[s], path);
      so.allow({"link", "profile"});
      Sink x{.link = so.string("link"), .capacity = {}};
      if (so.has("profile")) {
        const auto& prof = so.array("profile");
        double prev = 0.0;
        for (std::size_t k = 0; k < prof.size(); ++k) {
          detail::Object po(prof[k], path + ".profile[" + std::to_string(k) + "]");
          po.allow({"from", "capacity"});
          prev = detail::start_time(po, prev, k);
          x.capacity.push_back({prev, po.number("capacity")});
        }
      }
      net.sinks.push_back(std::move(x));
    }
  }

  if (o.has("junctions")) {
    const auto& js = o.array("junctions");
    for (std::size_t n = 0; n < js.size(); ++n) {
      const std::string path = "$.junctions[" + std::to_string(n) + "]";
      detail::Object jo(js[n], path);
      jo.allow({"name", "inputs", "outputs", "priority_preset", "priority", "favored_input",
                "split", "eta"});
      Junction jn;
      jn.name = jo.has("name") ? jo.string("name") : "junction " + std::to_string(n);
      jn.inputs = detail::names(jo.raw("inputs"), jo.at("inputs"));
      jn.outputs = detail::names(jo.raw("outputs"), jo.at("outputs"));
      if (jo.has("priority_preset"))
        jn.priorities = detail::preset(jo.string("priority_preset"), jo.at("priority_preset"));
      if (jo.has("priority")) {
        jn.priority = jo.numbers("priority");
        if (!jo.has("priority_preset")) jn.priorities = PriorityPreset::kExplicit;
      }
      if (jo.has("favored_input")) jn.favored = jo.string("favored_input");
      const auto& prof = jo.array("split");
      double prev = 0.0;
      for (std::size_t k = 0; k < prof.size(); ++k) {
        const std::string pp = path + ".split[" + std::to_string(k) + "]";
        detail::Object po(prof[k], pp);
        po.allow({"from", "ratios"});
        prev = detail::start_time(po, prev, k);
        jn.split.push_back({prev, detail::split_matrix(po.raw("ratios"), po.at("ratios"),
                                                       jn.inputs, jn.outputs, C)});
      }
      jn.eta = Grid<IntervalSet>(jn.inputs.size(), jn.outputs.size(), jn.outputs.size(),
                                 IntervalSet::full());
      if (jo.has("eta")) {
        detail::Object eo(jo.raw("eta"), jo.at("eta"));
        for (const auto& [from, v] : jo.raw("eta").items())
          detail::read_eta(v, eo.at(from.c_str()),
                           detail::lookup(jn.inputs, from, eo.at(from.c_str())), jn.outputs,
                           jn.eta);
      }
      net.junctions.push_back(std::move(jn));
    }
  }
  return net;
}

// text output

/// 6 significant digits, as in the human-readable tables.
inline std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

inline std::string name_set(const std::vector<std::size_t>& idx,
                            const std::vector<std::string>& names) {
  std::string s = "{";
  for (std::size_t k = 0; k < idx.size(); ++k) s += (k ? "," : "") + names[idx[k]];
  return s + "}";
}

inline std::string table(const NodeProblem& p, const FlowMatrix& f) {
  std::ostringstream os;
  const int w = 12;
  for (std::size_t c = 0; c < p.commodities; ++c) {
    if (p.commodities > 1) os << "commodity " << c + 1 << "\n";
    os << std::setw(w) << "in\\out";
    for (const auto& n : p.output_names) os << std::setw(w) << n;
    os << "\n";
    for (std::size_t i = 0; i < p.inputs; ++i) {
      os << std::setw(w) << p.input_names[i];
      for (std::size_t j = 0; j < p.outputs; ++j) os << std::setw(w) << num(f(i, j, c));
      os << "\n";
    }
  }
  return os.str();
}

inline std::string table_csv(const NodeProblem& p, const FlowMatrix& f) {
  std::ostringstream os;
  os << "input,output,commodity,flow\n" << std::setprecision(17);
  for (std::size_t i = 0; i < p.inputs; ++i)
    for (std::size_t j = 0; j < p.outputs; ++j)
      for (std::size_t c = 0; c < p.commodities; ++c)
        os << p.input_names[i] << "," << p.output_names[j] << "," << c + 1 << "," << f(i, j, c)
           << "\n";
  return os.str();
}

inline const char* reason_name(AssignReason r) {
  switch (r) {
    case AssignReason::kDemandServed: return "demand served";
    case AssignReason::kSupplyShare: return "supply share";
    case AssignReason::kCappedAtOutput: return "running demand";
    case AssignReason::kFullyRestricted: return "fully restricted";
  }
  return "";
}

/// Walkthrough-style listing of each iteration.
inline std::string trace(const NodeProblem& p, const SolverTrace& tr) {
  const auto& in = p.input_names;
  const auto& out = p.output_names;
  std::ostringstream os;
  if (tr.consistency_passes > 1)
    os << "(final of " << tr.consistency_passes << " consistency passes"
       << (tr.converged ? "" : ", not converged") << ")\n";
  for (const auto& it : tr.iterations) {
    const std::string k = "(" + std::to_string(it.k) + ")";
    os << "k=" << it.k << ":\n";
    os << "  V" << k << " = " << name_set(it.unprocessed_outputs, out) << "\n";
    os << "  oriented priorities:\n";
    for (std::size_t i = 0; i < p.inputs; ++i) {
      bool any = false;
      std::ostringstream row;
      for (std::size_t j = 0; j < p.outputs; ++j) {
        if (it.oriented_priority(i, j) == 0.0) continue;
        row << "  p~_" << in[i] << "," << out[j] << " = " << num(it.oriented_priority(i, j));
        any = true;
      }
      if (any) os << "   " << row.str() << "\n";
    }
    os << "  ";
    for (std::size_t j : it.unprocessed_outputs)
      os << " a_" << out[j] << k << " = " << (std::isinf(it.a[j]) ? "inf" : num(it.a[j]));
    os << "\n  a_j*" << k << " = a_" << out[it.most_restrictive] << k << " = " << num(it.a_star);
    if (it.capped_fill && std::isinf(it.fill_time))
      os << "  (no output runs out with capped demands)";
    else if (it.capped_fill)
      os << "  (fills at " << num(it.fill_time) << " with capped demands)";
    os << "\n";
    if (it.branch == Branch::kFreeFlow) {
      os << "  U~" << k << " = " << name_set(it.unconstrained_inputs, in) << ": send full demand\n";
    } else {
      os << "  U~" << k << " = {}: " << name_set(it.congested_outputs, out) << " run out of supply\n";
    }
    for (const auto& a : it.assignments)
      os << "    f_" << in[a.input] << "," << out[a.output] << " = " << num(a.flow) << "  ("
         << reason_name(a.reason) << ")\n";
    for (const auto& r : it.rescalings)
      os << "    S~_" << in[r.input] << "," << out[r.output] << ": " << num(r.before) << " -> "
         << num(r.after) << "\n";
  }
  return os.str();
}

/// One row per link, cell, commodity and step.
inline void write_csv(std::ostream& os, const Network& net, const Trajectory& tr) {
  os << "time,link,cell,commodity,density,flow\n" << std::setprecision(10);
  for (const auto& f : tr.frames)
    for (std::size_t l = 0; l < f.density.size(); ++l)
      for (std::size_t x = 0; x < f.density[l].size(); ++x)
        for (std::size_t c = 0; c < net.commodities; ++c)
          os << f.t << "," << net.links[l].name << "," << x << "," << c + 1 << ","
             << f.density[l][x][c] << "," << f.outflow[l][x][c] << "\n";
}

inline json summary(const Network& net, const Trajectory& tr) {
  json doc{{"steps", tr.frames.size()}, {"dt", net.dt}, {"commodities", net.commodities}};
  const auto& t = tr.totals;
  for (std::size_t c = 0; c < net.commodities; ++c) {
    const double rel = t.entered[c] > 0.0 ? std::abs(t.imbalance(c)) / t.entered[c] : 0.0;
    doc["conservation"].push_back({{"commodity", c + 1},
                                   {"entered", t.entered[c]},
                                   {"exited", t.exited[c]},
                                   {"inside", t.inside[c]},
                                   {"relative_error", rel}});
  }
  // cumulative vehicles leaving each link
  const double h = net.dt / 3600.0;
  json through = json::object();
  for (std::size_t l = 0; l < net.links.size(); ++l) {
    std::vector<double> v(net.commodities, 0.0);
    for (const auto& f : tr.frames)
      for (std::size_t c = 0; c < net.commodities; ++c) v[c] += f.outflow[l].back()[c] * h;
    through[net.links[l].name] = v;
  }
  doc["link_outflow"] = through;
  json queues = json::object();
  for (std::size_t s = 0; s < net.sources.size(); ++s) {
    double peak = 0.0;
    for (const auto& f : tr.frames) {
      double q = 0.0;
      for (double x : f.queue[s]) q += x;
      peak = std::max(peak, q);
    }
    queues[net.sources[s].link] = peak;
  }
  doc["max_source_queue"] = queues;
  return doc;
}

}  // namespace nodeflow::io

#endif

// nodeflow: solve one junction, simulate a network, or audit a flow file.
//
// Exit codes: 0 success, 1 invalid input or failed audit, 2 IO, parse or
// dimension errors. NODEFLOW_LOG_LEVEL sets verbosity (default warn).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "nodeflow/nodeflow.hpp"

namespace fs = std::filesystem;
using namespace nodeflow;
using io::json;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kIo = 2 };

std::optional<PriorityPreset> preset_flag(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "demand") return PriorityPreset::kDemand;
  return io::detail::preset(s, "--priorities");
}

// Violations go to stdout as JSON so scripts can read them.
int report_invalid(const std::vector<Violation>& v) {
  json out{{"error", "validation"}};
  out["violations"] = json::array();
  for (const auto& x : v) out["violations"].push_back({{"code", x.code}, {"message", x.message}});
  std::cout << out.dump(2) << "\n";
  spdlog::error("node problem is invalid ({} violations)", v.size());
  return kInvalid;
}

int report_schema(const io::SchemaError& e) {
  std::cout << json{{"error", "schema"}, {"path", e.path()}, {"message", e.what()}}.dump(2) << "\n";
  spdlog::error("{}", e.what());
  return kInvalid;
}

NodeProblem load_node(const std::string& path, const std::string& priorities,
                      const std::string& favored) {
  const json doc = io::load(path);
  if (io::kind(doc) != "node")
    throw io::SchemaError("$.kind", "expected a node document, got \"" + io::kind(doc) + "\"");
  return io::node_from_json(doc).resolved(preset_flag(priorities), favored);
}

struct NodeArgs {
  std::string scenario, priorities, favored, format = "table";
  bool trace = false;
};

int solve_node(const NodeArgs& a) {
  const NodeProblem p = load_node(a.scenario, a.priorities, a.favored);
  if (auto v = validate(p); !v.empty()) return report_invalid(v);
  for (const auto& w : priority_warnings(p)) spdlog::warn("{}", w);

  const Solution s = solve_mimo(p, {.record_trace = a.trace});
  if (!s.trace.converged)
    spdlog::warn("no consistent solution after {} passes; flows are the last pass",
                 s.trace.consistency_passes);
  spdlog::info("solved {}x{} node, {} commodities, {} consistency passes", p.inputs, p.outputs,
               p.commodities, s.trace.consistency_passes);

  if (a.format == "json") {
    json doc = io::to_json(p, s);
    std::cout << doc.dump(2) << "\n";
  } else if (a.format == "csv") {
    std::cout << io::table_csv(p, s.flows);
  } else {
    std::cout << io::table(p, s.flows);
  }
  if (a.trace) (a.format == "table" ? std::cout : std::cerr) << "\n" << io::trace(p, s.trace);
  return kOk;
}

struct SimArgs {
  std::string scenario, out;
  double horizon = 3600.0;
};

int simulate(const SimArgs& a) {
  const json doc = io::load(a.scenario);
  if (io::kind(doc) != "network")
    throw io::SchemaError("$.kind", "expected a network document, got \"" + io::kind(doc) + "\"");
  const Network net = io::network_from_json(doc);

  std::size_t audited = 0, failed = 0;
  const auto tr = run(net, a.horizon, [&](const Frame& f, const std::vector<JunctionStep>& js) {
    for (std::size_t n = 0; n < js.size(); ++n) {
      ++audited;
      if (!audit(js[n].problem, js[n].solution.flows).ok()) {
        ++failed;
        spdlog::warn("junction '{}' flows fail the audit at t={}", net.junctions[n].name, f.t);
      }
    }
  });

  std::error_code ec;
  fs::create_directories(a.out, ec);
  std::ofstream csv(fs::path(a.out) / "trajectory.csv");
  std::ofstream sum(fs::path(a.out) / "summary.json");
  if (!csv || !sum) throw io::ParseError("cannot write to " + a.out);
  io::write_csv(csv, net, tr);
  json s = io::summary(net, tr);
  s["junction_audits"] = {{"checked", audited}, {"failed", failed}};
  sum << s.dump(2) << "\n";
  spdlog::info("{} steps written to {}", tr.frames.size(), a.out);
  return failed ? kInvalid : kOk;
}

struct VerifyArgs {
  std::string scenario, flows, priorities, favored, format = "text";
};

int verify(const VerifyArgs& a) {
  const NodeProblem p = load_node(a.scenario, a.priorities, a.favored);
  if (auto v = validate(p); !v.empty()) return report_invalid(v);
  const FlowMatrix f = io::flows_from_json(io::load(a.flows), p);
  const AuditReport r = audit(p, f);
  if (a.format == "json") {
    std::cout << io::to_json(r, p).dump(2) << "\n";
  } else {
    for (const auto& c : r.checks) {
      std::cout << (c.pass ? "pass  " : "FAIL  ") << c.name;
      if (!c.pass) std::cout << "  worst " << io::num(c.worst) << " at " << c.where;
      std::cout << "\n";
    }
  }
  return r.ok() ? kOk : kInvalid;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("nodeflow");
  logger->set_pattern("%^%l%$: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("NODEFLOW_LOG_LEVEL"))
    spdlog::set_level(spdlog::level::from_str(lvl));
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Node model solver, verifier and network simulator"};
  app.require_subcommand(1);
  const std::vector<std::string> presets{"explicit", "capacity", "onramp", "demand"};

  NodeArgs na;
  auto* sn = app.add_subcommand("solve-node", "Solve one junction and print its flows");
  sn->add_option("--scenario", na.scenario, "Node document (JSON)")->required();
  sn->add_flag("--trace", na.trace, "Print the per-iteration trace");
  sn->add_option("--format", na.format, "Output format")
      ->check(CLI::IsMember({"table", "json", "csv"}));
  sn->add_option("--priorities", na.priorities, "Override the document's priority preset")
      ->check(CLI::IsMember(presets));
  sn->add_option("--favored", na.favored, "Favored input for the onramp preset");

  SimArgs sa;
  auto* sim = app.add_subcommand("simulate", "Run a network scenario");
  sim->add_option("--scenario", sa.scenario, "Network document (JSON)")->required();
  sim->add_option("--horizon", sa.horizon, "Simulated seconds")->check(CLI::NonNegativeNumber);
  sim->add_option("--out", sa.out, "Output directory")->required();

  VerifyArgs va;
  auto* ver = app.add_subcommand("verify", "Audit a flow file against a node document");
  ver->add_option("--scenario", va.scenario, "Node document (JSON)")->required();
  ver->add_option("--flows", va.flows, "Flow document (JSON), e.g. solve-node --format json")
      ->required();
  ver->add_option("--priorities", va.priorities, "Override the document's priority preset")
      ->check(CLI::IsMember(presets));
  ver->add_option("--favored", va.favored, "Favored input for the onramp preset");
  ver->add_option("--format", va.format, "Report format")->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kIo;
  }

  try {
    if (*sn) return solve_node(na);
    if (*sim) return simulate(sa);
    if (*ver) return verify(va);
  } catch (const io::SchemaError& e) {
    return report_schema(e);
  } catch (const ValidationError& e) {
    return report_invalid(e.violations());
  } catch (const ConfigError& e) {
    std::cout << json{{"error", "config"}, {"message", e.what()}}.dump(2) << "\n";
    spdlog::error("{}", e.what());
    return kInvalid;
  } catch (const DimensionError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const io::ParseError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kIo;
  }
  return kOk;
}

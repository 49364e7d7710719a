#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "nodeflow/io.hpp"

namespace fs = std::filesystem;
using nodeflow::io::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// stdout only; stderr carries log lines
Result cli(const std::string& args) {
  const std::string cmd = std::string(NODEFLOW_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string scenario(const std::string& name) {
  return std::string(NODEFLOW_SOURCE_DIR) + "/scenarios/" + name;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nodeflow_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  static std::string read(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SolveNodeReproducesExampleOne) {
  const auto r = cli("solve-node --scenario " + scenario("example_one.json") + " --format csv");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "input,output,commodity,flow");
  std::map<std::string, double> f;
  while (std::getline(in, line)) {
    const auto b = line.find(',', line.find(',') + 1), c = line.find(',', b + 1);
    f[line.substr(0, b)] = std::stod(line.substr(c + 1));
  }
  EXPECT_NEAR(f["2,8"], 1157.4, 0.1);
  EXPECT_NEAR(f["3,8"], 542.6, 0.1);
  EXPECT_NEAR(f["4,7"], 644.5, 0.1);
}

TEST_F(Cli, SolveNodeFullFifoAndTrace) {
  auto r = cli("solve-node --scenario " + scenario("example_one_fullfifo.json"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("68.4834"), std::string::npos);
  r = cli("solve-node --scenario " + scenario("example_one.json") + " --trace");
  EXPECT_NE(r.out.find("k=3:"), std::string::npos);
}

TEST_F(Cli, PriorityPresetFlag) {
  const auto r = cli("solve-node --scenario " + scenario("example_two.json") +
                     " --priorities onramp --format json");
  ASSERT_EQ(r.code, 0);
  const auto doc = json::parse(r.out);
  EXPECT_DOUBLE_EQ(doc["flows"][2][0][0].get<double>(), 400.0);
  EXPECT_DOUBLE_EQ(doc["flows"][2][1][1].get<double>(), 100.0);
}

TEST_F(Cli, MalformedSplitsExitOne) {
  auto doc = nodeflow::io::load(scenario("example_one.json"));
  doc["inputs"][2]["split"]["5"] = {0.5};
  const auto r = cli("solve-node --scenario " + write("bad.json", doc.dump()));
  EXPECT_EQ(r.code, 1);
  const auto diag = json::parse(r.out);
  EXPECT_EQ(diag["error"], "validation");
  EXPECT_EQ(diag["violations"][0]["code"], "split");
}

TEST_F(Cli, ParseAndIoErrorsExitTwo) {
  EXPECT_EQ(cli("solve-node --scenario " + (dir_ / "missing.json").string()).code, 2);
  EXPECT_EQ(cli("solve-node --scenario " + write("junk.json", "{not json")).code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
}

TEST_F(Cli, SolveThenVerifyRoundTrip) {
  for (const char* name : {"example_one.json", "example_one_fullfifo.json", "example_two.json"}) {
    const auto r = cli("solve-node --scenario " + scenario(name) + " --format json");
    ASSERT_EQ(r.code, 0) << name;
    const auto flows = write("flows.json", r.out);
    EXPECT_EQ(cli("verify --scenario " + scenario(name) + " --flows " + flows).code, 0) << name;
  }
}

TEST_F(Cli, VerifyCatchesPerturbedFlows) {
  auto doc = json::parse(cli("solve-node --scenario " + scenario("example_one.json") +
                             " --format json").out);
  doc["flows"][1][3][0] = doc["flows"][1][3][0].get<double>() + 1.0;
  const auto r = cli("verify --scenario " + scenario("example_one.json") + " --flows " +
                     write("f.json", doc.dump()) + " --format json");
  EXPECT_EQ(r.code, 1);
  const auto rep = json::parse(r.out);
  for (const auto& c : rep["checks"])
    if (c["name"] == "supply") {
      EXPECT_FALSE(c["pass"].get<bool>());
      EXPECT_NEAR(c["worst"].get<double>(), 1.0, 1e-6);
    }
}

TEST_F(Cli, VerifyWrongDimensionsExitTwo) {
  auto doc = json::parse(cli("solve-node --scenario " + scenario("example_two.json") +
                             " --format json").out);
  const auto r = cli("verify --scenario " + scenario("example_one.json") + " --flows " +
                     write("f.json", doc.dump()));
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, SimulateGoldenSnapshot) {
  const auto out = dir_ / "sim";
  ASSERT_EQ(cli("simulate --scenario " + scenario("diverge.json") + " --horizon 900 --out " +
                out.string()).code, 0);
  const std::string golden = std::string(NODEFLOW_SOURCE_DIR) + "/tests/golden/diverge_900s.csv";
  EXPECT_EQ(read(out / "trajectory.csv"), read(golden));
  const auto summary = json::parse(read(out / "summary.json"));
  EXPECT_EQ(summary["junction_audits"]["failed"], 0);
  EXPECT_EQ(summary["steps"], 180);
}

TEST_F(Cli, SimulateIsByteStable) {
  const auto a = dir_ / "a", b = dir_ / "b";
  cli("simulate --scenario " + scenario("managed_lane.json") + " --horizon 600 --out " + a.string());
  cli("simulate --scenario " + scenario("managed_lane.json") + " --horizon 600 --out " + b.string());
  EXPECT_EQ(read(a / "trajectory.csv"), read(b / "trajectory.csv"));
  EXPECT_EQ(read(a / "summary.json"), read(b / "summary.json"));
}

TEST_F(Cli, SimulateHorizonZeroWritesHeaderOnly) {
  ASSERT_EQ(cli("simulate --scenario " + scenario("diverge.json") + " --horizon 0 --out " +
                (dir_ / "z").string()).code, 0);
  EXPECT_EQ(read(dir_ / "z" / "trajectory.csv"), "time,link,cell,commodity,density,flow\n");
}

TEST_F(Cli, SimulateConfigErrorsExitOne) {
  auto doc = nodeflow::io::load(scenario("diverge.json"));
  doc["sources"][0]["link"] = "nowhere";
  auto r = cli("simulate --scenario " + write("n.json", doc.dump()) + " --out " +
               (dir_ / "o").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("nowhere"), std::string::npos);

  doc = nodeflow::io::load(scenario("diverge.json"));
  doc["links"][1]["cells"] = 10;  // 50 m cells, 139 m per step
  r = cli("simulate --scenario " + write("c.json", doc.dump()) + " --out " + (dir_ / "o").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("CFL"), std::string::npos);
  EXPECT_NE(r.out.find("off1"), std::string::npos);
}

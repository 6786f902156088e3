// End-to-end runs of the fracschro executable.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fracschro/cli/io.hpp"

namespace fs = std::filesystem;
using fracschro::cli::read_csv;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Tool : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("fracschro_tool_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  Result run(const std::string& args) const {
    const auto o = dir_ / "stdout.txt";
    const auto e = dir_ / "stderr.txt";
    const std::string cmd = std::string("env -u FRACSCHRO_OUTPUT_ROOT '") + FRACSCHRO_TOOL + "' " + args + " >'" +
                            o.string() + "' 2>'" + e.string() + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
  }

  /// Writes a config whose output goes to <dir>/<name>; `body` supplies every
  /// section except [output].
  fs::path config(const std::string& name, const std::string& body) const {
    const auto p = dir_ / (name + ".cfg");
    std::ofstream(p) << body << "\n[output]\ndir = " << (dir_ / name).string() << "\n";
    return p;
  }

  fs::path dir_;
};

const char* kGaussian = R"([grid]
x0 = -10
h = 0.15625
n = 128
boundary = periodic
[physics]
alpha = 1
beta = 1
[initial]
type = gaussian
width = 1
k = 0
[run]
t_final = 0.1
dt = 0.01
snapshot_stride = 2
[diagnostics]
trajectories = -1, 0
)";

const char* kPlane = R"([grid]
x0 = 0
h = 0.09817477042468103
n = 64
boundary = periodic
[physics]
alpha = 1
beta = 1
[initial]
type = plane_wave
k = 2
[run]
t_final = 0.05
dt = 0.01
[diagnostics]
trajectories = 1
)";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  if (at == std::string::npos) throw std::logic_error("pattern not found: " + from);
  return s.replace(at, from.size(), to);
}

}  // namespace

TEST_F(Tool, VersionAndUsage) {
  EXPECT_EQ(run("--version").code, 0);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("evolve").code, 1);
}

TEST_F(Tool, EvolveWritesSnapshotsAndManifest) {
  const auto r = run("evolve '" + config("g", kGaussian).string() + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto out = dir_ / "g";
  // steps 0, 2, ..., 10
  for (int i = 0; i < 6; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%04d.csv", i);
    const auto t = read_csv(out / name);
    EXPECT_EQ(t.header, (std::vector<std::string>{"x", "re_psi", "im_psi", "rho"}));
    EXPECT_EQ(t.rows.size(), 128u);
  }
  EXPECT_FALSE(fs::exists(out / "snapshot_0006.csv"));
  EXPECT_FALSE(fs::exists(out / "continuity_0000.csv"));
  const auto c = read_csv(out / "continuity_0005.csv");
  EXPECT_EQ(c.header, (std::vector<std::string>{"x", "rho_dt", "dJ_dx", "residual"}));
  EXPECT_EQ(c.rows.size(), 128u);
  const auto manifest = slurp(out / "manifest_evolve.txt");
  for (const char* key : {"[manifest]", "[summary]", "command = evolve", "code_version", "probability_drift",
                          "continuity_residual_l2_final", "memory_mode = full", "steps = 10"})
    EXPECT_NE(manifest.find(key), std::string::npos) << key;
}

TEST_F(Tool, KleinGordonResidualFiles) {
  const auto r = run("evolve '" + config("kg", std::string(kPlane) + "kg_residual = true\n").string() + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_FALSE(fs::exists(dir_ / "kg" / "kg_residual_0001.csv"));
  EXPECT_EQ(read_csv(dir_ / "kg" / "kg_residual_0005.csv").rows.size(), 64u);
}

TEST_F(Tool, ConfigErrorsExitOne) {
  auto bad = replace(kGaussian, "beta = 1", "beta = 0.5");
  auto r = run("evolve '" + config("b", bad).string() + "'");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("run.scheme"), std::string::npos) << r.err;
  r = run("evolve '" + (dir_ / "missing.cfg").string() + "'");
  EXPECT_EQ(r.code, 1);
  r = run("bohm '" + config("s", replace(kGaussian, "-1, 0", "-1, 40")).string() + "'");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("diagnostics.trajectories"), std::string::npos) << r.err;
}

TEST_F(Tool, InstabilityExitsTwoNamingTheStep) {
  auto text = replace(kGaussian, "beta = 1", "beta = 0.9");
  text = replace(text, "dt = 0.01", "dt = 0.05");
  text = replace(text, "snapshot_stride = 2", "snapshot_stride = 2\nscheme = frac_explicit");
  const auto r = run("evolve '" + config("u", text).string() + "'");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("step 1"), std::string::npos) << r.err;
}

TEST_F(Tool, BohmOnRealGaussian) {
  auto text = replace(kGaussian, "t_final = 0.1", "t_final = 0");
  text = replace(text, "-1, 0", "");
  // Gaussian of width 1/sqrt(2): R = pi^(-1/4) exp(-x^2/2)
  text = replace(text, "width = 1", "width = 0.7071067811865476");
  const auto r = run("bohm '" + config("q", text).string() + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = read_csv(dir_ / "q" / "bohm_0000.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"x", "R", "S", "Q", "p", "v", "F", "E", "K", "balance_residual",
                                                "node_mask"}));
  const auto cS = t.column("S");
  const auto cQ = t.column("Q");
  for (const auto& row : t.rows) EXPECT_EQ(row[cS], 0.0);
  EXPECT_NEAR(t.rows[64][cQ], 0.5, 2e-2);
  EXPECT_TRUE(std::isnan(t.rows[64][t.column("E")]));
  EXPECT_FALSE(fs::exists(dir_ / "q" / "trajectory_0000.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "q" / "manifest_bohm.txt"));
}

TEST_F(Tool, BohmOnPlaneWave) {
  const auto r = run("bohm '" + config("p", kPlane).string() + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = read_csv(dir_ / "p" / "bohm_0005.csv");
  const auto cp = t.column("p");
  const auto cb = t.column("balance_residual");
  for (const auto& row : t.rows) {
    EXPECT_NEAR(row[cp], 2.0, 1e-9);
    EXPECT_TRUE(std::isfinite(row[cb]));
  }
  const auto tr = read_csv(dir_ / "p" / "trajectory_0000.csv");
  ASSERT_EQ(tr.rows.size(), 6u);
  EXPECT_NEAR(tr.rows.back()[1], 1.0 + 2.0 * 0.05, 1e-9);
}

TEST_F(Tool, DeBroglieTable) {
  auto r = run("debroglie --alpha 0.5 --k 0,1 --omega 4");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string header, row0, row1;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  EXPECT_EQ(header, "alpha,k,omega,E,p");
  EXPECT_EQ(row0.rfind("0.5,0,4,", 0), 0u) << row0;
  const double E = std::stod(row0.substr(std::string("0.5,0,4,").size()));
  EXPECT_NEAR(E, std::sqrt(std::numbers::pi), 1e-12);
  EXPECT_EQ(row0.substr(row0.rfind(',') + 1), "0");

  r = run("debroglie --alpha 1 --k 1 2 --omega 3 --out '" + (dir_ / "db.csv").string() + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = read_csv(dir_ / "db.csv");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][3], 3.0);
  EXPECT_EQ(t.rows[1][4], 2.0);

  EXPECT_EQ(run("debroglie --alpha 0.5 --omega 1").code, 1);
  EXPECT_EQ(run("debroglie --alpha 1.5 --k 1 --omega 1").code, 1);
  EXPECT_EQ(run("debroglie --alpha 0.5 --k -1 --omega 1").code, 1);
}

TEST_F(Tool, PlotScripts) {
  ASSERT_EQ(run("evolve '" + config("e", kGaussian).string() + "'").code, 0);
  ASSERT_EQ(run("plots '" + (dir_ / "e").string() + "'").code, 0);
  const auto dens = slurp(dir_ / "e" / "plot_density.gp");
  EXPECT_NE(dens.find("'snapshot_0000.csv'"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "e" / "plot_continuity.gp"));
  EXPECT_FALSE(fs::exists(dir_ / "e" / "plot_quantum_potential.gp"));

  ASSERT_EQ(run("bohm '" + config("b", kGaussian).string() + "'").code, 0);
  ASSERT_EQ(run("plots '" + (dir_ / "b").string() + "'").code, 0);
  EXPECT_NE(slurp(dir_ / "b" / "plot_quantum_potential.gp").find("bohm_0000.csv"), std::string::npos);
  EXPECT_NE(slurp(dir_ / "b" / "plot_trajectories.gp").find("trajectory_0001.csv"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "b" / "plot_energy_balance.gp"));

  fs::create_directories(dir_ / "empty");
  EXPECT_EQ(run("plots '" + (dir_ / "empty").string() + "'").code, 1);
  EXPECT_EQ(run("plots '" + (dir_ / "nowhere").string() + "'").code, 1);
}

TEST_F(Tool, AllNodeInputExitsThree) {
  {
    std::ofstream f(dir_ / "zero.csv");
    f << "x,re_psi,im_psi\n";
    for (int j = 0; j < 16; ++j) f << 0.25 * j << ",0,0\n";
  }
  const std::string text = R"([grid]
x0 = 0
h = 0.25
n = 16
[physics]
alpha = 1
beta = 1
[initial]
type = from_file
path = zero.csv
[run]
t_final = 0.02
dt = 0.01
)";
  const auto r = run("bohm '" + config("z", text).string() + "'");
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST_F(Tool, DeterministicAndRestartable) {
  const auto a = config("a", kGaussian);
  const auto b = config("b", kGaussian);
  ASSERT_EQ(run("bohm '" + a.string() + "'").code, 0);
  ASSERT_EQ(run("bohm '" + b.string() + "'").code, 0);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "a")) {
    if (e.path().extension() != ".csv") continue;
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / e.path().filename())) << e.path().filename();
    ++compared;
  }
  EXPECT_GT(compared, 5u);

  // a snapshot fed back through from_file continues the same state
  ASSERT_EQ(run("evolve '" + config("src", kGaussian).string() + "'").code, 0);
  auto text = replace(kGaussian, "type = gaussian", "type = from_file\npath = src/snapshot_0000.csv");
  text = replace(text, "width = 1\nk = 0\n", "");
  ASSERT_EQ(run("evolve '" + config("dst", text).string() + "'").code, 0);
  EXPECT_EQ(slurp(dir_ / "src" / "snapshot_0005.csv"), slurp(dir_ / "dst" / "snapshot_0005.csv"));
}

TEST_F(Tool, OutputRootEnvironment) {
  const auto cfg = dir_ / "rel.cfg";
  std::ofstream(cfg) << kGaussian << "\n[output]\ndir = relative_run\n";
  const std::string cmd = "FRACSCHRO_OUTPUT_ROOT='" + dir_.string() + "/root' '" + std::string(FRACSCHRO_TOOL) +
                          "' evolve '" + cfg.string() + "' >/dev/null 2>&1";
  ASSERT_EQ(WEXITSTATUS(std::system(cmd.c_str())), 0);
  EXPECT_TRUE(fs::exists(dir_ / "root" / "relative_run" / "snapshot_0000.csv"));
}

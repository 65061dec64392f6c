// Runs the faivconf binary end to end and checks exit codes and output.

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int status = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(FAIVCONF_BIN) + " " + args + " 2>&1";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

struct Cli : ::testing::Test {
  fs::path dir = fs::temp_directory_path() / "faiv_cli_test";
  void SetUp() override {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string writeConfig(const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  }
};

} // namespace

TEST_F(Cli, SimulateStatsEncodeDecode) {
  const auto cfg = writeConfig("hold.cfg", "width = 256\nheight = 256\nframes = 100\ntrajectory = hold\n");
  const CliRun sim = run("simulate --config " + cfg + " --out " + (dir / "sim").string());
  ASSERT_EQ(sim.status, 0) << sim.out;
  EXPECT_NE(sim.out.find("source_messages=1\n"), std::string::npos);
  EXPECT_NE(sim.out.find("driving_messages=99\n"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "sim" / "report.csv"));
  EXPECT_TRUE(fs::exists(dir / "sim" / "frames" / "frame_00099.png"));

  const CliRun stats = run("stats --in " + (dir / "sim" / "session.fvc").string());
  ASSERT_EQ(stats.status, 0);
  EXPECT_EQ(stats.out, sim.out);

  const CliRun enc = run("encode --frames " + (dir / "sim" / "frames").string() + " --config " + cfg +
                      " --out " + (dir / "re.fvc").string());
  ASSERT_EQ(enc.status, 0) << enc.out;
  const CliRun dec = run("decode --in " + (dir / "re.fvc").string() + " --config " + cfg + " --out " +
                      (dir / "decoded").string());
  ASSERT_EQ(dec.status, 0) << dec.out;
  EXPECT_EQ(dec.out, "frames=100\n");
}

TEST_F(Cli, BudgetSweepAndErrors) {
  const auto cfg = writeConfig("s.cfg", "width = 256\nheight = 256\nframes = 8\ntrajectory = sweep(0,30)\n");
  const CliRun ok = run("budget-sweep --config " + cfg + " --budgets unlimited,800,300 --out " +
                     (dir / "sweep.csv").string());
  ASSERT_EQ(ok.status, 0) << ok.out;
  EXPECT_EQ(ok.out.rfind("budget,tier,bpp", 0), 0u);

  const CliRun tiny = run("budget-sweep --config " + cfg + " --budgets 24 --out " + (dir / "x.csv").string());
  EXPECT_EQ(tiny.status, 1);
  EXPECT_NE(tiny.out.find("error code=invalid-argument"), std::string::npos) << tiny.out;

  const auto bad = writeConfig("bad.cfg", "frames = -3\n");
  const CliRun badCfg = run("simulate --config " + bad + " --out " + (dir / "o").string());
  EXPECT_EQ(badCfg.status, 1);
  EXPECT_NE(badCfg.out.find("error code=config-error"), std::string::npos) << badCfg.out;

  const CliRun missing = run("stats --in " + (dir / "nope.fvc").string());
  EXPECT_EQ(missing.status, 1);
  EXPECT_NE(missing.out.find("error code=io-error"), std::string::npos) << missing.out;

  EXPECT_EQ(run("simulate").status, 2);
  EXPECT_EQ(run("").status, 2);
}

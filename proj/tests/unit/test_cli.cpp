// Runs the installed CLI binary end to end. Paths come from the build system.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args, const fs::path& stderr_file = "/dev/null") {
  const std::string cmd = std::string(NFISAC_CLI_PATH) + " " + args + " >/dev/null 2>" +
                          stderr_file.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nfisac_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string config() const { return std::string(NFISAC_GOLDEN_DIR) + "/small_config.json"; }

  fs::path dir_;
};

std::string second_line(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  return line + "\n";
}

}  // namespace

TEST_F(CliTest, HeadersMatchGoldenFiles) {
  for (const std::string cmd :
       {"crlb-sweep", "optimize-beamformer", "estimate", "monte-carlo", "rate-sweep"}) {
    const fs::path out = dir_ / (cmd + ".csv");
    ASSERT_EQ(run_cli(cmd + " --config " + config() + " --workers 1 -o " + out.string()), 0) << cmd;
    const std::string text = slurp(out);
    EXPECT_EQ(text.rfind("# nfisac ", 0), 0u) << cmd;
    EXPECT_EQ(second_line(text), slurp(fs::path(NFISAC_GOLDEN_DIR) / (cmd + ".header"))) << cmd;
    EXPECT_TRUE(fs::exists(out.string() + ".json")) << cmd;
  }
  EXPECT_EQ(second_line(slurp(dir_ / "monte-carlo_trials.csv")),
            slurp(fs::path(NFISAC_GOLDEN_DIR) / "monte-carlo_trials.header"));
}

TEST_F(CliTest, SidecarRecordsResolvedConfig) {
  const fs::path out = dir_ / "c.csv";
  ASSERT_EQ(run_cli("crlb-sweep --config " + config() + " --seed 99 -o " + out.string()), 0);
  const std::string side = slurp(out.string() + ".json");
  EXPECT_NE(side.find("\"master_seed\": 99"), std::string::npos);
  EXPECT_NE(side.find("\"command\": \"crlb-sweep\""), std::string::npos);
  EXPECT_NE(slurp(out).find("seed=99"), std::string::npos);
}

TEST_F(CliTest, ZeroNoiseEstimateRecoversScenario) {
  const fs::path out = dir_ / "e.csv";
  ASSERT_EQ(run_cli("estimate --config " + config() + " --zero-noise -o " + out.string()), 0);
  std::istringstream in(slurp(out));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::getline(in, line);
  double d_true, th_true, d_hat, th_hat;
  char comma;
  std::istringstream row(line);
  row >> d_true >> comma >> th_true >> comma >> d_hat >> comma >> th_hat;
  EXPECT_NEAR(d_hat, d_true, 1e-6);
  EXPECT_NEAR(th_hat, th_true, 1e-6);
}

TEST_F(CliTest, ExitCodesDistinguishUsageAndRuntimeErrors) {
  const fs::path err = dir_ / "err.txt";
  EXPECT_EQ(run_cli("no-such-command", err), 1);
  EXPECT_EQ(run_cli("crlb-sweep --trials -3", err), 1);
  EXPECT_EQ(run_cli("crlb-sweep --reduced-m --full-m -o " + (dir_ / "x.csv").string(), err), 1);

  const fs::path bad = dir_ / "bad.json";
  std::ofstream(bad) << R"({"radii_m": [0.5], "distances_m": [0.3]})";
  EXPECT_EQ(run_cli("crlb-sweep --config " + bad.string(), err), 1);
  EXPECT_NE(slurp(err).find("nfisac-error"), std::string::npos);
  EXPECT_NE(slurp(err).find("distances_m"), std::string::npos);

  const fs::path unknown = dir_ / "unknown.json";
  std::ofstream(unknown) << R"({"bogus_key": 1})";
  EXPECT_EQ(run_cli("crlb-sweep --config " + unknown.string(), err), 1);
  EXPECT_NE(slurp(err).find("bogus_key"), std::string::npos);

  EXPECT_EQ(run_cli("crlb-sweep --config " + config() + " -o /nonexistent/dir/out.csv", err), 2);
  EXPECT_NE(slurp(err).find("\"kind\":\"runtime\""), std::string::npos);
}

TEST_F(CliTest, ConfigPathFromEnvironment) {
  const fs::path out = dir_ / "env.csv";
  const std::string cmd = "NFISAC_CONFIG=" + config() + " " + std::string(NFISAC_CLI_PATH) +
                          " crlb-sweep -o " + out.string() + " >/dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  const std::string text = slurp(out);
  // small_config has exactly one radius and one distance.
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

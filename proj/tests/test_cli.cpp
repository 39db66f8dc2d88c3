#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>

#include "test_util.hpp"

namespace {

struct CliRun {
  int code;
  std::string out;
};

CliRun cli(const std::string& args) {
  const std::string cmd = std::string(PRIORCLEAN_CLI) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

}  // namespace

TEST(Cli, EnumerateCounts) {
  EXPECT_EQ(cli("enumerate --suite discrete7").out, "112\n");
  EXPECT_EQ(cli("enumerate --suite extended9").out, "302\n");
  EXPECT_EQ(cli("enumerate --suite param17").out, "834\n");
  const CliRun list = cli("enumerate --suite discrete7 --list");
  EXPECT_EQ(list.code, 0);
  EXPECT_EQ(list.out.substr(0, 5), "noop\n");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
  EXPECT_EQ(cli("enumerate --suite nope").code, 1);
  EXPECT_EQ(cli("profile --in /nonexistent.csv").code, 1);
  EXPECT_EQ(cli("greedy --in /nonexistent.csv").code, 1);
  // A sidecar that cannot be started is an internal failure.
  testutil::TempDir dir;
  ASSERT_EQ(cli("synth --rows 60 --out " + (dir / "s.csv").string()).code, 0);
  std::string data;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) data = e.path().string();
  ASSERT_FALSE(data.empty());
  EXPECT_EQ(cli("greedy --in " + data + " --np 20 --evaluator external --evaluator-cmd /nonexistent/x").code, 2);
}

TEST(Cli, SynthInjectProfileGreedy) {
  testutil::TempDir dir;
  const std::string d = dir.path().string();
  ASSERT_EQ(cli("--seed 3 synth --rows 120 --numeric 3 --out " + d + "/toy.csv").code, 0);
  ASSERT_EQ(cli("inject --in " + d + "/toy.csv --type mcar --rate 15 --name toy --out " + d).code, 0);
  ASSERT_TRUE(std::filesystem::exists(dir / "toy_mcar_p15.csv"));
  const CliRun prof = cli("profile --in " + d + "/toy_mcar_p15.csv");
  EXPECT_EQ(prof.code, 0);
  EXPECT_NE(prof.out.find("\"rows\": 120"), std::string::npos);
  const CliRun g = cli("greedy --in " + d + "/toy_mcar_p15.csv --np 20 --reward R1,R3 --evaluator mock");
  EXPECT_EQ(g.code, 0);
  EXPECT_NE(g.out.find("R3"), std::string::npos);
}

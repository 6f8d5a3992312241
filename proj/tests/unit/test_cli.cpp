#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& arguments) {
  const std::string command = std::string(TURBCANCEL_CLI_PATH) + " " + arguments + " 2>/dev/null";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir =
      fs::temp_directory_path() / ("turbcancel_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Cli, HelpExitsCleanly) { EXPECT_EQ(run_cli("--help >/dev/null"), 0); }

TEST(Cli, UnknownSubcommandIsUsageError) { EXPECT_EQ(run_cli("plot"), 2); }

TEST(Cli, InvalidConfigIsUsageError) {
  const auto dir = scratch_dir("config");
  std::ofstream(dir / "bad.ini") << "[setup]\nw0 = -5um\n";
  EXPECT_EQ(run_cli("calibrate --config " + (dir / "bad.ini").string()), 2);
  EXPECT_EQ(run_cli("run --channel laser --out " + dir.string()), 2);
  fs::remove_all(dir);
}

TEST(Cli, MissingConfigFileIsIoError) {
  EXPECT_EQ(run_cli("calibrate --config /nonexistent/turbcancel.ini"), 4);
}

TEST(Cli, ReportWithoutInputsIsIoError) {
  const auto dir = scratch_dir("report");
  EXPECT_EQ(run_cli("report --out " + dir.string()), 4);
  fs::remove_all(dir);
}

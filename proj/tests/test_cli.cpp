#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(UAVPFL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("uavpfl_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  CHECK(run("channel-probe --distance 150") == 0);
  CHECK(run("run --rounds 2 --alpha 0.25 --out " + (dir / "ok").string()) == 0);
  CHECK(fs::exists(dir / "ok" / "trace.csv"));

  CHECK(run("run --alpha 0 --rounds 1 --out " + (dir / "bad").string()) == 1);
  CHECK(run("run --policy nonsense --rounds 1") == 1);
  CHECK(run("run --placement hex --rounds 1") == 1);
  CHECK(run("--no-such-flag") == 1);
  CHECK(run("") == 1);

  std::ofstream(dir / "broken.json") << "{\"alpha\": ";
  CHECK(run("run --config " + (dir / "broken.json").string()) == 1);

  // Runtime failure: PPP that realises no devices.
  std::ofstream(dir / "empty.json") << R"({"placement": "ppp", "ppp_intensity_per_m2": 1e-12})";
  CHECK(run("run --rounds 1 --config " + (dir / "empty.json").string() + " --out " + (dir / "e").string()) == 2);
  CHECK(run("channel-probe --distance 0") == 2);

  CHECK(run("sweep --rounds 1 --out " + (dir / "sweep").string()) == 0);
  CHECK(fs::exists(dir / "sweep" / "sweep" / "base" / "trace.csv"));
  fs::remove_all(dir);
}

TEST_CASE("diagnose writes both reports") {
  const auto dir = scratch("diag");
  CHECK(run("diagnose --rounds 2 --alphas 0.5,1.0 --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "diagnostics.csv"));
  CHECK(fs::exists(dir / "bound_report.json"));
  fs::remove_all(dir);
}

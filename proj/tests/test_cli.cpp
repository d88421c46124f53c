// Runs the flipctl executable and checks its exit codes.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kScratch = fs::path(FLIPCTL_TEST_SCRATCH_DIR) / "cli";

int run(const std::string& args) {
  const std::string cmd = std::string("FLIPCTL_LOG=quiet '") + FLIPCTL_CLI_PATH + "' " + args +
                          " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& body) {
  fs::create_directories(kScratch);
  const fs::path p = kScratch / name;
  std::ofstream(p) << body;
  return p;
}

std::string example2_paths() {
  const fs::path dir = fs::path(FLIPCTL_TEST_DATA_DIR) / "example2";
  return "network = " + (dir / "network.txt").string() + "\nproblem = " +
         (dir / "problem.txt").string() + "\n";
}

}  // namespace

TEST_CASE("successful commands exit 0") {
  const fs::path cfg = write_config("k.cfg", example2_paths() + "max_steps = 10\nseeds = 0\n");
  CHECK(run("kernels --config '" + cfg.string() + "' --out '" + (kScratch / "k").string() + "'") == 0);
  CHECK(fs::exists(kScratch / "k" / "kernels.txt"));
  const fs::path o = write_config("o.cfg", example2_paths() + "flipset = {2,3}\n");
  CHECK(run("oracle --config '" + o.string() + "' --out '" + (kScratch / "o").string() + "'") == 0);
}

TEST_CASE("usage and configuration errors exit 1") {
  CHECK(run("") == 1);
  CHECK(run("kernels") == 1);
  CHECK(run("frobnicate --config x") == 1);
  CHECK(run("replicate example9 --out '" + (kScratch / "r9").string() + "'") == 1);
  const fs::path missing = write_config("p.cfg", example2_paths() + "w = 8\n");
  CHECK(run("policy --config '" + missing.string() + "' --out '" + (kScratch / "p").string() + "'") == 1);
  fs::create_directories(kScratch);
  std::ofstream(kScratch / "bad_net.txt") << "nodes: 2\ninputs: 0\nx1' = x1 &\n";
  const fs::path bad = write_config(
      "bad.cfg", "network = bad_net.txt\nproblem = " +
                     (fs::path(FLIPCTL_TEST_DATA_DIR) / "example2" / "problem.txt").string() + "\n");
  CHECK(run("kernels --config '" + bad.string() + "'") == 1);
}

TEST_CASE("unreachable verdicts exit 2") {
  const fs::path cfg = write_config("u.cfg", example2_paths() + "flipset = {}\n");
  CHECK(run("oracle --config '" + cfg.string() + "' --out '" + (kScratch / "u").string() + "'") == 2);
}

TEST_CASE("failed replication assertions exit 3") {
  // One episode per flip set cannot certify the published kernels.
  const fs::path cfg = write_config("r.cfg", "episodes = 1\nseeds = 0\n");
  CHECK(run("replicate example2 --config '" + cfg.string() + "' --out '" +
            (kScratch / "r").string() + "'") == 3);
}

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "fixtures.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(CFK_BIN) + " --quiet " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Every regular file under `root`, keyed by relative path.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  }
  return out;
}

/// synth -> ingest -> extract -> train -> analyze -> report.
void pipeline(const fs::path& out, int jobs) {
  const std::string g = "--seed 3 --jobs " + std::to_string(jobs) + " --out " + out.string() + " ";
  REQUIRE(run(g + "synth --n-per-class 50 --effect 6 --subjects 6") == 0);
  REQUIRE(run(g + "ingest --manifest " + (out / "synth" / "manifest.json").string()) == 0);
  REQUIRE(run(g + "extract -f M,ENMC") == 0);
  REQUIRE(run(g + "train -f M,ENMC --repeats 10") == 0);
  REQUIRE(run(g + "analyze --responses " + (out / "synth" / "responses.jsonl").string() + " --draws 50 --bootstrap 50") ==
          0);
  REQUIRE(run(g + "report") == 0);
}

}  // namespace

TEST_CASE("cli: pipeline on separable synthetic data, bitwise reproducible across reruns and job counts") {
  fixtures::TempDir a("cli");
  pipeline(a.path(), 1);

  const auto score = nlohmann::json::parse(slurp(a / "train/race/M.score.json"));
  CHECK(score["mean"].get<double>() >= 0.99);
  CHECK(score["dims"] == 153);
  const auto enmc = nlohmann::json::parse(slurp(a / "train/race/ENMC.score.json"));
  CHECK(enmc["dims"] == 396);
  CHECK(enmc["per_split"].size() == 10);
  CHECK(fs::exists(a / "analysis/summary.json"));
  CHECK(slurp(a / "report.md").find("# Analysis summary") != std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(a / "run_manifest.json"));
  for (const char* cmd : {"synth", "ingest", "extract", "train:race", "analyze", "report"}) {
    CHECK_MESSAGE(manifest["runs"].contains(cmd), cmd);
  }

  // Rerunning every stage over the existing outputs, with more workers,
  // reproduces every file byte for byte.
  const auto first = tree(a.path());
  pipeline(a.path(), 3);
  const auto second = tree(a.path());
  CHECK(first.size() == second.size());
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    REQUIRE_MESSAGE(it != second.end(), name);
    CHECK_MESSAGE(it->second == bytes, name << " differs");
  }
}

TEST_CASE("cli: error exits") {
  fixtures::TempDir d("cli-err");
  CHECK(run("--out " + d.path().string() + " report") == 2);
  CHECK_FALSE(fs::exists(d / "report.md"));
  CHECK(run("--out " + d.path().string() + " ingest --manifest " + (d / "missing.json").string()) == 2);
  CHECK(run("--out " + d.path().string() + " frobnicate") == 1);
  CHECK(run("--help") == 0);
}

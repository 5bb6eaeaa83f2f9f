#include <doctest.h>

#include <filesystem>
#include <unordered_set>

#include <json.hpp>

#include "rhm/error.hpp"
#include "rhm/harness.hpp"
#include "rhm/io.hpp"

using namespace rhm;
namespace fs = std::filesystem;

namespace {

ErrorCode RunError(const std::string& config) {
  try {
    Run(ExperimentConfig::FromJson(config), fs::temp_directory_path() / "rhm_harness_err");
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error for " << config);
  return ErrorCode::kInvalidArgument;
}

std::string Slurp(const fs::path& p) { return ReadFile(p); }

}  // namespace

TEST_CASE("derived seeds") {
  CHECK(DeriveSeed(1, 2, "grammar") == DeriveSeed(1, 2, "grammar"));
  CHECK(DeriveSeed(1, 2, "grammar") != DeriveSeed(1, 2, "data"));
  CHECK(DeriveSeed(1, 2, "grammar") != DeriveSeed(2, 2, "grammar"));
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(2'000'000);
  for (std::uint64_t i = 0; i < 1'000'000; ++i) seen.insert(DeriveSeed(7, i, "trial"));
  CHECK(seen.size() == 1'000'000);
  for (std::uint64_t i = 0; i < 1'000'000; ++i) seen.insert(DeriveSeed(7, i, "kmeans"));
  CHECK(seen.size() == 2'000'000);
}

TEST_CASE("config errors") {
  CHECK(RunError("{") == ErrorCode::kInvalidConfig);
  CHECK(RunError(R"({"experiment": "nope"})") == ErrorCode::kInvalidConfig);
  CHECK(RunError(R"({"experiment": "sample", "seed": 1, "bogus": 2})") ==
        ErrorCode::kInvalidConfig);
  CHECK(RunError(R"({"experiment": "gen-grammar"})") == ErrorCode::kInvalidConfig);
  CHECK(RunError(R"({"experiment": "gen-grammar", "seed": 1,
                     "grammar": {"L": 2, "s": 2, "v": 4, "m": 4}})") ==
        ErrorCode::kInfeasibleParams);
  CHECK(RunError(R"({"experiment": "gen-grammar", "seed": 1,
                     "grammar": {"L": 2, "s": 2, "v": 4, "m": 5}})") ==
        ErrorCode::kInfeasibleParams);
  CHECK(RunError(R"({"experiment": "sweep", "seed": 1, "L": 2, "v": 4, "m_list": [2, 4],
                     "P_grid": [16, 32], "trials": 5})") == ErrorCode::kInfeasibleParams);
  CHECK(RunError(R"({"experiment": "stats", "seed": 1, "grammar_path": "/nonexistent.json",
                     "n": 10})") == ErrorCode::kIo);
  CHECK(RunError(R"({"experiment": "sample", "grammar": {"L": 2, "s": 2, "v": 4, "m": 2},
                     "n": 10})") == ErrorCode::kInvalidConfig);
  CHECK(RunError(R"({"experiment": "sweep", "seed": 1, "m_list": [2], "P_grid": [],
                     "trials": 5})") == ErrorCode::kInvalidConfig);
  CHECK(RunError(R"({"experiment": "corrupt", "seed": 1, "data_path": "/nonexistent",
                     "noise": {"kind": "masking", "beta_bar": 0.5}})") == ErrorCode::kIo);
}

TEST_CASE("experiments write their outputs deterministically") {
  const fs::path root = fs::temp_directory_path() / "rhm_harness_test";
  fs::remove_all(root);
  const std::string grammar = R"("grammar": {"L": 2, "s": 2, "v": 8, "m": 2})";
  auto run = [&](const std::string& name, const std::string& body) {
    const ExperimentConfig c = ExperimentConfig::FromJson(body);
    const RunManifest a = Run(c, root / (name + "_a"));
    const RunManifest b = Run(c, root / (name + "_b"));
    CHECK(a.outputs == b.outputs);
    for (const auto& [file, hash] : a.outputs) {
      CHECK(Slurp(root / (name + "_a") / file) == Slurp(root / (name + "_b") / file));
    }
    CHECK(fs::exists(root / (name + "_a") / "manifest.json"));
    return a;
  };
  run("gen", R"({"experiment": "gen-grammar", "seed": 5, )" + grammar + "}");
  const RunManifest sample =
      run("sample", R"({"experiment": "sample", "seed": 5, "n": 100, )" + grammar + "}");
  CHECK(sample.outputs.count("dataset.txt") == 1);
  const std::string gpath = (root / "sample_a" / "grammar.json").string();
  const std::string dpath = (root / "sample_a" / "dataset.txt").string();
  run("corrupt", R"({"experiment": "corrupt", "seed": 6, "data_path": ")" + dpath +
                     R"(", "noise": {"kind": "masking", "schedule": {"type": "linear", "T": 100}}})");
  run("bp", R"({"experiment": "bp", "grammar_path": ")" + gpath + R"(", "data_path": ")" +
                (root / "corrupt_a" / "noisy.txt").string() + R"(", "row": 3})");
  run("stats", R"({"experiment": "stats", "seed": 7, "n": 2000, )" + grammar + "}");
  run("learn", R"({"experiment": "learn", "seed": 8, "n": 3000, )" + grammar + "}");
  run("sweep", R"({"experiment": "sweep", "seed": 9, "L": 2, "v": 8, "m_list": [2, 3, 4],
                   "P_grid": {"lo": 16, "hi": 4096, "count": 9}, "trials": 5})");

  // bp on a clean row is one-hot everywhere.
  const RuleSet rs = ReadGrammar(gpath);
  const Dataset d = ReadDataset(dpath);
  std::string row;
  for (Symbol t : d.Row(0)) row += std::to_string(t) + " ";
  const RunManifest bp = Run(ExperimentConfig::FromJson(
                                 R"({"experiment": "bp", "grammar_path": ")" + gpath +
                                 R"(", "sequence": ")" + row + R"("})"),
                             root / "bp_clean");
  const std::string csv = Slurp(root / "bp_clean" / "marginals.csv");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "position,symbol,probability");
  while (std::getline(in, line)) {
    const double prob = std::stod(line.substr(line.rfind(',') + 1));
    CHECK((prob == 0.0 || prob == 1.0));
  }
  (void)bp;
  (void)rs;

  const auto summary = Slurp(root / "sweep_a" / "summary.csv");
  CHECK(summary.rfind("m,P_star,censored", 0) == 0);
  const auto manifest = nlohmann::json::parse(Slurp(root / "sweep_a" / "manifest.json"));
  CHECK(manifest["experiment"] == "sweep");
  CHECK(manifest["version"] == kVersion);
}

TEST_CASE("thread count resolution") {
  CHECK(ResolveThreads(3) == 3);
  CHECK(ResolveThreads(0) >= 1);
}

// rhmlab: command-line front end for the Random Hierarchy Model experiments.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rhm/error.hpp"
#include "rhm/harness.hpp"
#include "rhm/io.hpp"

namespace {

using nlohmann::json;

constexpr const char* kCsvHelp = R"(Output columns (fixed order, floats with 17 significant digits):
  gen-grammar  grammar.json
  sample       dataset.txt | dataset.bin
  corrupt      noisy.txt ("?" marks a masked token)
  bp           marginals.csv: position,symbol,probability
  stats        token_token.csv: distance,norm,n_pairs,floor
               theory.csv: level,C_theory,C_empirical,P_level
  learn        learn.csv: level,tuples,clusters,partial,recovery,chance
               accuracy.csv: level,accuracy
               learned_grammar.json
  onestep      onestep.csv: label,tuple,delta,correlation
               onestep_summary.csv: eta,identity_error,synonym_cosine,tuples
  sweep        sweep.csv: m,P,trial,level,recovery,A_level
               summary.csv: m,P_star,censored,P_star_generation,censored_generation,
                            slope,slope_ci_low,slope_ci_high,slope_generation,
                            slope_generation_ci_low,slope_generation_ci_high
Every run also writes manifest.json.)";

std::string Quote(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c == '\n' ? ' ' : c);
  }
  return out;
}

void PrintError(std::string_view code, const std::string& message) {
  std::cerr << "error: code=" << code << " message=\"" << Quote(message) << "\"\n";
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "rhmlab-out";
  std::optional<int> threads;
  std::string grammar;
  std::string data;
  std::optional<int> level;
  std::optional<std::size_t> n;
  std::optional<std::string> sequence;
  std::optional<std::size_t> row;
  std::optional<double> eta;
  std::optional<std::string> variant;
};

json BuildConfig(const std::string& experiment, const Flags& f) {
  json j = json::object();
  if (!f.config.empty()) {
    try {
      j = json::parse(rhm::ReadFile(f.config));
    } catch (const json::parse_error& e) {
      rhm::Fail(rhm::ErrorCode::kInvalidConfig,
                "config '" + f.config + "' is not valid JSON: " + e.what());
    }
    rhm::Require(j.is_object(), rhm::ErrorCode::kInvalidConfig, "config must be a JSON object");
    if (j.contains("experiment")) {
      rhm::Require(j["experiment"] == experiment, rhm::ErrorCode::kInvalidConfig,
                   "config is for experiment '" + j["experiment"].dump() +
                       "', not '" + experiment + "'");
    }
  }
  j["experiment"] = experiment;
  if (f.seed) j["seed"] = *f.seed;
  if (f.threads) j["threads"] = *f.threads;
  if (!f.grammar.empty()) j["grammar_path"] = f.grammar;
  if (!f.data.empty()) j["data_path"] = f.data;
  if (f.level) j["level"] = *f.level;
  if (f.n) j["n"] = *f.n;
  if (f.sequence) j["sequence"] = *f.sequence;
  if (f.row) j["row"] = *f.row;
  if (f.eta) j["eta"] = *f.eta;
  if (f.variant) j["variant"] = *f.variant;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random Hierarchy Model experiments"};
  app.footer(kCsvHelp);
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config, "Experiment config (JSON)");
    cmd->add_option("--seed", flags.seed, "Master seed (u64)");
    cmd->add_option("--out", flags.out, "Output directory")->capture_default_str();
    cmd->add_option("--threads", flags.threads,
                    "Worker threads (default: RHMLAB_THREADS, then all cores)");
    cmd->add_option("--grammar", flags.grammar, "Grammar JSON file");
    cmd->add_option("--data", flags.data, "Dataset file");
  };

  const char* names[][2] = {
      {"gen-grammar", "Draw a random grammar"},
      {"sample", "Sample a dataset from a grammar"},
      {"corrupt", "Corrupt a dataset with uniform or masking noise"},
      {"bp", "Exact belief-propagation marginals of a noisy sequence"},
      {"stats", "Token-token and token-tuple correlations with theory values"},
      {"learn", "Hierarchical synonym clustering and learned-grammar accuracy"},
      {"onestep", "One gradient step of a softmax next-token classifier"},
      {"sweep", "Sample-complexity sweep over m and P"},
  };
  for (const auto& [name, help] : names) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd);
    const std::string n = name;
    if (n == "stats") cmd->add_option("--level", flags.level, "Token-tuple level (>= 2)");
    if (n == "sample" || n == "stats" || n == "learn" || n == "onestep") {
      cmd->add_option("--n", flags.n, "Rows to sample when --data is absent");
    }
    if (n == "bp") {
      cmd->add_option("--sequence", flags.sequence, "Noisy row, e.g. \"0 ? 3 1\"");
      cmd->add_option("--row", flags.row, "Row of the --data noisy file");
    }
    if (n == "onestep") cmd->add_option("--eta", flags.eta, "Learning rate");
    if (n == "learn" || n == "sweep") {
      cmd->add_option("--variant", flags.variant, "single-token or full-tuple");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    PrintError(rhm::ErrorCodeName(rhm::ErrorCode::kInvalidArgument), e.what());
    return 2;
  }

  try {
    const std::string experiment = app.get_subcommands().front()->get_name();
    const json j = BuildConfig(experiment, flags);
    const rhm::ExperimentConfig config = rhm::ExperimentConfig::FromJson(j.dump());
    const rhm::RunManifest manifest = rhm::Run(config, flags.out);
    std::cout << "wrote " << manifest.outputs.size() << " output(s) to " << flags.out << "\n";
    return 0;
  } catch (const rhm::Error& e) {
    PrintError(rhm::ErrorCodeName(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    PrintError("internal", e.what());
    return 3;
  }
}

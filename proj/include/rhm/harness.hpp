#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rhm/corruption.hpp"
#include "rhm/grammar.hpp"
#include "rhm/learner.hpp"

namespace rhm {

inline constexpr const char* kVersion = "0.1.0";

enum class ExperimentKind { kGenGrammar, kSample, kCorrupt, kBp, kStats, kLearn, kOneStep, kSweep };

std::string_view ExperimentName(ExperimentKind kind);
ExperimentKind ParseExperiment(std::string_view name);

// Parsed experiment config. Keys are documented in configs/config.schema.json.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kGenGrammar;
  std::optional<std::uint64_t> seed;
  std::optional<GrammarParams> grammar;  // "grammar" object
  // Explicit grammar seed; otherwise derived from the master seed.
  std::optional<std::uint64_t> grammar_seed;
  std::string grammar_path;
  std::string data_path;
  std::size_t n = 0;
  bool distinct = true;
  bool binary = false;
  std::optional<NoiseSpec> noise;
  std::string sequence;  // bp: one noisy row, "?" for masks
  std::size_t row = 0;   // bp: row of the noisy file
  int level = 0;         // stats: 0 means every level
  ContextVariant variant = ContextVariant::kSingleToken;
  bool pooled = true;
  std::size_t generated = 1024;
  double eta = 1.0;
  SweepConfig sweep;
  int threads = 0;  // 0: RHMLAB_THREADS, then hardware concurrency

  // Canonical JSON text of the parsed document; the config hash covers it.
  std::string canonical;

  static ExperimentConfig FromJson(const std::string& text);
  // Checks required fields and parameter feasibility. Throws kInvalidConfig,
  // kInfeasibleParams or kIo.
  void Validate() const;
};

struct RunManifest {
  std::string experiment;
  std::string config_hash;
  std::string grammar_hash;
  std::string version;
  double wall_clock_seconds = 0.0;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> outputs;  // file name -> content hash
  std::map<std::string, std::string> notes;

  std::string ToJson() const;
};

int ResolveThreads(int requested);

// Executes the experiment, writes its outputs and manifest.json into out_dir
// and returns the manifest.
RunManifest Run(const ExperimentConfig& config, const std::filesystem::path& out_dir);

}  // namespace rhm

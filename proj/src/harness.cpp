#include "rhm/harness.hpp"

#include <chrono>
#include <cstdlib>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rhm/belief_propagation.hpp"
#include "rhm/error.hpp"
#include "rhm/io.hpp"
#include "rhm/one_step.hpp"
#include "rhm/statistics.hpp"

namespace rhm {
namespace {

using nlohmann::json;

constexpr std::pair<ExperimentKind, std::string_view> kExperimentNames[] = {
    {ExperimentKind::kGenGrammar, "gen-grammar"}, {ExperimentKind::kSample, "sample"},
    {ExperimentKind::kCorrupt, "corrupt"},        {ExperimentKind::kBp, "bp"},
    {ExperimentKind::kStats, "stats"},            {ExperimentKind::kLearn, "learn"},
    {ExperimentKind::kOneStep, "onestep"},        {ExperimentKind::kSweep, "sweep"},
};

[[noreturn]] void BadConfig(const std::string& message) {
  Fail(ErrorCode::kInvalidConfig, message);
}

template <typename T>
T Get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    BadConfig(std::string("config key '") + key + "': " + e.what());
  }
}

void CheckKeys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  Require(j.is_object(), ErrorCode::kInvalidConfig, where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) BadConfig("unknown key '" + key + "' in " + where);
  }
}

NoiseSpec ParseNoise(const json& j) {
  CheckKeys(j, {"kind", "beta_bar", "schedule"}, "noise");
  const auto kind_name = Get<std::string>(j, "kind");
  NoiseKind kind;
  if (kind_name == "uniform") {
    kind = NoiseKind::kUniform;
  } else if (kind_name == "masking") {
    kind = NoiseKind::kMasking;
  } else {
    BadConfig("noise kind must be 'uniform' or 'masking', got '" + kind_name + "'");
  }
  const bool has_bar = j.contains("beta_bar");
  const bool has_schedule = j.contains("schedule");
  Require(has_bar != has_schedule, ErrorCode::kInvalidConfig,
          "noise needs exactly one of beta_bar and schedule");
  if (has_bar) return NoiseSpec::Cumulative(kind, Get<double>(j, "beta_bar"));
  const json& sj = j.at("schedule");
  CheckKeys(sj, {"type", "T", "start", "end"}, "noise.schedule");
  Require(Get<std::string>(sj, "type") == "linear", ErrorCode::kInvalidConfig,
          "only the linear schedule is supported");
  const int steps = Get<int>(sj, "T");
  Require(steps >= 1, ErrorCode::kInvalidConfig, "schedule T must be >= 1");
  const double start = sj.contains("start") ? Get<double>(sj, "start") : 1e-4;
  const double end = sj.contains("end") ? Get<double>(sj, "end") : 0.02;
  return NoiseSpec::Scheduled(kind, LinearSchedule(steps, start, end));
}

std::vector<std::size_t> ParseGrid(const json& j) {
  if (j.is_array()) return j.get<std::vector<std::size_t>>();
  CheckKeys(j, {"lo", "hi", "count"}, "P_grid");
  return GeometricGrid(Get<double>(j, "lo"), Get<double>(j, "hi"), Get<int>(j, "count"));
}

std::string Hash(const std::string& content) { return HashHex(Fnv1a64(content)); }

// Collects outputs so the manifest can list each file's content hash.
class OutputDir {
 public:
  OutputDir(std::filesystem::path root, RunManifest& manifest)
      : root_(std::move(root)), manifest_(manifest) {
    std::filesystem::create_directories(root_);
  }

  std::filesystem::path Path(const std::string& name) const { return root_ / name; }

  void Write(const std::string& name, const std::string& content) {
    WriteFile(root_ / name, content);
    manifest_.outputs[name] = Hash(content);
  }

  // For files written by library helpers.
  void Record(const std::string& name) { manifest_.outputs[name] = Hash(ReadFile(root_ / name)); }

 private:
  std::filesystem::path root_;
  RunManifest& manifest_;
};

class Csv {
 public:
  explicit Csv(const std::string& header) : text_(header + "\n") {}

  template <typename... Ts>
  void Row(const Ts&... fields) {
    bool first = true;
    ((text_ += (first ? "" : ","), text_ += Field(fields), first = false), ...);
    text_ += '\n';
  }
  const std::string& str() const { return text_; }

 private:
  static std::string Field(double x) { return FormatDouble(x); }
  static std::string Field(const std::string& x) { return x; }
  static std::string Field(const char* x) { return x; }
  static std::string Field(bool x) { return x ? "1" : "0"; }
  template <typename T>
  static std::string Field(T x)
    requires std::is_integral_v<T>
  {
    return std::to_string(x);
  }

  std::string text_;
};

std::uint64_t MasterSeed(const ExperimentConfig& config) {
  Require(config.seed.has_value(), ErrorCode::kInvalidConfig,
          "a master seed is required for stochastic experiments");
  return *config.seed;
}

void CheckDensity(const GrammarParams& p) {
  p.Validate();
  Require(p.RuleDensity() < 1.0, ErrorCode::kInfeasibleParams,
          "f = m / v^(s-1) >= 1: every tuple is grammatical and the sample complexities diverge");
}

RuleSet LoadGrammar(const ExperimentConfig& config, RunManifest& manifest, OutputDir* out) {
  if (!config.grammar_path.empty()) {
    RuleSet rules = ReadGrammar(config.grammar_path);
    CheckDensity(rules.params());
    manifest.grammar_hash = HashHex(rules.Hash());
    return rules;
  }
  GrammarParams p = *config.grammar;
  p.seed = config.grammar_seed ? *config.grammar_seed
                               : DeriveSeed(MasterSeed(config), 0, "grammar");
  manifest.seeds["grammar"] = p.seed;
  RuleSet rules = RuleSet::Generate(p);
  manifest.grammar_hash = HashHex(rules.Hash());
  if (out != nullptr) out->Write("grammar.json", GrammarToJson(rules));
  return rules;
}

Dataset LoadData(const ExperimentConfig& config, const RuleSet& rules, RunManifest& manifest) {
  const auto& p = rules.params();
  if (!config.data_path.empty()) {
    Dataset data = ReadDataset(config.data_path);
    Require(data.length == p.SequenceLength() && data.vocab == p.vocab,
            ErrorCode::kInvalidConfig, "dataset shape (d, v) does not match the grammar");
    return data;
  }
  const std::uint64_t seed = DeriveSeed(MasterSeed(config), 0, "sample");
  manifest.seeds["sample"] = seed;
  Rng rng(seed);
  Dataset data = config.distinct ? SampleDistinct(rules, config.n, rng)
                                 : Sample(rules, config.n, rng);
  data.seed = seed;
  manifest.notes["distinct"] = data.distinct ? "true" : "false";
  return data;
}

void RunGenGrammar(const ExperimentConfig& config, OutputDir& out, RunManifest& manifest) {
  const RuleSet rules = LoadGrammar(config, manifest, nullptr);
  out.Write("grammar.json", GrammarToJson(rules));
}

void RunSample(const ExperimentConfig& config, OutputDir& out, RunManifest& manifest) {
  const RuleSet rules = LoadGrammar(config, manifest, &out);
  const Dataset data = LoadData(config, rules, manifest);
  if (config.binary) {
    WriteDatasetBinary(out.Path("dataset.bin"), data);
    out.Record("dataset.bin");
  } else {
    WriteDatasetText(out.Path("dataset.txt"), data);
    out.Record("dataset.txt");
  }
}

void RunCorrupt(const ExperimentConfig& config, OutputDir& out, RunManifest& manifest) {
  const Dataset data = ReadDataset(config.data_path);
  const std::uint64_t seed = DeriveSeed(MasterSeed(config), 0, "corrupt");
  manifest.seeds["corrupt"] = seed;
  Rng rng(seed);
  std::vector<Symbol> noisy;
  noisy.reserve(data.tokens.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const Corrupted c = Corrupt(data.Row(i), data.vocab, *config.noise, rng);
    noisy.insert(noisy.end(), c.tokens.begin(), c.tokens.end());
    hits += static_cast<std::size_t>(std::count(c.hit.begin(), c.hit.end(), true));
  }
  WriteNoisyText(out.Path("noisy.txt"), data.length, data.vocab, data.grammar_hash, noisy);
  out.Record("noisy.txt");
  manifest.notes["keep_probability"] = FormatDouble(CumulativeKeepProb(*config.noise));
  manifest.notes["hits"] = std::to_string(hits);
}

void RunBp(const ExperimentConfig& config, OutputDir& out, RunManifest& manifest) {
  const RuleSet rules = LoadGrammar(config, manifest, nullptr);
  const auto& p = rules.params();
  std::vector<Symbol> row;
  if (!config.sequence.empty()) {
    row = ParseNoisyRow(config.sequence, p.vocab);
  } else {
    std::size_t length = 0;
    const std::vector<Symbol> all = ReadNoisyText(config.data_path, length, p.vocab);
    Require(length == p.SequenceLength(), ErrorCode::kInvalidConfig,
            "noisy file rows do not have length d");
    Require(config.row < all.size() / length, ErrorCode::kInvalidConfig,
            "row " + std::to_string(config.row) + " is out of range");
    row.assign(all.begin() + config.row * length, all.begin() + (config.row + 1) * length);
  }
  Require(row.size() == p.SequenceLength(), ErrorCode::kInvalidConfig,
          "sequence has " + std::to_string(row.size()) + " tokens, expected d = " +
              std::to_string(p.SequenceLength()));
  const NoiseSpec spec =
      config.noise ? *config.noise : NoiseSpec::Cumulative(NoiseKind::kMasking, 0.0);
  const BeliefState state = BpMarginals(rules, ComputeLeafLikelihoods(row, p.vocab, spec));
  Csv csv("position,symbol,probability");
  for (std::size_t i = 0; i < row.size(); ++i) {
    auto marg = state.Marginal(0, i);
    for (int a = 0; a < p.vocab; ++a) csv.Row(i + 1, a, marg[a]);
  }
  out.Write("marginals.csv", csv.str());
  manifest.notes["log_evidence"] = FormatDouble(state.log_partition);
}

void RunStats(const ExperimentConfig& config, OutputDir& out, RunManifest& manifest) {
  const RuleSet rules = LoadGrammar(config, manifest, &out);
  const auto& p = rules.params();
  Dataset data = LoadData(config, rules, manifest);
  const CorrelationReport report = TokenTokenCorrelation(data, p);
  Csv tt("distance,norm,n_pairs,floor");
  for (std::size_t k = 0; k < report.levels.size(); ++k) {
    tt.Row(report.distances[k], report.values[k], report.n_pairs[k], report.noise_floor);
  }
  out.Write("token_token.csv", tt.str());

  if (!data.has_latents()) ParseLatents(rules, data);
  Csv th("level,C_theory,C_empirical,P_level");
  const int lo = config.level > 0 ? config.level : 2;
  const int hi = config.level > 0 ? config.level : p.depth;
  for (int level = lo; level <= hi; ++level) {
    const TheoryPrediction t = Theory(p, level);
    const double empirical = EmpiricalTokenTupleCorrelation(data, p, level).RmsSupported();
    th.Row(level, t.correlation, empirical, t.sample_complexity);
  }
  out.Write("theory.csv", th.str());
}

void RunLearn(const ExperimentConfig& config, OutputDir& out, RunManifest& manifest) {
  const RuleSet rules = LoadGrammar(config, manifest, &out);
  const Dataset data = LoadData(config, rules, manifest);
  LearnOptions options;
  options.variant = config.variant;
  options.pooled = config.pooled;
  options.kmeans.seed = DeriveSeed(MasterSeed(config), 0, "kmeans");
  manifest.seeds["kmeans"] = options.kmeans.seed;
  manifest.notes["variant"] = std::string(VariantName(config.variant));
  manifest.notes["pooled"] = config.pooled ? "true" : "false";
  const ClusterModel model = LearnGrammar(data, rules, options);

  Csv learn("level,tuples,clusters,partial,recovery,chance");
  for (const auto& level : model.levels) {
    learn.Row(level.level, level.partition.tuple_codes.size(), level.partition.clusters,
              level.partition.partial, level.recovery, level.chance);
  }
  out.Write("learn.csv", learn.str());
  out.Write("learned_grammar.json", ClusterModelToJson(model));

  const std::uint64_t gen_seed = DeriveSeed(MasterSeed(config), 0, "generate");
  manifest.seeds["generate"] = gen_seed;
  Rng rng(gen_seed);
  const Dataset generated = GenerateFromLearned(model, config.generated, rng);
  const std::vector<double> curve = AccuracyCurve(rules, generated);
  Csv acc("level,accuracy");
  for (std::size_t l = 0; l < curve.size(); ++l) acc.Row(l, curve[l]);
  out.Write("accuracy.csv", acc.str());
}

void RunOneStep(const ExperimentConfig& config, OutputDir& out, RunManifest& manifest) {
  const RuleSet rules = LoadGrammar(config, manifest, &out);
  const auto& p = rules.params();
  const Dataset data = LoadData(config, rules, manifest);
  const OneStepModel model = OneStepGd(NextTokenPairs(data, p), config.eta);
  Csv csv("label,tuple,delta,correlation");
  for (std::size_t k = 0; k < model.tuples(); ++k) {
    for (int a = 0; a < p.vocab; ++a) {
      csv.Row(a, model.tuple_codes[k], model.Delta(a, k),
              model.correlation.Lookup(a, model.tuple_codes[k]));
    }
  }
  out.Write("onestep.csv", csv.str());
  Csv summary("eta,identity_error,synonym_cosine,tuples");
  double cosine = std::numeric_limits<double>::quiet_NaN();
  try {
    cosine = SynonymColumnCosine(model, rules);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInsufficientData) throw;
  }
  summary.Row(config.eta, OneStepIdentityError(model), cosine, model.tuples());
  out.Write("onestep_summary.csv", summary.str());
}

void RunSweep(const ExperimentConfig& config, OutputDir& out, RunManifest& manifest) {
  SweepConfig sweep = config.sweep;
  sweep.seed = MasterSeed(config);
  sweep.threads = ResolveThreads(config.threads);
  manifest.notes["variant"] = std::string(VariantName(sweep.variant));
  manifest.notes["pooled"] = sweep.pooled ? "true" : "false";
  const SweepResult result = MeasureSampleComplexity(sweep);

  Csv trials("m,P,trial,level,recovery,A_level");
  for (const auto& t : result.trials) {
    // One line per level of the learned hierarchy; recovery is empty for
    // the unclustered top level.
    for (std::size_t l = 1; l < t.accuracy.size(); ++l) {
      const std::string recovery =
          l - 1 < t.recovery.size() ? FormatDouble(t.recovery[l - 1]) : std::string();
      trials.Row(t.m, t.p, t.trial, l, recovery, t.accuracy[l]);
    }
    manifest.seeds["grammar_m" + std::to_string(t.m) + "_t" + std::to_string(t.trial)] =
        t.grammar_seed;
  }
  out.Write("sweep.csv", trials.str());

  Csv summary(
      "m,P_star,censored,P_star_generation,censored_generation,slope,slope_ci_low,"
      "slope_ci_high,slope_generation,slope_generation_ci_low,slope_generation_ci_high");
  auto fit_field = [](const SlopeFit& f, double x) {
    return f.points >= 3 ? FormatDouble(x) : std::string("nan");
  };
  for (const auto& row : result.summary) {
    summary.Row(row.m, row.p_star, row.censored, row.p_star_generation,
                row.censored_generation, fit_field(result.fit, result.fit.slope),
                fit_field(result.fit, result.fit.ci_low), fit_field(result.fit, result.fit.ci_high),
                fit_field(result.fit_generation, result.fit_generation.slope),
                fit_field(result.fit_generation, result.fit_generation.ci_low),
                fit_field(result.fit_generation, result.fit_generation.ci_high));
  }
  out.Write("summary.csv", summary.str());
}

}  // namespace

std::string_view ExperimentName(ExperimentKind kind) {
  for (const auto& [k, name] : kExperimentNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ExperimentKind ParseExperiment(std::string_view name) {
  for (const auto& [k, n] : kExperimentNames) {
    if (n == name) return k;
  }
  BadConfig("unknown experiment '" + std::string(name) + "'");
}

ExperimentConfig ExperimentConfig::FromJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    BadConfig(std::string("config is not valid JSON: ") + e.what());
  }
  CheckKeys(j,
            {"experiment", "seed", "grammar", "grammar_path", "data_path", "n", "distinct",
             "format", "noise", "sequence", "row", "level", "variant", "pooled", "generated",
             "eta", "threads", "L", "s", "v", "m_list", "P_grid", "trials", "threshold",
             "accuracy_threshold", "stop_after", "resample_degenerate"},
            "config");
  ExperimentConfig c;
  c.canonical = j.dump();
  Require(j.contains("experiment"), ErrorCode::kInvalidConfig, "config needs 'experiment'");
  c.kind = ParseExperiment(Get<std::string>(j, "experiment"));
  if (j.contains("seed")) c.seed = Get<std::uint64_t>(j, "seed");
  if (j.contains("grammar")) {
    const json& g = j.at("grammar");
    CheckKeys(g, {"L", "s", "v", "m", "seed"}, "grammar");
    GrammarParams p;
    p.depth = Get<int>(g, "L");
    p.branching = Get<int>(g, "s");
    p.vocab = Get<int>(g, "v");
    p.synonyms = Get<int>(g, "m");
    c.grammar = p;
    if (g.contains("seed")) c.grammar_seed = Get<std::uint64_t>(g, "seed");
  }
  if (j.contains("grammar_path")) c.grammar_path = Get<std::string>(j, "grammar_path");
  if (j.contains("data_path")) c.data_path = Get<std::string>(j, "data_path");
  if (j.contains("n")) c.n = Get<std::size_t>(j, "n");
  if (j.contains("distinct")) c.distinct = Get<bool>(j, "distinct");
  if (j.contains("format")) {
    const auto format = Get<std::string>(j, "format");
    Require(format == "text" || format == "binary", ErrorCode::kInvalidConfig,
            "format must be 'text' or 'binary'");
    c.binary = format == "binary";
  }
  if (j.contains("noise")) c.noise = ParseNoise(j.at("noise"));
  if (j.contains("sequence")) c.sequence = Get<std::string>(j, "sequence");
  if (j.contains("row")) c.row = Get<std::size_t>(j, "row");
  if (j.contains("level")) c.level = Get<int>(j, "level");
  if (j.contains("variant")) c.variant = ParseVariant(Get<std::string>(j, "variant"));
  if (j.contains("pooled")) c.pooled = Get<bool>(j, "pooled");
  if (j.contains("generated")) c.generated = Get<std::size_t>(j, "generated");
  if (j.contains("eta")) c.eta = Get<double>(j, "eta");
  if (j.contains("threads")) c.threads = Get<int>(j, "threads");

  SweepConfig& s = c.sweep;
  if (j.contains("L")) s.depth = Get<int>(j, "L");
  if (j.contains("s")) s.branching = Get<int>(j, "s");
  if (j.contains("v")) s.vocab = Get<int>(j, "v");
  if (j.contains("m_list")) s.m_list = Get<std::vector<int>>(j, "m_list");
  if (j.contains("P_grid")) s.p_grid = ParseGrid(j.at("P_grid"));
  if (j.contains("trials")) s.trials = Get<int>(j, "trials");
  if (j.contains("threshold")) s.threshold = Get<double>(j, "threshold");
  if (j.contains("accuracy_threshold")) s.accuracy_threshold = Get<double>(j, "accuracy_threshold");
  if (j.contains("stop_after")) s.stop_after = Get<int>(j, "stop_after");
  if (j.contains("resample_degenerate")) s.resample_degenerate = Get<bool>(j, "resample_degenerate");
  s.variant = c.variant;
  s.pooled = c.pooled;
  s.generated = c.generated;
  return c;
}

void ExperimentConfig::Validate() const {
  auto need_file = [](const std::string& path, const char* what) {
    Require(!path.empty(), ErrorCode::kInvalidConfig, std::string("config needs ") + what);
    Require(std::filesystem::exists(path), ErrorCode::kIo,
            std::string(what) + " '" + path + "' does not exist");
  };
  auto need_grammar = [&] {
    if (!grammar_path.empty()) {
      need_file(grammar_path, "grammar_path");
      return;
    }
    Require(grammar.has_value(), ErrorCode::kInvalidConfig,
            "config needs either 'grammar' parameters or 'grammar_path'");
    CheckDensity(*grammar);
    Require(grammar_seed.has_value() || seed.has_value(), ErrorCode::kInvalidConfig,
            "a seed is required to draw a grammar");
  };
  auto need_data = [&] {
    if (!data_path.empty()) {
      need_file(data_path, "data_path");
      return;
    }
    Require(n > 0, ErrorCode::kInvalidConfig, "config needs 'data_path' or a sample count 'n'");
    Require(seed.has_value(), ErrorCode::kInvalidConfig, "a seed is required to sample data");
  };
  if (noise) noise->Validate();
  Require(threads >= 0, ErrorCode::kInvalidConfig, "threads must be >= 0");
  switch (kind) {
    case ExperimentKind::kGenGrammar:
      need_grammar();
      break;
    case ExperimentKind::kSample:
      need_grammar();
      Require(n > 0, ErrorCode::kInvalidConfig, "sample needs n > 0");
      Require(seed.has_value(), ErrorCode::kInvalidConfig, "sample needs a seed");
      break;
    case ExperimentKind::kCorrupt:
      need_file(data_path, "data_path");
      Require(noise.has_value(), ErrorCode::kInvalidConfig, "corrupt needs 'noise'");
      Require(seed.has_value(), ErrorCode::kInvalidConfig, "corrupt needs a seed");
      break;
    case ExperimentKind::kBp:
      need_grammar();
      if (sequence.empty()) need_file(data_path, "data_path (noisy rows) or sequence");
      break;
    case ExperimentKind::kStats:
      need_grammar();
      need_data();
      Require(level == 0 || level >= 2, ErrorCode::kInvalidConfig, "stats level must be >= 2");
      break;
    case ExperimentKind::kLearn:
      need_grammar();
      need_data();
      Require(seed.has_value(), ErrorCode::kInvalidConfig, "learn needs a seed");
      break;
    case ExperimentKind::kOneStep:
      need_grammar();
      need_data();
      Require(eta > 0.0, ErrorCode::kInvalidConfig, "eta must be > 0");
      break;
    case ExperimentKind::kSweep: {
      Require(seed.has_value(), ErrorCode::kInvalidConfig, "sweep needs a seed");
      SweepConfig s = sweep;
      s.seed = *seed;
      s.Validate();
      for (int m : s.m_list) {
        CheckDensity(GrammarParams{s.depth, s.branching, s.vocab, m, 0});
      }
      break;
    }
  }
}

std::string RunManifest::ToJson() const {
  json j;
  j["experiment"] = experiment;
  j["config_hash"] = config_hash;
  j["grammar_hash"] = grammar_hash;
  j["version"] = version;
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["seeds"] = seeds;
  j["outputs"] = outputs;
  j["notes"] = notes;
  return j.dump(2) + "\n";
}

int ResolveThreads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RHMLAB_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    Require(end != env && *end == '\0' && n > 0, ErrorCode::kInvalidConfig,
            std::string("RHMLAB_THREADS must be a positive integer, got '") + env + "'");
    return static_cast<int>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

RunManifest Run(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  config.Validate();
  const auto start = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.experiment = std::string(ExperimentName(config.kind));
  manifest.config_hash = Hash(config.canonical);
  manifest.version = kVersion;
  if (config.seed) manifest.seeds["master"] = *config.seed;
  OutputDir out(out_dir, manifest);
  switch (config.kind) {
    case ExperimentKind::kGenGrammar: RunGenGrammar(config, out, manifest); break;
    case ExperimentKind::kSample: RunSample(config, out, manifest); break;
    case ExperimentKind::kCorrupt: RunCorrupt(config, out, manifest); break;
    case ExperimentKind::kBp: RunBp(config, out, manifest); break;
    case ExperimentKind::kStats: RunStats(config, out, manifest); break;
    case ExperimentKind::kLearn: RunLearn(config, out, manifest); break;
    case ExperimentKind::kOneStep: RunOneStep(config, out, manifest); break;
    case ExperimentKind::kSweep: RunSweep(config, out, manifest); break;
  }
  manifest.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  WriteFile(out_dir / "manifest.json", manifest.ToJson());
  return manifest;
}

}  // namespace rhm

// Python bindings: thin wrappers over the C++ library. Token matrices cross
// the boundary as int32 numpy arrays of shape (rows, d).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rhm/belief_propagation.hpp"
#include "rhm/error.hpp"
#include "rhm/harness.hpp"
#include "rhm/io.hpp"
#include "rhm/learner.hpp"
#include "rhm/one_step.hpp"
#include "rhm/statistics.hpp"

namespace py = pybind11;
using namespace rhm;

namespace {

using TokenArray = py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>;

Dataset ToDataset(const TokenArray& tokens, int vocab) {
  Require(tokens.ndim() == 2, ErrorCode::kInvalidArgument, "tokens must be a 2-d array");
  Dataset d;
  d.length = static_cast<std::size_t>(tokens.shape(1));
  d.vocab = vocab;
  d.tokens.assign(tokens.data(), tokens.data() + tokens.size());
  for (Symbol t : d.tokens) {
    Require(t >= 0 && t < vocab, ErrorCode::kInvalidArgument, "token out of range");
  }
  return d;
}

TokenArray ToArray(const Dataset& d) {
  TokenArray out({static_cast<py::ssize_t>(d.rows()), static_cast<py::ssize_t>(d.length)});
  std::copy(d.tokens.begin(), d.tokens.end(), out.mutable_data());
  return out;
}

py::array_t<double> Matrix(const std::vector<double>& values, std::size_t rows, std::size_t cols) {
  py::array_t<double> out({static_cast<py::ssize_t>(rows), static_cast<py::ssize_t>(cols)});
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

NoiseSpec MakeNoise(const std::string& kind, double beta_bar) {
  Require(kind == "uniform" || kind == "masking", ErrorCode::kInvalidArgument,
          "noise kind must be 'uniform' or 'masking'");
  return NoiseSpec::Cumulative(kind == "uniform" ? NoiseKind::kUniform : NoiseKind::kMasking,
                               beta_bar);
}

py::dict ReportDict(const CorrelationReport& r) {
  py::dict d;
  d["levels"] = r.levels;
  d["distances"] = r.distances;
  d["values"] = r.values;
  d["n_pairs"] = r.n_pairs;
  d["noise_floor"] = r.noise_floor;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Random Hierarchy Model core library";
  m.attr("__version__") = kVersion;

  static py::exception<Error> error(m, "RhmError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(ErrorCodeName(e.code())) + ": " + e.what()).c_str());
    }
  });

  py::class_<GrammarParams>(m, "GrammarParams")
      .def(py::init([](int L, int s, int v, int m_, std::uint64_t seed) {
             GrammarParams p{L, s, v, m_, seed};
             p.Validate();
             return p;
           }),
           py::arg("L"), py::arg("s"), py::arg("v"), py::arg("m"), py::arg("seed") = 0)
      .def_readonly("L", &GrammarParams::depth)
      .def_readonly("s", &GrammarParams::branching)
      .def_readonly("v", &GrammarParams::vocab)
      .def_readonly("m", &GrammarParams::synonyms)
      .def_readonly("seed", &GrammarParams::seed)
      .def_property_readonly("d", &GrammarParams::SequenceLength)
      .def_property_readonly("f", &GrammarParams::RuleDensity)
      .def("__repr__", [](const GrammarParams& p) {
        return "GrammarParams(L=" + std::to_string(p.depth) + ", s=" + std::to_string(p.branching) +
               ", v=" + std::to_string(p.vocab) + ", m=" + std::to_string(p.synonyms) +
               ", seed=" + std::to_string(p.seed) + ")";
      });

  py::class_<RuleSet>(m, "Grammar")
      .def_static("generate", &RuleSet::Generate, py::arg("params"))
      .def_static("from_json", &GrammarFromJson, py::arg("text"))
      .def("to_json", &GrammarToJson)
      .def_property_readonly("params", &RuleSet::params)
      .def_property_readonly("hash", &RuleSet::Hash)
      .def("tables", &RuleSet::Tables)
      .def("parent", [](const RuleSet& rs, int level, std::vector<Symbol> tuple) {
        return rs.Lookup(level, tuple).parent;
      }, py::arg("level"), py::arg("tuple"));

  m.def("sample", [](const RuleSet& rs, std::size_t n, std::uint64_t seed, bool distinct) {
    Rng rng(seed);
    return ToArray(distinct ? SampleDistinct(rs, n, rng) : Sample(rs, n, rng));
  }, py::arg("grammar"), py::arg("n"), py::arg("seed"), py::arg("distinct") = false);

  m.def("enumeration_count", [](const RuleSet& rs) { return EnumerateAll(rs).size(); });

  m.def("max_valid_level", [](const RuleSet& rs, std::vector<Symbol> row) {
    return Parse(rs, row).max_valid_level;
  }, py::arg("grammar"), py::arg("sequence"));

  m.def("accuracy_curve", [](const RuleSet& rs, const TokenArray& tokens) {
    return AccuracyCurve(rs, ToDataset(tokens, rs.params().vocab));
  }, py::arg("grammar"), py::arg("tokens"));

  m.def("tree_distance", [](std::size_t i, std::size_t j, const GrammarParams& p) {
    const TreeDistance t = ComputeTreeDistance(i, j, p);
    return py::make_tuple(t.level, t.distance);
  }, py::arg("i"), py::arg("j"), py::arg("params"));

  m.def("corrupt", [](const TokenArray& tokens, int vocab, const std::string& kind,
                      double beta_bar, std::uint64_t seed) {
    Dataset d = ToDataset(tokens, vocab);
    Rng rng(seed);
    const Corrupted c = Corrupt(d.tokens, vocab, MakeNoise(kind, beta_bar), rng);
    d.tokens = c.tokens;
    return ToArray(d);
  }, py::arg("tokens"), py::arg("vocab"), py::arg("kind"), py::arg("beta_bar"), py::arg("seed"));

  m.def("bp_marginals", [](const RuleSet& rs, std::vector<Symbol> noisy, const std::string& kind,
                           double beta_bar) {
    const auto& p = rs.params();
    const BeliefState bp =
        BpMarginals(rs, ComputeLeafLikelihoods(noisy, p.vocab, MakeNoise(kind, beta_bar)));
    py::list levels;
    for (int l = 0; l <= p.depth; ++l) levels.append(Matrix(bp.marginals[l], p.NodesAt(l), p.vocab));
    return py::make_tuple(levels, bp.log_partition);
  }, py::arg("grammar"), py::arg("noisy"), py::arg("kind") = "masking", py::arg("beta_bar") = 0.5,
     "Marginals per level (level 0 first) and the log evidence. Masked tokens use the id v.");

  m.def("token_token_correlation", [](const RuleSet& rs, const TokenArray& tokens) {
    return ReportDict(TokenTokenCorrelation(ToDataset(tokens, rs.params().vocab), rs.params()));
  }, py::arg("grammar"), py::arg("tokens"));

  m.def("population_token_token_correlation", [](const RuleSet& rs) {
    return ReportDict(PopulationTokenTokenCorrelation(rs));
  }, py::arg("grammar"));

  m.def("token_tuple_correlation", [](const RuleSet& rs, int level) {
    const TokenTupleCorrelation c = PopulationTokenTupleCorrelation(rs, level);
    py::dict d;
    d["tuple_codes"] = c.tuple_codes;
    d["values"] = Matrix(c.values, c.vocab, c.tuples());
    d["rms_supported"] = c.RmsSupported();
    return d;
  }, py::arg("grammar"), py::arg("level"), "Exact population correlation of x_1 with a tuple.");

  m.def("theory", [](const GrammarParams& p, int level, std::optional<double> samples) {
    const TheoryPrediction t = Theory(p, level, samples);
    py::dict d;
    d["level"] = t.level;
    d["f"] = t.rule_density;
    d["correlation"] = t.correlation;
    d["sampling_noise"] = t.sampling_noise;
    d["sample_complexity"] = t.sample_complexity;
    d["local_complexity"] = t.local_complexity;
    return d;
  }, py::arg("params"), py::arg("level"), py::arg("samples") = py::none());

  py::class_<ClusterModel>(m, "ClusterModel")
      .def_property_readonly("recovery", [](const ClusterModel& c) {
        std::vector<double> out;
        for (const auto& l : c.levels) out.push_back(l.recovery);
        return out;
      })
      .def_property_readonly("detected", [](const ClusterModel& c) {
        std::vector<bool> out;
        for (const auto& l : c.levels) out.push_back(l.detected);
        return out;
      })
      .def_property_readonly("learned_depth", &ClusterModel::LearnedDepth)
      .def_property_readonly("top_tuples", [](const ClusterModel& c) { return c.top_tuples; })
      .def("generate", [](const ClusterModel& c, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        return ToArray(GenerateFromLearned(c, n, rng));
      }, py::arg("n"), py::arg("seed"))
      .def("to_json", &ClusterModelToJson);

  m.def("learn_grammar", [](const RuleSet& rs, const TokenArray& tokens, const std::string& variant,
                            bool pooled, std::uint64_t seed) {
    LearnOptions opt;
    opt.variant = ParseVariant(variant);
    opt.pooled = pooled;
    opt.kmeans.seed = seed;
    py::gil_scoped_release release;
    return LearnGrammar(ToDataset(tokens, rs.params().vocab), rs, opt);
  }, py::arg("grammar"), py::arg("tokens"), py::arg("variant") = "single-token",
     py::arg("pooled") = true, py::arg("seed") = 0);

  m.def("one_step", [](const RuleSet& rs, const TokenArray& tokens, double eta) {
    const OneStepModel model =
        OneStepGd(NextTokenPairs(ToDataset(tokens, rs.params().vocab), rs.params()), eta);
    py::dict d;
    d["tuple_codes"] = model.tuple_codes;
    d["delta"] = Matrix(model.delta, model.vocab, model.tuples());
    d["identity_error"] = OneStepIdentityError(model);
    return d;
  }, py::arg("grammar"), py::arg("tokens"), py::arg("eta") = 1.0);

  m.def("run", [](const py::dict& config, const std::string& out_dir) {
    const std::string text = py::module_::import("json").attr("dumps")(config).cast<std::string>();
    const ExperimentConfig c = ExperimentConfig::FromJson(text);
    std::string manifest;
    {
      py::gil_scoped_release release;
      manifest = Run(c, out_dir).ToJson();
    }
    return py::module_::import("json").attr("loads")(manifest);
  }, py::arg("config"), py::arg("out_dir"),
     "Runs one experiment from a config dict and returns its manifest.");

  m.def("derive_seed", &DeriveSeed, py::arg("master"), py::arg("index"), py::arg("tag"));
}

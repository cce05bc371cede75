#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <string>
#include <vector>

#include "wasmleak/config.h"
#include "wasmleak/error.h"
#include "wasmleak/matcher.h"
#include "wasmleak/metrics.h"
#include "wasmleak/pipeline.h"

namespace py = pybind11;

namespace {

wasmleak::RunConfig MakeConfig(const std::map<std::string, std::string>& overrides,
                               std::optional<uint64_t> seed) {
  wasmleak::RunConfig c;
  if (seed) c.SetSeed(*seed);
  for (const auto& [k, v] : overrides) c.Set(k, v);
  c.Validate();
  return c;
}

py::dict ReportDict(const wasmleak::RecallReport& r) {
  py::dict d;
  d["regions"] = r.n;
  d["correct"] = r.correct;
  d["errors"] = r.e;
  d["misses"] = r.m;
  d["insertions"] = r.i;
  d["recall"] = r.recall;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Opcode recovery from page-fault traces of a Wasm interpreter";

  auto base = py::register_exception<wasmleak::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<wasmleak::ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<wasmleak::FormatError>(m, "FormatError", base.ptr());
  py::register_exception<wasmleak::PreconditionError>(m, "PreconditionError",
                                                      base.ptr());

  m.def("recall", &wasmleak::Recall, py::arg("n"), py::arg("e"), py::arg("m"),
        py::arg("i"), "1 - (E + M + I) / N as a fraction.");

  m.def(
      "align_free",
      [](const std::string& predicted, const std::string& truth) {
        const auto c = wasmleak::AlignFree(predicted, truth);
        py::dict d;
        d["errors"] = c.e;
        d["misses"] = c.m;
        d["insertions"] = c.i;
        d["regions"] = c.n;
        d["recall"] = c.recall();
        return d;
      },
      py::arg("predicted"), py::arg("truth"),
      "Edit alignment of two symbol strings with E/M/I counts.");

  m.def(
      "naive_positional_recall",
      [](const std::string& p, const std::string& t) {
        return wasmleak::NaivePositionalRecall(p, t);
      },
      py::arg("predicted"), py::arg("truth"));

  m.def(
      "pearson",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        return wasmleak::Pearson(x, y);
      },
      py::arg("x"), py::arg("y"));
  m.def(
      "score_numeric",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        return wasmleak::ScoreNumeric(x, y);
      },
      py::arg("x"), py::arg("y"));
  m.def(
      "score_discrete",
      [](const std::string& x, const std::string& y) {
        return wasmleak::ScoreDiscrete(x, y);
      },
      py::arg("x"), py::arg("y"));

  m.def(
      "config_text",
      [](const std::map<std::string, std::string>& overrides,
         std::optional<uint64_t> seed) {
        return MakeConfig(overrides, seed).Serialize();
      },
      py::arg("overrides") = std::map<std::string, std::string>{},
      py::arg("seed") = py::none(),
      "Full `key = value` configuration after applying overrides.");

  m.def(
      "run_experiment",
      [](const std::map<std::string, std::string>& overrides,
         std::optional<uint64_t> seed) {
        const wasmleak::RunConfig c = MakeConfig(overrides, seed);
        wasmleak::ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = wasmleak::RunExperiment(c);
        }
        py::dict d = ReportDict(r.report);
        d["optable_confidence"] = r.optable_confidence;
        d["optable_correct"] = r.optable_correct;
        d["db_entries"] = r.db_entries;
        d["victim_opcodes"] = r.victim_opcodes;
        d["unique_opcodes"] = r.unique_opcodes;
        return d;
      },
      py::arg("overrides") = std::map<std::string, std::string>{},
      py::arg("seed") = py::none(),
      "Profile, attack and evaluate in memory; returns the recall report.");

  m.def(
      "end2end",
      [](const std::filesystem::path& out_dir,
         const std::map<std::string, std::string>& overrides,
         std::optional<uint64_t> seed) {
        const wasmleak::RunConfig c = MakeConfig(overrides, seed);
        std::vector<std::filesystem::path> files;
        {
          py::gil_scoped_release release;
          files = wasmleak::CmdEnd2End(c, out_dir);
        }
        return files;
      },
      py::arg("out_dir"),
      py::arg("overrides") = std::map<std::string, std::string>{},
      py::arg("seed") = py::none(),
      "Writes every pipeline artifact into out_dir; returns the file list.");
}

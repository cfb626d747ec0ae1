// Python bindings for the high-level entry points. Datasets move through the
// filesystem in the same layout the CLI uses, so Python callers get the exact
// code path of a command-line run.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "autosmart/io.hpp"
#include "autosmart/metrics.hpp"
#include "autosmart/pipeline.hpp"
#include "autosmart/synthetic.hpp"

namespace py = pybind11;
using namespace autosmart;

namespace {

py::dict run_train_predict(const std::string& config,
                           const std::string& train_dir,
                           const std::string& test_dir, double time_budget_s,
                           int64_t mem_budget_mb, uint64_t seed, int workers) {
  const DatasetInfo info = parse_info(read_text_file(config));
  DatasetBundle train = load_dataset(train_dir, info, /*with_labels=*/true);
  DatasetBundle test =
      load_dataset(test_dir, main_only_info(info), /*with_labels=*/false);

  PipelineOptions opts;
  opts.time_budget_s = time_budget_s > 0 ? time_budget_s
                       : info.time_budget_s > 0 ? info.time_budget_s
                                                : 300.0;
  if (mem_budget_mb > 0)
    opts.mem_budget_bytes = mem_budget_mb << 20;
  else if (info.mem_budget_bytes > 0)
    opts.mem_budget_bytes = info.mem_budget_bytes;
  opts.seed = seed;
  opts.n_workers = workers;

  PipelineResult res;
  {
    py::gil_scoped_release release;
    res = train_predict(std::move(train), std::move(test.main), opts);
  }

  py::dict out;
  out["predictions"] = res.predictions;
  out["warnings"] = res.warnings;
  out["n_models"] = res.n_models;
  out["n_features"] = res.n_features;
  out["n_train_rows_used"] = res.n_train_rows_used;
  out["learning_rate"] = res.learning_rate;
  out["planned_rounds"] = res.planned_rounds;
  out["fallback"] = res.fallback;
  out["elapsed_s"] = res.elapsed_s;
  out["phase_log_tsv"] = res.phase_log_tsv;
  out["selection_tsv"] = selection_report_tsv(res.selection);
  return out;
}

void run_generate(const std::string& out_dir, uint64_t seed, int64_t n_train,
                  int64_t n_test, double time_budget_s) {
  SyntheticSpec spec;
  spec.seed = seed;
  if (n_train > 0) spec.n_train = n_train;
  if (n_test > 0) spec.n_test = n_test;
  if (time_budget_s > 0) spec.time_budget_s = time_budget_s;
  py::gil_scoped_release release;
  write_synthetic(out_dir, generate_synthetic(spec));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "automatic machine learning on temporal relational tables";

  py::register_exception<Error>(m, "AutosmartError");

  m.def("train_predict", &run_train_predict, py::arg("config"),
        py::arg("train_dir"), py::arg("test_dir"), py::kw_only(),
        py::arg("time_budget_s") = 0.0, py::arg("mem_budget_mb") = 0,
        py::arg("seed") = 1, py::arg("workers") = 1,
        "Train on a dataset directory and predict the test split. Returns a "
        "dict with 'predictions' plus run diagnostics.");

  m.def(
      "auc",
      [](const std::vector<uint8_t>& labels, const std::vector<double>& scores) {
        return auc(labels, scores);
      },
      py::arg("labels"), py::arg("scores"));

  m.def("competition_score", &competition_score, py::arg("auc"),
        py::arg("auc_base"), py::arg("auc_max"));

  m.def(
      "average_score",
      [](const std::vector<double>& scores) { return average_score(scores); },
      py::arg("scores"));

  m.def("generate_dataset", &run_generate, py::arg("out_dir"), py::kw_only(),
        py::arg("seed") = 1, py::arg("n_train") = 0, py::arg("n_test") = 0,
        py::arg("time_budget_s") = 0.0,
        "Write a synthetic benchmark dataset to out_dir.");

  m.def("load_predictions", [](const std::string& path) {
    return load_predictions(path);
  });
  m.def("load_labels",
        [](const std::string& path) { return load_labels(path); });
}

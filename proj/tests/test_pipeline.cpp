#include "autosmart/pipeline.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "autosmart/io.hpp"
#include "autosmart/metrics.hpp"
#include "autosmart/synthetic.hpp"

using namespace autosmart;

namespace {

SyntheticDataset small_dataset(uint64_t seed) {
  SyntheticSpec spec;
  spec.n_train = 2000;
  spec.n_test = 500;
  spec.n_train_users = 100;
  spec.n_test_users = 30;
  spec.seed = seed;
  return generate_synthetic(spec);
}

PipelineOptions quick_options() {
  PipelineOptions opts;
  opts.time_budget_s = 60;
  opts.seed = 5;
  opts.n_workers = 1;
  opts.round_cap = 40;
  opts.max_models = 2;
  return opts;
}

std::string render(const std::vector<double>& preds) {
  std::string out;
  char buf[64];
  for (double p : preds) {
    std::snprintf(buf, sizeof(buf), "%.6g\n", p);
    out += buf;
  }
  return out;
}

}  // namespace

TEST_CASE("pipeline produces finite probabilities that beat chance") {
  SyntheticDataset data = small_dataset(11);
  const std::vector<uint8_t> y_test = data.test_labels;

  PipelineResult res = train_predict(std::move(data.train),
                                     std::move(data.test_main), quick_options());
  REQUIRE(res.predictions.size() == y_test.size());
  for (double p : res.predictions) {
    CHECK(std::isfinite(p));
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
  CHECK_FALSE(res.fallback);
  CHECK(res.n_models >= 1);
  CHECK(auc(y_test, res.predictions) > 0.6);
}

TEST_CASE("near-zero budget degrades to the global prior, not a crash") {
  SyntheticDataset data = small_dataset(12);
  const size_t n_test = data.test_main.n_rows;

  int64_t n_pos = 0;
  for (uint8_t y : *data.train.labels) n_pos += y;
  const double prior =
      std::clamp(double(n_pos) / double(data.train.labels->size()), 1e-6,
                 1.0 - 1e-6);

  PipelineOptions opts = quick_options();
  opts.time_budget_s = 1e-9;
  PipelineResult res =
      train_predict(std::move(data.train), std::move(data.test_main), opts);

  REQUIRE(res.predictions.size() == n_test);
  CHECK(res.fallback);
  CHECK(res.n_models == 0);
  for (double p : res.predictions) CHECK(p == doctest::Approx(prior).epsilon(1e-12));
  CHECK(!res.warnings.empty());
}

TEST_CASE("test table with a renamed column is rejected") {
  SyntheticDataset data = small_dataset(13);
  REQUIRE(!data.test_main.columns.empty());
  for (auto& col : data.test_main.columns)
    if (col.name != "time" && col.kind == FeatureKind::categorical) {
      col.name = "intruder";
      break;
    }
  CHECK_THROWS_WITH_AS(train_predict(std::move(data.train),
                                     std::move(data.test_main), quick_options()),
                       doctest::Contains("ColumnMismatch"), Error);
}

TEST_CASE("single-class labels still yield a full constant prediction file") {
  SyntheticDataset data = small_dataset(14);
  const size_t n_test = data.test_main.n_rows;
  std::fill(data.train.labels->begin(), data.train.labels->end(), uint8_t{0});

  PipelineResult res = train_predict(std::move(data.train),
                                     std::move(data.test_main), quick_options());
  REQUIRE(res.predictions.size() == n_test);
  for (double p : res.predictions) {
    CHECK(std::isfinite(p));
    CHECK(p == doctest::Approx(res.predictions.front()).epsilon(1e-9));
  }
}

TEST_CASE("a tight memory budget sheds training rows with a warning") {
  SyntheticDataset data = small_dataset(15);
  PipelineOptions opts = quick_options();
  opts.mem_budget_bytes = 600 << 10;

  PipelineResult res =
      train_predict(std::move(data.train), std::move(data.test_main), opts);
  CHECK(res.n_train_rows_used < 2000);
  CHECK(res.n_train_rows_used >= 1000);
  const bool warned =
      std::any_of(res.warnings.begin(), res.warnings.end(), [](const auto& w) {
        return w.find("memory") != std::string::npos;
      });
  CHECK(warned);
  REQUIRE(res.predictions.size() == 500);
  for (double p : res.predictions) CHECK(std::isfinite(p));
}

TEST_CASE("same seed and single worker reproduce the rendered file byte for byte") {
  std::string first, second;
  for (std::string* out : {&first, &second}) {
    SyntheticDataset data = small_dataset(16);
    PipelineResult res = train_predict(std::move(data.train),
                                       std::move(data.test_main), quick_options());
    *out = render(res.predictions);
  }
  CHECK(first.size() > 500);
  CHECK(first == second);
}

TEST_CASE("phase log covers the run end to end") {
  SyntheticDataset data = small_dataset(17);
  PipelineResult res = train_predict(std::move(data.train),
                                     std::move(data.test_main), quick_options());
  for (const char* phase :
       {"ingest", "preprocess", "merge", "features", "tune", "ensemble",
        "predict"})
    CHECK(res.phase_log_tsv.find(phase) != std::string::npos);
  CHECK(res.elapsed_s > 0);
  CHECK(res.elapsed_s < 60);
}

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autosmart/bundle.hpp"
#include "autosmart/feateng.hpp"
#include "autosmart/tuner.hpp"

namespace autosmart {

struct PipelineOptions {
  double time_budget_s = 300.0;
  int64_t mem_budget_bytes = int64_t{4096} << 20;
  uint64_t seed = 1;
  int n_workers = 0;  // <= 1 runs single threaded
  FeatengOptions feateng;
  /// Boost-round ceiling below the planner's 5000 so generous budgets keep a
  /// deterministic round count; the planner only bites under pressure.
  int round_cap = 300;
  int max_models = 10;
  double reserve_frac = 0.2;
  std::vector<double> lr_grid = {0.3, 0.1, 0.05, 0.02};
};

struct PipelineResult {
  std::vector<double> predictions;  // aligned with the test main table rows
  std::vector<std::string> warnings;
  SelectionReport selection;
  std::string phase_log_tsv;
  size_t n_models = 0;
  size_t n_features = 0;
  size_t n_train_rows_used = 0;
  double learning_rate = 0;
  int planned_rounds = 0;
  bool fallback = false;  // prior-probability output path
  double elapsed_s = 0;
};

/// Full train-and-score pass: the test main table rides along through
/// preprocessing, merging and feature generation so both splits share one
/// encoding, then an ensemble fits on the training partition and scores the
/// test one. Budget exhaustion never escapes: with at least one trained
/// model the partial ensemble predicts, otherwise every test row gets the
/// training prior.
PipelineResult train_predict(DatasetBundle train, Table test_main,
                             const PipelineOptions& options);

}  // namespace autosmart

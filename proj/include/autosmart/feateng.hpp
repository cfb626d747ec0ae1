#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "autosmart/budget.hpp"
#include "autosmart/frame.hpp"
#include "autosmart/gbdt.hpp"

namespace autosmart {

class ThreadPool;

/// Column roles inside the merged frame: the factor, the main-table keys
/// (factor included, schema order) and the session columns. Names that were
/// pruned earlier may be absent from the frame; generators skip them.
struct FrameRoles {
  std::string factor;
  std::vector<std::string> keys;
  std::vector<std::string> sessions;
};

struct SelectionRow {
  std::string feature;
  int stage = 0;
  double gain = 0.0;
  bool kept = false;
  size_t sample_rows = 0;
};

struct SelectionReport {
  std::vector<SelectionRow> rows;
  int model_fits = 0;  // selection fits only, bounded by the stage count
};

/// TSV dump: feature, stage, gain, kept, sample_rows. One header line.
std::string selection_report_tsv(const SelectionReport& report);

/// Knobs of one selection fit plus the per-stage candidate policy.
struct SelectionParams {
  int n_rounds = 30;
  int max_leaves = 15;
  double learning_rate = 0.1;
  double min_split_gain = 1e-3;
  double drop_gain_eps = 1e-12;
  size_t sample_cap = 50000;
  uint64_t seed = 1;
};

struct FeatengOptions {
  SelectionParams selection;
  /// kept candidates per stage; generation stops at 4x this many
  int64_t stage_budget = 64;
  double reserve_frac = 0.2;
  double alpha = 10.0;  // target-encoding smoothing strength
  bool extra_reducers = false;  // adds per-group min/max in stage 2
};

/// 1-based position of the categorical code inside the multi-categorical
/// cell of the same row, 0 when absent, missing when either side is missing.
/// Both columns must be code-encoded and of equal length.
ColumnData position_lookup(const ColumnData& cat, const ColumnData& mcat,
                           std::string name);

/// Stage 1: per-group row counts and cross-column distinct counts. For each
/// grouping column g in {factor} u keys emits count(g) once, plus
/// nunique(t|g) for every target t in keys u sessions with t != g.
std::vector<ColumnData> gen_first_order(const Table& table,
                                        const FrameRoles& roles,
                                        size_t max_candidates = SIZE_MAX,
                                        ThreadPool* pool = nullptr);

/// Stage 2: numeric columns get a 10-quantile bin id plus per-key-group mean
/// and standard deviation of the raw value; categorical columns get count
/// and frequency encodings; (categorical, multi-categorical) pairs get the
/// position-lookup feature.
std::vector<ColumnData> gen_second_order(const Table& table,
                                         const FrameRoles& roles,
                                         const FeatengOptions& opts,
                                         size_t max_candidates = SIZE_MAX,
                                         ThreadPool* pool = nullptr);

/// Bucket width in seconds for a time span: day, hour, minute, second tried
/// in order, first giving 100..10000 buckets wins. A span too long even for
/// days falls back to day, one too short even for seconds to second.
int64_t choose_bucket_unit(int64_t span_seconds);

/// Stage 3: per (key, time-bucket) row counts and distinct counts of the
/// categorical columns still in the frame. Uses the first temporal column;
/// returns an empty set when there is none.
std::vector<ColumnData> gen_temporal(const Table& table,
                                     const FrameRoles& roles,
                                     size_t max_candidates = SIZE_MAX,
                                     ThreadPool* pool = nullptr);

/// Stage 4, in place: multi-categorical columns become the mean of their
/// element codes (empty cell -> missing); categorical columns become the
/// smoothed positive ratio (pos_v + alpha*prior) / (n_v + alpha) fitted on
/// the first n_train rows only, unseen values -> prior; temporal columns
/// become plain seconds. Throws MissingLabels when labels do not cover the
/// training partition.
void encode_categorical_final(FeatureFrame& frame,
                              std::span<const uint8_t> labels, size_t n_train,
                              double alpha = 10.0);

/// Fits one GBDT over the current numeric view plus the candidates on a
/// stratified sample of at most sample_cap training rows, then keeps
/// candidates by total split gain: gain <= drop_gain_eps drops, the budget
/// caps the rest top-k. Existing frame columns are never touched.
std::vector<ColumnData> select_features(
    const Table& table, std::vector<ColumnData> candidates,
    std::span<const uint8_t> labels, std::span<const double> weights,
    size_t n_train, const SelectionParams& params, int64_t budget, int stage,
    SelectionReport& report, BudgetTracker* tracker = nullptr,
    ThreadPool* pool = nullptr);

/// Numeric model matrix of the table: numerical columns as-is, temporal as
/// seconds, missing as NaN. Categorical and multi-categorical columns are
/// skipped. `rows` empty means all rows.
NumericFrame to_numeric_frame(const Table& table,
                              std::span<const int64_t> rows = {});

/// Stages 1..4 with selection after 1..3. Each generator stage is skipped
/// when the tracker cannot afford it; stage 4 always runs and the returned
/// frame is fully numeric. Labels cover the first n_train rows.
NumericFrame run_feature_pipeline(FeatureFrame& frame, const FrameRoles& roles,
                                  std::span<const uint8_t> labels,
                                  std::span<const double> weights,
                                  size_t n_train, BudgetTracker& tracker,
                                  const FeatengOptions& opts,
                                  SelectionReport& report,
                                  ThreadPool* pool = nullptr);

}  // namespace autosmart

#include "autosmart/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <set>

#include "autosmart/budget.hpp"
#include "autosmart/merge.hpp"
#include "autosmart/parallel.hpp"
#include "autosmart/preprocess.hpp"
#include "autosmart/rng.hpp"

namespace autosmart {

namespace {

/// Appends src rows onto dst, matching columns by name. Both sides must be
/// in the same encoding state (raw at this point of the pipeline).
void append_rows(Table& dst, const Table& src) {
  for (auto& col : dst.columns) {
    const ColumnData* other = src.find(col.name);
    if (other == nullptr || other->kind != col.kind)
      raise(ErrorCode::column_mismatch,
            "test main table misses training column '" + col.name + "'");
    if (other->encoded() != col.encoded())
      raise(ErrorCode::kind_mismatch,
            "cannot append an encoded column to a raw one: '" + col.name + "'");
    switch (col.kind) {
      case FeatureKind::categorical:
        if (col.encoded())
          for (size_t r = 0; r < other->rows; ++r)
            col.codes.push_back(other->codes.at(r));
        else
          col.raw.insert(col.raw.end(), other->raw.begin(), other->raw.end());
        break;
      case FeatureKind::multi_categorical: {
        const int64_t base = col.offsets.empty() ? 0 : col.offsets.back();
        if (col.offsets.empty()) col.offsets.push_back(0);
        for (size_t r = 1; r < other->offsets.size(); ++r)
          col.offsets.push_back(base + other->offsets[r]);
        if (col.encoded())
          for (size_t i = 0; i < other->elems.size(); ++i)
            col.elems.push_back(other->elems.at(i));
        else
          col.raw_elems.insert(col.raw_elems.end(), other->raw_elems.begin(),
                               other->raw_elems.end());
        break;
      }
      case FeatureKind::numerical:
        for (size_t r = 0; r < other->rows; ++r)
          col.reals.push_back(other->reals.at(r));
        break;
      case FeatureKind::temporal:
        col.times.insert(col.times.end(), other->times.begin(),
                         other->times.end());
        break;
    }
    col.missing.insert(col.missing.end(), other->missing.begin(),
                       other->missing.end());
    col.rows += other->rows;
  }
  for (const auto& col : src.columns)
    if (dst.find(col.name) == nullptr)
      raise(ErrorCode::column_mismatch,
            "test main table has extra column '" + col.name + "'");
  dst.n_rows += src.n_rows;
}

/// Feature names travel into the model file, whose grammar is space
/// delimited, so frame columns shed blanks before feature generation.
void sanitize_names(FeatureFrame& frame) {
  std::set<std::string> used;
  for (auto& col : frame.table.columns) {
    std::string name = col.name;
    std::replace(name.begin(), name.end(), ' ', '_');
    std::string candidate = name;
    for (int i = 2; !used.insert(candidate).second; ++i)
      candidate = name + "_" + std::to_string(i);
    if (candidate != col.name) {
      const auto origin = frame.origin[col.name];
      frame.origin.erase(col.name);
      frame.origin[candidate] = origin;
      col.name = candidate;
    }
  }
}

/// Stratified seeded subset of the training rows, ascending, both classes
/// kept when both exist.
std::vector<int64_t> stratified_rows(const std::vector<uint8_t>& labels,
                                     int64_t keep, uint64_t seed) {
  std::vector<int64_t> pos, neg;
  for (size_t r = 0; r < labels.size(); ++r)
    (labels[r] != 0 ? pos : neg).push_back(static_cast<int64_t>(r));
  int64_t k_pos = std::llround(static_cast<double>(keep) *
                               static_cast<double>(pos.size()) /
                               static_cast<double>(labels.size()));
  k_pos = std::clamp<int64_t>(k_pos, pos.empty() ? 0 : 1,
                              static_cast<int64_t>(pos.size()));
  const int64_t k_neg = std::clamp<int64_t>(
      keep - k_pos, neg.empty() ? 0 : 1, static_cast<int64_t>(neg.size()));
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<int64_t> rows;
  rows.reserve(static_cast<size_t>(k_pos + k_neg));
  for (int64_t i :
       sample_without_replacement(rng, static_cast<int64_t>(pos.size()), k_pos))
    rows.push_back(pos[static_cast<size_t>(i)]);
  for (int64_t i :
       sample_without_replacement(rng, static_cast<int64_t>(neg.size()), k_neg))
    rows.push_back(neg[static_cast<size_t>(i)]);
  std::sort(rows.begin(), rows.end());
  return rows;
}

NumericFrame gather_frame(const NumericFrame& X,
                          const std::vector<int64_t>& rows) {
  NumericFrame out;
  out.names = X.names;
  out.n_rows = rows.size();
  out.columns.reserve(X.columns.size());
  for (const auto& col : X.columns) {
    std::vector<double> v(rows.size());
    for (size_t r = 0; r < rows.size(); ++r)
      v[r] = col[static_cast<size_t>(rows[r])];
    out.columns.push_back(std::move(v));
  }
  return out;
}

}  // namespace

PipelineResult train_predict(DatasetBundle train, Table test_main,
                             const PipelineOptions& options) {
  PipelineResult result;
  BudgetTracker tracker(options.time_budget_s, options.mem_budget_bytes);
  std::unique_ptr<ThreadPool> pool_holder;
  ThreadPool* pool = nullptr;
  if (options.n_workers > 1) {
    pool_holder = std::make_unique<ThreadPool>(options.n_workers);
    pool = pool_holder.get();
  }

  validate_bundle(train);
  if (!train.labels.has_value() || train.labels->empty())
    raise(ErrorCode::missing_labels, "training bundle carries no labels");

  const size_t n_test = test_main.n_rows;
  std::vector<uint8_t> labels = std::move(*train.labels);
  train.labels.reset();
  {
    double pos = 0;
    for (uint8_t y : labels) pos += y != 0 ? 1.0 : 0.0;
    const double prior = pos / static_cast<double>(labels.size());
    result.predictions.assign(n_test,
                              std::clamp(prior, 1e-6, 1.0 - 1e-6));
  }

  std::vector<GbdtModel> models;
  NumericFrame X_test;
  std::vector<size_t> test_slot;  // X_test row -> original test row
  bool have_matrix = false;

  try {
    tracker.checkpoint("ingest");

    // Memory cap: budget the merged working set at ~3x its steady size and
    // shed training rows (never test rows) when it does not fit.
    {
      MemoryEstimate est = estimate_table_memory(train.main, 0);
      double bpr = est.bytes_per_row;
      int64_t current = est.current_bytes;
      for (const auto& rel : train.related) {
        const MemoryEstimate rel_est = estimate_table_memory(rel, 0);
        bpr += rel_est.bytes_per_row;
        current += rel_est.current_bytes;
      }
      est.bytes_per_row = bpr;
      est.current_bytes = current;
      est.headroom_bytes = std::max<int64_t>(
          options.mem_budget_bytes - current, 0);
      tracker.note_memory(current);
      const int64_t cap = max_rows_for_memory(est);
      const int64_t n_total =
          static_cast<int64_t>(train.main.n_rows + n_test);
      if (cap > 0 && cap < n_total) {
        const int64_t floor_train =
            std::min<int64_t>(static_cast<int64_t>(train.main.n_rows), 1000);
        const int64_t keep = std::max(
            cap - static_cast<int64_t>(n_test), floor_train);
        if (keep < static_cast<int64_t>(train.main.n_rows)) {
          const auto rows = stratified_rows(labels, keep, options.seed);
          gather_rows(train.main, rows);
          std::vector<uint8_t> kept_labels(rows.size());
          for (size_t i = 0; i < rows.size(); ++i)
            kept_labels[i] = labels[static_cast<size_t>(rows[i])];
          labels = std::move(kept_labels);
          result.warnings.push_back(
              "memory cap: training rows down-sampled to " +
              std::to_string(rows.size()));
        }
      }
    }
    const size_t n_train = train.main.n_rows;
    result.n_train_rows_used = n_train;

    tracker.checkpoint("preprocess");
    DatasetBundle combined;
    combined.main = std::move(train.main);
    append_rows(combined.main, test_main);
    combined.related = std::move(train.related);
    combined.relations = std::move(train.relations);
    PreprocessOptions prep_opts;
    prep_opts.seed = options.seed;
    const PreprocessResult prep = run_preprocess(combined, prep_opts, pool);

    tracker.checkpoint("merge");
    FeatureFrame frame = merge_all(combined, plan_merge(combined));
    for (const auto& w : frame.warnings) result.warnings.push_back(w);
    combined.related.clear();

    // Restore the train-first row layout the feature stages expect: the
    // temporal sort interleaved the splits, so stably partition by origin.
    const size_t n_total = frame.table.n_rows;
    {
      std::vector<int64_t> part;
      part.reserve(n_total);
      for (size_t j = 0; j < n_total; ++j)
        if (static_cast<size_t>(prep.main_order[j]) < n_train)
          part.push_back(static_cast<int64_t>(j));
      for (size_t j = 0; j < n_total; ++j)
        if (static_cast<size_t>(prep.main_order[j]) >= n_train)
          part.push_back(static_cast<int64_t>(j));
      gather_rows(frame.table, part);
      std::vector<uint8_t> y(n_train);
      for (size_t i = 0; i < n_train; ++i)
        y[i] = labels[static_cast<size_t>(
            prep.main_order[static_cast<size_t>(part[i])])];
      labels = std::move(y);
      test_slot.resize(n_total - n_train);
      for (size_t i = n_train; i < n_total; ++i)
        test_slot[i - n_train] = static_cast<size_t>(
            prep.main_order[static_cast<size_t>(part[i])]) - n_train;
    }
    sanitize_names(frame);

    tracker.checkpoint("features");
    FrameRoles roles;
    roles.factor = prep.base.factor;
    roles.keys = prep.base.keys_of(combined.main.name);
    roles.sessions = prep.base.sessions;
    FeatengOptions fe_opts = options.feateng;
    fe_opts.selection.seed = options.seed;
    std::vector<double> unit_w(n_train, 1.0);
    NumericFrame X_all =
        run_feature_pipeline(frame, roles, labels, unit_w, n_train, tracker,
                             fe_opts, result.selection, pool);
    frame.table.columns.clear();
    result.n_features = X_all.names.size();
    tracker.note_memory(static_cast<int64_t>(X_all.names.size()) *
                        static_cast<int64_t>(n_total) * 8);

    // Split the matrix; the train part keeps the X_all storage.
    X_test.names = X_all.names;
    X_test.n_rows = n_total - n_train;
    for (auto& col : X_all.columns) {
      X_test.columns.emplace_back(col.begin() + static_cast<int64_t>(n_train),
                                  col.end());
      col.resize(n_train);
    }
    X_all.n_rows = n_train;
    have_matrix = true;

    tracker.checkpoint("rebalance");
    const RebalanceResult balance =
        rebalance(labels, unit_w, options.seed);
    if (!balance.warning.empty()) result.warnings.push_back(balance.warning);
    const NumericFrame X_bal = gather_frame(X_all, balance.rows);
    std::vector<uint8_t> y_bal(balance.rows.size());
    for (size_t i = 0; i < balance.rows.size(); ++i)
      y_bal[i] = labels[static_cast<size_t>(balance.rows[i])];

    tracker.checkpoint("tune");
    GbdtParams base;
    base.seed = options.seed;
    if (!tracker.can_afford(1.0, options.reserve_frac))
      raise(ErrorCode::budget_exhausted,
            "no time left to price a training round");
    const RoundTimeEstimate est =
        estimate_round_time(X_bal, y_bal, balance.weights, base, 15, pool);
    double lr = 0.1;
    const double probe_cost =
        static_cast<double>(options.lr_grid.size()) *
        (est.prep_s + 50.0 * est.per_round_s);
    if (!options.lr_grid.empty() &&
        tracker.can_afford(probe_cost, options.reserve_frac))
      lr = search_learning_rate(X_bal, y_bal, balance.weights, base,
                                options.lr_grid, 50, pool);
    const int rounds =
        std::min(plan_boost_rounds(est, tracker.remaining_s(),
                                   options.reserve_frac),
                 std::max(options.round_cap, 15));
    base.learning_rate = lr;
    base.learning_rates = decay_schedule(lr, rounds);
    base.n_rounds = rounds;
    result.learning_rate = lr;
    result.planned_rounds = rounds;

    tracker.checkpoint("ensemble");
    EnsembleOptions ens;
    ens.base = base;
    ens.est = est;
    ens.reserve = options.reserve_frac;
    ens.max_models = options.max_models;
    models = fit_ensemble(X_bal, y_bal, balance.weights, ens, tracker, pool);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::budget_exhausted) throw;
    result.warnings.push_back(e.what());
  }

  // The prediction write is the one phase that never gets skipped; swallow
  // the exhaustion signal so the phase is still logged.
  try {
    tracker.checkpoint("predict");
  } catch (const Error& e) {
    if (e.code() != ErrorCode::budget_exhausted) throw;
  }
  if (!models.empty() && have_matrix) {
    const std::vector<double> preds = predict_ensemble(models, X_test);
    for (size_t i = 0; i < preds.size(); ++i)
      result.predictions[test_slot[i]] = preds[i];
    result.n_models = models.size();
  } else {
    result.fallback = true;
    result.warnings.push_back(
        "fallback: prior probability emitted for every test row");
  }
  tracker.finish();
  result.phase_log_tsv = tracker.phase_log_tsv();
  result.elapsed_s = tracker.elapsed_s();
  return result;
}

}  // namespace autosmart

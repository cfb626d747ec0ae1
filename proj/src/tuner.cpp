#include "autosmart/tuner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "autosmart/metrics.hpp"
#include "autosmart/rng.hpp"

namespace autosmart {

namespace {

double steady_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

NumericFrame slice_frame(const NumericFrame& X, size_t begin, size_t end) {
  NumericFrame out;
  out.names = X.names;
  out.n_rows = end - begin;
  out.columns.reserve(X.columns.size());
  for (const std::vector<double>& col : X.columns) {
    out.columns.emplace_back(col.begin() + begin, col.begin() + end);
  }
  return out;
}

}  // namespace

RoundTimeEstimate round_time_from_trials(double t_r0, double t_2r0, int r0) {
  if (!(t_2r0 > t_r0)) {
    raise(ErrorCode::non_positive_slope,
          "second trial was not slower than the first");
  }
  RoundTimeEstimate est;
  est.per_round_s = (t_2r0 - t_r0) / r0;
  est.prep_s = std::max(0.0, t_r0 - r0 * est.per_round_s);
  return est;
}

RoundTimeEstimate estimate_round_time(const NumericFrame& X,
                                      std::span<const uint8_t> y,
                                      std::span<const double> w,
                                      const GbdtParams& params, int r0,
                                      ThreadPool* pool,
                                      std::function<double()> now) {
  if (!now) now = steady_seconds;
  auto trial = [&](int rounds) {
    GbdtParams p = params;
    p.n_rounds = rounds;
    p.learning_rates.clear();
    const double t0 = now();
    (void)fit(X, y, w, p, pool);
    return now() - t0;
  };
  double t2 = 0;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const double t1 = trial(r0);
    t2 = trial(2 * r0);
    try {
      return round_time_from_trials(t1, t2, r0);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::non_positive_slope) throw;
    }
  }
  return {0.0, std::max(t2, 1e-9) / (2.0 * r0)};
}

int plan_boost_rounds(const RoundTimeEstimate& est, double remaining_s,
                      double reserve_frac) {
  double rounds = 0;
  if (est.per_round_s > 0) {
    const double usable = remaining_s * (1.0 - reserve_frac) - est.prep_s;
    // the epsilon keeps exact quotients like 47.5/0.1 from flooring one low
    rounds = std::floor(usable / est.per_round_s + 1e-9);
  }
  return static_cast<int>(std::clamp(rounds, 15.0, 5000.0));
}

double search_learning_rate(const NumericFrame& X, std::span<const uint8_t> y,
                            std::span<const double> w, const GbdtParams& base,
                            std::vector<double> grid, int probe_rounds,
                            ThreadPool* pool) {
  if (grid.empty()) {
    raise(ErrorCode::empty_list, "learning rate grid is empty");
  }
  std::sort(grid.begin(), grid.end(), std::greater<>());
  const size_t n = X.n_rows;
  const size_t n_train = static_cast<size_t>(0.8 * static_cast<double>(n));
  if (n_train < 1 || n_train >= n) return grid.front();

  const NumericFrame train = slice_frame(X, 0, n_train);
  const NumericFrame valid = slice_frame(X, n_train, n);
  const std::span<const uint8_t> y_train = y.subspan(0, n_train);
  const std::span<const uint8_t> y_valid = y.subspan(n_train);
  const std::span<const double> w_train = w.subspan(0, n_train);

  double best_lr = grid.front();
  double best_auc = -1;
  for (double lr : grid) {
    GbdtParams p = base;
    p.n_rounds = probe_rounds;
    p.learning_rate = lr;
    p.learning_rates.clear();
    p.row_fraction = 1.0;
    p.feature_fraction = 1.0;
    const GbdtModel model = fit(train, y_train, w_train, p, pool);
    const std::vector<double> preds = predict(model, valid);
    double score = 0.5;
    try {
      score = auc(y_valid, preds);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::single_class) throw;
    }
    if (score > best_auc) {  // grid is descending, so ties keep the larger lr
      best_auc = score;
      best_lr = lr;
    }
  }
  return best_lr;
}

std::vector<double> decay_schedule(double lr0, int n_rounds) {
  const int step = std::max(1, (n_rounds + 9) / 10);
  const double floor_lr = 0.01 * lr0;
  std::vector<double> out(n_rounds);
  double level = lr0;
  for (int t = 0; t < n_rounds; ++t) {
    if (t > 0 && t % step == 0) level *= 0.8;
    out[t] = std::max(floor_lr, level);
  }
  return out;
}

RebalanceResult rebalance(std::span<const uint8_t> y,
                          std::span<const double> w, uint64_t seed) {
  RebalanceResult out;
  std::vector<int64_t> pos, neg;
  for (size_t i = 0; i < y.size(); ++i) {
    (y[i] != 0 ? pos : neg).push_back(static_cast<int64_t>(i));
  }
  auto identity = [&] {
    out.rows.resize(y.size());
    std::iota(out.rows.begin(), out.rows.end(), 0);
    out.weights.assign(w.begin(), w.end());
  };
  if (pos.empty() || neg.empty()) {
    identity();
    out.warning = "rebalance skipped: labels contain a single class";
    return out;
  }
  std::vector<int64_t>& minority = pos.size() <= neg.size() ? pos : neg;
  std::vector<int64_t>& majority = pos.size() <= neg.size() ? neg : pos;
  if (3 * minority.size() >= majority.size()) {
    identity();
    return out;
  }

  std::mt19937_64 rng(seed);
  const std::vector<int64_t> picks = sample_without_replacement(
      rng, static_cast<int64_t>(majority.size()),
      static_cast<int64_t>(3 * minority.size()));
  std::vector<int64_t> kept_majority(picks.size());
  for (size_t i = 0; i < picks.size(); ++i) {
    kept_majority[i] = majority[picks[i]];
  }
  double w_majority_all = 0;
  for (int64_t r : majority) w_majority_all += w[r];
  double w_majority_kept = 0;
  for (int64_t r : kept_majority) w_majority_kept += w[r];
  const double scale = w_majority_all / w_majority_kept;

  out.rows.reserve(minority.size() + kept_majority.size());
  std::merge(minority.begin(), minority.end(), kept_majority.begin(),
             kept_majority.end(), std::back_inserter(out.rows));
  out.weights.reserve(out.rows.size());
  const bool minority_is_pos = pos.size() <= neg.size();
  for (int64_t r : out.rows) {
    const bool is_minority = (y[r] != 0) == minority_is_pos;
    out.weights.push_back(is_minority ? w[r] : w[r] * scale);
  }
  return out;
}

std::vector<GbdtModel> fit_ensemble(const NumericFrame& X,
                                    std::span<const uint8_t> y,
                                    std::span<const double> w,
                                    const EnsembleOptions& options,
                                    BudgetTracker& tracker,
                                    ThreadPool* pool) {
  GbdtParams params = options.base;
  params.row_fraction = options.row_fraction;
  params.feature_fraction = options.feature_fraction;

  const double planned_cost =
      options.est.prep_s + params.n_rounds * options.est.per_round_s;
  if (!tracker.can_afford(planned_cost, options.reserve)) {
    params.n_rounds = std::min(
        params.n_rounds,
        plan_boost_rounds(options.est, tracker.remaining_s(),
                          options.reserve));
  }
  // emergency brake for members after the first; the guaranteed first model
  // always runs its (possibly shrunken) plan to completion
  const std::function<bool()> out_of_time = [&tracker] {
    return tracker.remaining_s() <= 0.0;
  };

  std::vector<GbdtModel> models;
  double measured_cost = 0;
  for (int i = 0; i < std::max(options.max_models, 1); ++i) {
    if (i > 0 && !tracker.can_afford(measured_cost, options.reserve)) break;
    params.seed = options.base.seed + 1000003ull * static_cast<uint64_t>(i);
    const double t0 = tracker.elapsed_s();
    models.push_back(
        fit(X, y, w, params, pool, i == 0 ? std::function<bool()>{} : out_of_time));
    if (i == 0) measured_cost = tracker.elapsed_s() - t0;
  }
  return models;
}

std::vector<double> predict_ensemble(const std::vector<GbdtModel>& models,
                                     const NumericFrame& X) {
  if (models.empty()) {
    raise(ErrorCode::empty_list, "ensemble has no models");
  }
  std::vector<double> sum(X.n_rows, 0.0);
  for (const GbdtModel& model : models) {
    const std::vector<double> p = predict(model, X);
    for (size_t i = 0; i < p.size(); ++i) sum[i] += p[i];
  }
  const double inv = 1.0 / static_cast<double>(models.size());
  for (double& v : sum) v *= inv;
  return sum;
}

}  // namespace autosmart

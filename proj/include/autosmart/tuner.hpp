#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "autosmart/budget.hpp"
#include "autosmart/gbdt.hpp"

namespace autosmart {

struct RoundTimeEstimate {
  double prep_s = 0;
  double per_round_s = 0;
};

/// Fits t(r) = prep + r * per_round through trials at r0 and 2*r0 rounds.
/// Throws NonPositiveSlope when the second trial was not slower.
RoundTimeEstimate round_time_from_trials(double t_r0, double t_2r0, int r0);

/// Times two short fits (r0 and 2*r0 rounds) and fits the linear model. On a
/// non-positive slope the pair of trials is retried once; after that the
/// estimate degrades to per_round = t(2*r0)/(2*r0) with zero prep. `now` is
/// injectable for tests and defaults to the monotonic clock.
RoundTimeEstimate estimate_round_time(const NumericFrame& X,
                                      std::span<const uint8_t> y,
                                      std::span<const double> w,
                                      const GbdtParams& params, int r0 = 15,
                                      ThreadPool* pool = nullptr,
                                      std::function<double()> now = {});

/// floor((remaining*(1-reserve) - prep)/per_round), clamped to [15, 5000].
int plan_boost_rounds(const RoundTimeEstimate& est, double remaining_s,
                      double reserve_frac = 0.2);

/// Grid search over learning rates with short probe fits, scored by AUC on
/// the last 20% of the (time-ordered) rows. Ties prefer the larger rate.
double search_learning_rate(const NumericFrame& X, std::span<const uint8_t> y,
                            std::span<const double> w,
                            const GbdtParams& base,
                            std::vector<double> grid = {0.3, 0.1, 0.05, 0.02},
                            int probe_rounds = 50,
                            ThreadPool* pool = nullptr);

/// lr_t = max(0.01*lr0, lr0 * 0.8^floor(t/s)), s = max(1, ceil(n/10)).
std::vector<double> decay_schedule(double lr0, int n_rounds);

struct RebalanceResult {
  std::vector<int64_t> rows;     // kept row indices, ascending
  std::vector<double> weights;   // aligned with rows
  std::string warning;           // non-empty for the single-class fallback
};

/// Under-samples the majority class when minority/majority < 1/3: all
/// minority rows are kept plus a seeded uniform 3*|minority| majority subset
/// whose weights are scaled so the weighted class proportions match the
/// original data. Above the threshold (or with one class) the input passes
/// through unchanged.
RebalanceResult rebalance(std::span<const uint8_t> y,
                          std::span<const double> w, uint64_t seed = 1);

struct EnsembleOptions {
  GbdtParams base;         // rounds/schedule/leaves per member
  RoundTimeEstimate est;   // prices the first member for affordability
  double reserve = 0.2;
  int max_models = 10;
  double row_fraction = 0.9;
  double feature_fraction = 0.8;
};

/// Bagged ensemble under a live budget: members train sequentially with
/// distinct seeds; before each extra member the tracker is asked whether the
/// first member's measured cost is still affordable. The first member always
/// trains (rounds shrunk to fit when the estimate says the full plan does
/// not), so the overshoot is bounded by one member's cost.
std::vector<GbdtModel> fit_ensemble(const NumericFrame& X,
                                    std::span<const uint8_t> y,
                                    std::span<const double> w,
                                    const EnsembleOptions& options,
                                    BudgetTracker& tracker,
                                    ThreadPool* pool = nullptr);

/// Arithmetic mean of member probabilities.
std::vector<double> predict_ensemble(const std::vector<GbdtModel>& models,
                                     const NumericFrame& X);

}  // namespace autosmart

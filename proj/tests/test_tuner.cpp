#include "autosmart/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "autosmart/metrics.hpp"
#include "autosmart/rng.hpp"
#include "doctest.h"

using namespace autosmart;

namespace {

struct SmallData {
  NumericFrame X;
  std::vector<uint8_t> y;
  std::vector<double> w;
};

SmallData make_data(uint64_t seed, size_t n, size_t nf = 3,
                    double signal = 1.0) {
  std::mt19937_64 rng(seed);
  SmallData d;
  std::vector<double> coef(nf);
  for (size_t f = 0; f < nf; ++f) coef[f] = normal01(rng);
  std::vector<std::vector<double>> cols(nf, std::vector<double>(n));
  d.y.resize(n);
  d.w.assign(n, 1.0);
  for (size_t i = 0; i < n; ++i) {
    double s = normal01(rng);
    for (size_t f = 0; f < nf; ++f) {
      cols[f][i] = normal01(rng);
      s += signal * coef[f] * cols[f][i];
    }
    d.y[i] = s > 0 ? 1 : 0;
  }
  bool has0 = false, has1 = false;
  for (uint8_t v : d.y) (v ? has1 : has0) = true;
  if (!has0) d.y[0] = 0;
  if (!has1) d.y[0] = 1;
  for (size_t f = 0; f < nf; ++f) {
    d.X.add("f" + std::to_string(f), std::move(cols[f]));
  }
  return d;
}

std::function<double()> scripted_clock(std::vector<double> times) {
  auto state = std::make_shared<std::pair<std::vector<double>, size_t>>(
      std::move(times), 0);
  return [state] {
    REQUIRE(state->second < state->first.size());
    return state->first[state->second++];
  };
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

TEST_CASE("two trials pin down the linear round-time model") {
  const RoundTimeEstimate est = round_time_from_trials(2.0, 3.5, 15);
  CHECK(est.per_round_s == 0.1);
  CHECK(est.prep_s == 0.5);

  CHECK_THROWS_WITH_AS(round_time_from_trials(1.0, 1.0, 15),
                       doctest::Contains("NonPositiveSlope"), Error);
  CHECK_THROWS_WITH_AS(round_time_from_trials(2.0, 1.5, 15),
                       doctest::Contains("NonPositiveSlope"), Error);
}

TEST_CASE("negative intercepts clamp prep time at zero") {
  const RoundTimeEstimate est = round_time_from_trials(1.0, 3.0, 15);
  CHECK(est.per_round_s == doctest::Approx(2.0 / 15).epsilon(1e-12));
  CHECK(est.prep_s == 0.0);
}

TEST_CASE("timed estimation reads the injected clock") {
  SmallData d = make_data(1, 60);
  GbdtParams params;

  SUBCASE("clean first attempt") {
    const RoundTimeEstimate est = estimate_round_time(
        d.X, d.y, d.w, params, 15, nullptr, scripted_clock({0, 2, 2, 5.5}));
    CHECK(est.per_round_s == 0.1);
    CHECK(est.prep_s == 0.5);
  }

  SUBCASE("flat first pair, successful retry") {
    const RoundTimeEstimate est = estimate_round_time(
        d.X, d.y, d.w, params, 15, nullptr,
        scripted_clock({0, 1, 1, 1, 1, 2, 2, 4.5}));
    CHECK(est.per_round_s == 0.1);
    CHECK(est.prep_s == 0.0);
  }

  SUBCASE("two flat pairs fall back to the coarse rate") {
    const RoundTimeEstimate est = estimate_round_time(
        d.X, d.y, d.w, params, 15, nullptr,
        scripted_clock({0, 1, 1, 2, 2, 3, 3, 4}));
    CHECK(est.per_round_s == doctest::Approx(1.0 / 30).epsilon(1e-12));
    CHECK(est.prep_s == 0.0);
  }
}

TEST_CASE("round planning honors the reserve and the clamps") {
  RoundTimeEstimate est{0.5, 0.1};
  CHECK(plan_boost_rounds(est, 60.0, 0.2) == 475);
  CHECK(plan_boost_rounds(est, 1.0, 0.2) == 15);
  CHECK(plan_boost_rounds({0.5, 10.0}, 60.0, 0.2) == 15);
  CHECK(plan_boost_rounds({0.0, 0.001}, 1e6, 0.2) == 5000);
  CHECK(plan_boost_rounds({0.0, 0.0}, 100.0, 0.2) == 15);
}

TEST_CASE("non-clamped plans fit inside the reserved window") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    RoundTimeEstimate est;
    est.prep_s = uniform01(rng) * 2;
    est.per_round_s = 0.001 + uniform01(rng);
    const double remaining = 1 + uniform01(rng) * 500;
    const int rounds = plan_boost_rounds(est, remaining, 0.2);
    if (rounds > 15 && rounds < 5000) {
      CHECK(est.prep_s + rounds * est.per_round_s <=
            remaining * 0.8 + 1e-6);
    }
  }
}

TEST_CASE("decay schedule follows the stepped exponential") {
  CHECK(decay_schedule(0.25, 1) == std::vector<double>{0.25});

  const std::vector<double> s = decay_schedule(0.1, 20);
  REQUIRE(s.size() == 20);
  CHECK(s[0] == 0.1);
  CHECK(s[1] == 0.1);
  CHECK(s[2] == 0.1 * 0.8);
  CHECK(s[3] == 0.1 * 0.8);
  CHECK(s[4] == 0.1 * 0.8 * 0.8);
  CHECK(s[19] == 0.1 * std::pow(0.8, 9));

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const double lr0 = 0.01 + uniform01(rng);
    const int n = 1 + static_cast<int>(uniform_below(rng, 400));
    const std::vector<double> sched = decay_schedule(lr0, n);
    REQUIRE(sched.size() == static_cast<size_t>(n));
    for (size_t t = 0; t < sched.size(); ++t) {
      CHECK(sched[t] <= lr0);
      CHECK(sched[t] >= 0.01 * lr0);
      if (t > 0) CHECK(sched[t] <= sched[t - 1]);
    }
  }
}

TEST_CASE("mild imbalance passes through rebalance untouched") {
  std::vector<uint8_t> y(300, 0);
  std::fill_n(y.begin(), 100, uint8_t{1});
  std::vector<double> w(300, 1.0);
  const RebalanceResult r = rebalance(y, w);
  REQUIRE(r.rows.size() == 300);
  for (size_t i = 0; i < 300; ++i) CHECK(r.rows[i] == static_cast<int64_t>(i));
  CHECK(r.weights == w);
  CHECK(r.warning.empty());
}

TEST_CASE("heavy imbalance keeps 3x minority with compensating weights") {
  std::vector<uint8_t> y(10100, 0);
  std::fill_n(y.begin(), 100, uint8_t{1});
  std::vector<double> w(10100, 1.0);
  const RebalanceResult r = rebalance(y, w, 42);
  REQUIRE(r.rows.size() == 400);

  size_t n_pos = 0;
  double w_pos = 0, w_neg = 0;
  for (size_t k = 0; k < r.rows.size(); ++k) {
    if (y[r.rows[k]]) {
      ++n_pos;
      w_pos += r.weights[k];
      CHECK(r.weights[k] == 1.0);
    } else {
      w_neg += r.weights[k];
      CHECK(r.weights[k] == doctest::Approx(10000.0 / 300.0).epsilon(1e-12));
    }
  }
  CHECK(n_pos == 100);  // every minority row kept
  CHECK(std::abs(w_pos / w_neg - 100.0 / 10000.0) <= 1e-9);

  const RebalanceResult again = rebalance(y, w, 42);
  CHECK(again.rows == r.rows);
  const RebalanceResult other = rebalance(y, w, 43);
  CHECK(other.rows != r.rows);
}

TEST_CASE("rebalance preserves the weighted class ratio under random weights") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t n_min = 20 + static_cast<size_t>(uniform_below(rng, 50));
    const size_t n_maj =
        4 * n_min + static_cast<size_t>(uniform_below(rng, 2000));
    std::vector<uint8_t> y(n_min + n_maj, 0);
    std::fill_n(y.begin(), n_min, uint8_t{1});
    std::vector<double> w(y.size());
    for (double& v : w) v = 0.5 + uniform01(rng) * 1.5;

    double pos_before = 0, neg_before = 0;
    for (size_t i = 0; i < y.size(); ++i) {
      (y[i] ? pos_before : neg_before) += w[i];
    }
    const RebalanceResult r = rebalance(y, w, 7 + trial);
    REQUIRE(r.rows.size() == 4 * n_min);
    double pos_after = 0, neg_after = 0;
    for (size_t k = 0; k < r.rows.size(); ++k) {
      (y[r.rows[k]] ? pos_after : neg_after) += r.weights[k];
    }
    CHECK(std::abs(pos_after / neg_after - pos_before / neg_before) <= 1e-9);
  }
}

TEST_CASE("single-class labels make rebalance a warned identity") {
  std::vector<uint8_t> y(50, 1);
  std::vector<double> w(50, 2.0);
  const RebalanceResult r = rebalance(y, w);
  CHECK(r.rows.size() == 50);
  CHECK(r.weights == w);
  CHECK_FALSE(r.warning.empty());
}

TEST_CASE("learning rate search follows the validation AUC") {
  GbdtParams base;

  SUBCASE("single-point grid") {
    SmallData d = make_data(2, 200);
    CHECK(search_learning_rate(d.X, d.y, d.w, base, {0.1}, 10) == 0.1);
  }

  SUBCASE("indistinguishable models tie toward the larger rate") {
    SmallData d = make_data(3, 200);
    for (auto& col : d.X.columns) std::fill(col.begin(), col.end(), 1.0);
    CHECK(search_learning_rate(d.X, d.y, d.w, base) == 0.3);
  }

  SUBCASE("returned rate attains the best validation AUC over the grid") {
    SmallData d = make_data(4, 1500, 4, 0.6);
    const std::vector<double> grid{0.3, 0.1, 0.05, 0.02};
    const double chosen = search_learning_rate(d.X, d.y, d.w, base, grid, 25);

    // independent pass over the grid with the same split protocol
    const size_t n_train = static_cast<size_t>(0.8 * 1500);
    NumericFrame train, valid;
    train.names = valid.names = d.X.names;
    train.n_rows = n_train;
    valid.n_rows = 1500 - n_train;
    for (const auto& col : d.X.columns) {
      train.columns.emplace_back(col.begin(), col.begin() + n_train);
      valid.columns.emplace_back(col.begin() + n_train, col.end());
    }
    const std::span<const uint8_t> yv(d.y.data() + n_train,
                                      1500 - n_train);
    double best_auc = -1;
    double best_lr = 0;
    for (double lr : grid) {
      GbdtParams p = base;
      p.n_rounds = 25;
      p.learning_rate = lr;
      const GbdtModel m = fit(
          train, std::span<const uint8_t>(d.y.data(), n_train),
          std::span<const double>(d.w.data(), n_train), p);
      const double a = auc(yv, predict(m, valid));
      if (a > best_auc) {
        best_auc = a;
        best_lr = lr;
      }
    }
    CHECK(chosen == best_lr);
  }

  SUBCASE("empty grid is rejected") {
    SmallData d = make_data(6, 100);
    CHECK_THROWS_WITH_AS(search_learning_rate(d.X, d.y, d.w, base, {}),
                         doctest::Contains("EmptyList"), Error);
  }
}

TEST_CASE("ensemble hits the model cap under a generous budget") {
  SmallData d = make_data(11, 300);
  EnsembleOptions opt;
  opt.base.n_rounds = 5;
  opt.base.seed = 1;
  opt.est = {0.0, 1e-6};
  BudgetTracker tracker(300.0, 1 << 30);
  const std::vector<GbdtModel> models =
      fit_ensemble(d.X, d.y, d.w, opt, tracker);
  REQUIRE(models.size() == 10);
  CHECK(save_model(models[0]) != save_model(models[1]));  // distinct seeds
  CHECK(tracker.affordability_log().size() >= 10);  // plan check + 9 gates

  const std::vector<double> mean = predict_ensemble(models, d.X);
  std::vector<std::vector<double>> member(models.size());
  for (size_t m = 0; m < models.size(); ++m) {
    member[m] = predict(models[m], d.X);
  }
  for (size_t i = 0; i < mean.size(); ++i) {
    double s = 0;
    for (const auto& p : member) s += p[i];
    CHECK(std::abs(mean[i] - s / models.size()) <= 1e-12);
  }
}

TEST_CASE("exhausted budget still trains one shrunken model") {
  SmallData d = make_data(12, 200);
  EnsembleOptions opt;
  opt.base.n_rounds = 100;
  opt.est = {0.5, 10.0};  // plans far beyond the budget
  BudgetTracker tracker(1e-6, 1 << 30);
  const std::vector<GbdtModel> models =
      fit_ensemble(d.X, d.y, d.w, opt, tracker);
  REQUIRE(models.size() == 1);
  CHECK(models[0].trees.size() == 15);  // shrunk to the round floor
}

TEST_CASE("ensemble mean matches hand arithmetic") {
  GbdtModel a, b;
  a.feature_names = b.feature_names = {"x"};
  a.base_score = logit(0.2);
  b.base_score = logit(0.6);
  NumericFrame X;
  X.add("x", {1.0, 2.0, 3.0});

  const std::vector<double> one = predict_ensemble({a}, X);
  CHECK(one == predict(a, X));

  const std::vector<double> two = predict_ensemble({a, b}, X);
  for (double v : two) CHECK(v == doctest::Approx(0.4).epsilon(1e-12));

  CHECK_THROWS_WITH_AS(predict_ensemble({}, X),
                       doctest::Contains("EmptyList"), Error);
}

TEST_CASE("ensemble mean is invariant to model order") {
  SmallData d = make_data(13, 250);
  EnsembleOptions opt;
  opt.base.n_rounds = 4;
  opt.est = {0.0, 1e-6};
  opt.max_models = 4;
  BudgetTracker tracker(300.0, 1 << 30);
  std::vector<GbdtModel> models = fit_ensemble(d.X, d.y, d.w, opt, tracker);
  REQUIRE(models.size() == 4);
  const std::vector<double> fwd = predict_ensemble(models, d.X);
  std::reverse(models.begin(), models.end());
  const std::vector<double> rev = predict_ensemble(models, d.X);
  for (size_t i = 0; i < fwd.size(); ++i) {
    CHECK(std::abs(fwd[i] - rev[i]) <= 1e-12);
  }
}

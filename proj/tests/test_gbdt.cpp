#include "autosmart/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "autosmart/metrics.hpp"
#include "autosmart/parallel.hpp"
#include "autosmart/rng.hpp"
#include "doctest.h"
#include "gbdt_oracle.hpp"
#include "oracles.hpp"

using namespace autosmart;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

NumericFrame frame_of(std::vector<std::pair<std::string, std::vector<double>>>
                          cols) {
  NumericFrame X;
  for (auto& [name, values] : cols) X.add(name, std::move(values));
  return X;
}

std::vector<double> ones(size_t n, double v = 1.0) {
  return std::vector<double>(n, v);
}

}  // namespace

TEST_CASE("bin edges: one bin per distinct value under the cap") {
  const auto edges = compute_bin_edges({3, 1, 2, 1, 3}, 255);
  REQUIRE(edges.size() == 3);
  CHECK(edges[0] == 1.5);
  CHECK(edges[1] == 2.5);
  CHECK(edges[2] == kInf);
  CHECK(bin_index(edges, 1.0) == 0);
  CHECK(bin_index(edges, 1.5) == 0);
  CHECK(bin_index(edges, 1.6) == 1);
  CHECK(bin_index(edges, 3.0) == 2);
  CHECK(bin_index(edges, 100.0) == 2);
  CHECK(bin_index(edges, kNaN) == 3);
}

TEST_CASE("bin edges: quantile path over the cap") {
  std::vector<double> vals(1000);
  std::iota(vals.begin(), vals.end(), 0.0);
  const auto edges = compute_bin_edges(vals, 4);
  REQUIRE(edges.size() == 4);
  CHECK(edges[0] == 250.0);
  CHECK(edges[1] == 500.0);
  CHECK(edges[2] == 750.0);
  CHECK(edges[3] == kInf);
  CHECK(bin_index(edges, 0.0) == 0);
  CHECK(bin_index(edges, 250.0) == 0);
  CHECK(bin_index(edges, 251.0) == 1);
  CHECK(bin_index(edges, 999.0) == 3);
}

TEST_CASE("bin edges: all-missing column yields a single catch-all bin") {
  const auto edges = compute_bin_edges({kNaN, kNaN}, 255);
  REQUIRE(edges.size() == 1);
  CHECK(edges[0] == kInf);
  CHECK(bin_index(edges, kNaN) == 1);
}

TEST_CASE("gradients match central finite differences of the loss") {
  const double eps = 1e-4;
  for (double z : {-3.5, -2.0, -0.7, 0.0, 0.4, 1.3, 2.8}) {
    for (double y : {0.0, 1.0}) {
      for (double w : {0.5, 1.0, 2.5}) {
        const GradHess gh = logistic_gh(z, y, w);
        const double lp = logistic_loss(z + eps, y, w);
        const double lm = logistic_loss(z - eps, y, w);
        const double l0 = logistic_loss(z, y, w);
        const double g_num = (lp - lm) / (2 * eps);
        const double h_num = (lp - 2 * l0 + lm) / (eps * eps);
        CHECK(std::abs(gh.g - g_num) <= 1e-6 * std::max(1.0, std::abs(gh.g)));
        CHECK(std::abs(gh.h - h_num) <= 1e-6 * std::max(1.0, std::abs(gh.h)));
      }
    }
  }
}

TEST_CASE("hessian is floored at a tiny positive value") {
  CHECK(logistic_gh(40.0, 1.0, 1.0).h == 1e-16);
  CHECK(logistic_gh(-40.0, 0.0, 1.0).h == 1e-16);
}

TEST_CASE("single-class labels produce a flagged constant model") {
  NumericFrame X = frame_of({{"x", {1, 2, 3, 4}}});
  std::vector<uint8_t> y{0, 0, 0, 0};
  GbdtParams params;
  params.n_rounds = 5;
  const GbdtModel m = fit(X, y, ones(4), params);
  CHECK(m.degenerate);
  CHECK(m.trees.empty());
  for (double p : predict(m, X)) CHECK(p < 1e-3);
  for (const auto& [name, gain] : feature_gains(m)) CHECK(gain == 0.0);
}

TEST_CASE("constant model with base score zero predicts one half") {
  GbdtModel m;
  m.feature_names = {"x"};
  m.base_score = 0;
  NumericFrame X = frame_of({{"x", {-5, 0, 5}}});
  for (double p : predict(m, X)) CHECK(p == 0.5);
}

TEST_CASE("separable single feature is split on the sign boundary") {
  std::mt19937_64 rng(11);
  std::vector<double> x(100);
  std::vector<uint8_t> y(100);
  for (size_t i = 0; i < 100; ++i) {
    x[i] = (uniform01(rng) - 0.5) * 4;
    if (x[i] == 0) x[i] = 0.5;
    y[i] = x[i] > 0 ? 1 : 0;
  }
  NumericFrame X = frame_of({{"x", x}});
  GbdtParams params;
  params.n_rounds = 1;
  const GbdtModel m = fit(X, y, ones(100), params);
  REQUIRE(m.trees.size() == 1);
  const TreeNode& root = m.trees[0].nodes[0];
  REQUIRE(root.feature == 0);
  double lo = -10, hi = 10;
  for (double v : x) {
    if (v <= root.threshold) lo = std::max(lo, v);
    if (v > root.threshold) hi = std::min(hi, v);
  }
  CHECK(lo < 0);
  CHECK(hi > 0);
  const std::vector<double> preds = predict(m, X);
  CHECK(auc(y, preds) == 1.0);
}

TEST_CASE("root split matches exhaustive enumeration on four rows") {
  NumericFrame X = frame_of({{"a", {1, 2, 3, 4}}, {"b", {5, 5, 7, 6}}});
  std::vector<uint8_t> y{0, 1, 1, 0};
  std::vector<double> w{1.0, 2.0, 1.0, 0.5};
  GbdtParams params;
  params.n_rounds = 1;
  params.max_leaves = 2;
  params.min_child_weight = 0;
  const GbdtModel m = fit(X, y, w, params);
  const TreeNode& root = m.trees[0].nodes[0];

  // brute force over every (feature, threshold) split with the round-1
  // gradients implied by the base score; weights enter at unit mean
  const double p0 = sigmoid(m.base_score);
  const double w_mean = (w[0] + w[1] + w[2] + w[3]) / 4;
  std::vector<double> g(4), h(4);
  for (size_t i = 0; i < 4; ++i) {
    g[i] = w[i] / w_mean * (p0 - y[i]);
    h[i] = w[i] / w_mean * p0 * (1 - p0);
  }
  double gt = 0, ht = 0;
  for (size_t i = 0; i < 4; ++i) {
    gt += g[i];
    ht += h[i];
  }
  double best_gain = -kInf;
  int best_feat = -1;
  double best_thr = 0;
  const auto thr = greedy::thresholds_of(X);
  for (size_t f = 0; f < 2; ++f) {
    for (double t : thr[f]) {
      double gl = 0, hl = 0;
      for (size_t i = 0; i < 4; ++i) {
        if (X.columns[f][i] <= t) {
          gl += g[i];
          hl += h[i];
        }
      }
      const double gr = gt - gl, hr = ht - hl;
      const double gain = 0.5 * (gl * gl / (hl + 1) + gr * gr / (hr + 1) -
                                 gt * gt / (ht + 1));
      if (gain > best_gain) {
        best_gain = gain;
        best_feat = static_cast<int>(f);
        best_thr = t;
      }
    }
  }
  CHECK(root.feature == best_feat);
  CHECK(root.threshold == best_thr);
  CHECK(root.gain == doctest::Approx(best_gain).epsilon(1e-12));
}

TEST_CASE("histogram trainer equals the exact-greedy oracle on 50 datasets") {
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    RandomDataset d = make_dataset(1000 + seed);
    GbdtParams params;
    params.n_rounds = 3;
    params.max_leaves = 8;
    params.learning_rate = 0.3;
    const GbdtModel m = fit(d.X, d.y, d.w, params);
    const greedy::Model o =
        greedy::fit(d.X, d.y, d.w, 3, 8, 0.3, 1.0, 1.0);

    REQUIRE(m.trees.size() == o.trees.size());
    CHECK(m.base_score == o.base);
    for (size_t t = 0; t < m.trees.size(); ++t) {
      REQUIRE(m.trees[t].nodes.size() == o.trees[t].size());
      for (size_t k = 0; k < o.trees[t].size(); ++k) {
        const TreeNode& a = m.trees[t].nodes[k];
        const greedy::Node& b = o.trees[t][k];
        CHECK(a.feature == b.feature);
        if (a.feature >= 0) {
          CHECK(a.threshold == b.thr);
          CHECK(a.missing_left == b.missing_left);
        }
      }
    }
    const std::vector<double> pa = predict(m, d.X);
    const std::vector<double> pb = greedy::predict(o, d.X);
    double max_diff = 0;
    for (size_t i = 0; i < pa.size(); ++i) {
      max_diff = std::max(max_diff, std::abs(pa[i] - pb[i]));
    }
    CHECK(max_diff <= 1e-12);
  }
}

TEST_CASE("training loss is non-increasing per round at learning rate 0.5") {
  RandomDataset d = make_dataset(77, 400);
  GbdtParams params;
  params.n_rounds = 100;
  params.learning_rate = 0.5;
  const GbdtModel m = fit(d.X, d.y, d.w, params);
  REQUIRE(m.trees.size() == 100);

  std::vector<double> scores(d.X.n_rows, m.base_score);
  double prev = weighted_logloss(scores, d.y, d.w);
  for (const Tree& tree : m.trees) {
    for (size_t r = 0; r < d.X.n_rows; ++r) {
      scores[r] += tree_output(tree, d.X, r);
    }
    const double cur = weighted_logloss(scores, d.y, d.w);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("missing values are routed toward the gain-improving side") {
  std::vector<double> x{-2, -1, 1, 2, kNaN, kNaN, kNaN};
  GbdtParams params;
  params.n_rounds = 1;
  params.max_leaves = 2;
  params.min_child_weight = 0;

  NumericFrame X = frame_of({{"x", x}});
  const GbdtModel pos_side =
      fit(X, std::vector<uint8_t>{0, 0, 1, 1, 1, 1, 1}, ones(7), params);
  CHECK_FALSE(pos_side.trees[0].nodes[0].missing_left);

  const GbdtModel neg_side =
      fit(X, std::vector<uint8_t>{1, 1, 0, 0, 1, 1, 1}, ones(7), params);
  // positives now sit on the low side together with the missing rows
  CHECK(neg_side.trees[0].nodes[0].missing_left);
}

TEST_CASE("label-copy feature collects strictly maximal gain") {
  RandomDataset d = make_dataset(5, 200);
  std::vector<double> leak(d.y.size());
  for (size_t i = 0; i < d.y.size(); ++i) leak[i] = d.y[i];
  d.X.add("leak", std::move(leak));
  GbdtParams params;
  params.n_rounds = 5;
  const GbdtModel m = fit(d.X, d.y, d.w, params);
  const auto& gains = feature_gains(m);
  const double leak_gain = gains.at("leak");
  for (const auto& [name, gain] : gains) {
    if (name != "leak") CHECK(leak_gain > gain);
  }
}

TEST_CASE("per-feature gains account for every split") {
  RandomDataset d = make_dataset(9, 250);
  GbdtParams params;
  params.n_rounds = 8;
  const GbdtModel m = fit(d.X, d.y, d.w, params);
  double split_total = 0;
  size_t n_splits = 0;
  for (const Tree& tree : m.trees) {
    for (const TreeNode& nd : tree.nodes) {
      if (nd.feature >= 0) {
        split_total += nd.gain;
        ++n_splits;
      }
    }
  }
  REQUIRE(n_splits > 0);
  double gain_total = 0;
  for (const auto& [name, gain] : feature_gains(m)) {
    CHECK(gain >= 0);
    gain_total += gain;
  }
  CHECK(std::abs(gain_total - split_total) <= 1e-9);
}

TEST_CASE("fixed seed and worker count do not change the model") {
  RandomDataset d = make_dataset(21, 300);
  GbdtParams params;
  params.n_rounds = 6;
  params.row_fraction = 0.8;
  params.feature_fraction = 0.8;
  params.seed = 7;

  const std::string serial = save_model(fit(d.X, d.y, d.w, params));
  CHECK(save_model(fit(d.X, d.y, d.w, params)) == serial);

  ThreadPool pool(4);
  CHECK(save_model(fit(d.X, d.y, d.w, params, &pool)) == serial);
}

TEST_CASE("scaling all weights keeps splits and ranking unchanged") {
  RandomDataset d = make_dataset(33, 400);
  GbdtParams params;
  params.n_rounds = 6;
  params.max_leaves = 8;
  const GbdtModel base = fit(d.X, d.y, d.w, params);

  {
    // power-of-two scaling normalizes away without any rounding at all
    std::vector<double> doubled(d.w.size());
    for (size_t i = 0; i < d.w.size(); ++i) doubled[i] = d.w[i] * 2;
    CHECK(save_model(fit(d.X, d.y, doubled, params)) == save_model(base));
  }

  for (double c : {5.0, 0.3}) {
    std::vector<double> scaled(d.w.size());
    for (size_t i = 0; i < d.w.size(); ++i) scaled[i] = d.w[i] * c;
    const GbdtModel m = fit(d.X, d.y, scaled, params);
    REQUIRE(m.trees.size() == base.trees.size());
    for (size_t t = 0; t < m.trees.size(); ++t) {
      REQUIRE(m.trees[t].nodes.size() == base.trees[t].nodes.size());
      for (size_t k = 0; k < m.trees[t].nodes.size(); ++k) {
        CHECK(m.trees[t].nodes[k].feature == base.trees[t].nodes[k].feature);
        CHECK(m.trees[t].nodes[k].bin == base.trees[t].nodes[k].bin);
      }
    }
    const std::vector<double> pa = predict(base, d.X);
    const std::vector<double> pb = predict(m, d.X);
    std::vector<size_t> ra(pa.size()), rb(pb.size());
    std::iota(ra.begin(), ra.end(), 0);
    std::iota(rb.begin(), rb.end(), 0);
    auto by = [](const std::vector<double>& p) {
      return [&p](size_t a, size_t b) {
        return p[a] != p[b] ? p[a] < p[b] : a < b;
      };
    };
    std::sort(ra.begin(), ra.end(), by(pa));
    std::sort(rb.begin(), rb.end(), by(pb));
    CHECK(ra == rb);
  }
}

TEST_CASE("deadline polling stops training with completed rounds") {
  RandomDataset d = make_dataset(14, 200);
  GbdtParams params;
  params.n_rounds = 50;
  int polls = 0;
  const GbdtModel m = fit(d.X, d.y, d.w, params, nullptr,
                          [&polls] { return ++polls > 5; });
  CHECK(m.trees.size() == 5);

  const GbdtModel full =
      fit(d.X, d.y, d.w, params, nullptr, [] { return false; });
  CHECK(full.trees.size() == 50);
}

TEST_CASE("per-round learning rate schedule is applied") {
  RandomDataset d = make_dataset(3, 150);
  GbdtParams a;
  a.n_rounds = 2;
  a.learning_rates = {0.3, 0.3};
  GbdtParams b = a;
  b.learning_rates = {0.3, 0.1};
  const GbdtModel ma = fit(d.X, d.y, d.w, a);
  const GbdtModel mb = fit(d.X, d.y, d.w, b);
  // identical first tree, second tree shrunk by the schedule
  CHECK(save_model(ma) != save_model(mb));
  double va = 0, vb = 0;
  for (const TreeNode& nd : ma.trees[0].nodes) va += std::abs(nd.value);
  for (const TreeNode& nd : mb.trees[0].nodes) vb += std::abs(nd.value);
  CHECK(va == vb);
}

TEST_CASE("prediction rejects mismatched columns") {
  RandomDataset d = make_dataset(8, 100);
  GbdtParams params;
  params.n_rounds = 2;
  const GbdtModel m = fit(d.X, d.y, d.w, params);

  NumericFrame extra = d.X;
  extra.add("zz", std::vector<double>(d.X.n_rows, 0.0));
  CHECK_THROWS_WITH_AS(predict(m, extra), doctest::Contains("ColumnMismatch"),
                       Error);

  NumericFrame renamed = d.X;
  renamed.names[0] = "other";
  CHECK_THROWS_WITH_AS(predict(m, renamed),
                       doctest::Contains("ColumnMismatch"), Error);

  // permuted column order is accepted
  NumericFrame shuffled;
  for (size_t f = d.X.columns.size(); f-- > 0;) {
    shuffled.add(d.X.names[f], d.X.columns[f]);
  }
  const std::vector<double> pa = predict(m, d.X);
  const std::vector<double> pb = predict(m, shuffled);
  CHECK(pa == pb);
}

TEST_CASE("model serialization round-trips exactly") {
  RandomDataset d = make_dataset(41, 300);
  GbdtParams params;
  params.n_rounds = 7;
  params.row_fraction = 0.9;
  params.feature_fraction = 0.75;
  params.seed = 3;
  const GbdtModel m = fit(d.X, d.y, d.w, params);

  const std::string text = save_model(m);
  const GbdtModel loaded = load_model(text);
  CHECK(save_model(loaded) == text);
  CHECK(loaded.base_score == m.base_score);
  CHECK(predict(loaded, d.X) == predict(m, d.X));
  CHECK(feature_gains(loaded) == feature_gains(m));

  const GbdtModel constant =
      fit(d.X, std::vector<uint8_t>(d.y.size(), 1), d.w, params);
  const std::string ctext = save_model(constant);
  const GbdtModel cloaded = load_model(ctext);
  CHECK(cloaded.degenerate);
  CHECK(save_model(cloaded) == ctext);
}

TEST_CASE("malformed model text is rejected") {
  CHECK_THROWS_WITH_AS(load_model("not-a-model"),
                       doctest::Contains("ParseError"), Error);
  RandomDataset d = make_dataset(2, 60);
  GbdtParams params;
  params.n_rounds = 1;
  std::string text = save_model(fit(d.X, d.y, d.w, params));
  text.resize(text.size() / 2);
  CHECK_THROWS_WITH_AS(load_model(text), doctest::Contains("ParseError"),
                       Error);
}

TEST_CASE("label and weight lengths must match the frame") {
  NumericFrame X = frame_of({{"x", {1, 2, 3}}});
  std::vector<uint8_t> y{0, 1};
  CHECK_THROWS_WITH_AS(fit(X, y, ones(3), GbdtParams{}),
                       doctest::Contains("LabelLengthMismatch"), Error);
}

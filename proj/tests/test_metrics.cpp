#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "autosmart/errors.hpp"
#include "autosmart/metrics.hpp"
#include "autosmart/rng.hpp"
#include "oracles.hpp"

using namespace autosmart;

namespace {

std::vector<uint8_t> random_labels(std::mt19937_64& rng, size_t n) {
  // guarantee both classes
  std::vector<uint8_t> labels(n);
  for (auto& y : labels) y = uniform01(rng) < 0.4 ? 1 : 0;
  labels[0] = 0;
  labels[n - 1] = 1;
  return labels;
}

}  // namespace

TEST_CASE("auc on the worked ranking example") {
  const std::vector<uint8_t> y{0, 0, 1, 1};
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  CHECK(auc(y, s) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("auc extremes") {
  CHECK(auc(std::vector<uint8_t>{0, 1}, std::vector<double>{0.2, 0.8}) == 1.0);
  CHECK(auc(std::vector<uint8_t>{0, 1}, std::vector<double>{0.8, 0.2}) == 0.0);
}

TEST_CASE("auc rejects degenerate input") {
  CHECK_THROWS_AS(auc(std::vector<uint8_t>{1, 1}, std::vector<double>{0.1, 0.2}),
                  Error);
  CHECK_THROWS_AS(auc(std::vector<uint8_t>{0, 0}, std::vector<double>{0.1, 0.2}),
                  Error);
  try {
    auc(std::vector<uint8_t>{0, 0}, std::vector<double>{0.1, 0.2});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::single_class);
  }
  CHECK_THROWS_AS(auc(std::vector<uint8_t>{0, 1, 1}, std::vector<double>{0.1, 0.2}),
                  Error);
}

TEST_CASE("sort-based auc matches the pairwise oracle, ties included") {
  std::mt19937_64 rng(42);
  for (int it = 0; it < 100; ++it) {
    const size_t n = 2 + static_cast<size_t>(uniform_below(rng, 499));
    auto labels = random_labels(rng, n);
    std::vector<double> scores(n);
    for (auto& v : scores)
      // coarse grid forces plenty of exact ties
      v = static_cast<double>(uniform_below(rng, 20)) / 20.0;
    CHECK(auc(labels, scores) ==
          doctest::Approx(oracles::auc_pairwise(labels, scores)).epsilon(1e-12));
  }
}

TEST_CASE("auc is invariant under strictly monotone transforms") {
  std::mt19937_64 rng(7);
  const size_t n = 300;
  auto labels = random_labels(rng, n);
  std::vector<double> scores(n), warped(n);
  for (size_t i = 0; i < n; ++i) {
    scores[i] = normal01(rng);
    warped[i] = std::exp(0.5 * scores[i]) + 3.0;
  }
  CHECK(auc(labels, scores) == doctest::Approx(auc(labels, warped)).epsilon(1e-12));
}

TEST_CASE("auc of negated tie-free scores complements to one") {
  std::mt19937_64 rng(11);
  const size_t n = 256;
  auto labels = random_labels(rng, n);
  std::vector<double> scores(n), negated(n);
  for (size_t i = 0; i < n; ++i) {
    scores[i] = static_cast<double>(i) + uniform01(rng) * 0.5;  // all distinct
    negated[i] = -scores[i];
  }
  CHECK(auc(labels, scores) + auc(labels, negated) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("competition score endpoints and substitution") {
  CHECK(competition_score(0.9, 0.6, 0.9) == doctest::Approx(1.0));
  CHECK(competition_score(0.6, 0.6, 0.9) == doctest::Approx(0.0));
  CHECK(competition_score(0.8, 0.6, 0.9) == doctest::Approx(0.6667).epsilon(1e-4));
  // below-baseline solutions go negative
  CHECK(competition_score(0.5, 0.6, 0.9) < 0.0);
  try {
    competition_score(0.5, 0.7, 0.7);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_denominator);
  }
}

TEST_CASE("average score over published leaderboard rows") {
  const std::vector<double> constant{1, 1, 1, 1, 1};
  CHECK(average_score(constant) == doctest::Approx(1.0));
  const std::vector<double> row_a{1.0, 1.0, 1.0, 0.9871, 1.0};
  CHECK(average_score(row_a) == doctest::Approx(0.9974).epsilon(1e-4));
  const std::vector<double> row_b{1.0, 1.0, 1.0, 0.9287, 0.6255};
  CHECK(average_score(row_b) == doctest::Approx(0.9108).epsilon(1e-4));
  try {
    average_score(std::vector<double>{});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::empty_list);
  }
}

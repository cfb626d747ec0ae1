#include "autosmart/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "autosmart/errors.hpp"

namespace autosmart {

double auc(std::span<const uint8_t> labels, std::span<const double> scores) {
  if (labels.size() != scores.size())
    raise(ErrorCode::label_length_mismatch,
          std::to_string(labels.size()) + " labels vs " +
              std::to_string(scores.size()) + " scores");
  const size_t n = labels.size();
  size_t n_pos = 0;
  for (uint8_t y : labels) n_pos += (y != 0);
  const size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    raise(ErrorCode::single_class, "AUC needs both classes");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // average rank over tie groups; 1-based ranks
  double rank_sum_pos = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (size_t k = i; k <= j; ++k)
      if (labels[order[k]] != 0) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double competition_score(double auc_value, double auc_base, double auc_max) {
  const double denom = auc_max - auc_base;
  if (denom == 0)
    raise(ErrorCode::degenerate_denominator, "auc_max equals auc_base");
  return (auc_value - auc_base) / denom;
}

double average_score(std::span<const double> scores) {
  if (scores.empty()) raise(ErrorCode::empty_list, "no scores to average");
  double sum = 0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

}  // namespace autosmart

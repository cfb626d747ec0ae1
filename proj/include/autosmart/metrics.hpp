#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace autosmart {

/// Area under the ROC curve via sort-and-rank, O(n log n). Ties between a
/// positive and a negative score count one half (Mann-Whitney convention).
/// Throws SingleClass unless both classes are present.
double auc(std::span<const uint8_t> labels, std::span<const double> scores);

/// Rescales an AUC between a baseline (-> 0) and the best known result
/// (-> 1). May be negative for solutions below the baseline.
double competition_score(double auc_value, double auc_base, double auc_max);

/// Arithmetic mean of per-dataset scores.
double average_score(std::span<const double> scores);

}  // namespace autosmart

#pragma once

#include <map>
#include <string>
#include <vector>

#include "autosmart/column.hpp"

namespace autosmart {

/// Which pipeline stage produced a column. Stage generators never drop
/// columns from earlier stages, so selection uses this to tell candidates
/// from settled features.
enum class FeatureOrigin {
  base,    // main-table column surviving preprocess
  merged,  // gained during table merging
  stage1,
  stage2,
  stage3,
  stage4,
};

/// The flat merged table every feature stage operates on, plus per-column
/// provenance and any non-fatal notes collected along the way.
struct FeatureFrame {
  Table table;
  std::map<std::string, FeatureOrigin> origin;
  std::vector<std::string> warnings;

  void add_column(ColumnData column, FeatureOrigin from) {
    origin[column.name] = from;
    table.add_column(std::move(column));
  }

  void drop_column(const std::string& name) {
    table.drop_column(name);
    origin.erase(name);
  }
};

}  // namespace autosmart

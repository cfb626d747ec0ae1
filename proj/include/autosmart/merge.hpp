#pragma once

#include <vector>

#include "autosmart/bundle.hpp"
#include "autosmart/frame.hpp"

namespace autosmart {

/// Relations in execution order: a relation runs only after every relation
/// hanging off its right table has run, so chains resolve bottom-up.
struct MergePlan {
  std::vector<RelationSpec> steps;
};

/// Topologically orders the bundle's relations (ties broken by declaration
/// order). Throws CyclicRelationGraph when the relations contain a cycle.
MergePlan plan_merge(const DatasetBundle& bundle);

/// 1-1 / M-1: left-outer join, right rows looked up by key code. Gained
/// columns are the right table's non-key columns, renamed
/// "<right_table>.<column>"; unmatched keys yield missing cells.
/// Throws DuplicateRightKey when the right key is not unique.
void merge_join(Table& left, const Table& right, const RelationSpec& rel);

/// 1-M / M-M: per left key value, numerical columns aggregate to the mean
/// (missing excluded), categorical to the mode (tie -> smallest code),
/// multi-categorical to the mode of the flattened element codes (becoming a
/// categorical column), temporal to the maximum. Keys without matches yield
/// missing cells. Gained columns are renamed like merge_join's.
void merge_aggregate(Table& left, const Table& right, const RelationSpec& rel);

/// Executes the plan over working copies of the tables and returns the
/// enriched main table as a FeatureFrame. A declared 1-1/M-1 whose right key
/// turns out non-unique is demoted to aggregation with a warning.
FeatureFrame merge_all(const DatasetBundle& bundle, const MergePlan& plan);

}  // namespace autosmart

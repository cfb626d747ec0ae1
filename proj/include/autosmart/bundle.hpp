#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "autosmart/column.hpp"

namespace autosmart {

enum class RelType {
  one_to_one,
  many_to_one,
  one_to_many,
  many_to_many,
};

const char* rel_type_name(RelType type);

/// Declared link between two tables. The cardinality comes from the dataset
/// config and is trusted, never inferred from data.
struct RelationSpec {
  std::string left_table;
  std::string right_table;
  std::string left_key;
  std::string right_key;
  RelType rel_type = RelType::many_to_one;
};

/// The whole problem instance: one main table, its related tables, the
/// relation graph, training labels, and the run budgets.
struct DatasetBundle {
  Table main;
  std::vector<Table> related;
  std::vector<RelationSpec> relations;
  std::optional<std::vector<uint8_t>> labels;
  double time_budget_s = 0;
  int64_t mem_budget_bytes = 0;

  const Table* find_table(const std::string& table_name) const;
  Table* find_table(const std::string& table_name);
};

/// Key / factor / session columns detected during preprocessing.
struct BaseFeatureMap {
  /// table name -> key column names in schema order
  std::map<std::string, std::vector<std::string>> keys;
  std::string factor;  // main-table key with the most distinct values
  std::vector<std::string> sessions;

  const std::vector<std::string>& keys_of(const std::string& table_name) const;
  bool is_key(const std::string& table_name, const std::string& column) const;
  bool is_session(const std::string& column) const;
};

/// Checks every structural invariant (tables resolvable, key columns present
/// and categorical, label alignment, uniform column lengths, unique names).
/// Returns its argument so call sites can chain; idempotent.
const DatasetBundle& validate_bundle(const DatasetBundle& bundle);

}  // namespace autosmart

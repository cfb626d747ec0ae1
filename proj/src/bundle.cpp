#include "autosmart/bundle.hpp"

#include <set>

#include "autosmart/errors.hpp"

namespace autosmart {

const char* rel_type_name(RelType type) {
  switch (type) {
    case RelType::one_to_one: return "1-1";
    case RelType::many_to_one: return "M-1";
    case RelType::one_to_many: return "1-M";
    case RelType::many_to_many: return "M-M";
  }
  return "?";
}

const Table* DatasetBundle::find_table(const std::string& table_name) const {
  if (main.name == table_name) return &main;
  for (const auto& t : related)
    if (t.name == table_name) return &t;
  return nullptr;
}

Table* DatasetBundle::find_table(const std::string& table_name) {
  if (main.name == table_name) return &main;
  for (auto& t : related)
    if (t.name == table_name) return &t;
  return nullptr;
}

const std::vector<std::string>& BaseFeatureMap::keys_of(
    const std::string& table_name) const {
  static const std::vector<std::string> none;
  auto it = keys.find(table_name);
  return it == keys.end() ? none : it->second;
}

bool BaseFeatureMap::is_key(const std::string& table_name,
                            const std::string& column) const {
  const auto& k = keys_of(table_name);
  for (const auto& name : k)
    if (name == column) return true;
  return false;
}

bool BaseFeatureMap::is_session(const std::string& column) const {
  for (const auto& name : sessions)
    if (name == column) return true;
  return false;
}

namespace {

void check_table(const Table& table) {
  std::set<std::string> seen;
  for (const auto& col : table.columns) {
    if (!seen.insert(col.name).second)
      raise(ErrorCode::kind_mismatch, "table '" + table.name +
                                          "' declares column '" + col.name +
                                          "' twice");
    if (col.rows != table.n_rows || col.missing.size() != table.n_rows)
      raise(ErrorCode::column_length_mismatch,
            "column '" + col.name + "' in table '" + table.name + "' has " +
                std::to_string(col.rows) + " rows, table has " +
                std::to_string(table.n_rows));
    switch (col.kind) {
      case FeatureKind::categorical:
        if (col.raw.size() != table.n_rows && col.codes.size() != table.n_rows)
          raise(ErrorCode::column_length_mismatch,
                "categorical column '" + col.name + "' payload length mismatch");
        break;
      case FeatureKind::multi_categorical:
        if (col.offsets.size() != table.n_rows + 1)
          raise(ErrorCode::column_length_mismatch,
                "multi-categorical column '" + col.name + "' offsets mismatch");
        break;
      case FeatureKind::numerical:
        if (col.reals.size() != table.n_rows)
          raise(ErrorCode::column_length_mismatch,
                "numerical column '" + col.name + "' payload length mismatch");
        break;
      case FeatureKind::temporal:
        if (col.times.size() != table.n_rows)
          raise(ErrorCode::column_length_mismatch,
                "temporal column '" + col.name + "' payload length mismatch");
        break;
    }
  }
}

void check_relation_endpoint(const DatasetBundle& bundle,
                             const std::string& table_name,
                             const std::string& key_column) {
  const Table* table = bundle.find_table(table_name);
  if (table == nullptr) raise(ErrorCode::missing_table, table_name);
  const ColumnData* col = table->find(key_column);
  if (col == nullptr)
    raise(ErrorCode::missing_column,
          "key column '" + key_column + "' not in table '" + table_name + "'");
  if (col->kind != FeatureKind::categorical)
    raise(ErrorCode::kind_mismatch,
          "key column '" + key_column + "' in table '" + table_name +
              "' must be categorical, is " + feature_kind_name(col->kind));
}

}  // namespace

const DatasetBundle& validate_bundle(const DatasetBundle& bundle) {
  check_table(bundle.main);
  std::set<std::string> names{bundle.main.name};
  for (const auto& t : bundle.related) {
    if (!names.insert(t.name).second)
      raise(ErrorCode::duplicate_table_name, t.name);
    check_table(t);
  }
  for (const auto& rel : bundle.relations) {
    check_relation_endpoint(bundle, rel.left_table, rel.left_key);
    check_relation_endpoint(bundle, rel.right_table, rel.right_key);
  }
  if (bundle.labels) {
    if (bundle.labels->size() != bundle.main.n_rows)
      raise(ErrorCode::label_length_mismatch,
            std::to_string(bundle.labels->size()) + " labels for " +
                std::to_string(bundle.main.n_rows) + " main rows");
    for (uint8_t y : *bundle.labels)
      if (y > 1)
        raise(ErrorCode::label_length_mismatch,
              "labels must be 0/1, found " + std::to_string(int(y)));
  }
  return bundle;
}

}  // namespace autosmart

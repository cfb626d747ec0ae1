#include "autosmart/merge.hpp"

#include <algorithm>
#include <unordered_map>

namespace autosmart {

namespace {

std::string gained_name(const Table& left, const std::string& right_table,
                        const std::string& column) {
  std::string name = right_table + "." + column;
  int suffix = 2;
  while (left.find(name) != nullptr)
    name = right_table + "." + column + "#" + std::to_string(suffix++);
  return name;
}

/// left key code per row, -1 for missing
std::vector<int64_t> key_codes(const Table& table, const std::string& key) {
  const ColumnData& col = table.at(key);
  std::vector<int64_t> codes(table.n_rows);
  for (size_t r = 0; r < table.n_rows; ++r)
    codes[r] = col.is_missing(r) ? -1 : col.codes.at(r);
  return codes;
}

}  // namespace

MergePlan plan_merge(const DatasetBundle& bundle) {
  const auto& rels = bundle.relations;
  std::unordered_map<std::string, int> pending_out;
  for (const auto& rel : rels) ++pending_out[rel.left_table];

  MergePlan plan;
  std::vector<bool> done(rels.size(), false);
  for (size_t step = 0; step < rels.size(); ++step) {
    size_t pick = rels.size();
    for (size_t i = 0; i < rels.size(); ++i) {
      if (done[i]) continue;
      const auto it = pending_out.find(rels[i].right_table);
      if (it == pending_out.end() || it->second == 0) {
        pick = i;
        break;
      }
    }
    if (pick == rels.size())
      raise(ErrorCode::cyclic_relation_graph,
            "relations contain a cycle; no leaf table remains");
    done[pick] = true;
    --pending_out[rels[pick].left_table];
    plan.steps.push_back(rels[pick]);
  }
  return plan;
}

void merge_join(Table& left, const Table& right, const RelationSpec& rel) {
  const ColumnData& right_key = right.at(rel.right_key);
  std::unordered_map<int64_t, size_t> row_of;
  row_of.reserve(right.n_rows);
  for (size_t r = 0; r < right.n_rows; ++r) {
    if (right_key.is_missing(r)) continue;
    if (!row_of.emplace(right_key.codes.at(r), r).second)
      raise(ErrorCode::duplicate_right_key,
            "table '" + right.name + "' key '" + rel.right_key +
                "' repeats code " + std::to_string(right_key.codes.at(r)));
  }

  const std::vector<int64_t> left_codes = key_codes(left, rel.left_key);
  const size_t n = left.n_rows;

  for (const auto& src : right.columns) {
    if (src.name == rel.right_key) continue;
    std::vector<uint8_t> missing(n, 1);
    std::vector<size_t> from(n, 0);
    std::vector<uint8_t> has(n, 0);
    for (size_t r = 0; r < n; ++r) {
      if (left_codes[r] < 0) continue;
      const auto it = row_of.find(left_codes[r]);
      if (it == row_of.end()) continue;
      if (src.is_missing(it->second)) continue;
      missing[r] = 0;
      from[r] = it->second;
      has[r] = 1;
    }

    const std::string name = gained_name(left, right.name, src.name);
    switch (src.kind) {
      case FeatureKind::categorical: {
        std::vector<int64_t> codes(n, 0);
        for (size_t r = 0; r < n; ++r)
          if (has[r]) codes[r] = src.codes.at(from[r]);
        left.add_column(ColumnData::categorical_codes(name, std::move(codes),
                                                      std::move(missing)));
        break;
      }
      case FeatureKind::multi_categorical: {
        ColumnData col;
        col.name = name;
        col.kind = FeatureKind::multi_categorical;
        col.rows = n;
        std::vector<int64_t> flat;
        col.offsets.reserve(n + 1);
        col.offsets.push_back(0);
        for (size_t r = 0; r < n; ++r) {
          if (has[r])
            for (int64_t p = src.offsets[from[r]]; p < src.offsets[from[r] + 1];
                 ++p)
              flat.push_back(src.elems.at(static_cast<size_t>(p)));
          col.offsets.push_back(static_cast<int64_t>(flat.size()));
        }
        col.elems.assign(std::move(flat));
        col.missing = std::move(missing);
        left.add_column(std::move(col));
        break;
      }
      case FeatureKind::numerical: {
        std::vector<double> reals(n, 0.0);
        for (size_t r = 0; r < n; ++r)
          if (has[r]) reals[r] = src.reals.at(from[r]);
        left.add_column(
            ColumnData::numerical(name, std::move(reals), std::move(missing)));
        break;
      }
      case FeatureKind::temporal: {
        std::vector<int64_t> times(n, 0);
        for (size_t r = 0; r < n; ++r)
          if (has[r]) times[r] = src.times[from[r]];
        left.add_column(
            ColumnData::temporal(name, std::move(times), std::move(missing)));
        break;
      }
    }
  }
}

void merge_aggregate(Table& left, const Table& right, const RelationSpec& rel) {
  const ColumnData& right_key = right.at(rel.right_key);
  const std::vector<int64_t> left_codes = key_codes(left, rel.left_key);
  const size_t n = left.n_rows;

  for (const auto& src : right.columns) {
    if (src.name == rel.right_key) continue;
    const std::string name = gained_name(left, right.name, src.name);

    switch (src.kind) {
      case FeatureKind::numerical: {
        std::unordered_map<int64_t, std::pair<double, int64_t>> acc;
        for (size_t r = 0; r < right.n_rows; ++r) {
          if (right_key.is_missing(r) || src.is_missing(r)) continue;
          auto& slot = acc[right_key.codes.at(r)];
          slot.first += src.reals.at(r);
          slot.second += 1;
        }
        std::vector<double> reals(n, 0.0);
        std::vector<uint8_t> missing(n, 1);
        for (size_t r = 0; r < n; ++r) {
          if (left_codes[r] < 0) continue;
          const auto it = acc.find(left_codes[r]);
          if (it == acc.end()) continue;
          reals[r] = it->second.first / static_cast<double>(it->second.second);
          missing[r] = 0;
        }
        left.add_column(
            ColumnData::numerical(name, std::move(reals), std::move(missing)));
        break;
      }
      case FeatureKind::categorical:
      case FeatureKind::multi_categorical: {
        // mode over single codes, or over flattened element codes
        std::vector<std::pair<int64_t, int64_t>> pairs;
        for (size_t r = 0; r < right.n_rows; ++r) {
          if (right_key.is_missing(r) || src.is_missing(r)) continue;
          const int64_t key = right_key.codes.at(r);
          if (src.kind == FeatureKind::categorical) {
            pairs.emplace_back(key, src.codes.at(r));
          } else {
            for (int64_t p = src.offsets[r]; p < src.offsets[r + 1]; ++p)
              pairs.emplace_back(key, src.elems.at(static_cast<size_t>(p)));
          }
        }
        std::sort(pairs.begin(), pairs.end());
        // ascending scan: strict > keeps the smallest code on count ties
        std::unordered_map<int64_t, int64_t> mode;
        size_t i = 0;
        while (i < pairs.size()) {
          const int64_t key = pairs[i].first;
          int64_t best_code = 0, best_count = 0;
          while (i < pairs.size() && pairs[i].first == key) {
            size_t j = i;
            while (j < pairs.size() && pairs[j] == pairs[i]) ++j;
            const auto count = static_cast<int64_t>(j - i);
            if (count > best_count) {
              best_count = count;
              best_code = pairs[i].second;
            }
            i = j;
          }
          mode.emplace(key, best_code);
        }
        std::vector<int64_t> codes(n, 0);
        std::vector<uint8_t> missing(n, 1);
        for (size_t r = 0; r < n; ++r) {
          if (left_codes[r] < 0) continue;
          const auto it = mode.find(left_codes[r]);
          if (it == mode.end()) continue;
          codes[r] = it->second;
          missing[r] = 0;
        }
        left.add_column(ColumnData::categorical_codes(name, std::move(codes),
                                                      std::move(missing)));
        break;
      }
      case FeatureKind::temporal: {
        std::unordered_map<int64_t, int64_t> newest;
        for (size_t r = 0; r < right.n_rows; ++r) {
          if (right_key.is_missing(r) || src.is_missing(r)) continue;
          auto [it, fresh] = newest.try_emplace(right_key.codes.at(r), src.times[r]);
          if (!fresh) it->second = std::max(it->second, src.times[r]);
        }
        std::vector<int64_t> times(n, 0);
        std::vector<uint8_t> missing(n, 1);
        for (size_t r = 0; r < n; ++r) {
          if (left_codes[r] < 0) continue;
          const auto it = newest.find(left_codes[r]);
          if (it == newest.end()) continue;
          times[r] = it->second;
          missing[r] = 0;
        }
        left.add_column(
            ColumnData::temporal(name, std::move(times), std::move(missing)));
        break;
      }
    }
  }
}

FeatureFrame merge_all(const DatasetBundle& bundle, const MergePlan& plan) {
  std::unordered_map<std::string, Table> work;
  work.emplace(bundle.main.name, bundle.main);
  for (const auto& t : bundle.related) work.emplace(t.name, t);

  FeatureFrame frame;
  for (const auto& rel : plan.steps) {
    Table& left = work.at(rel.left_table);
    const Table& right = work.at(rel.right_table);
    if (rel.rel_type == RelType::one_to_one ||
        rel.rel_type == RelType::many_to_one) {
      try {
        merge_join(left, right, rel);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::duplicate_right_key) throw;
        frame.warnings.push_back("relation " + rel.left_table + "->" +
                                 rel.right_table + " declared " +
                                 rel_type_name(rel.rel_type) +
                                 " but right key repeats; aggregating instead");
        merge_aggregate(left, right, rel);
      }
    } else {
      merge_aggregate(left, right, rel);
    }
  }

  frame.table = std::move(work.at(bundle.main.name));
  for (const auto& col : frame.table.columns)
    frame.origin[col.name] = bundle.main.find(col.name) != nullptr
                                 ? FeatureOrigin::base
                                 : FeatureOrigin::merged;
  return frame;
}

}  // namespace autosmart

#include "autosmart/column.hpp"

#include <algorithm>
#include <limits>

namespace autosmart {

const char* feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::categorical: return "cat";
    case FeatureKind::multi_categorical: return "multi-cat";
    case FeatureKind::numerical: return "num";
    case FeatureKind::temporal: return "time";
  }
  return "?";
}

void CodeVector::push_back(int64_t code) {
  if (auto* wide = std::get_if<std::vector<int64_t>>(&store_)) {
    wide->push_back(code);
    return;
  }
  auto widened = to_wide();
  widened.push_back(code);
  store_ = std::move(widened);
}

void CodeVector::narrow() {
  const auto* wide = std::get_if<std::vector<int64_t>>(&store_);
  if (wide == nullptr) return;  // already narrowed
  int64_t max_code = 0;
  for (int64_t c : *wide) max_code = std::max(max_code, c);
  auto repack = [&](auto tag) {
    using T = decltype(tag);
    std::vector<T> packed(wide->size());
    for (size_t i = 0; i < wide->size(); ++i) packed[i] = static_cast<T>((*wide)[i]);
    store_ = std::move(packed);
  };
  if (max_code <= std::numeric_limits<uint8_t>::max()) {
    repack(uint8_t{});
  } else if (max_code <= std::numeric_limits<uint16_t>::max()) {
    repack(uint16_t{});
  } else if (max_code <= std::numeric_limits<uint32_t>::max()) {
    repack(uint32_t{});
  }
}

std::vector<int64_t> CodeVector::to_wide() const {
  std::vector<int64_t> out(size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = at(i);
  return out;
}

void RealVector::push_back(double value) {
  if (auto* wide = std::get_if<std::vector<double>>(&store_)) {
    wide->push_back(value);
    return;
  }
  std::get<std::vector<float>>(store_).push_back(static_cast<float>(value));
}

void RealVector::narrow() {
  const auto* wide = std::get_if<std::vector<double>>(&store_);
  if (wide == nullptr) return;
  std::vector<float> packed(wide->size());
  for (size_t i = 0; i < wide->size(); ++i) packed[i] = static_cast<float>((*wide)[i]);
  store_ = std::move(packed);
}

std::vector<double> RealVector::to_wide() const {
  std::vector<double> out(size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = at(i);
  return out;
}

ColumnData ColumnData::categorical_raw(std::string name,
                                       std::vector<std::string> tokens,
                                       std::vector<uint8_t> missing_mask) {
  ColumnData col;
  col.name = std::move(name);
  col.kind = FeatureKind::categorical;
  col.rows = tokens.size();
  col.raw = std::move(tokens);
  col.missing = std::move(missing_mask);
  return col;
}

ColumnData ColumnData::categorical_codes(std::string name,
                                         std::vector<int64_t> code_values,
                                         std::vector<uint8_t> missing_mask) {
  ColumnData col;
  col.name = std::move(name);
  col.kind = FeatureKind::categorical;
  col.rows = code_values.size();
  col.codes.assign(std::move(code_values));
  col.missing = std::move(missing_mask);
  return col;
}

ColumnData ColumnData::multi_categorical_raw(std::string name,
                                             std::vector<std::string> flat_tokens,
                                             std::vector<int64_t> offs,
                                             std::vector<uint8_t> missing_mask) {
  ColumnData col;
  col.name = std::move(name);
  col.kind = FeatureKind::multi_categorical;
  col.rows = offs.empty() ? 0 : offs.size() - 1;
  col.raw_elems = std::move(flat_tokens);
  col.offsets = std::move(offs);
  col.missing = std::move(missing_mask);
  return col;
}

ColumnData ColumnData::numerical(std::string name, std::vector<double> values,
                                 std::vector<uint8_t> missing_mask) {
  ColumnData col;
  col.name = std::move(name);
  col.kind = FeatureKind::numerical;
  col.rows = values.size();
  col.reals.assign(std::move(values));
  col.missing = std::move(missing_mask);
  return col;
}

ColumnData ColumnData::temporal(std::string name, std::vector<int64_t> seconds,
                                std::vector<uint8_t> missing_mask) {
  ColumnData col;
  col.name = std::move(name);
  col.kind = FeatureKind::temporal;
  col.rows = seconds.size();
  col.times = std::move(seconds);
  col.missing = std::move(missing_mask);
  return col;
}

const ColumnData* Table::find(const std::string& column_name) const {
  for (const auto& col : columns)
    if (col.name == column_name) return &col;
  return nullptr;
}

ColumnData* Table::find(const std::string& column_name) {
  for (auto& col : columns)
    if (col.name == column_name) return &col;
  return nullptr;
}

const ColumnData& Table::at(const std::string& column_name) const {
  if (const auto* col = find(column_name)) return *col;
  raise(ErrorCode::missing_column, "table '" + name + "' has no column '" +
                                       column_name + "'");
}

ColumnData& Table::at(const std::string& column_name) {
  if (auto* col = find(column_name)) return *col;
  raise(ErrorCode::missing_column, "table '" + name + "' has no column '" +
                                       column_name + "'");
}

void Table::add_column(ColumnData column) {
  columns.push_back(std::move(column));
}

bool Table::drop_column(const std::string& column_name) {
  for (auto it = columns.begin(); it != columns.end(); ++it) {
    if (it->name == column_name) {
      columns.erase(it);
      return true;
    }
  }
  return false;
}

namespace {

template <class T>
std::vector<T> gather(const std::vector<T>& src, const std::vector<int64_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (int64_t i : idx) out.push_back(src[static_cast<size_t>(i)]);
  return out;
}

}  // namespace

void gather_rows(Table& table, const std::vector<int64_t>& idx) {
  for (auto& col : table.columns) {
    col.missing = gather(col.missing, idx);
    col.rows = idx.size();
    switch (col.kind) {
      case FeatureKind::categorical:
        if (!col.raw.empty()) {
          col.raw = gather(col.raw, idx);
        } else if (!col.codes.empty()) {
          auto wide = col.codes.to_wide();
          col.codes.assign(gather(wide, idx));
        }
        break;
      case FeatureKind::numerical: {
        auto wide = col.reals.to_wide();
        col.reals.assign(gather(wide, idx));
        break;
      }
      case FeatureKind::temporal:
        col.times = gather(col.times, idx);
        break;
      case FeatureKind::multi_categorical: {
        // rebuild flat storage + offsets in the gathered order
        std::vector<int64_t> new_offsets{0};
        new_offsets.reserve(idx.size() + 1);
        if (!col.raw_elems.empty() || col.elems.empty()) {
          std::vector<std::string> flat;
          for (int64_t r : idx) {
            for (int64_t p = col.offsets[r]; p < col.offsets[r + 1]; ++p)
              flat.push_back(col.raw_elems[static_cast<size_t>(p)]);
            new_offsets.push_back(static_cast<int64_t>(flat.size()));
          }
          col.raw_elems = std::move(flat);
        } else {
          std::vector<int64_t> flat;
          for (int64_t r : idx) {
            for (int64_t p = col.offsets[r]; p < col.offsets[r + 1]; ++p)
              flat.push_back(col.elems.at(static_cast<size_t>(p)));
            new_offsets.push_back(static_cast<int64_t>(flat.size()));
          }
          col.elems.assign(std::move(flat));
        }
        col.offsets = std::move(new_offsets);
        break;
      }
    }
  }
  table.n_rows = idx.size();
}

}  // namespace autosmart

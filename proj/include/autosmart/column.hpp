#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "autosmart/errors.hpp"

namespace autosmart {

enum class FeatureKind {
  categorical,
  multi_categorical,
  numerical,
  temporal,
};

const char* feature_kind_name(FeatureKind kind);

/// Dense non-negative integer codes with width-narrowed physical storage.
/// Columns are built wide (int64) and narrowed once the code range is known.
class CodeVector {
 public:
  CodeVector() = default;
  explicit CodeVector(std::vector<int64_t> wide) : store_(std::move(wide)) {}

  size_t size() const {
    return std::visit([](const auto& v) { return v.size(); }, store_);
  }

  bool empty() const { return size() == 0; }

  int64_t at(size_t i) const {
    return std::visit([i](const auto& v) { return static_cast<int64_t>(v[i]); },
                      store_);
  }

  /// Storage width in bytes of one element (8 until narrowed).
  int width_bytes() const {
    return std::visit([](const auto& v) -> int { return sizeof(v[0]); }, store_);
  }

  void assign(std::vector<int64_t> wide) { store_ = std::move(wide); }

  void push_back(int64_t code);

  /// Re-packs into the narrowest unsigned width that holds the current range.
  /// Codes must be non-negative.
  void narrow();

  std::vector<int64_t> to_wide() const;

  /// Hot loops specialize on the concrete element type via the visitor.
  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), store_);
  }

 private:
  std::variant<std::vector<int64_t>, std::vector<uint8_t>,
               std::vector<uint16_t>, std::vector<uint32_t>>
      store_;
};

/// Real-valued storage, double while a column is being built and float once
/// downcast. Reads always widen to double.
class RealVector {
 public:
  RealVector() = default;
  explicit RealVector(std::vector<double> wide) : store_(std::move(wide)) {}

  size_t size() const {
    return std::visit([](const auto& v) { return v.size(); }, store_);
  }

  double at(size_t i) const {
    return std::visit([i](const auto& v) { return static_cast<double>(v[i]); },
                      store_);
  }

  int width_bytes() const {
    return std::visit([](const auto& v) -> int { return sizeof(v[0]); }, store_);
  }

  void assign(std::vector<double> wide) { store_ = std::move(wide); }
  void push_back(double value);
  void narrow();
  std::vector<double> to_wide() const;

  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), store_);
  }

 private:
  std::variant<std::vector<double>, std::vector<float>> store_;
};

/// One typed column. Exactly the payload matching `kind` is populated; the
/// missing mask always has one entry per row. Categorical and
/// multi-categorical columns hold raw string tokens between ingestion and
/// block encoding, integer codes afterwards.
struct ColumnData {
  std::string name;
  FeatureKind kind = FeatureKind::numerical;
  size_t rows = 0;

  // categorical
  CodeVector codes;
  std::vector<std::string> raw;

  // multi_categorical: flat element array + per-row offsets (size rows+1)
  CodeVector elems;
  std::vector<std::string> raw_elems;
  std::vector<int64_t> offsets;

  // numerical
  RealVector reals;

  // temporal (epoch seconds)
  std::vector<int64_t> times;

  std::vector<uint8_t> missing;

  bool is_missing(size_t row) const { return missing[row] != 0; }
  bool encoded() const { return raw.empty() && raw_elems.empty(); }

  static ColumnData categorical_raw(std::string name,
                                    std::vector<std::string> tokens,
                                    std::vector<uint8_t> missing_mask);
  static ColumnData categorical_codes(std::string name,
                                      std::vector<int64_t> code_values,
                                      std::vector<uint8_t> missing_mask);
  static ColumnData multi_categorical_raw(std::string name,
                                          std::vector<std::string> flat_tokens,
                                          std::vector<int64_t> offsets,
                                          std::vector<uint8_t> missing_mask);
  static ColumnData numerical(std::string name, std::vector<double> values,
                              std::vector<uint8_t> missing_mask);
  static ColumnData temporal(std::string name, std::vector<int64_t> seconds,
                             std::vector<uint8_t> missing_mask);
};

struct Table {
  std::string name;
  std::vector<ColumnData> columns;
  size_t n_rows = 0;

  const ColumnData* find(const std::string& column_name) const;
  ColumnData* find(const std::string& column_name);

  const ColumnData& at(const std::string& column_name) const;
  ColumnData& at(const std::string& column_name);

  void add_column(ColumnData column);
  bool drop_column(const std::string& column_name);
};

/// Reorders every column of `table` so new row r holds old row idx[r].
/// idx must be a permutation when used for sorting; a subset for sampling.
void gather_rows(Table& table, const std::vector<int64_t>& idx);

}  // namespace autosmart

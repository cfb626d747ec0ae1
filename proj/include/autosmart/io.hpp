#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "autosmart/bundle.hpp"

namespace autosmart {

struct TableInfo {
  std::string name;
  std::string path;  // relative to the dataset directory
  bool is_main = false;
  /// declaration order is the schema order used by every downstream tie-break
  std::vector<std::pair<std::string, FeatureKind>> columns;
};

/// Parsed dataset descriptor (`info.json`).
struct DatasetInfo {
  std::vector<TableInfo> tables;
  std::vector<RelationSpec> relations;
  std::string label_column;
  double time_budget_s = 0;
  int64_t mem_budget_bytes = 0;

  const TableInfo& main_table() const;
};

/// Parses and fully validates an `info.json` document. Unknown keys are
/// rejected so schema typos fail loudly.
DatasetInfo parse_info(const std::string& text);

std::string render_info(const DatasetInfo& info);

/// Reads every table of `info` from `root` (TSV, tab separated, header row,
/// empty cell = missing). Categorical tokens stay raw strings; block
/// encoding happens later so related columns can share dictionaries.
/// When `with_labels` is set, `root/labels.txt` is read as one 0/1 per line.
DatasetBundle load_dataset(const std::filesystem::path& root,
                           const DatasetInfo& info, bool with_labels);

/// Inverse of load_dataset for unencoded bundles: writes the TSV tables and,
/// when labels are present, `labels.txt`. Does not write info.json.
void write_dataset(const std::filesystem::path& root, const DatasetInfo& info,
                   const DatasetBundle& bundle);

std::vector<uint8_t> load_labels(const std::filesystem::path& file);
void write_labels(const std::filesystem::path& file,
                  const std::vector<uint8_t>& labels);

std::vector<double> load_predictions(const std::filesystem::path& file);
void write_predictions(const std::filesystem::path& file,
                       const std::vector<double>& probabilities);

std::string read_text_file(const std::filesystem::path& file);
void write_text_file(const std::filesystem::path& file, const std::string& text);

}  // namespace autosmart

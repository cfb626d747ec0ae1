#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "autosmart/bundle.hpp"

namespace autosmart {

class ThreadPool;

/// Symmetric binary overlap matrix over the categorical columns under
/// consideration. Diagonal is all ones.
struct OverlapMatrix {
  size_t n = 0;
  std::vector<uint8_t> entries;  // row-major n*n

  bool at(size_t i, size_t j) const { return entries[i * n + j] != 0; }
  void set(size_t i, size_t j) { entries[i * n + j] = entries[j * n + i] = 1; }
};

/// Partition of the scanned columns into shared-encoding blocks. Block ids
/// start at 1 in first-visit order; blocks[b-1] lists member column indices.
struct BlockDictionary {
  std::vector<std::vector<size_t>> blocks;
  std::vector<int> block_of;  // per column, 1-based block id
};

/// Per-block bijection raw token <-> dense code.
struct BlockEncoding {
  std::map<std::string, int64_t> to_code;
  std::vector<std::string> to_token;
};

/// (table index, column index) of one categorical or multi-categorical
/// column; table 0 is main, 1.. follow bundle.related order.
struct CatColumnRef {
  size_t table = 0;
  size_t column = 0;
};

struct PreprocessOptions {
  double overlap_threshold = 0.10;
  size_t session_sample_cap = 100000;
  uint64_t seed = 1;
};

struct PreprocessResult {
  BaseFeatureMap base;
  std::vector<CatColumnRef> encoded_columns;
  BlockDictionary blocks;
  std::vector<BlockEncoding> encodings;
  std::map<std::string, std::vector<std::string>> dropped;  // table -> columns
  /// sort permutation of the main table: new row r held old row main_order[r]
  std::vector<int64_t> main_order;
};

/// Key / factor / session detection. Keys are the relation endpoints; the
/// factor is the main-table key with the most distinct values (tie broken by
/// schema order); sessions are categorical non-key main-table columns that
/// are finer than the factor and functionally determine it. The dependency
/// is screened on a row sample, then re-verified on the full column.
/// Throws NoKeyFound when the main table has no key.
BaseFeatureMap detect_base_features(const DatasetBundle& bundle,
                                    const PreprocessOptions& opts = {});

/// Drops uninformative columns in place and returns the dropped names.
/// Numerical: variance < 1e-6 after min-max scaling. Categorical: one
/// distinct value or distinct/n_rows > 0.99. Multi-categorical: at most one
/// distinct element token. Protected names and temporal columns survive.
std::vector<std::string> drop_low_information(
    Table& table, const std::set<std::string>& protected_names);

/// All categorical and multi-categorical columns of the bundle in the
/// deterministic scan order (main first, then related tables in order).
std::vector<CatColumnRef> categorical_columns(const DatasetBundle& bundle);

/// Distinct raw-token set of one referenced column.
std::set<std::string> column_tokens(const DatasetBundle& bundle,
                                    const CatColumnRef& ref);

/// M[i][j] = 1 iff i == j, |tokens_i n tokens_j| / min(|..|) > threshold, or
/// (i, j) is a forced edge. Relation key pairs are forced so both ends of a
/// join always share one dictionary even when their value overlap is small.
OverlapMatrix build_overlap_matrix(
    const std::vector<std::set<std::string>>& tokens, double threshold,
    const std::vector<std::pair<size_t, size_t>>& forced_edges = {});

/// Connected components of the overlap graph, iterative depth-first search.
BlockDictionary build_feature_blocks(const OverlapMatrix& m);

/// Replaces raw tokens with dense codes. Within a block the dictionary is
/// shared: codes are assigned in first-occurrence order scanning the block's
/// columns in ref order, rows ascending. Missing cells get placeholder 0.
std::vector<BlockEncoding> encode_blocks(DatasetBundle& bundle,
                                         const std::vector<CatColumnRef>& refs,
                                         const BlockDictionary& blocks);

/// Stable-sorts by the first temporal column in schema order (missing
/// timestamps last), narrows reals to single precision and codes to the
/// smallest unsigned width. Returns the applied permutation (identity when
/// the table has no temporal column).
std::vector<int64_t> downcast_and_sort(Table& table);

/// Full stage driver: base features (adding a synthetic row-id key when
/// none exists), low-information pruning, block encoding, downcast + sort.
PreprocessResult run_preprocess(DatasetBundle& bundle,
                                const PreprocessOptions& opts = {},
                                ThreadPool* pool = nullptr);

}  // namespace autosmart

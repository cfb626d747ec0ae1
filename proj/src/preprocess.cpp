#include "autosmart/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "autosmart/parallel.hpp"
#include "autosmart/rng.hpp"

namespace autosmart {

namespace {

std::string token_at(const ColumnData& col, size_t row) {
  if (col.kind == FeatureKind::categorical)
    return col.raw.empty() ? std::to_string(col.codes.at(row)) : col.raw[row];
  return {};
}

size_t distinct_count(const ColumnData& col) {
  std::unordered_set<std::string> raw_seen;
  std::unordered_set<int64_t> code_seen;
  switch (col.kind) {
    case FeatureKind::categorical:
      for (size_t r = 0; r < col.rows; ++r) {
        if (col.is_missing(r)) continue;
        if (col.raw.empty())
          code_seen.insert(col.codes.at(r));
        else
          raw_seen.insert(col.raw[r]);
      }
      break;
    case FeatureKind::multi_categorical:
      if (col.raw_elems.empty()) {
        for (size_t i = 0; i < col.elems.size(); ++i)
          code_seen.insert(col.elems.at(i));
      } else {
        raw_seen.insert(col.raw_elems.begin(), col.raw_elems.end());
      }
      break;
    case FeatureKind::numerical: {
      std::unordered_set<double> values;
      for (size_t r = 0; r < col.rows; ++r)
        if (!col.is_missing(r)) values.insert(col.reals.at(r));
      return values.size();
    }
    case FeatureKind::temporal:
      for (size_t r = 0; r < col.rows; ++r)
        if (!col.is_missing(r)) code_seen.insert(col.times[r]);
      break;
  }
  return raw_seen.size() + code_seen.size();
}

/// true when every distinct candidate value maps to exactly one factor value
/// over the given rows
bool functional_dependency_holds(const ColumnData& candidate,
                                 const ColumnData& factor,
                                 const std::vector<int64_t>& rows) {
  std::unordered_map<std::string, std::string> maps_to;
  for (int64_t r : rows) {
    const auto row = static_cast<size_t>(r);
    if (candidate.is_missing(row) || factor.is_missing(row)) continue;
    const std::string value = token_at(candidate, row);
    const std::string target = token_at(factor, row);
    auto [it, fresh] = maps_to.try_emplace(value, target);
    if (!fresh && it->second != target) return false;
  }
  return true;
}

std::vector<int64_t> all_rows(size_t n) {
  std::vector<int64_t> rows(n);
  std::iota(rows.begin(), rows.end(), int64_t{0});
  return rows;
}

}  // namespace

BaseFeatureMap detect_base_features(const DatasetBundle& bundle,
                                    const PreprocessOptions& opts) {
  std::map<std::string, std::set<std::string>> key_sets;
  for (const auto& rel : bundle.relations) {
    key_sets[rel.left_table].insert(rel.left_key);
    key_sets[rel.right_table].insert(rel.right_key);
  }

  BaseFeatureMap base;
  auto record_keys = [&](const Table& table) {
    auto it = key_sets.find(table.name);
    if (it == key_sets.end()) return;
    for (const auto& col : table.columns)  // schema order
      if (it->second.count(col.name)) base.keys[table.name].push_back(col.name);
  };
  record_keys(bundle.main);
  for (const auto& t : bundle.related) record_keys(t);

  const auto& main_keys = base.keys_of(bundle.main.name);
  if (main_keys.empty())
    raise(ErrorCode::no_key_found,
          "main table '" + bundle.main.name + "' has no key column");

  size_t factor_distinct = 0;
  for (const auto& key : main_keys) {
    const size_t d = distinct_count(bundle.main.at(key));
    if (base.factor.empty() || d > factor_distinct) {
      base.factor = key;
      factor_distinct = d;
    }
  }

  const ColumnData& factor = bundle.main.at(base.factor);
  std::vector<int64_t> sample;
  if (bundle.main.n_rows > opts.session_sample_cap) {
    std::mt19937_64 rng(opts.seed);
    sample = sample_without_replacement(
        rng, static_cast<int64_t>(bundle.main.n_rows),
        static_cast<int64_t>(opts.session_sample_cap));
  } else {
    sample = all_rows(bundle.main.n_rows);
  }

  for (const auto& col : bundle.main.columns) {
    if (col.kind != FeatureKind::categorical) continue;
    if (base.is_key(bundle.main.name, col.name)) continue;
    if (distinct_count(col) <= factor_distinct) continue;
    if (!functional_dependency_holds(col, factor, sample)) continue;
    // the sample can miss a violation; confirm on the whole column
    if (sample.size() < bundle.main.n_rows &&
        !functional_dependency_holds(col, factor, all_rows(bundle.main.n_rows)))
      continue;
    base.sessions.push_back(col.name);
  }
  return base;
}

std::vector<std::string> drop_low_information(
    Table& table, const std::set<std::string>& protected_names) {
  if (table.n_rows == 0) return {};
  std::vector<std::string> dropped;
  for (const auto& col : table.columns) {
    if (protected_names.count(col.name)) continue;
    if (col.kind == FeatureKind::temporal) continue;
    bool drop = false;
    switch (col.kind) {
      case FeatureKind::numerical: {
        double lo = 0, hi = 0;
        size_t count = 0;
        for (size_t r = 0; r < col.rows; ++r) {
          if (col.is_missing(r)) continue;
          const double v = col.reals.at(r);
          lo = count == 0 ? v : std::min(lo, v);
          hi = count == 0 ? v : std::max(hi, v);
          ++count;
        }
        if (count < 2 || hi == lo) {
          drop = true;
          break;
        }
        double sum = 0, sum2 = 0;
        for (size_t r = 0; r < col.rows; ++r) {
          if (col.is_missing(r)) continue;
          const double v = (col.reals.at(r) - lo) / (hi - lo);
          sum += v;
          sum2 += v * v;
        }
        const double mean = sum / static_cast<double>(count);
        const double var = sum2 / static_cast<double>(count) - mean * mean;
        drop = var < 1e-6;
        break;
      }
      case FeatureKind::categorical: {
        const size_t d = distinct_count(col);
        drop = d <= 1 || static_cast<double>(d) /
                                 static_cast<double>(table.n_rows) >
                             0.99;
        break;
      }
      case FeatureKind::multi_categorical:
        drop = distinct_count(col) <= 1;
        break;
      case FeatureKind::temporal:
        break;
    }
    if (drop) dropped.push_back(col.name);
  }
  for (const auto& name : dropped) table.drop_column(name);
  return dropped;
}

std::vector<CatColumnRef> categorical_columns(const DatasetBundle& bundle) {
  std::vector<CatColumnRef> refs;
  auto scan = [&](const Table& table, size_t table_index) {
    for (size_t c = 0; c < table.columns.size(); ++c) {
      const auto kind = table.columns[c].kind;
      if (kind == FeatureKind::categorical ||
          kind == FeatureKind::multi_categorical)
        refs.push_back({table_index, c});
    }
  };
  scan(bundle.main, 0);
  for (size_t t = 0; t < bundle.related.size(); ++t)
    scan(bundle.related[t], t + 1);
  return refs;
}

namespace {

const Table& table_of(const DatasetBundle& bundle, size_t table_index) {
  return table_index == 0 ? bundle.main : bundle.related[table_index - 1];
}

Table& table_of(DatasetBundle& bundle, size_t table_index) {
  return table_index == 0 ? bundle.main : bundle.related[table_index - 1];
}

}  // namespace

std::set<std::string> column_tokens(const DatasetBundle& bundle,
                                    const CatColumnRef& ref) {
  const ColumnData& col = table_of(bundle, ref.table).columns[ref.column];
  std::set<std::string> tokens;
  if (col.kind == FeatureKind::categorical) {
    for (size_t r = 0; r < col.rows; ++r)
      if (!col.is_missing(r)) tokens.insert(token_at(col, r));
  } else {
    if (col.raw_elems.empty()) {
      for (size_t i = 0; i < col.elems.size(); ++i)
        tokens.insert(std::to_string(col.elems.at(i)));
    } else {
      tokens.insert(col.raw_elems.begin(), col.raw_elems.end());
    }
  }
  return tokens;
}

OverlapMatrix build_overlap_matrix(
    const std::vector<std::set<std::string>>& tokens, double threshold,
    const std::vector<std::pair<size_t, size_t>>& forced_edges) {
  OverlapMatrix m;
  m.n = tokens.size();
  m.entries.assign(m.n * m.n, 0);
  for (size_t i = 0; i < m.n; ++i) m.set(i, i);
  for (size_t i = 0; i < m.n; ++i) {
    for (size_t j = i + 1; j < m.n; ++j) {
      const auto& small = tokens[i].size() <= tokens[j].size() ? tokens[i] : tokens[j];
      const auto& large = tokens[i].size() <= tokens[j].size() ? tokens[j] : tokens[i];
      if (small.empty()) continue;
      size_t inter = 0;
      for (const auto& t : small) inter += large.count(t);
      if (static_cast<double>(inter) / static_cast<double>(small.size()) >
          threshold)
        m.set(i, j);
    }
  }
  for (const auto& [a, b] : forced_edges) m.set(a, b);
  return m;
}

BlockDictionary build_feature_blocks(const OverlapMatrix& m) {
  BlockDictionary dict;
  dict.block_of.assign(m.n, 0);
  for (size_t start = 0; start < m.n; ++start) {
    if (dict.block_of[start] != 0) continue;
    const int id = static_cast<int>(dict.blocks.size()) + 1;
    std::vector<size_t> members;
    std::vector<size_t> stack{start};
    dict.block_of[start] = id;
    while (!stack.empty()) {
      const size_t u = stack.back();
      stack.pop_back();
      members.push_back(u);
      for (size_t v = 0; v < m.n; ++v) {
        if (v != u && m.at(u, v) && dict.block_of[v] == 0) {
          dict.block_of[v] = id;
          stack.push_back(v);
        }
      }
    }
    dict.blocks.push_back(std::move(members));
  }
  return dict;
}

std::vector<BlockEncoding> encode_blocks(DatasetBundle& bundle,
                                         const std::vector<CatColumnRef>& refs,
                                         const BlockDictionary& blocks) {
  std::vector<BlockEncoding> encodings(blocks.blocks.size());
  for (size_t b = 0; b < blocks.blocks.size(); ++b) {
    BlockEncoding& enc = encodings[b];
    auto code_for = [&enc](const std::string& token) {
      auto [it, fresh] =
          enc.to_code.try_emplace(token, static_cast<int64_t>(enc.to_token.size()));
      if (fresh) enc.to_token.push_back(token);
      return it->second;
    };
    // scan in schema order (column-then-row), not discovery order
    std::vector<size_t> members = blocks.blocks[b];
    std::sort(members.begin(), members.end());
    for (size_t member : members) {
      ColumnData& col =
          table_of(bundle, refs[member].table).columns[refs[member].column];
      if (col.kind == FeatureKind::categorical) {
        if (col.raw.empty()) continue;  // already encoded
        std::vector<int64_t> codes(col.rows, 0);
        for (size_t r = 0; r < col.rows; ++r)
          if (!col.is_missing(r)) codes[r] = code_for(col.raw[r]);
        col.codes.assign(std::move(codes));
        col.raw.clear();
        col.raw.shrink_to_fit();
      } else {
        if (col.raw_elems.empty()) continue;
        std::vector<int64_t> codes(col.raw_elems.size());
        for (size_t i = 0; i < col.raw_elems.size(); ++i)
          codes[i] = code_for(col.raw_elems[i]);
        col.elems.assign(std::move(codes));
        col.raw_elems.clear();
        col.raw_elems.shrink_to_fit();
      }
    }
  }
  return encodings;
}

std::vector<int64_t> downcast_and_sort(Table& table) {
  const ColumnData* time_col = nullptr;
  for (const auto& col : table.columns) {
    if (col.kind == FeatureKind::temporal) {
      time_col = &col;
      break;
    }
  }
  std::vector<int64_t> order = all_rows(table.n_rows);
  if (time_col != nullptr) {
    std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
      const auto ra = static_cast<size_t>(a);
      const auto rb = static_cast<size_t>(b);
      const int64_t ta = time_col->is_missing(ra)
                             ? std::numeric_limits<int64_t>::max()
                             : time_col->times[ra];
      const int64_t tb = time_col->is_missing(rb)
                             ? std::numeric_limits<int64_t>::max()
                             : time_col->times[rb];
      return ta < tb;
    });
    gather_rows(table, order);
  }
  for (auto& col : table.columns) {
    col.codes.narrow();
    col.elems.narrow();
    col.reals.narrow();
  }
  return order;
}

PreprocessResult run_preprocess(DatasetBundle& bundle,
                                const PreprocessOptions& opts,
                                ThreadPool* pool) {
  PreprocessResult res;
  try {
    res.base = detect_base_features(bundle, opts);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::no_key_found) throw;
    std::string name = "__rowid__";
    while (bundle.main.find(name) != nullptr) name += "_";
    std::vector<std::string> tokens(bundle.main.n_rows);
    for (size_t r = 0; r < bundle.main.n_rows; ++r) tokens[r] = std::to_string(r);
    bundle.main.add_column(ColumnData::categorical_raw(
        name, std::move(tokens), std::vector<uint8_t>(bundle.main.n_rows, 0)));
    res.base.keys[bundle.main.name] = {name};
    res.base.factor = name;
  }

  auto protect = [&](const Table& table) {
    std::set<std::string> names;
    for (const auto& key : res.base.keys_of(table.name)) names.insert(key);
    if (table.name == bundle.main.name)
      for (const auto& s : res.base.sessions) names.insert(s);
    return names;
  };
  res.dropped[bundle.main.name] =
      drop_low_information(bundle.main, protect(bundle.main));
  for (auto& t : bundle.related)
    res.dropped[t.name] = drop_low_information(t, protect(t));

  res.encoded_columns = categorical_columns(bundle);
  std::vector<std::set<std::string>> tokens(res.encoded_columns.size());
  parallel_for(pool, res.encoded_columns.size(), [&](size_t i) {
    tokens[i] = column_tokens(bundle, res.encoded_columns[i]);
  });

  std::map<std::pair<std::string, std::string>, size_t> ref_index;
  for (size_t i = 0; i < res.encoded_columns.size(); ++i) {
    const auto& ref = res.encoded_columns[i];
    const Table& table = table_of(bundle, ref.table);
    ref_index[{table.name, table.columns[ref.column].name}] = i;
  }
  std::vector<std::pair<size_t, size_t>> forced;
  for (const auto& rel : bundle.relations) {
    const auto left = ref_index.find({rel.left_table, rel.left_key});
    const auto right = ref_index.find({rel.right_table, rel.right_key});
    if (left != ref_index.end() && right != ref_index.end())
      forced.emplace_back(left->second, right->second);
  }

  const OverlapMatrix matrix =
      build_overlap_matrix(tokens, opts.overlap_threshold, forced);
  res.blocks = build_feature_blocks(matrix);
  res.encodings = encode_blocks(bundle, res.encoded_columns, res.blocks);

  res.main_order = downcast_and_sort(bundle.main);
  for (auto& t : bundle.related) downcast_and_sort(t);
  return res;
}

}  // namespace autosmart

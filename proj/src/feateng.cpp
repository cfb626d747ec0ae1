#include "autosmart/feateng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>
#include <utility>

#include "autosmart/parallel.hpp"
#include "autosmart/rng.hpp"

namespace autosmart {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string unique_name(std::set<std::string>& used, std::string base) {
  std::string name = base;
  for (int suffix = 2; used.count(name) != 0; ++suffix)
    name = base + "_" + std::to_string(suffix);
  used.insert(name);
  return name;
}

std::set<std::string> table_names(const Table& table) {
  std::set<std::string> out;
  for (const auto& c : table.columns) out.insert(c.name);
  return out;
}

/// Wide codes with -1 standing in for missing rows.
std::vector<int64_t> codes_or_missing(const ColumnData& col) {
  std::vector<int64_t> out(col.rows);
  col.codes.visit([&](const auto& v) {
    for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<int64_t>(v[i]);
  });
  for (size_t i = 0; i < col.rows; ++i)
    if (col.missing[i]) out[i] = -1;
  return out;
}

std::vector<double> reals_or_nan(const ColumnData& col) {
  std::vector<double> out(col.rows);
  col.reals.visit([&](const auto& v) {
    for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(v[i]);
  });
  for (size_t i = 0; i < col.rows; ++i)
    if (col.missing[i]) out[i] = kNaN;
  return out;
}

bool usable_categorical(const ColumnData* c) {
  return c != nullptr && c->kind == FeatureKind::categorical && c->encoded();
}

/// Factor first, then the remaining keys in schema order, deduplicated.
/// Names pruned from the frame are silently skipped.
std::vector<const ColumnData*> grouper_columns(const Table& table,
                                               const FrameRoles& roles) {
  std::vector<const ColumnData*> out;
  std::set<std::string> seen;
  auto try_add = [&](const std::string& name) {
    if (name.empty() || seen.count(name) != 0) return;
    seen.insert(name);
    const ColumnData* c = table.find(name);
    if (usable_categorical(c)) out.push_back(c);
  };
  try_add(roles.factor);
  for (const auto& k : roles.keys) try_add(k);
  return out;
}

std::vector<const ColumnData*> target_columns(const Table& table,
                                              const FrameRoles& roles) {
  std::vector<const ColumnData*> out;
  std::set<std::string> seen;
  auto try_add = [&](const std::string& name) {
    if (name.empty() || seen.count(name) != 0) return;
    seen.insert(name);
    const ColumnData* c = table.find(name);
    if (usable_categorical(c)) out.push_back(c);
  };
  for (const auto& k : roles.keys) try_add(k);
  for (const auto& s : roles.sessions) try_add(s);
  return out;
}

ColumnData broadcast_by_code(std::string name,
                             const std::vector<int64_t>& group_codes,
                             const std::vector<double>& per_group) {
  const size_t n = group_codes.size();
  std::vector<double> vals(n, 0.0);
  std::vector<uint8_t> mask(n, 0);
  for (size_t r = 0; r < n; ++r) {
    const int64_t g = group_codes[r];
    if (g < 0 || std::isnan(per_group[static_cast<size_t>(g)])) {
      vals[r] = kNaN;
      mask[r] = 1;
    } else {
      vals[r] = per_group[static_cast<size_t>(g)];
    }
  }
  return ColumnData::numerical(std::move(name), std::move(vals),
                               std::move(mask));
}

/// Distinct non-missing values of `target` within each group of `group`,
/// via sort + unique over the (group, value) pairs.
std::vector<double> distinct_per_group(const std::vector<int64_t>& group_codes,
                                       const std::vector<int64_t>& target_codes,
                                       size_t n_groups) {
  std::vector<std::pair<int64_t, int64_t>> pairs;
  pairs.reserve(group_codes.size());
  for (size_t r = 0; r < group_codes.size(); ++r)
    if (group_codes[r] >= 0 && target_codes[r] >= 0)
      pairs.emplace_back(group_codes[r], target_codes[r]);
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  std::vector<double> out(n_groups, 0.0);
  for (const auto& [g, t] : pairs) out[static_cast<size_t>(g)] += 1.0;
  return out;
}

const char* unit_name(int64_t unit) {
  switch (unit) {
    case 86400: return "day";
    case 3600: return "hour";
    case 60: return "minute";
    default: return "second";
  }
}

}  // namespace

ColumnData position_lookup(const ColumnData& cat, const ColumnData& mcat,
                           std::string name) {
  if (cat.kind != FeatureKind::categorical ||
      mcat.kind != FeatureKind::multi_categorical || !cat.encoded() ||
      !mcat.encoded())
    raise(ErrorCode::kind_mismatch,
          "position_lookup needs an encoded categorical and an encoded "
          "multi-categorical column");
  if (cat.rows != mcat.rows)
    raise(ErrorCode::column_length_mismatch,
          "position_lookup columns differ in length");
  const size_t n = cat.rows;
  std::vector<double> vals(n, 0.0);
  std::vector<uint8_t> mask(n, 0);
  const auto& off = mcat.offsets;
  cat.codes.visit([&](const auto& cv) {
    mcat.elems.visit([&](const auto& ev) {
      for (size_t r = 0; r < n; ++r) {
        if (cat.missing[r] || mcat.missing[r]) {
          vals[r] = kNaN;
          mask[r] = 1;
          continue;
        }
        const int64_t code = static_cast<int64_t>(cv[r]);
        double pos = 0.0;
        for (int64_t j = off[r]; j < off[r + 1]; ++j) {
          if (static_cast<int64_t>(ev[j]) == code) {
            pos = static_cast<double>(j - off[r] + 1);
            break;
          }
        }
        vals[r] = pos;
      }
    });
  });
  return ColumnData::numerical(std::move(name), std::move(vals),
                               std::move(mask));
}

std::vector<ColumnData> gen_first_order(const Table& table,
                                        const FrameRoles& roles,
                                        size_t max_candidates,
                                        ThreadPool* pool) {
  const auto groupers = grouper_columns(table, roles);
  const auto targets = target_columns(table, roles);

  std::vector<std::vector<int64_t>> gcodes(groupers.size());
  for (size_t i = 0; i < groupers.size(); ++i)
    gcodes[i] = codes_or_missing(*groupers[i]);

  struct Task {
    std::string name;
    size_t g = 0;
    const ColumnData* target = nullptr;  // null for the plain row count
  };
  std::vector<Task> tasks;
  std::set<std::string> used = table_names(table);
  for (size_t g = 0; g < groupers.size(); ++g) {
    if (tasks.size() >= max_candidates) break;
    tasks.push_back(
        {unique_name(used, "count(" + groupers[g]->name + ")"), g, nullptr});
    for (const ColumnData* t : targets) {
      if (t == groupers[g]) continue;
      if (tasks.size() >= max_candidates) break;
      tasks.push_back({unique_name(used, "nunique(" + t->name + "|" +
                                             groupers[g]->name + ")"),
                       g, t});
    }
  }

  std::vector<ColumnData> out(tasks.size());
  parallel_for(pool, tasks.size(), [&](size_t i) {
    const Task& task = tasks[i];
    const auto& gc = gcodes[task.g];
    int64_t maxc = -1;
    for (int64_t c : gc) maxc = std::max(maxc, c);
    const size_t n_groups = static_cast<size_t>(maxc + 1);
    std::vector<double> per_group;
    if (task.target == nullptr) {
      per_group.assign(n_groups, 0.0);
      for (int64_t c : gc)
        if (c >= 0) per_group[static_cast<size_t>(c)] += 1.0;
    } else {
      per_group =
          distinct_per_group(gc, codes_or_missing(*task.target), n_groups);
    }
    out[i] = broadcast_by_code(task.name, gc, per_group);
  });
  return out;
}

std::vector<ColumnData> gen_second_order(const Table& table,
                                         const FrameRoles& roles,
                                         const FeatengOptions& opts,
                                         size_t max_candidates,
                                         ThreadPool* pool) {
  const auto groupers = grouper_columns(table, roles);
  std::vector<const ColumnData*> numeric, cats, mcats;
  for (const auto& c : table.columns) {
    if (c.kind == FeatureKind::numerical) numeric.push_back(&c);
    if (c.kind == FeatureKind::categorical && c.encoded()) cats.push_back(&c);
    if (c.kind == FeatureKind::multi_categorical && c.encoded())
      mcats.push_back(&c);
  }

  std::vector<std::vector<int64_t>> gcodes(groupers.size());
  for (size_t i = 0; i < groupers.size(); ++i)
    gcodes[i] = codes_or_missing(*groupers[i]);

  enum class Op { qbin, group_stat, count_enc, freq_enc, pos };
  struct Task {
    std::string name;
    Op op = Op::qbin;
    const ColumnData* source = nullptr;
    const ColumnData* other = nullptr;  // multi-categorical side of Op::pos
    size_t g = 0;
    int stat = 0;  // 0 mean, 1 std, 2 min, 3 max
  };
  std::vector<Task> tasks;
  std::set<std::string> used = table_names(table);
  auto room = [&] { return tasks.size() < max_candidates; };

  for (const ColumnData* x : numeric) {
    if (!room()) break;
    tasks.push_back({unique_name(used, "qbin10(" + x->name + ")"), Op::qbin, x});
  }
  const int n_stats = opts.extra_reducers ? 4 : 2;
  static const char* kStatName[4] = {"mean", "std", "min", "max"};
  for (size_t g = 0; g < groupers.size() && room(); ++g) {
    for (const ColumnData* x : numeric) {
      for (int s = 0; s < n_stats && room(); ++s) {
        tasks.push_back({unique_name(used, std::string(kStatName[s]) + "(" +
                                               x->name + "|" +
                                               groupers[g]->name + ")"),
                         Op::group_stat, x, nullptr, g, s});
      }
    }
  }
  for (const ColumnData* c : cats) {
    if (!room()) break;
    tasks.push_back(
        {unique_name(used, "cnt_enc(" + c->name + ")"), Op::count_enc, c});
    if (!room()) break;
    tasks.push_back(
        {unique_name(used, "freq_enc(" + c->name + ")"), Op::freq_enc, c});
  }
  for (const ColumnData* c : cats) {
    for (const ColumnData* m : mcats) {
      if (!room()) break;
      tasks.push_back({unique_name(used, "pos(" + c->name + "|" + m->name + ")"),
                       Op::pos, c, m});
    }
  }

  const size_t n = table.n_rows;
  std::vector<ColumnData> out(tasks.size());
  parallel_for(pool, tasks.size(), [&](size_t i) {
    Task& task = tasks[i];
    switch (task.op) {
      case Op::qbin: {
        std::vector<double> vals = reals_or_nan(*task.source);
        const auto edges = compute_bin_edges(vals, 10);
        std::vector<uint8_t> mask(n, 0);
        for (size_t r = 0; r < n; ++r) {
          if (std::isnan(vals[r]))
            mask[r] = 1;
          else
            vals[r] = static_cast<double>(bin_index(edges, vals[r]));
        }
        out[i] = ColumnData::numerical(std::move(task.name), std::move(vals),
                                       std::move(mask));
        break;
      }
      case Op::group_stat: {
        const auto& gc = gcodes[task.g];
        const auto x = reals_or_nan(*task.source);
        int64_t maxc = -1;
        for (int64_t c : gc) maxc = std::max(maxc, c);
        const size_t n_groups = static_cast<size_t>(maxc + 1);
        std::vector<double> cnt(n_groups, 0.0), sum(n_groups, 0.0),
            sumsq(n_groups, 0.0);
        std::vector<double> lo(n_groups, kNaN), hi(n_groups, kNaN);
        for (size_t r = 0; r < n; ++r) {
          if (gc[r] < 0 || std::isnan(x[r])) continue;
          const size_t g = static_cast<size_t>(gc[r]);
          cnt[g] += 1.0;
          sum[g] += x[r];
          sumsq[g] += x[r] * x[r];
          if (std::isnan(lo[g]) || x[r] < lo[g]) lo[g] = x[r];
          if (std::isnan(hi[g]) || x[r] > hi[g]) hi[g] = x[r];
        }
        std::vector<double> per_group(n_groups, kNaN);
        for (size_t g = 0; g < n_groups; ++g) {
          if (cnt[g] <= 0.0) continue;
          const double mean = sum[g] / cnt[g];
          switch (task.stat) {
            case 0: per_group[g] = mean; break;
            case 1:
              per_group[g] =
                  std::sqrt(std::max(0.0, sumsq[g] / cnt[g] - mean * mean));
              break;
            case 2: per_group[g] = lo[g]; break;
            default: per_group[g] = hi[g]; break;
          }
        }
        out[i] = broadcast_by_code(std::move(task.name), gc, per_group);
        break;
      }
      case Op::count_enc:
      case Op::freq_enc: {
        const auto codes = codes_or_missing(*task.source);
        int64_t maxc = -1;
        for (int64_t c : codes) maxc = std::max(maxc, c);
        std::vector<double> per_code(static_cast<size_t>(maxc + 1), 0.0);
        for (int64_t c : codes)
          if (c >= 0) per_code[static_cast<size_t>(c)] += 1.0;
        if (task.op == Op::freq_enc && n > 0)
          for (double& v : per_code) v /= static_cast<double>(n);
        out[i] = broadcast_by_code(std::move(task.name), codes, per_code);
        break;
      }
      case Op::pos:
        out[i] = position_lookup(*task.source, *task.other, std::move(task.name));
        break;
    }
  });
  return out;
}

int64_t choose_bucket_unit(int64_t span_seconds) {
  const int64_t span = std::max<int64_t>(span_seconds, 0);
  for (int64_t unit : {int64_t{86400}, int64_t{3600}, int64_t{60}, int64_t{1}}) {
    const int64_t n_buckets = span / unit + 1;
    if (n_buckets >= 100 && n_buckets <= 10000) return unit;
  }
  if (span / 86400 + 1 > 10000) return 86400;
  return 1;
}

std::vector<ColumnData> gen_temporal(const Table& table,
                                     const FrameRoles& roles,
                                     size_t max_candidates, ThreadPool* pool) {
  const ColumnData* time_col = nullptr;
  for (const auto& c : table.columns)
    if (c.kind == FeatureKind::temporal) {
      time_col = &c;
      break;
    }
  if (time_col == nullptr) return {};

  int64_t t_min = std::numeric_limits<int64_t>::max();
  int64_t t_max = std::numeric_limits<int64_t>::min();
  for (size_t r = 0; r < time_col->rows; ++r) {
    if (time_col->missing[r]) continue;
    t_min = std::min(t_min, time_col->times[r]);
    t_max = std::max(t_max, time_col->times[r]);
  }
  if (t_min > t_max) return {};
  const int64_t unit = choose_bucket_unit(t_max - t_min);
  const int64_t n_buckets = (t_max - t_min) / unit + 1;
  const std::string suffix = std::string("@") + unit_name(unit) + ")";

  std::vector<int64_t> bucket(time_col->rows, -1);
  for (size_t r = 0; r < time_col->rows; ++r)
    if (!time_col->missing[r])
      bucket[r] = (time_col->times[r] - t_min) / unit;

  const auto groupers = grouper_columns(table, roles);
  std::vector<const ColumnData*> cats;
  for (const auto& c : table.columns)
    if (c.kind == FeatureKind::categorical && c.encoded()) cats.push_back(&c);

  std::vector<std::vector<int64_t>> composite(groupers.size());
  for (size_t g = 0; g < groupers.size(); ++g) {
    const auto gc = codes_or_missing(*groupers[g]);
    auto& key = composite[g];
    key.resize(gc.size());
    for (size_t r = 0; r < gc.size(); ++r)
      key[r] = (gc[r] < 0 || bucket[r] < 0) ? -1 : gc[r] * n_buckets + bucket[r];
  }

  struct Task {
    std::string name;
    size_t g = 0;
    const ColumnData* target = nullptr;  // null for the row count
  };
  std::vector<Task> tasks;
  std::set<std::string> used = table_names(table);
  for (size_t g = 0; g < groupers.size(); ++g) {
    if (tasks.size() >= max_candidates) break;
    tasks.push_back(
        {unique_name(used, "tcount(" + groupers[g]->name + suffix), g, nullptr});
  }
  for (size_t g = 0; g < groupers.size(); ++g) {
    for (const ColumnData* c : cats) {
      if (c == groupers[g]) continue;
      if (tasks.size() >= max_candidates) break;
      tasks.push_back({unique_name(used, "tnunique(" + c->name + "|" +
                                             groupers[g]->name + suffix),
                       g, c});
    }
  }

  std::vector<ColumnData> out(tasks.size());
  parallel_for(pool, tasks.size(), [&](size_t i) {
    const Task& task = tasks[i];
    const auto& key = composite[task.g];
    std::unordered_map<int64_t, double> per_key;
    if (task.target == nullptr) {
      for (int64_t k : key)
        if (k >= 0) per_key[k] += 1.0;
    } else {
      const auto tc = codes_or_missing(*task.target);
      std::vector<std::pair<int64_t, int64_t>> pairs;
      pairs.reserve(key.size());
      for (size_t r = 0; r < key.size(); ++r)
        if (key[r] >= 0 && tc[r] >= 0) pairs.emplace_back(key[r], tc[r]);
      std::sort(pairs.begin(), pairs.end());
      pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
      for (const auto& [k, v] : pairs) per_key[k] += 1.0;
    }
    std::vector<double> vals(key.size(), 0.0);
    std::vector<uint8_t> mask(key.size(), 0);
    for (size_t r = 0; r < key.size(); ++r) {
      if (key[r] < 0) {
        vals[r] = kNaN;
        mask[r] = 1;
      } else {
        const auto it = per_key.find(key[r]);
        vals[r] = it == per_key.end() ? 0.0 : it->second;
      }
    }
    out[i] = ColumnData::numerical(task.name, std::move(vals), std::move(mask));
  });
  return out;
}

void encode_categorical_final(FeatureFrame& frame,
                              std::span<const uint8_t> labels, size_t n_train,
                              double alpha) {
  Table& table = frame.table;
  if (n_train == 0 || n_train > table.n_rows || labels.size() != n_train)
    raise(ErrorCode::missing_labels,
          "final encoding needs one label per training row");
  double n_pos = 0.0;
  for (uint8_t y : labels) n_pos += y != 0 ? 1.0 : 0.0;
  const double prior = n_pos / static_cast<double>(n_train);

  for (auto& col : table.columns) {
    const size_t n = col.rows;
    switch (col.kind) {
      case FeatureKind::numerical:
        continue;
      case FeatureKind::temporal: {
        std::vector<double> vals(n, 0.0);
        for (size_t r = 0; r < n; ++r)
          vals[r] = col.missing[r] ? kNaN
                                   : static_cast<double>(col.times[r]);
        col = ColumnData::numerical(col.name, std::move(vals),
                                    std::move(col.missing));
        break;
      }
      case FeatureKind::categorical: {
        if (!col.encoded())
          raise(ErrorCode::kind_mismatch,
                "final encoding expects code-encoded categorical columns");
        const auto codes = codes_or_missing(col);
        int64_t maxc = -1;
        for (int64_t c : codes) maxc = std::max(maxc, c);
        std::vector<double> cnt(static_cast<size_t>(maxc + 1), 0.0),
            pos(static_cast<size_t>(maxc + 1), 0.0);
        for (size_t r = 0; r < n_train; ++r) {
          if (codes[r] < 0) continue;
          cnt[static_cast<size_t>(codes[r])] += 1.0;
          pos[static_cast<size_t>(codes[r])] += labels[r] != 0 ? 1.0 : 0.0;
        }
        std::vector<double> vals(n, 0.0);
        std::vector<uint8_t> mask(n, 0);
        for (size_t r = 0; r < n; ++r) {
          if (codes[r] < 0) {
            vals[r] = kNaN;
            mask[r] = 1;
          } else {
            const size_t c = static_cast<size_t>(codes[r]);
            vals[r] = (pos[c] + alpha * prior) / (cnt[c] + alpha);
          }
        }
        col = ColumnData::numerical(col.name, std::move(vals), std::move(mask));
        break;
      }
      case FeatureKind::multi_categorical: {
        if (!col.encoded())
          raise(ErrorCode::kind_mismatch,
                "final encoding expects code-encoded multi-categorical columns");
        std::vector<double> vals(n, 0.0);
        std::vector<uint8_t> mask(n, 0);
        col.elems.visit([&](const auto& ev) {
          for (size_t r = 0; r < n; ++r) {
            const int64_t len = col.offsets[r + 1] - col.offsets[r];
            if (col.missing[r] || len == 0) {
              vals[r] = kNaN;
              mask[r] = 1;
              continue;
            }
            double sum = 0.0;
            for (int64_t j = col.offsets[r]; j < col.offsets[r + 1]; ++j)
              sum += static_cast<double>(ev[j]);
            vals[r] = sum / static_cast<double>(len);
          }
        });
        col = ColumnData::numerical(col.name, std::move(vals), std::move(mask));
        break;
      }
    }
    frame.origin[col.name] = FeatureOrigin::stage4;
  }
}

NumericFrame to_numeric_frame(const Table& table,
                              std::span<const int64_t> rows) {
  NumericFrame out;
  out.n_rows = rows.empty() ? table.n_rows : rows.size();
  for (const auto& col : table.columns) {
    if (col.kind == FeatureKind::categorical ||
        col.kind == FeatureKind::multi_categorical)
      continue;
    std::vector<double> vals(out.n_rows, 0.0);
    auto fill = [&](auto&& value_at) {
      if (rows.empty()) {
        for (size_t r = 0; r < out.n_rows; ++r)
          vals[r] = col.missing[r] ? kNaN : value_at(r);
      } else {
        for (size_t r = 0; r < out.n_rows; ++r) {
          const size_t src = static_cast<size_t>(rows[r]);
          vals[r] = col.missing[src] ? kNaN : value_at(src);
        }
      }
    };
    if (col.kind == FeatureKind::temporal)
      fill([&](size_t r) { return static_cast<double>(col.times[r]); });
    else
      col.reals.visit([&](const auto& rv) {
        fill([&](size_t r) { return static_cast<double>(rv[r]); });
      });
    out.names.push_back(col.name);
    out.columns.push_back(std::move(vals));
  }
  return out;
}

std::vector<ColumnData> select_features(
    const Table& table, std::vector<ColumnData> candidates,
    std::span<const uint8_t> labels, std::span<const double> weights,
    size_t n_train, const SelectionParams& params, int64_t budget, int stage,
    SelectionReport& report, BudgetTracker* tracker, ThreadPool* pool) {
  if (candidates.empty()) return {};
  if (labels.size() != n_train || weights.size() != n_train)
    raise(ErrorCode::missing_labels,
          "feature selection needs labels and weights for every training row");

  // Stratified uniform down-sample of the training rows.
  std::vector<int64_t> rows;
  if (n_train <= params.sample_cap) {
    rows.resize(n_train);
    std::iota(rows.begin(), rows.end(), 0);
  } else {
    std::vector<int64_t> pos_rows, neg_rows;
    for (size_t r = 0; r < n_train; ++r)
      (labels[r] != 0 ? pos_rows : neg_rows).push_back(
          static_cast<int64_t>(r));
    const int64_t cap = static_cast<int64_t>(params.sample_cap);
    int64_t k_pos = std::llround(static_cast<double>(cap) *
                                 static_cast<double>(pos_rows.size()) /
                                 static_cast<double>(n_train));
    k_pos = std::clamp<int64_t>(k_pos, pos_rows.empty() ? 0 : 1,
                                static_cast<int64_t>(pos_rows.size()));
    int64_t k_neg =
        std::clamp<int64_t>(cap - k_pos, neg_rows.empty() ? 0 : 1,
                            static_cast<int64_t>(neg_rows.size()));
    std::mt19937_64 rng(params.seed + 77003 * static_cast<uint64_t>(stage));
    for (auto [src, k] :
         {std::pair{&pos_rows, k_pos}, std::pair{&neg_rows, k_neg}})
      for (int64_t i :
           sample_without_replacement(rng, static_cast<int64_t>(src->size()), k))
        rows.push_back((*src)[static_cast<size_t>(i)]);
    std::sort(rows.begin(), rows.end());
  }

  NumericFrame X = to_numeric_frame(table, rows);
  X.n_rows = rows.size();
  for (const auto& cand : candidates) {
    std::vector<double> vals(rows.size(), 0.0);
    cand.reals.visit([&](const auto& rv) {
      for (size_t r = 0; r < rows.size(); ++r) {
        const size_t src = static_cast<size_t>(rows[r]);
        vals[r] = cand.missing[src] ? kNaN : static_cast<double>(rv[src]);
      }
    });
    X.add(cand.name, std::move(vals));
  }
  std::vector<uint8_t> y_s(rows.size());
  std::vector<double> w_s(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    y_s[r] = labels[static_cast<size_t>(rows[r])];
    w_s[r] = weights[static_cast<size_t>(rows[r])];
  }

  GbdtParams fit_params;
  fit_params.n_rounds = params.n_rounds;
  fit_params.max_leaves = params.max_leaves;
  fit_params.learning_rate = params.learning_rate;
  fit_params.min_split_gain = params.min_split_gain;
  fit_params.seed = params.seed;
  std::function<bool()> stop;
  if (tracker != nullptr)
    stop = [tracker] { return tracker->remaining_s() <= 0.0; };
  const GbdtModel model = fit(X, y_s, w_s, fit_params, pool, stop);
  report.model_fits += 1;
  const auto& gains = feature_gains(model);

  std::vector<size_t> kept_idx;
  std::vector<double> cand_gain(candidates.size(), 0.0);
  for (size_t i = 0; i < candidates.size(); ++i) {
    const auto it = gains.find(candidates[i].name);
    cand_gain[i] = it == gains.end() ? 0.0 : it->second;
    if (cand_gain[i] > params.drop_gain_eps) kept_idx.push_back(i);
  }
  if (budget >= 0 && kept_idx.size() > static_cast<size_t>(budget)) {
    std::stable_sort(kept_idx.begin(), kept_idx.end(),
                     [&](size_t a, size_t b) {
                       return cand_gain[a] > cand_gain[b];
                     });
    kept_idx.resize(static_cast<size_t>(budget));
    std::sort(kept_idx.begin(), kept_idx.end());
  }

  std::vector<uint8_t> is_kept(candidates.size(), 0);
  for (size_t i : kept_idx) is_kept[i] = 1;
  for (size_t i = 0; i < candidates.size(); ++i)
    report.rows.push_back({candidates[i].name, stage, cand_gain[i],
                           is_kept[i] != 0, rows.size()});

  std::vector<ColumnData> kept;
  kept.reserve(kept_idx.size());
  for (size_t i : kept_idx) kept.push_back(std::move(candidates[i]));
  return kept;
}

std::string selection_report_tsv(const SelectionReport& report) {
  std::string out = "feature\tstage\tgain\tkept\tsample_rows\n";
  char buf[64];
  for (const auto& row : report.rows) {
    out += row.feature;
    std::snprintf(buf, sizeof buf, "\t%d\t%.17g\t%d\t%zu\n", row.stage,
                  row.gain, row.kept ? 1 : 0, row.sample_rows);
    out += buf;
  }
  return out;
}

NumericFrame run_feature_pipeline(FeatureFrame& frame, const FrameRoles& roles,
                                  std::span<const uint8_t> labels,
                                  std::span<const double> weights,
                                  size_t n_train, BudgetTracker& tracker,
                                  const FeatengOptions& opts,
                                  SelectionReport& report, ThreadPool* pool) {
  const size_t gen_cap =
      opts.stage_budget <= 0 ? 0
                             : static_cast<size_t>(opts.stage_budget) * 4;
  const double sample_rows = static_cast<double>(
      std::min<size_t>(n_train, opts.selection.sample_cap));
  double last_cost = 0.0;

  auto run_stage = [&](int stage, auto&& gen) {
    // Coarse cost model: one selection fit over the sample plus generation,
    // refined by the cost of the previous stage once one is measured.
    const double est = std::max(
        1.0 + 2e-7 * sample_rows *
                  static_cast<double>(frame.table.columns.size() + gen_cap),
        1.25 * last_cost);
    if (!tracker.can_afford(est, opts.reserve_frac)) return;
    const double t0 = tracker.elapsed_s();
    std::vector<ColumnData> candidates = gen();
    auto kept = select_features(frame.table, std::move(candidates), labels,
                                weights, n_train, opts.selection,
                                opts.stage_budget, stage, report, &tracker,
                                pool);
    const FeatureOrigin origin = stage == 1   ? FeatureOrigin::stage1
                                 : stage == 2 ? FeatureOrigin::stage2
                                              : FeatureOrigin::stage3;
    for (auto& col : kept) frame.add_column(std::move(col), origin);
    last_cost = std::max(last_cost, tracker.elapsed_s() - t0);
  };

  run_stage(1, [&] {
    return gen_first_order(frame.table, roles, gen_cap, pool);
  });
  run_stage(2, [&] {
    return gen_second_order(frame.table, roles, opts, gen_cap, pool);
  });
  run_stage(3, [&] {
    return gen_temporal(frame.table, roles, gen_cap, pool);
  });
  encode_categorical_final(frame, labels, n_train, opts.alpha);
  return to_numeric_frame(frame.table);
}

}  // namespace autosmart

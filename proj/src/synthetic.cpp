#include "autosmart/synthetic.hpp"

#include <algorithm>
#include <numeric>

#include "autosmart/rng.hpp"

namespace autosmart {

namespace {

constexpr int64_t kWindowStart = 1600000000;  // epoch seconds
constexpr int64_t kWindowSpan = 30 * 24 * 3600;

struct Latents {
  std::vector<double> user_score;
  std::vector<double> item_score;
  std::vector<double> tag_score;
};

struct MainRows {
  std::vector<std::string> user, item, session, primary_tag;
  std::vector<std::string> tag_flat;
  std::vector<int64_t> tag_offsets{0};
  std::vector<uint8_t> tags_missing;
  std::vector<double> f_num1, f_num2;
  std::vector<uint8_t> f2_missing;
  std::vector<int64_t> ts;
  std::vector<double> score;
};

std::vector<uint8_t> none(size_t n) { return std::vector<uint8_t>(n, 0); }

void emit_rows(MainRows& out, std::mt19937_64& rng, const SyntheticSpec& spec,
               const Latents& lat, int64_t n_rows, int64_t user_lo,
               int64_t user_hi) {
  for (int64_t r = 0; r < n_rows; ++r) {
    const int64_t u = user_lo + uniform_below(rng, user_hi - user_lo);
    const int64_t i = uniform_below(rng, spec.n_items);
    const int64_t tag = uniform_below(rng, spec.n_tags);
    out.user.push_back("u" + std::to_string(u));
    out.item.push_back("i" + std::to_string(i));
    out.session.push_back("d" + std::to_string(u) + "_" +
                          std::to_string(1 + uniform_below(rng, 3)));
    out.primary_tag.push_back("t" + std::to_string(tag));

    const bool tags_absent = uniform01(rng) < 0.02;
    out.tags_missing.push_back(tags_absent ? 1 : 0);
    if (!tags_absent) {
      const int64_t n_tok = 1 + uniform_below(rng, 4);
      const int64_t include_at =
          uniform01(rng) < 0.5 ? uniform_below(rng, n_tok) : -1;
      for (int64_t t = 0; t < n_tok; ++t) {
        const int64_t tok =
            t == include_at ? tag : uniform_below(rng, spec.n_tags);
        out.tag_flat.push_back("t" + std::to_string(tok));
      }
    }
    out.tag_offsets.push_back(static_cast<int64_t>(out.tag_flat.size()));

    const double m = normal01(rng);
    out.f_num1.push_back(m);
    const bool f2_absent = uniform01(rng) < 0.02;
    out.f2_missing.push_back(f2_absent ? 1 : 0);
    out.f_num2.push_back(f2_absent ? 0.0 : normal01(rng));
    out.ts.push_back(kWindowStart + uniform_below(rng, kWindowSpan));

    out.score.push_back(lat.user_score[static_cast<size_t>(u)] +
                        0.6 * lat.item_score[static_cast<size_t>(i)] +
                        0.2 * lat.tag_score[static_cast<size_t>(tag)] +
                        spec.main_signal * m + spec.noise * normal01(rng));
  }
}

std::vector<uint8_t> top_fraction_labels(const std::vector<double>& score,
                                         double fraction) {
  const int64_t n = static_cast<int64_t>(score.size());
  const int64_t n_pos = std::llround(fraction * static_cast<double>(n));
  std::vector<int64_t> order(score.size());
  std::iota(order.begin(), order.end(), int64_t{0});
  std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    if (score[static_cast<size_t>(a)] != score[static_cast<size_t>(b)])
      return score[static_cast<size_t>(a)] > score[static_cast<size_t>(b)];
    return a < b;
  });
  std::vector<uint8_t> labels(score.size(), 0);
  for (int64_t i = 0; i < n_pos && i < n; ++i)
    labels[static_cast<size_t>(order[static_cast<size_t>(i)])] = 1;
  return labels;
}

Table build_main(const std::string& name, MainRows&& rows) {
  const size_t n = rows.user.size();
  Table t;
  t.name = name;
  t.n_rows = n;
  t.add_column(ColumnData::categorical_raw("user", std::move(rows.user), none(n)));
  t.add_column(ColumnData::categorical_raw("item", std::move(rows.item), none(n)));
  t.add_column(
      ColumnData::categorical_raw("session", std::move(rows.session), none(n)));
  t.add_column(ColumnData::categorical_raw("primary_tag",
                                           std::move(rows.primary_tag), none(n)));
  t.add_column(ColumnData::multi_categorical_raw("tags", std::move(rows.tag_flat),
                                                 std::move(rows.tag_offsets),
                                                 std::move(rows.tags_missing)));
  t.add_column(ColumnData::numerical("f_num1", std::move(rows.f_num1), none(n)));
  t.add_column(ColumnData::numerical("f_num2", std::move(rows.f_num2),
                                     std::move(rows.f2_missing)));
  t.add_column(ColumnData::temporal("ts", std::move(rows.ts), none(n)));
  return t;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_train <= 0 || spec.n_test <= 0 || spec.n_train_users <= 0 ||
      spec.n_test_users <= 0 || spec.n_items <= 0 || spec.n_tags <= 0 ||
      spec.events_per_user <= 0)
    raise(ErrorCode::invalid_spec, "all synthetic sizes must be positive");
  if (spec.positive_fraction <= 0.0 || spec.positive_fraction >= 1.0)
    raise(ErrorCode::invalid_spec, "positive_fraction must be in (0,1)");
  std::mt19937_64 rng(spec.seed);
  const int64_t total_users = spec.n_train_users + spec.n_test_users;

  Latents lat;

  // users table, cold-start pool included
  std::vector<std::string> u_id, u_seg;
  std::vector<double> u_f1, u_f2;
  std::vector<double> seg_effect(8);
  for (auto& e : seg_effect) e = 0.3 * normal01(rng);
  for (int64_t u = 0; u < total_users; ++u) {
    const double f1 = normal01(rng);
    const double f2 = normal01(rng);
    const int64_t seg = uniform_below(rng, 8);
    u_id.push_back("u" + std::to_string(u));
    u_f1.push_back(f1);
    u_f2.push_back(f2);
    u_seg.push_back("s" + std::to_string(seg));
    lat.user_score.push_back(0.9 * f1 + 0.6 * f2 +
                             seg_effect[static_cast<size_t>(seg)]);
  }
  Table users;
  users.name = "users";
  users.n_rows = static_cast<size_t>(total_users);
  users.add_column(ColumnData::categorical_raw("user", std::move(u_id),
                                               none(users.n_rows)));
  users.add_column(
      ColumnData::numerical("u_f1", std::move(u_f1), none(users.n_rows)));
  users.add_column(
      ColumnData::numerical("u_f2", std::move(u_f2), none(users.n_rows)));
  users.add_column(ColumnData::categorical_raw("u_seg", std::move(u_seg),
                                               none(users.n_rows)));

  // items table
  std::vector<std::string> i_id, i_cat;
  std::vector<double> i_f1;
  std::vector<double> cat_effect(5);
  for (auto& e : cat_effect) e = 0.3 * normal01(rng);
  for (int64_t i = 0; i < spec.n_items; ++i) {
    const double f1 = normal01(rng);
    const int64_t c = uniform_below(rng, 5);
    i_id.push_back("i" + std::to_string(i));
    i_f1.push_back(f1);
    i_cat.push_back("c" + std::to_string(c));
    lat.item_score.push_back(0.8 * f1 + cat_effect[static_cast<size_t>(c)]);
  }
  Table items;
  items.name = "items";
  items.n_rows = static_cast<size_t>(spec.n_items);
  items.add_column(
      ColumnData::categorical_raw("item", std::move(i_id), none(items.n_rows)));
  items.add_column(
      ColumnData::numerical("i_f1", std::move(i_f1), none(items.n_rows)));
  items.add_column(
      ColumnData::categorical_raw("i_cat", std::move(i_cat), none(items.n_rows)));

  for (int64_t t = 0; t < spec.n_tags; ++t) lat.tag_score.push_back(normal01(rng));

  // events table, several rows per user; the per-user mean of e_val tracks the
  // user latent so an aggregated profile transfers to unseen users
  std::vector<std::string> e_user, e_type;
  std::vector<double> e_val;
  std::vector<int64_t> e_ts;
  for (int64_t u = 0; u < total_users; ++u) {
    for (int64_t k = 0; k < spec.events_per_user; ++k) {
      e_user.push_back("u" + std::to_string(u));
      e_val.push_back(0.8 * lat.user_score[static_cast<size_t>(u)] +
                      0.5 * normal01(rng));
      e_type.push_back("t" + std::to_string(uniform_below(rng, 4)));
      e_ts.push_back(kWindowStart + uniform_below(rng, kWindowSpan));
    }
  }
  Table events;
  events.name = "events";
  events.n_rows = e_user.size();
  events.add_column(
      ColumnData::categorical_raw("user", std::move(e_user), none(events.n_rows)));
  events.add_column(
      ColumnData::numerical("e_val", std::move(e_val), none(events.n_rows)));
  events.add_column(
      ColumnData::categorical_raw("e_type", std::move(e_type), none(events.n_rows)));
  events.add_column(
      ColumnData::temporal("e_ts", std::move(e_ts), none(events.n_rows)));

  MainRows train_rows;
  emit_rows(train_rows, rng, spec, lat, spec.n_train, 0, spec.n_train_users);
  MainRows test_rows;
  emit_rows(test_rows, rng, spec, lat, spec.n_test, spec.n_train_users,
            total_users);

  SyntheticDataset out;
  out.train.labels = top_fraction_labels(train_rows.score, spec.positive_fraction);
  out.test_labels = top_fraction_labels(test_rows.score, spec.positive_fraction);
  out.train.main = build_main("main", std::move(train_rows));
  out.test_main = build_main("main", std::move(test_rows));
  out.train.related.push_back(std::move(users));
  out.train.related.push_back(std::move(items));
  out.train.related.push_back(std::move(events));
  out.train.relations = {
      {"main", "users", "user", "user", RelType::many_to_one},
      {"main", "items", "item", "item", RelType::many_to_one},
      {"main", "events", "user", "user", RelType::many_to_many},
  };
  out.train.time_budget_s = spec.time_budget_s;
  out.train.mem_budget_bytes = spec.mem_budget_mb * 1024 * 1024;

  DatasetInfo info;
  info.time_budget_s = spec.time_budget_s;
  info.mem_budget_bytes = out.train.mem_budget_bytes;
  info.label_column = "label";
  TableInfo main_info{
      "main",
      "main.tsv",
      true,
      {{"user", FeatureKind::categorical},
       {"item", FeatureKind::categorical},
       {"session", FeatureKind::categorical},
       {"primary_tag", FeatureKind::categorical},
       {"tags", FeatureKind::multi_categorical},
       {"f_num1", FeatureKind::numerical},
       {"f_num2", FeatureKind::numerical},
       {"ts", FeatureKind::temporal}}};
  TableInfo users_info{"users",
                       "users.tsv",
                       false,
                       {{"user", FeatureKind::categorical},
                        {"u_f1", FeatureKind::numerical},
                        {"u_f2", FeatureKind::numerical},
                        {"u_seg", FeatureKind::categorical}}};
  TableInfo items_info{"items",
                       "items.tsv",
                       false,
                       {{"item", FeatureKind::categorical},
                        {"i_f1", FeatureKind::numerical},
                        {"i_cat", FeatureKind::categorical}}};
  TableInfo events_info{"events",
                        "events.tsv",
                        false,
                        {{"user", FeatureKind::categorical},
                         {"e_val", FeatureKind::numerical},
                         {"e_type", FeatureKind::categorical},
                         {"e_ts", FeatureKind::temporal}}};
  info.tables = {main_info, users_info, items_info, events_info};
  info.relations = out.train.relations;
  out.info = std::move(info);
  return out;
}

DatasetInfo main_only_info(const DatasetInfo& info) {
  DatasetInfo out;
  out.tables.push_back(info.main_table());
  out.label_column = info.label_column;
  out.time_budget_s = info.time_budget_s;
  out.mem_budget_bytes = info.mem_budget_bytes;
  return out;
}

void write_synthetic(const std::filesystem::path& dir,
                     const SyntheticDataset& data) {
  write_text_file(dir / "info.json", render_info(data.info));
  write_dataset(dir / "train", data.info, data.train);

  DatasetBundle test_bundle;
  test_bundle.main = data.test_main;
  write_dataset(dir / "test", main_only_info(data.info), test_bundle);
  write_labels(dir / "test_labels.txt", data.test_labels);
}

}  // namespace autosmart

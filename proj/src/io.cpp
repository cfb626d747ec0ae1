#include "autosmart/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace autosmart {

namespace {

using Json = nlohmann::ordered_json;

FeatureKind parse_kind(const std::string& text) {
  if (text == "cat") return FeatureKind::categorical;
  if (text == "multi-cat") return FeatureKind::multi_categorical;
  if (text == "num") return FeatureKind::numerical;
  if (text == "time") return FeatureKind::temporal;
  raise(ErrorCode::unknown_feature_kind, text);
}

RelType parse_rel_type(const std::string& text) {
  if (text == "1-1") return RelType::one_to_one;
  if (text == "M-1") return RelType::many_to_one;
  if (text == "1-M") return RelType::one_to_many;
  if (text == "M-M") return RelType::many_to_many;
  raise(ErrorCode::parse_error, "unknown relation type '" + text + "'");
}

void reject_unknown_keys(const Json& object, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& item : object.items())
    if (allowed.count(item.key()) == 0)
      raise(ErrorCode::parse_error,
            "unknown key '" + item.key() + "' in " + where);
}

}  // namespace

const TableInfo& DatasetInfo::main_table() const {
  for (const auto& t : tables)
    if (t.is_main) return t;
  raise(ErrorCode::parse_error, "no table marked main");
}

DatasetInfo parse_info(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    raise(ErrorCode::parse_error,
          "byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) raise(ErrorCode::parse_error, "top level must be an object");
  reject_unknown_keys(doc,
                      {"tables", "relations", "label_column", "time_budget_s",
                       "mem_budget_mb"},
                      "info");

  DatasetInfo info;
  if (!doc.contains("tables") || !doc["tables"].is_array())
    raise(ErrorCode::parse_error, "'tables' array is required");
  std::set<std::string> names;
  int main_count = 0;
  for (const auto& jt : doc["tables"]) {
    reject_unknown_keys(jt, {"name", "path", "main", "columns"}, "table entry");
    TableInfo t;
    t.name = jt.at("name").get<std::string>();
    t.path = jt.at("path").get<std::string>();
    t.is_main = jt.value("main", false);
    main_count += t.is_main;
    if (!names.insert(t.name).second)
      raise(ErrorCode::duplicate_table_name, t.name);
    if (!jt.contains("columns") || !jt["columns"].is_object())
      raise(ErrorCode::parse_error, "table '" + t.name + "' needs a columns map");
    for (const auto& item : jt["columns"].items())
      t.columns.emplace_back(item.key(), parse_kind(item.value().get<std::string>()));
    info.tables.push_back(std::move(t));
  }
  if (main_count != 1)
    raise(ErrorCode::parse_error, "exactly one table must be marked main, got " +
                                      std::to_string(main_count));

  if (doc.contains("relations")) {
    for (const auto& jr : doc["relations"]) {
      reject_unknown_keys(jr, {"left", "right", "left_key", "right_key", "type"},
                          "relation entry");
      RelationSpec rel;
      rel.left_table = jr.at("left").get<std::string>();
      rel.right_table = jr.at("right").get<std::string>();
      rel.left_key = jr.at("left_key").get<std::string>();
      rel.right_key = jr.at("right_key").get<std::string>();
      rel.rel_type = parse_rel_type(jr.at("type").get<std::string>());
      info.relations.push_back(std::move(rel));
    }
  }

  info.label_column = doc.value("label_column", std::string{});
  if (!doc.contains("time_budget_s"))
    raise(ErrorCode::parse_error, "'time_budget_s' is required");
  info.time_budget_s = doc["time_budget_s"].get<double>();
  const double mem_mb = doc.value("mem_budget_mb", 16384.0);
  info.mem_budget_bytes = static_cast<int64_t>(mem_mb * 1024.0 * 1024.0);
  return info;
}

std::string render_info(const DatasetInfo& info) {
  Json doc;
  doc["tables"] = Json::array();
  for (const auto& t : info.tables) {
    Json jt;
    jt["name"] = t.name;
    jt["path"] = t.path;
    if (t.is_main) jt["main"] = true;
    Json cols = Json::object();
    for (const auto& [name, kind] : t.columns) cols[name] = feature_kind_name(kind);
    jt["columns"] = std::move(cols);
    doc["tables"].push_back(std::move(jt));
  }
  doc["relations"] = Json::array();
  for (const auto& rel : info.relations) {
    Json jr;
    jr["left"] = rel.left_table;
    jr["right"] = rel.right_table;
    jr["left_key"] = rel.left_key;
    jr["right_key"] = rel.right_key;
    jr["type"] = rel_type_name(rel.rel_type);
    doc["relations"].push_back(std::move(jr));
  }
  if (!info.label_column.empty()) doc["label_column"] = info.label_column;
  doc["time_budget_s"] = info.time_budget_s;
  doc["mem_budget_mb"] =
      static_cast<double>(info.mem_budget_bytes) / (1024.0 * 1024.0);
  return doc.dump(2) + "\n";
}

namespace {

struct ColumnBuilder {
  FeatureKind kind;
  std::vector<std::string> raw;
  std::vector<std::string> flat;
  std::vector<int64_t> offsets{0};
  std::vector<double> reals;
  std::vector<int64_t> times;
  std::vector<uint8_t> missing;
};

void append_cell(ColumnBuilder& b, std::string_view cell, const std::string& table,
                 const std::string& column, size_t row) {
  const bool empty = cell.empty();
  b.missing.push_back(empty ? 1 : 0);
  switch (b.kind) {
    case FeatureKind::categorical:
      b.raw.emplace_back(empty ? std::string_view{} : cell);
      break;
    case FeatureKind::multi_categorical: {
      if (!empty) {
        size_t start = 0;
        while (start <= cell.size()) {
          size_t comma = cell.find(',', start);
          if (comma == std::string_view::npos) comma = cell.size();
          if (comma > start) b.flat.emplace_back(cell.substr(start, comma - start));
          start = comma + 1;
        }
      }
      b.offsets.push_back(static_cast<int64_t>(b.flat.size()));
      break;
    }
    case FeatureKind::numerical: {
      double value = 0;
      if (!empty) {
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
        if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
          raise(ErrorCode::value_parse_error,
                "table '" + table + "' column '" + column + "' row " +
                    std::to_string(row) + ": bad numerical cell '" +
                    std::string(cell) + "'");
      }
      b.reals.push_back(value);
      break;
    }
    case FeatureKind::temporal: {
      int64_t value = 0;
      if (!empty) {
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
        if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
          raise(ErrorCode::value_parse_error,
                "table '" + table + "' column '" + column + "' row " +
                    std::to_string(row) + ": bad temporal cell '" +
                    std::string(cell) + "'");
      }
      b.times.push_back(value);
      break;
    }
  }
}

std::vector<std::string_view> split_tsv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

Table load_table(const std::filesystem::path& file, const TableInfo& info) {
  const std::string text = read_text_file(file);

  // header -> declared column mapping
  size_t pos = text.find('\n');
  if (pos == std::string::npos)
    raise(ErrorCode::parse_error, "table file '" + file.string() + "' has no header");
  const auto header = split_tsv_line(std::string_view(text).substr(0, pos));
  if (header.size() != info.columns.size())
    raise(ErrorCode::row_arity_error,
          "table '" + info.name + "' header has " + std::to_string(header.size()) +
              " fields, schema declares " + std::to_string(info.columns.size()));
  std::vector<size_t> declared_index(header.size());
  std::vector<bool> used(info.columns.size(), false);
  for (size_t h = 0; h < header.size(); ++h) {
    bool found = false;
    for (size_t c = 0; c < info.columns.size(); ++c) {
      if (info.columns[c].first == header[h]) {
        if (used[c])
          raise(ErrorCode::parse_error, "table '" + info.name +
                                            "' repeats header column '" +
                                            std::string(header[h]) + "'");
        declared_index[h] = c;
        used[c] = true;
        found = true;
        break;
      }
    }
    if (!found)
      raise(ErrorCode::missing_column, "header column '" + std::string(header[h]) +
                                           "' is not declared for table '" +
                                           info.name + "'");
  }

  std::vector<ColumnBuilder> builders(info.columns.size());
  for (size_t c = 0; c < info.columns.size(); ++c)
    builders[c].kind = info.columns[c].second;

  size_t row = 0;
  size_t line_start = pos + 1;
  const std::string_view body(text);
  while (line_start < body.size()) {
    size_t line_end = body.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = body.size();
    const auto line = body.substr(line_start, line_end - line_start);
    if (!(line.empty() && line_end == body.size())) {
      const auto fields = split_tsv_line(line);
      if (fields.size() != header.size())
        raise(ErrorCode::row_arity_error,
              "table '" + info.name + "' row " + std::to_string(row) + " has " +
                  std::to_string(fields.size()) + " fields, expected " +
                  std::to_string(header.size()));
      for (size_t h = 0; h < fields.size(); ++h) {
        const size_t c = declared_index[h];
        append_cell(builders[c], fields[h], info.name, info.columns[c].first, row);
      }
      ++row;
    }
    line_start = line_end + 1;
  }

  Table table;
  table.name = info.name;
  table.n_rows = row;
  for (size_t c = 0; c < info.columns.size(); ++c) {
    auto& b = builders[c];
    const auto& [col_name, kind] = info.columns[c];
    switch (kind) {
      case FeatureKind::categorical:
        table.add_column(ColumnData::categorical_raw(col_name, std::move(b.raw),
                                                     std::move(b.missing)));
        break;
      case FeatureKind::multi_categorical:
        table.add_column(ColumnData::multi_categorical_raw(
            col_name, std::move(b.flat), std::move(b.offsets), std::move(b.missing)));
        break;
      case FeatureKind::numerical:
        table.add_column(ColumnData::numerical(col_name, std::move(b.reals),
                                               std::move(b.missing)));
        break;
      case FeatureKind::temporal:
        table.add_column(ColumnData::temporal(col_name, std::move(b.times),
                                              std::move(b.missing)));
        break;
    }
  }
  return table;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_table(const std::filesystem::path& file, const TableInfo& info,
                 const Table& table) {
  std::string out;
  for (size_t c = 0; c < info.columns.size(); ++c) {
    if (c > 0) out += '\t';
    out += info.columns[c].first;
  }
  out += '\n';
  for (size_t r = 0; r < table.n_rows; ++r) {
    for (size_t c = 0; c < info.columns.size(); ++c) {
      if (c > 0) out += '\t';
      const auto& col = table.at(info.columns[c].first);
      if (col.is_missing(r)) continue;  // empty cell
      switch (col.kind) {
        case FeatureKind::categorical:
          out += col.raw.empty() ? std::to_string(col.codes.at(r)) : col.raw[r];
          break;
        case FeatureKind::multi_categorical:
          for (int64_t p = col.offsets[r]; p < col.offsets[r + 1]; ++p) {
            if (p > col.offsets[r]) out += ',';
            out += col.raw_elems.empty()
                       ? std::to_string(col.elems.at(static_cast<size_t>(p)))
                       : col.raw_elems[static_cast<size_t>(p)];
          }
          break;
        case FeatureKind::numerical:
          out += format_double(col.reals.at(r));
          break;
        case FeatureKind::temporal:
          out += std::to_string(col.times[r]);
          break;
      }
    }
    out += '\n';
  }
  write_text_file(file, out);
}

}  // namespace

DatasetBundle load_dataset(const std::filesystem::path& root,
                           const DatasetInfo& info, bool with_labels) {
  DatasetBundle bundle;
  bundle.time_budget_s = info.time_budget_s;
  bundle.mem_budget_bytes = info.mem_budget_bytes;
  bundle.relations = info.relations;
  for (const auto& t : info.tables) {
    Table table = load_table(root / t.path, t);
    if (t.is_main)
      bundle.main = std::move(table);
    else
      bundle.related.push_back(std::move(table));
  }
  if (with_labels) bundle.labels = load_labels(root / "labels.txt");
  return bundle;
}

void write_dataset(const std::filesystem::path& root, const DatasetInfo& info,
                   const DatasetBundle& bundle) {
  std::filesystem::create_directories(root);
  for (const auto& t : info.tables) {
    const Table* table =
        t.is_main ? &bundle.main : bundle.find_table(t.name);
    if (table == nullptr) raise(ErrorCode::missing_table, t.name);
    write_table(root / t.path, t, *table);
  }
  if (bundle.labels) write_labels(root / "labels.txt", *bundle.labels);
}

std::vector<uint8_t> load_labels(const std::filesystem::path& file) {
  const std::string text = read_text_file(file);
  std::vector<uint8_t> labels;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string_view line(text.data() + start, end - start);
    if (!line.empty()) {
      if (line == "0")
        labels.push_back(0);
      else if (line == "1")
        labels.push_back(1);
      else
        raise(ErrorCode::value_parse_error,
              "label line " + std::to_string(labels.size()) + ": '" +
                  std::string(line) + "'");
    }
    start = end + 1;
  }
  return labels;
}

void write_labels(const std::filesystem::path& file,
                  const std::vector<uint8_t>& labels) {
  std::string out;
  out.reserve(labels.size() * 2);
  for (uint8_t y : labels) {
    out += (y != 0) ? '1' : '0';
    out += '\n';
  }
  write_text_file(file, out);
}

std::vector<double> load_predictions(const std::filesystem::path& file) {
  const std::string text = read_text_file(file);
  std::vector<double> preds;
  size_t start = 0;
  while (start < text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) {
      double value = 0;
      const char* first = text.data() + start;
      const auto res = std::from_chars(first, text.data() + end, value);
      if (res.ec != std::errc{})
        raise(ErrorCode::value_parse_error,
              "prediction line " + std::to_string(preds.size()));
      preds.push_back(value);
    }
    start = end + 1;
  }
  return preds;
}

void write_predictions(const std::filesystem::path& file,
                       const std::vector<double>& probabilities) {
  std::string out;
  out.reserve(probabilities.size() * 10);
  char buf[48];
  for (double p : probabilities) {
    std::snprintf(buf, sizeof(buf), "%.6g\n", p);
    out += buf;
  }
  write_text_file(file, out);
}

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) raise(ErrorCode::io_error, "cannot open '" + file.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) raise(ErrorCode::io_error, "read failed on '" + file.string() + "'");
  return buffer.str();
}

void write_text_file(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) raise(ErrorCode::io_error, "cannot create '" + file.string() + "'");
  out << text;
  if (!out) raise(ErrorCode::io_error, "write failed on '" + file.string() + "'");
}

}  // namespace autosmart

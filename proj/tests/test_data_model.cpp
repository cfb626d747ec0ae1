#include <doctest.h>

#include "autosmart/bundle.hpp"
#include "autosmart/column.hpp"

using namespace autosmart;

namespace {

DatasetBundle two_table_bundle() {
  DatasetBundle b;
  b.main.name = "main";
  b.main.n_rows = 4;
  std::vector<uint8_t> mask(4, 0);
  b.main.add_column(ColumnData::categorical_raw(
      "user", {"u1", "u2", "u1", "u3"}, mask));
  b.main.add_column(ColumnData::numerical("x", {1.0, 2.0, 3.0, 4.0}, mask));

  Table users;
  users.name = "users";
  users.n_rows = 3;
  std::vector<uint8_t> umask(3, 0);
  users.add_column(ColumnData::categorical_raw("user", {"u1", "u2", "u3"}, umask));
  users.add_column(ColumnData::numerical("age", {30.0, 40.0, 50.0}, umask));
  b.related.push_back(std::move(users));

  b.relations.push_back({"main", "users", "user", "user", RelType::many_to_one});
  b.labels = std::vector<uint8_t>{0, 1, 0, 1};
  b.time_budget_s = 300;
  b.mem_budget_bytes = 1 << 30;
  return b;
}

}  // namespace

TEST_CASE("code vector narrows to the smallest width that fits") {
  CodeVector v(std::vector<int64_t>{0, 1, 255});
  CHECK(v.width_bytes() == 8);
  v.narrow();
  CHECK(v.width_bytes() == 1);
  CHECK(v.at(2) == 255);

  CodeVector w(std::vector<int64_t>{0, 256});
  w.narrow();
  CHECK(w.width_bytes() == 2);
  CHECK(w.at(1) == 256);

  CodeVector u(std::vector<int64_t>{70000});
  u.narrow();
  CHECK(u.width_bytes() == 4);
  CHECK(u.at(0) == 70000);
}

TEST_CASE("real vector narrows to float and still reads back") {
  RealVector v(std::vector<double>{1.5, -2.25});
  CHECK(v.width_bytes() == 8);
  v.narrow();
  CHECK(v.width_bytes() == 4);
  CHECK(v.at(0) == 1.5);
  CHECK(v.at(1) == -2.25);
}

TEST_CASE("gather_rows permutes every payload kind in lockstep") {
  Table t;
  t.name = "t";
  t.n_rows = 3;
  std::vector<uint8_t> mask{0, 1, 0};
  t.add_column(ColumnData::categorical_raw("c", {"a", "", "b"}, mask));
  t.add_column(ColumnData::numerical("x", {1.0, 2.0, 3.0}, mask));
  t.add_column(ColumnData::temporal("ts", {10, 20, 30}, mask));
  t.add_column(ColumnData::multi_categorical_raw(
      "m", {"p", "q", "r"}, {0, 2, 2, 3}, {0, 0, 0}));

  gather_rows(t, {2, 0, 1});

  CHECK(t.at("c").raw == std::vector<std::string>{"b", "a", ""});
  CHECK(t.at("c").missing == std::vector<uint8_t>{0, 0, 1});
  CHECK(t.at("x").reals.at(0) == 3.0);
  CHECK(t.at("ts").times == std::vector<int64_t>{30, 10, 20});
  CHECK(t.at("m").offsets == std::vector<int64_t>{0, 1, 3, 3});
  CHECK(t.at("m").raw_elems == std::vector<std::string>{"r", "p", "q"});
}

TEST_CASE("well-formed bundle validates and returns itself") {
  const DatasetBundle b = two_table_bundle();
  const DatasetBundle& out = validate_bundle(b);
  CHECK(&out == &b);
  // idempotent
  validate_bundle(validate_bundle(b));
}

TEST_CASE("relation to an absent table is rejected") {
  DatasetBundle b = two_table_bundle();
  b.relations[0].right_table = "users2";
  try {
    validate_bundle(b);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_table);
    CHECK(std::string(e.what()).find("users2") != std::string::npos);
  }
}

TEST_CASE("relation to an absent key column is rejected") {
  DatasetBundle b = two_table_bundle();
  b.relations[0].left_key = "ghost";
  try {
    validate_bundle(b);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_column);
  }
}

TEST_CASE("non-categorical key column is rejected") {
  DatasetBundle b = two_table_bundle();
  b.relations[0].left_key = "x";
  try {
    validate_bundle(b);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kind_mismatch);
  }
}

TEST_CASE("label length and range are enforced") {
  DatasetBundle b = two_table_bundle();
  b.labels = std::vector<uint8_t>{0, 1, 0};
  try {
    validate_bundle(b);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::label_length_mismatch);
  }
  b.labels = std::vector<uint8_t>{0, 1, 0, 2};
  CHECK_THROWS_AS(validate_bundle(b), Error);
}

TEST_CASE("ragged column payloads are rejected") {
  DatasetBundle b = two_table_bundle();
  b.main.at("x").reals.assign({1.0, 2.0});
  b.main.at("x").rows = 2;
  try {
    validate_bundle(b);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::column_length_mismatch);
  }
}

TEST_CASE("duplicate related table names are rejected") {
  DatasetBundle b = two_table_bundle();
  b.related.push_back(b.related[0]);
  try {
    validate_bundle(b);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::duplicate_table_name);
  }
}

#pragma once

#include <cstdint>
#include <filesystem>

#include "autosmart/io.hpp"

namespace autosmart {

/// Knobs for the bundled benchmark generator. The defaults produce a dataset
/// where the related tables carry most of the signal: test rows come from a
/// user pool that never appears in the training split of the main table, so a
/// model restricted to main-table features cannot profile those users while a
/// merged model can.
struct SyntheticSpec {
  int64_t n_train = 40000;
  int64_t n_test = 10000;
  int64_t n_train_users = 400;
  int64_t n_test_users = 100;  // cold-start pool, absent from train main rows
  int64_t n_items = 60;
  int64_t n_tags = 30;
  int64_t events_per_user = 8;
  double positive_fraction = 0.25;
  double noise = 0.6;
  double main_signal = 0.25;  // weight of the main-table numeric in the score
  double time_budget_s = 300.0;
  int64_t mem_budget_mb = 4096;
  uint64_t seed = 1;
};

struct SyntheticDataset {
  DatasetInfo info;  // table paths are relative to a split directory
  DatasetBundle train;
  Table test_main;
  std::vector<uint8_t> test_labels;
};

SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

/// Writes dir/info.json, dir/train/{tables,labels.txt}, dir/test/main.tsv and
/// dir/test_labels.txt. The same info.json serves both splits; only the main
/// table entry applies to test.
void write_synthetic(const std::filesystem::path& dir,
                     const SyntheticDataset& data);

/// info restricted to the main table, for loading a test split.
DatasetInfo main_only_info(const DatasetInfo& info);

}  // namespace autosmart

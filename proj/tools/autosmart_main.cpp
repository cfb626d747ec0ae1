// Command-line front end: full train-and-predict runs, prediction scoring,
// and synthetic benchmark generation.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "autosmart/metrics.hpp"
#include "autosmart/pipeline.hpp"
#include "autosmart/synthetic.hpp"

namespace fs = std::filesystem;
using autosmart::Error;

namespace {

int64_t mem_budget_bytes(const autosmart::DatasetInfo& info) {
  if (const char* env = std::getenv("AUTOSMART_MEM_MB"); env != nullptr) {
    const long long mb = std::atoll(env);
    if (mb > 0) return static_cast<int64_t>(mb) << 20;
  }
  if (info.mem_budget_bytes > 0) return info.mem_budget_bytes;
  return int64_t{4096} << 20;
}

int cmd_train(const std::string& config, const std::string& train_dir,
              const std::string& test_dir, const std::string& out,
              double budget_s, uint64_t seed, int workers) {
  const autosmart::DatasetInfo info =
      autosmart::parse_info(autosmart::read_text_file(config));
  autosmart::DatasetBundle train =
      autosmart::load_dataset(train_dir, info, /*with_labels=*/true);
  autosmart::DatasetBundle test = autosmart::load_dataset(
      test_dir, autosmart::main_only_info(info), /*with_labels=*/false);

  autosmart::PipelineOptions opts;
  opts.time_budget_s = budget_s > 0   ? budget_s
                       : info.time_budget_s > 0 ? info.time_budget_s
                                                : 300.0;
  opts.mem_budget_bytes = mem_budget_bytes(info);
  opts.seed = seed;
  opts.n_workers = workers;

  autosmart::PipelineResult res = autosmart::train_predict(
      std::move(train), std::move(test.main), opts);
  for (const auto& w : res.warnings)
    std::fprintf(stderr, "warning: %s\n", w.c_str());

  autosmart::write_predictions(out, res.predictions);
  const std::string phases_path = out + ".phases.tsv";
  const std::string selection_path = out + ".selection.tsv";
  autosmart::write_text_file(phases_path, res.phase_log_tsv);
  autosmart::write_text_file(selection_path,
                             autosmart::selection_report_tsv(res.selection));

  nlohmann::json manifest{
      {"config", config},
      {"train_dir", train_dir},
      {"test_dir", test_dir},
      {"output", out},
      {"seed", seed},
      {"time_budget_s", opts.time_budget_s},
      {"mem_budget_mb", opts.mem_budget_bytes >> 20},
      {"workers", workers},
      {"n_models", res.n_models},
      {"n_features", res.n_features},
      {"n_train_rows_used", res.n_train_rows_used},
      {"learning_rate", res.learning_rate},
      {"planned_rounds", res.planned_rounds},
      {"fallback", res.fallback},
      {"elapsed_s", res.elapsed_s},
      {"phase_log", phases_path},
      {"selection_log", selection_path},
      {"warnings", res.warnings},
  };
  autosmart::write_text_file(out + ".manifest.json", manifest.dump(2) + "\n");
  return 0;
}

int cmd_score(const std::string& pred_path, const std::string& labels_path,
              double auc_base, double auc_max, bool with_score) {
  const std::vector<double> preds = autosmart::load_predictions(pred_path);
  const std::vector<uint8_t> labels = autosmart::load_labels(labels_path);
  if (preds.size() != labels.size())
    autosmart::raise(autosmart::ErrorCode::label_length_mismatch,
                     std::to_string(preds.size()) + " predictions vs " +
                         std::to_string(labels.size()) + " labels");
  const double a = autosmart::auc(labels, preds);
  std::printf("auc %.6f\n", a);
  if (with_score)
    std::printf("score %.4f\n",
                autosmart::competition_score(a, auc_base, auc_max));
  return 0;
}

autosmart::SyntheticSpec parse_gen_spec(const std::string& path) {
  autosmart::SyntheticSpec spec;
  const nlohmann::json doc =
      nlohmann::json::parse(autosmart::read_text_file(path));
  for (const auto& [key, value] : doc.items()) {
    if (key == "n_train") spec.n_train = value.get<int64_t>();
    else if (key == "n_test") spec.n_test = value.get<int64_t>();
    else if (key == "n_train_users") spec.n_train_users = value.get<int64_t>();
    else if (key == "n_test_users") spec.n_test_users = value.get<int64_t>();
    else if (key == "n_items") spec.n_items = value.get<int64_t>();
    else if (key == "n_tags") spec.n_tags = value.get<int64_t>();
    else if (key == "events_per_user")
      spec.events_per_user = value.get<int64_t>();
    else if (key == "positive_fraction")
      spec.positive_fraction = value.get<double>();
    else if (key == "noise") spec.noise = value.get<double>();
    else if (key == "main_signal") spec.main_signal = value.get<double>();
    else if (key == "time_budget_s") spec.time_budget_s = value.get<double>();
    else if (key == "mem_budget_mb") spec.mem_budget_mb = value.get<int64_t>();
    else if (key == "seed") spec.seed = value.get<uint64_t>();
    else
      autosmart::raise(autosmart::ErrorCode::invalid_spec,
                       "unknown generator key '" + key + "'");
  }
  return spec;
}

int cmd_gen_data(const std::string& spec_path, uint64_t seed,
                 const std::string& out_dir) {
  autosmart::SyntheticSpec spec;
  if (!spec_path.empty()) spec = parse_gen_spec(spec_path);
  if (seed != 0) spec.seed = seed;
  const autosmart::SyntheticDataset data = autosmart::generate_synthetic(spec);
  autosmart::write_synthetic(out_dir, data);
  std::printf("wrote %s (train %lld rows, test %lld rows)\n", out_dir.c_str(),
              static_cast<long long>(data.train.main.n_rows),
              static_cast<long long>(data.test_main.n_rows));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"autosmart: automatic machine learning on temporal relational tables"};
  app.require_subcommand(1);

  std::string config, train_dir, test_dir, out;
  double budget_s = 0;
  uint64_t seed = 1;
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  CLI::App* train = app.add_subcommand("train", "train and write predictions");
  train->add_option("--config", config, "info.json path")->required();
  train->add_option("--train", train_dir, "training dataset directory")
      ->required();
  train->add_option("--test", test_dir, "test dataset directory")->required();
  train->add_option("--out", out, "prediction output file")->required();
  train->add_option("--budget-s", budget_s, "time budget override, seconds");
  train->add_option("--seed", seed, "random seed");
  train->add_option("--workers", workers, "worker threads");

  std::string pred_path, labels_path;
  double auc_base = 0, auc_max = 0;
  CLI::App* score = app.add_subcommand("score", "evaluate predictions");
  score->add_option("--pred", pred_path, "prediction file")->required();
  score->add_option("--labels", labels_path, "label file")->required();
  CLI::Option* base_opt =
      score->add_option("--auc-base", auc_base, "baseline AUC");
  CLI::Option* max_opt = score->add_option("--auc-max", auc_max, "best AUC");
  base_opt->needs(max_opt);
  max_opt->needs(base_opt);

  std::string spec_path, gen_out;
  uint64_t gen_seed = 0;
  CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic dataset");
  gen->add_option("--spec", spec_path, "generator spec json (defaults apply)");
  gen->add_option("--seed", gen_seed, "random seed override");
  gen->add_option("--out", gen_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (train->parsed())
      return cmd_train(config, train_dir, test_dir, out, budget_s, seed,
                       workers);
    if (score->parsed())
      return cmd_score(pred_path, labels_path, auc_base, auc_max,
                       static_cast<bool>(*base_opt));
    return cmd_gen_data(spec_path, gen_seed, gen_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

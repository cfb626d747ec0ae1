#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "autosmart/errors.hpp"

namespace autosmart {

class ThreadPool;

/// Column-major all-numeric matrix. NaN encodes a missing cell.
struct NumericFrame {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  size_t n_rows = 0;

  void add(std::string name, std::vector<double> values) {
    names.push_back(std::move(name));
    n_rows = values.size();
    columns.push_back(std::move(values));
  }
};

struct GbdtParams {
  int n_rounds = 100;
  double learning_rate = 0.1;
  /// optional per-round schedule; overrides learning_rate when non-empty
  std::vector<double> learning_rates;
  int max_leaves = 31;
  double min_child_weight = 1.0;  // hessian sum per child
  int n_bins = 255;
  double lambda_l2 = 1.0;
  double min_split_gain = 0.0;
  double row_fraction = 1.0;     // sampled once per model, not per round
  double feature_fraction = 1.0;
  uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // index into the model's feature list; -1 for leaves
  int bin = 0;
  double threshold = 0;      // v <= threshold goes left
  bool missing_left = false;
  int left = -1;
  int right = -1;
  double value = 0;  // leaf value with the round's learning rate applied
  double gain = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root
};

struct GbdtModel {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> bin_edges;  // ascending, last = +inf
  double base_score = 0;  // log-odds of the weighted positive rate
  bool degenerate = false;  // single-class training data, constant output
  std::vector<Tree> trees;
  std::map<std::string, double> gains;
};

struct GradHess {
  double g = 0;
  double h = 0;
};

/// Gradient and hessian of the weighted logistic loss at a raw score. The
/// hessian is floored at a tiny positive value.
GradHess logistic_gh(double score, double label, double weight);

/// Weighted logistic loss of a raw score against a 0/1 label.
double logistic_loss(double score, double label, double weight);

/// Upper bin edges for one feature: one bin per distinct value when they fit
/// into n_bins (edges at midpoints), quantile edges otherwise. NaNs ignored.
std::vector<double> compute_bin_edges(std::vector<double> values, int n_bins);

/// First index i with v <= edges[i]. NaN maps to edges.size(), the reserved
/// missing bin.
int bin_index(const std::vector<double>& edges, double v);

/// Trains a boosted ensemble of leaf-wise histogram trees on logistic loss.
/// `stop` is polled between rounds; when it returns true the model is
/// returned with the rounds completed so far. Single-class labels yield a
/// flagged constant model instead of an error. Weights are normalized to
/// unit mean before training, so uniformly rescaling w leaves the model
/// unchanged.
GbdtModel fit(const NumericFrame& X, std::span<const uint8_t> y,
              std::span<const double> w, const GbdtParams& params,
              ThreadPool* pool = nullptr,
              const std::function<bool()>& stop = {});

/// Probability per row. X must carry exactly the training columns (any
/// order); otherwise ColumnMismatch.
std::vector<double> predict(const GbdtModel& model, const NumericFrame& X);

/// Total split gain per feature; never-split features report 0.
const std::map<std::string, double>& feature_gains(const GbdtModel& model);

/// Exact round-trip text serialization (hex floats).
std::string save_model(const GbdtModel& model);
GbdtModel load_model(const std::string& text);

}  // namespace autosmart

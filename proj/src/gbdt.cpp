#include "autosmart/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "autosmart/parallel.hpp"
#include "autosmart/rng.hpp"

namespace autosmart {

namespace {

constexpr double kMinHessian = 1e-16;
constexpr double kProbClamp = 1e-6;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double clamped_logit(double p) {
  p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return std::log(p / (1.0 - p));
}

double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

struct Hist {
  double g = 0;
  double h = 0;
};

struct SplitInfo {
  double gain = -std::numeric_limits<double>::infinity();
  int slot = -1;
  int bin = -1;
  bool missing_left = false;
  double gl = 0, hl = 0, gr = 0, hr = 0;

  bool valid() const { return slot >= 0; }
};

struct LeafState {
  int node = -1;
  uint32_t begin = 0;
  uint32_t end = 0;
  double g_sum = 0;
  double h_sum = 0;
  bool active = true;
  std::vector<Hist> hist;
  SplitInfo best;
};

struct FitCtx {
  const std::vector<std::vector<uint8_t>>& binned;  // per slot, over sample
  const std::vector<int64_t>& feats;                // global id per slot
  const std::vector<size_t>& offset;                // slot -> flat hist base
  const std::vector<int>& value_bins;               // per slot
  size_t total_bins = 0;
  const std::vector<std::vector<double>>& edges;  // per global feature
  const GbdtParams& p;
  ThreadPool* pool = nullptr;

  std::vector<double> g, h, scores;
  std::vector<uint32_t> order;
};

void build_hist(FitCtx& c, const LeafState& leaf, std::vector<Hist>& out) {
  out.assign(c.total_bins, Hist{});
  const size_t n_slots = c.binned.size();
  parallel_for(c.pool, n_slots, [&](size_t slot) {
    Hist* bins = out.data() + c.offset[slot];
    const uint8_t* codes = c.binned[slot].data();
    for (uint32_t i = leaf.begin; i < leaf.end; ++i) {
      const uint32_t row = c.order[i];
      Hist& b = bins[codes[row]];
      b.g += c.g[row];
      b.h += c.h[row];
    }
  });
}

SplitInfo best_split_for_slot(const FitCtx& c, const LeafState& leaf,
                              size_t slot) {
  SplitInfo out;
  const int nb = c.value_bins[slot];
  if (nb <= 1) return out;
  const Hist* bins = leaf.hist.data() + c.offset[slot];
  const double g_miss = bins[nb].g;
  const double h_miss = bins[nb].h;
  const double lambda = c.p.lambda_l2;
  const double parent =
      leaf.g_sum * leaf.g_sum / (leaf.h_sum + lambda);
  const double mcw = c.p.min_child_weight;

  double gv = 0, hv = 0;  // cumulative over value bins only
  for (int b = 0; b + 1 < nb; ++b) {
    gv += bins[b].g;
    hv += bins[b].h;
    // missing routed right, then left; strict > keeps right on ties
    for (int dir = 0; dir < 2; ++dir) {
      const double gl = dir == 0 ? gv : gv + g_miss;
      const double hl = dir == 0 ? hv : hv + h_miss;
      const double gr = leaf.g_sum - gl;
      const double hr = leaf.h_sum - hl;
      if (hl < mcw || hr < mcw) continue;
      const double gain = 0.5 * (gl * gl / (hl + lambda) +
                                 gr * gr / (hr + lambda) - parent);
      if (gain > out.gain) {
        out.gain = gain;
        out.slot = static_cast<int>(slot);
        out.bin = b;
        out.missing_left = dir == 1;
        out.gl = gl;
        out.hl = hl;
        out.gr = gr;
        out.hr = hr;
      }
    }
  }
  return out;
}

void find_best_split(FitCtx& c, LeafState& leaf) {
  const size_t n_slots = c.binned.size();
  std::vector<SplitInfo> per_slot(n_slots);
  parallel_for(c.pool, n_slots, [&](size_t slot) {
    per_slot[slot] = best_split_for_slot(c, leaf, slot);
  });
  leaf.best = SplitInfo{};
  for (const SplitInfo& s : per_slot) {
    // ascending slot order with strict > keeps the lowest feature and bin
    if (s.valid() && s.gain > leaf.best.gain) leaf.best = s;
  }
}

Tree grow_tree(FitCtx& c, double lr) {
  const size_t n = c.order.size();
  std::iota(c.order.begin(), c.order.end(), 0u);

  Tree tree;
  tree.nodes.reserve(2 * static_cast<size_t>(c.p.max_leaves));
  tree.nodes.emplace_back();

  std::vector<LeafState> leaves;
  leaves.reserve(2 * static_cast<size_t>(c.p.max_leaves));
  {
    LeafState root;
    root.node = 0;
    root.begin = 0;
    root.end = static_cast<uint32_t>(n);
    for (size_t i = 0; i < n; ++i) {
      root.g_sum += c.g[i];
      root.h_sum += c.h[i];
    }
    build_hist(c, root, root.hist);
    leaves.push_back(std::move(root));
    find_best_split(c, leaves.back());
  }

  int n_leaves = 1;
  while (n_leaves < c.p.max_leaves) {
    int pick = -1;
    for (size_t i = 0; i < leaves.size(); ++i) {
      const LeafState& lf = leaves[i];
      if (!lf.active || !lf.best.valid()) continue;
      if (!(lf.best.gain > c.p.min_split_gain)) continue;
      if (pick < 0 || lf.best.gain > leaves[pick].best.gain) {
        pick = static_cast<int>(i);  // ties keep the earliest node
      }
    }
    if (pick < 0) break;

    LeafState& parent = leaves[pick];
    const SplitInfo sp = parent.best;
    const int64_t feat = c.feats[sp.slot];
    const int li = static_cast<int>(tree.nodes.size());
    const int ri = li + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    TreeNode& nd = tree.nodes[parent.node];
    nd.feature = static_cast<int>(feat);
    nd.bin = sp.bin;
    nd.threshold = c.edges[feat][sp.bin];
    nd.missing_left = sp.missing_left;
    nd.left = li;
    nd.right = ri;
    nd.gain = sp.gain;

    const std::vector<uint8_t>& codes = c.binned[sp.slot];
    const int nb = c.value_bins[sp.slot];
    auto goes_left = [&](uint32_t row) {
      const int b = codes[row];
      return b == nb ? sp.missing_left : b <= sp.bin;
    };
    auto mid_it = std::stable_partition(c.order.begin() + parent.begin,
                                        c.order.begin() + parent.end,
                                        goes_left);
    const uint32_t mid =
        static_cast<uint32_t>(mid_it - c.order.begin());

    LeafState left, right;
    left.node = li;
    left.begin = parent.begin;
    left.end = mid;
    left.g_sum = sp.gl;
    left.h_sum = sp.hl;
    right.node = ri;
    right.begin = mid;
    right.end = parent.end;
    right.g_sum = sp.gr;
    right.h_sum = sp.hr;

    // both child histograms are accumulated directly in row order; deriving
    // one by subtraction would leave rounding residue that can flip
    // tie-breaks against an exact scan of the same data
    build_hist(c, left, left.hist);
    build_hist(c, right, right.hist);
    parent.active = false;
    parent.hist = {};

    leaves.push_back(std::move(left));
    find_best_split(c, leaves.back());
    leaves.push_back(std::move(right));
    find_best_split(c, leaves.back());
    ++n_leaves;
  }

  for (const LeafState& lf : leaves) {
    if (!lf.active) continue;
    const double value =
        lr * (-lf.g_sum / (lf.h_sum + c.p.lambda_l2));
    tree.nodes[lf.node].value = value;
    for (uint32_t i = lf.begin; i < lf.end; ++i) {
      c.scores[c.order[i]] += value;
    }
  }
  return tree;
}

void append_hex(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  out += buf;
}

}  // namespace

GradHess logistic_gh(double score, double label, double weight) {
  const double p = sigmoid(score);
  return {weight * (p - label),
          std::max(weight * p * (1.0 - p), kMinHessian)};
}

double logistic_loss(double score, double label, double weight) {
  return weight * (softplus(score) - label * score);
}

std::vector<double> compute_bin_edges(std::vector<double> values, int n_bins) {
  n_bins = std::clamp(n_bins, 2, 255);
  values.erase(std::remove_if(values.begin(), values.end(),
                              [](double v) { return std::isnan(v); }),
               values.end());
  const double inf = std::numeric_limits<double>::infinity();
  if (values.empty()) return {inf};
  std::sort(values.begin(), values.end());

  std::vector<double> distinct;
  for (double v : values) {
    if (distinct.empty() || v > distinct.back()) distinct.push_back(v);
  }

  std::vector<double> edges;
  if (distinct.size() <= static_cast<size_t>(n_bins)) {
    // one bin per distinct value, boundaries at midpoints
    for (size_t i = 0; i + 1 < distinct.size(); ++i) {
      const double a = distinct[i];
      const double b = distinct[i + 1];
      double mid = a + (b - a) / 2;
      if (!(mid > a && mid < b)) mid = a;
      edges.push_back(mid);
    }
    edges.push_back(inf);
    return edges;
  }

  const size_t n = values.size();
  for (int k = 1; k < n_bins; ++k) {
    const double q = values[static_cast<size_t>(k) * n / n_bins];
    if (edges.empty() || q > edges.back()) edges.push_back(q);
  }
  if (!edges.empty() && edges.back() >= values.back()) edges.pop_back();
  edges.push_back(inf);
  return edges;
}

int bin_index(const std::vector<double>& edges, double v) {
  if (std::isnan(v)) return static_cast<int>(edges.size());
  return static_cast<int>(
      std::lower_bound(edges.begin(), edges.end(), v) - edges.begin());
}

GbdtModel fit(const NumericFrame& X, std::span<const uint8_t> y,
              std::span<const double> w, const GbdtParams& params,
              ThreadPool* pool, const std::function<bool()>& stop) {
  const size_t n = X.n_rows;
  const size_t n_features = X.columns.size();
  if (y.size() != n || w.size() != n) {
    raise(ErrorCode::label_length_mismatch,
          "gbdt labels/weights do not match row count");
  }
  GbdtParams p = params;
  p.n_bins = std::clamp(p.n_bins, 2, 255);
  p.max_leaves = std::max(p.max_leaves, 2);

  GbdtModel model;
  model.feature_names = X.names;
  for (const std::string& name : X.names) model.gains[name] = 0.0;

  double pos_w = 0, neg_w = 0;
  for (size_t i = 0; i < n; ++i) {
    (y[i] != 0 ? pos_w : neg_w) += w[i];
  }
  const double total_w = pos_w + neg_w;
  model.base_score =
      clamped_logit(total_w > 0 ? pos_w / total_w : 0.5);
  if (n == 0 || pos_w <= 0 || neg_w <= 0) {
    model.degenerate = true;
    model.bin_edges.assign(n_features, {});
    return model;
  }
  if (n_features == 0 || p.n_rounds <= 0) {
    model.bin_edges.assign(n_features, {});
    return model;
  }

  // normalize weights to unit mean so uniformly rescaling w cannot move any
  // split across the min_child_weight boundary or shift the regularizer
  const double w_mean = total_w / static_cast<double>(n);
  std::vector<double> wn(n);
  for (size_t i = 0; i < n; ++i) wn[i] = w[i] / w_mean;

  model.bin_edges.resize(n_features);
  parallel_for(pool, n_features, [&](size_t f) {
    model.bin_edges[f] = compute_bin_edges(X.columns[f], p.n_bins);
  });

  std::mt19937_64 rng(p.seed);
  const int64_t n_sample = std::clamp<int64_t>(
      std::llround(p.row_fraction * static_cast<double>(n)), 1,
      static_cast<int64_t>(n));
  std::vector<int64_t> rows;
  if (n_sample < static_cast<int64_t>(n)) {
    rows = sample_without_replacement(rng, static_cast<int64_t>(n), n_sample);
  } else {
    rows.resize(n);
    std::iota(rows.begin(), rows.end(), 0);
  }
  const int64_t n_slots = std::clamp<int64_t>(
      std::llround(p.feature_fraction * static_cast<double>(n_features)), 1,
      static_cast<int64_t>(n_features));
  std::vector<int64_t> feats;
  if (n_slots < static_cast<int64_t>(n_features)) {
    feats = sample_without_replacement(rng, static_cast<int64_t>(n_features),
                                       n_slots);
  } else {
    feats.resize(n_features);
    std::iota(feats.begin(), feats.end(), 0);
  }

  std::vector<std::vector<uint8_t>> binned(feats.size());
  std::vector<int> value_bins(feats.size());
  std::vector<size_t> offset(feats.size());
  size_t total_bins = 0;
  for (size_t s = 0; s < feats.size(); ++s) {
    value_bins[s] = static_cast<int>(model.bin_edges[feats[s]].size());
    offset[s] = total_bins;
    total_bins += static_cast<size_t>(value_bins[s]) + 1;
  }
  parallel_for(pool, feats.size(), [&](size_t s) {
    const std::vector<double>& col = X.columns[feats[s]];
    const std::vector<double>& edges = model.bin_edges[feats[s]];
    std::vector<uint8_t>& out = binned[s];
    out.resize(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      out[i] = static_cast<uint8_t>(bin_index(edges, col[rows[i]]));
    }
  });

  FitCtx ctx{binned, feats, offset, value_bins, total_bins,
             model.bin_edges, p, pool};
  ctx.scores.assign(rows.size(), model.base_score);
  ctx.g.resize(rows.size());
  ctx.h.resize(rows.size());
  ctx.order.resize(rows.size());

  for (int round = 0; round < p.n_rounds; ++round) {
    if (stop && stop()) break;
    const double lr =
        p.learning_rates.empty()
            ? p.learning_rate
            : p.learning_rates[std::min<size_t>(round,
                                                p.learning_rates.size() - 1)];
    for (size_t i = 0; i < rows.size(); ++i) {
      const GradHess gh =
          logistic_gh(ctx.scores[i], y[rows[i]] != 0 ? 1.0 : 0.0,
                      wn[rows[i]]);
      ctx.g[i] = gh.g;
      ctx.h[i] = gh.h;
    }
    model.trees.push_back(grow_tree(ctx, lr));
  }

  for (const Tree& tree : model.trees) {
    for (const TreeNode& nd : tree.nodes) {
      if (nd.feature >= 0) {
        model.gains[model.feature_names[nd.feature]] += nd.gain;
      }
    }
  }
  return model;
}

std::vector<double> predict(const GbdtModel& model, const NumericFrame& X) {
  if (X.columns.size() != model.feature_names.size()) {
    raise(ErrorCode::column_mismatch,
          "expected " + std::to_string(model.feature_names.size()) +
              " features, got " + std::to_string(X.columns.size()));
  }
  std::unordered_map<std::string, size_t> index;
  for (size_t i = 0; i < X.names.size(); ++i) index.emplace(X.names[i], i);
  std::vector<const std::vector<double>*> cols(model.feature_names.size());
  for (size_t f = 0; f < model.feature_names.size(); ++f) {
    auto it = index.find(model.feature_names[f]);
    if (it == index.end()) {
      raise(ErrorCode::column_mismatch,
            "missing feature " + model.feature_names[f]);
    }
    cols[f] = &X.columns[it->second];
  }

  std::vector<double> out(X.n_rows);
  for (size_t r = 0; r < X.n_rows; ++r) {
    double score = model.base_score;
    for (const Tree& tree : model.trees) {
      int node = 0;
      while (tree.nodes[node].feature >= 0) {
        const TreeNode& nd = tree.nodes[node];
        const double v = (*cols[nd.feature])[r];
        if (std::isnan(v)) {
          node = nd.missing_left ? nd.left : nd.right;
        } else {
          node = v <= nd.threshold ? nd.left : nd.right;
        }
      }
      score += tree.nodes[node].value;
    }
    out[r] = sigmoid(score);
  }
  return out;
}

const std::map<std::string, double>& feature_gains(const GbdtModel& model) {
  return model.gains;
}

std::string save_model(const GbdtModel& model) {
  std::string out = "autosmart-gbdt-v1\n";
  out += "base ";
  append_hex(out, model.base_score);
  out += "\ndegenerate ";
  out += model.degenerate ? '1' : '0';
  out += "\nfeatures " + std::to_string(model.feature_names.size()) + "\n";
  for (size_t f = 0; f < model.feature_names.size(); ++f) {
    const std::string& name = model.feature_names[f];
    out += name;
    out += ' ';
    auto it = model.gains.find(name);
    append_hex(out, it == model.gains.end() ? 0.0 : it->second);
    const std::vector<double>& edges =
        f < model.bin_edges.size() ? model.bin_edges[f]
                                   : std::vector<double>{};
    out += ' ' + std::to_string(edges.size());
    for (double e : edges) {
      out += ' ';
      append_hex(out, e);
    }
    out += '\n';
  }
  out += "trees " + std::to_string(model.trees.size()) + "\n";
  for (const Tree& tree : model.trees) {
    out += "tree " + std::to_string(tree.nodes.size()) + "\n";
    for (const TreeNode& nd : tree.nodes) {
      out += std::to_string(nd.feature) + ' ' + std::to_string(nd.bin) + ' ';
      append_hex(out, nd.threshold);
      out += ' ';
      out += nd.missing_left ? '1' : '0';
      out += ' ' + std::to_string(nd.left) + ' ' + std::to_string(nd.right) +
             ' ';
      append_hex(out, nd.value);
      out += ' ';
      append_hex(out, nd.gain);
      out += '\n';
    }
  }
  out += "end\n";
  return out;
}

namespace {

std::string next_token(std::istringstream& in) {
  std::string tok;
  if (!(in >> tok)) {
    raise(ErrorCode::parse_error, "truncated gbdt model");
  }
  return tok;
}

double parse_double(std::istringstream& in) {
  const std::string tok = next_token(in);
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) {
    raise(ErrorCode::parse_error, "bad number in gbdt model: " + tok);
  }
  return v;
}

int64_t parse_int(std::istringstream& in, int64_t lo, int64_t hi) {
  const std::string tok = next_token(in);
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(tok.c_str(), &end, 10);
  if (errno != 0 || end != tok.c_str() + tok.size() || v < lo || v > hi) {
    raise(ErrorCode::parse_error, "bad integer in gbdt model: " + tok);
  }
  return v;
}

void expect(std::istringstream& in, const std::string& tag) {
  const std::string tok = next_token(in);
  if (tok != tag) {
    raise(ErrorCode::parse_error,
          "expected '" + tag + "' in gbdt model, got '" + tok + "'");
  }
}

}  // namespace

GbdtModel load_model(const std::string& text) {
  std::istringstream in(text);
  expect(in, "autosmart-gbdt-v1");
  GbdtModel model;
  expect(in, "base");
  model.base_score = parse_double(in);
  expect(in, "degenerate");
  model.degenerate = parse_int(in, 0, 1) != 0;
  expect(in, "features");
  const int64_t n_features = parse_int(in, 0, 1 << 24);
  model.feature_names.resize(n_features);
  model.bin_edges.resize(n_features);
  for (int64_t f = 0; f < n_features; ++f) {
    model.feature_names[f] = next_token(in);
    model.gains[model.feature_names[f]] = parse_double(in);
    const int64_t n_edges = parse_int(in, 0, 256);
    model.bin_edges[f].resize(n_edges);
    for (int64_t e = 0; e < n_edges; ++e) {
      model.bin_edges[f][e] = parse_double(in);
    }
  }
  expect(in, "trees");
  const int64_t n_trees = parse_int(in, 0, 1 << 24);
  model.trees.resize(n_trees);
  for (int64_t t = 0; t < n_trees; ++t) {
    expect(in, "tree");
    const int64_t n_nodes = parse_int(in, 1, 1 << 24);
    Tree& tree = model.trees[t];
    tree.nodes.resize(n_nodes);
    for (int64_t k = 0; k < n_nodes; ++k) {
      TreeNode& nd = tree.nodes[k];
      nd.feature = static_cast<int>(parse_int(in, -1, n_features - 1));
      nd.bin = static_cast<int>(parse_int(in, 0, 256));
      nd.threshold = parse_double(in);
      nd.missing_left = parse_int(in, 0, 1) != 0;
      nd.left = static_cast<int>(parse_int(in, -1, n_nodes - 1));
      nd.right = static_cast<int>(parse_int(in, -1, n_nodes - 1));
      if (nd.feature >= 0 && (nd.left < 0 || nd.right < 0)) {
        raise(ErrorCode::parse_error, "split node without children");
      }
      nd.value = parse_double(in);
      nd.gain = parse_double(in);
    }
  }
  expect(in, "end");
  return model;
}

}  // namespace autosmart

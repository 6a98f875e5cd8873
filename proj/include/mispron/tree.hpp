#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "mispron/dataset.hpp"
#include "mispron/error.hpp"
#include "mispron/rng.hpp"

namespace mispron {

struct TreeParams {
  int max_depth = -1;  // -1 = unlimited
  int min_leaf = 1;    // minimum rows per child
};

// How candidate thresholds are generated at a node.
enum class ThresholdRule {
  midpoints,       // every midpoint between consecutive distinct sorted values
  random_uniform,  // one uniform draw in the feature's observed range
  range_midpoint,  // (min+max)/2 only
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int klass = -1;
  std::vector<double> class_fraction;  // weight share per class at the leaf

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int n_classes = 0;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

  int leaf_for(std::span<const double> x) const {
    int at = 0;
    while (!nodes[static_cast<std::size_t>(at)].is_leaf()) {
      const auto& node = nodes[static_cast<std::size_t>(at)];
      at = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return at;
  }

  int predict(std::span<const double> x) const {
    return nodes[static_cast<std::size_t>(leaf_for(x))].klass;
  }

  const std::vector<double>& leaf_distribution(std::span<const double> x) const {
    return nodes[static_cast<std::size_t>(leaf_for(x))].class_fraction;
  }
};

namespace detail {

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double child_impurity = 0.0;  // weighted Gini of the two children
};

// Weighted Gini impurity of the candidate split, computed by a left-to-right
// sweep over the rows sorted by the candidate feature.
class TreeBuilder {
public:
  TreeBuilder(const LabeledDataset& ds, std::span<const double> weights, const TreeParams& params,
              int max_features, ThresholdRule rule, Rng* rng)
      : ds_(ds), weights_(weights), params_(params), max_features_(max_features), rule_(rule),
        rng_(rng) {}

  DecisionTree build(const std::vector<int>& rows) {
    tree_.n_classes = ds_.n_classes();
    grow(rows, 0);
    return std::move(tree_);
  }

private:
  int grow(const std::vector<int>& rows, int depth) {
    const int node_id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    fill_leaf(node_id, rows);

    if (is_pure(rows)) return node_id;
    if (params_.max_depth >= 0 && depth >= params_.max_depth) return node_id;
    if (static_cast<int>(rows.size()) < 2 * params_.min_leaf) return node_id;

    const SplitChoice split = best_split(rows);
    if (!split.found) return node_id;

    std::vector<int> left_rows, right_rows;
    for (int r : rows) {
      (ds_.row(r)[static_cast<std::size_t>(split.feature)] <= split.threshold ? left_rows
                                                                              : right_rows)
          .push_back(r);
    }
    if (static_cast<int>(left_rows.size()) < params_.min_leaf ||
        static_cast<int>(right_rows.size()) < params_.min_leaf) {
      return node_id;
    }

    tree_.nodes[static_cast<std::size_t>(node_id)].feature = split.feature;
    tree_.nodes[static_cast<std::size_t>(node_id)].threshold = split.threshold;
    const int left = grow(left_rows, depth + 1);
    tree_.nodes[static_cast<std::size_t>(node_id)].left = left;
    const int right = grow(right_rows, depth + 1);
    tree_.nodes[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }

  void fill_leaf(int node_id, const std::vector<int>& rows) {
    auto& node = tree_.nodes[static_cast<std::size_t>(node_id)];
    const int c = ds_.n_classes();
    node.class_fraction.assign(static_cast<std::size_t>(c), 0.0);
    double total = 0.0;
    for (int r : rows) {
      node.class_fraction[static_cast<std::size_t>(ds_.labels[static_cast<std::size_t>(r)])] +=
          weight(r);
      total += weight(r);
    }
    if (total > 0.0) {
      for (double& f : node.class_fraction) f /= total;
    }
    node.klass = 0;
    for (int k = 1; k < c; ++k) {  // majority by weight, ties to the lower id
      if (node.class_fraction[static_cast<std::size_t>(k)] >
          node.class_fraction[static_cast<std::size_t>(node.klass)]) {
        node.klass = k;
      }
    }
  }

  bool is_pure(const std::vector<int>& rows) const {
    const int first = ds_.labels[static_cast<std::size_t>(rows.front())];
    return std::all_of(rows.begin(), rows.end(), [&](int r) {
      return ds_.labels[static_cast<std::size_t>(r)] == first;
    });
  }

  double weight(int row) const {
    return weights_.empty() ? 1.0 : weights_[static_cast<std::size_t>(row)];
  }

  std::vector<int> candidate_features() {
    const int d = ds_.d;
    std::vector<int> all(static_cast<std::size_t>(d));
    std::iota(all.begin(), all.end(), 0);
    if (max_features_ <= 0 || max_features_ >= d || rng_ == nullptr) return all;
    // Draw a subset, then restore ascending order so tie-breaks stay in
    // feature-index order.
    for (int i = 0; i < max_features_; ++i) {
      const int j = i + static_cast<int>(rng_->below(static_cast<std::uint64_t>(d - i)));
      std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
    }
    all.resize(static_cast<std::size_t>(max_features_));
    std::sort(all.begin(), all.end());
    return all;
  }

  SplitChoice best_split(const std::vector<int>& rows) {
    SplitChoice best;
    const int c = ds_.n_classes();
    std::vector<std::pair<double, int>> sorted;  // (value, row)
    std::vector<double> left_w(static_cast<std::size_t>(c));
    std::vector<double> right_w(static_cast<std::size_t>(c));

    for (int feature : candidate_features()) {
      sorted.clear();
      for (int r : rows) sorted.emplace_back(ds_.row(r)[static_cast<std::size_t>(feature)], r);
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front().first == sorted.back().first) continue;  // constant feature

      if (rule_ != ThresholdRule::midpoints) {
        const double lo = sorted.front().first;
        const double hi = sorted.back().first;
        const double threshold = rule_ == ThresholdRule::random_uniform
                                     ? rng_->uniform(lo, hi)
                                     : lo + (hi - lo) / 2.0;
        consider(best, rows, feature, threshold, left_w, right_w);
        continue;
      }

      // Sweep: class weight mass moves from right to left between distinct values.
      std::fill(left_w.begin(), left_w.end(), 0.0);
      std::fill(right_w.begin(), right_w.end(), 0.0);
      for (int r : rows) right_w[static_cast<std::size_t>(ds_.labels[static_cast<std::size_t>(r)])] += weight(r);
      double left_total = 0.0;
      double right_total = std::accumulate(right_w.begin(), right_w.end(), 0.0);

      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const int r = sorted[i].second;
        const double w = weight(r);
        left_w[static_cast<std::size_t>(ds_.labels[static_cast<std::size_t>(r)])] += w;
        right_w[static_cast<std::size_t>(ds_.labels[static_cast<std::size_t>(r)])] -= w;
        left_total += w;
        right_total -= w;
        if (sorted[i].first == sorted[i + 1].first) continue;
        const double threshold = sorted[i].first + (sorted[i + 1].first - sorted[i].first) / 2.0;
        const double impurity =
            weighted_gini(left_w, left_total) + weighted_gini(right_w, right_total);
        accept_if_better(best, feature, threshold, impurity);
      }
    }
    return best;
  }

  // Evaluates one explicit threshold (random / midpoint-of-range rules).
  void consider(SplitChoice& best, const std::vector<int>& rows, int feature, double threshold,
                std::vector<double>& left_w, std::vector<double>& right_w) {
    std::fill(left_w.begin(), left_w.end(), 0.0);
    std::fill(right_w.begin(), right_w.end(), 0.0);
    double left_total = 0.0, right_total = 0.0;
    bool any_left = false, any_right = false;
    for (int r : rows) {
      const double w = weight(r);
      const int label = ds_.labels[static_cast<std::size_t>(r)];
      if (ds_.row(r)[static_cast<std::size_t>(feature)] <= threshold) {
        left_w[static_cast<std::size_t>(label)] += w;
        left_total += w;
        any_left = true;
      } else {
        right_w[static_cast<std::size_t>(label)] += w;
        right_total += w;
        any_right = true;
      }
    }
    if (!any_left || !any_right) return;
    accept_if_better(best, feature, threshold,
                     weighted_gini(left_w, left_total) + weighted_gini(right_w, right_total));
  }

  void accept_if_better(SplitChoice& best, int feature, double threshold, double impurity) {
    // Lower impurity wins; exact ties go to the lower feature index, then the
    // lower threshold. Candidates arrive in that order, so strict < suffices.
    if (!best.found || impurity < best.child_impurity) {
      best.found = true;
      best.feature = feature;
      best.threshold = threshold;
      best.child_impurity = impurity;
    }
  }

  // total * Gini = total - sum(w_c^2)/total; summed over children this orders
  // splits identically to the weighted-average Gini.
  static double weighted_gini(const std::vector<double>& class_w, double total) {
    if (total <= 0.0) return 0.0;
    double sum_sq = 0.0;
    for (double w : class_w) sum_sq += w * w;
    return total - sum_sq / total;
  }

  const LabeledDataset& ds_;
  std::span<const double> weights_;
  TreeParams params_;
  int max_features_;
  ThresholdRule rule_;
  Rng* rng_;
  DecisionTree tree_;
};

}  // namespace detail

// CART with weighted Gini impurity. Splits are midpoints between consecutive
// distinct values; zero-gain splits are taken as long as the node is impure
// and a valid split exists, so e.g. XOR layouts still resolve.
inline DecisionTree train_tree(const LabeledDataset& ds, const std::vector<int>& rows,
                               const TreeParams& params = {},
                               std::span<const double> weights = {}, int max_features = -1,
                               ThresholdRule rule = ThresholdRule::midpoints, Rng* rng = nullptr) {
  if (rows.empty()) raise(ErrorKind::data, "invalid_dataset", "cannot grow a tree from no rows");
  detail::TreeBuilder builder(ds, weights, params, max_features, rule, rng);
  return builder.build(rows);
}

inline std::vector<int> all_rows(const LabeledDataset& ds) {
  std::vector<int> rows(static_cast<std::size_t>(ds.n));
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

// n draws with replacement; shared by bagging and the random forest.
inline std::vector<int> bootstrap_rows(int n, Rng& rng) {
  std::vector<int> rows(static_cast<std::size_t>(n));
  for (auto& r : rows) r = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
  return rows;
}

}  // namespace mispron

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "mispron/learners.hpp"
#include "mispron/rng.hpp"

using namespace mispron;

namespace {

LabeledDataset make_blobs(int per_class, int n_classes, int d, double separation,
                          std::uint64_t seed) {
  Rng rng(seed);
  LabeledDataset ds;
  ds.d = d;
  for (int c = 0; c < n_classes; ++c) ds.class_names.push_back("blob" + std::to_string(c));
  std::vector<double> row(static_cast<std::size_t>(d));
  for (int c = 0; c < n_classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      for (int j = 0; j < d; ++j) {
        row[static_cast<std::size_t>(j)] = separation * c + rng.normal();
      }
      ds.push_row(row, c, "g" + std::to_string(c) + "_" + std::to_string(i));
    }
  }
  return ds;
}

LabeledDataset dataset_from(const std::vector<std::vector<double>>& rows,
                            const std::vector<int>& labels, int n_classes) {
  LabeledDataset ds;
  ds.d = static_cast<int>(rows.front().size());
  for (int c = 0; c < n_classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ds.push_row(rows[i], labels[i], "g" + std::to_string(i));
  }
  return ds;
}

}  // namespace

// ---------------------------------------------------------------------------
// Linear SVM
// ---------------------------------------------------------------------------

TEST_CASE("svm separates wide blobs perfectly") {
  const LabeledDataset ds = make_blobs(50, 2, 2, 10.0, 1);
  const TrainedLearner svm = train_linear_svm(ds);
  CHECK(training_accuracy(svm, ds) == 1.0);
}

TEST_CASE("svm rejects single-class data") {
  LabeledDataset ds;
  ds.d = 2;
  ds.class_names = {"only"};
  ds.push_row(std::vector<double>{0.0, 1.0}, 0, "g0");
  ds.push_row(std::vector<double>{1.0, 0.0}, 0, "g1");
  CHECK_THROWS_WITH_AS(train_linear_svm(ds), doctest::Contains("invalid_dataset"), Error);
}

TEST_CASE("svm decision value vanishes on the learned hyperplane") {
  const LabeledDataset ds = make_blobs(40, 2, 3, 8.0, 3);
  const TrainedLearner learner = train_linear_svm(ds);
  const auto& svm = std::get<LinearSvmModel>(learner.model);

  // construct x_std = -b * w / |w|^2 in standardized space, map back to raw
  const double* w = svm.weights.data();  // class 0
  const double b = w[svm.d];
  double norm_sq = 0.0;
  for (int j = 0; j < svm.d; ++j) norm_sq += w[j] * w[j];
  REQUIRE(norm_sq > 0.0);
  std::vector<double> raw(static_cast<std::size_t>(svm.d));
  for (int j = 0; j < svm.d; ++j) {
    const double x_std = -b * w[j] / norm_sq;
    REQUIRE(svm.standardizer.scale[static_cast<std::size_t>(j)] > 0.0);
    raw[static_cast<std::size_t>(j)] =
        x_std / svm.standardizer.scale[static_cast<std::size_t>(j)] +
        svm.standardizer.mean[static_cast<std::size_t>(j)];
  }
  CHECK(std::abs(svm.decision_value(0, raw)) < 1e-4);
}

TEST_CASE("svm training is deterministic under a fixed seed") {
  const LabeledDataset ds = make_blobs(30, 3, 4, 3.0, 9);
  SvmParams params;
  params.seed = 17;
  const TrainedLearner a = train_linear_svm(ds, params);
  const TrainedLearner b = train_linear_svm(ds, params);
  CHECK(std::get<LinearSvmModel>(a.model).weights == std::get<LinearSvmModel>(b.model).weights);
}

TEST_CASE("svm and knn predictions are invariant to feature translation/scaling") {
  const LabeledDataset ds = make_blobs(40, 3, 3, 4.0, 21);
  LabeledDataset moved = ds;
  for (std::size_t i = 0; i < moved.features.size(); ++i) {
    moved.features[i] = moved.features[i] * 2.0 + 1.0;  // exact in binary FP
  }
  const TrainedLearner svm_a = train_linear_svm(ds);
  const TrainedLearner svm_b = train_linear_svm(moved);
  const TrainedLearner knn_a = train_knn(ds);
  const TrainedLearner knn_b = train_knn(moved);

  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(3), x_moved(3);
    for (int j = 0; j < 3; ++j) {
      x[static_cast<std::size_t>(j)] = rng.uniform(-2.0, 10.0);
      x_moved[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)] * 2.0 + 1.0;
    }
    CHECK(predict(svm_a, x) == predict(svm_b, x_moved));
    CHECK(predict(knn_a, x) == predict(knn_b, x_moved));
  }
}

// ---------------------------------------------------------------------------
// k-NN
// ---------------------------------------------------------------------------

TEST_CASE("knn: a query on a training point follows its co-labeled neighbors") {
  const LabeledDataset ds = dataset_from({{0.0}, {0.1}, {5.0}}, {1, 1, 0}, 2);
  const TrainedLearner knn = train_knn(ds, KnnParams{.k = 3});
  CHECK(predict(knn, std::vector<double>{0.0}) == 1);
  CHECK(predict_scores(knn, std::vector<double>{0.0})[1] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("knn: 2-2 vote split goes to the class of the nearest tied member") {
  // distances from query 0: 1 < 2 < 3 < 4, labels 0,0,1,1
  const LabeledDataset ds = dataset_from({{1.0}, {2.0}, {3.0}, {4.0}}, {0, 0, 1, 1}, 2);
  const TrainedLearner knn = train_knn(ds, KnnParams{.k = 4});
  CHECK(predict(knn, std::vector<double>{0.0}) == 0);
  // mirrored query: nearest tied member is class 1
  CHECK(predict(knn, std::vector<double>{5.0}) == 1);
}

TEST_CASE("knn matches a brute-force oracle on random instances") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    Rng rng(seed);
    const int n = 200, d = 5, c = 4;
    LabeledDataset ds;
    ds.d = d;
    for (int k = 0; k < c; ++k) ds.class_names.push_back("c" + std::to_string(k));
    std::vector<double> row(static_cast<std::size_t>(d));
    for (int i = 0; i < n; ++i) {
      for (double& v : row) v = rng.uniform(-1.0, 1.0);
      ds.push_row(row, static_cast<int>(rng.below(c)), "g" + std::to_string(i));
    }
    const KnnParams params{.k = 3};
    const TrainedLearner knn = train_knn(ds, params);
    const auto& model = std::get<KnnModel>(knn.model);

    for (int q = 0; q < 100; ++q) {
      std::vector<double> query(static_cast<std::size_t>(d));
      for (double& v : query) v = rng.uniform(-1.2, 1.2);

      // oracle: exhaustive O(n) scan over standardized rows with the
      // documented tie rules
      const std::vector<double> sq = model.standardizer.apply(query);
      std::vector<std::pair<double, int>> all;
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) {
          const double diff = sq[static_cast<std::size_t>(j)] -
                              model.train[static_cast<std::size_t>(i) * d + j];
          acc += diff * diff;
        }
        all.emplace_back(acc, i);
      }
      std::sort(all.begin(), all.end());
      std::map<int, int> votes;
      for (int r = 0; r < params.k; ++r) {
        votes[ds.labels[static_cast<std::size_t>(all[static_cast<std::size_t>(r)].second)]]++;
      }
      int top = 0;
      for (const auto& [label, count] : votes) top = std::max(top, count);
      int expected = -1;
      for (int r = 0; r < params.k && expected < 0; ++r) {
        const int label = ds.labels[static_cast<std::size_t>(all[static_cast<std::size_t>(r)].second)];
        if (votes[label] == top) expected = label;
      }
      CHECK(predict(knn, query) == expected);
    }
  }
}

// ---------------------------------------------------------------------------
// Decision tree
// ---------------------------------------------------------------------------

TEST_CASE("pure data yields a single-leaf tree") {
  LabeledDataset ds = dataset_from({{1.0, 2.0}, {3.0, 4.0}, {5.0, 0.0}}, {1, 1, 1}, 2);
  const TrainedLearner learner = train_decision_tree(ds);
  const auto& tree = std::get<DecisionTree>(learner.model);
  CHECK(tree.nodes.size() == 1);
  CHECK(tree.nodes[0].is_leaf());
  CHECK(tree.predict(std::vector<double>{9.0, 9.0}) == 1);
}

TEST_CASE("XOR resolves to a depth-2 tree with perfect training accuracy") {
  const LabeledDataset ds =
      dataset_from({{0.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}, {1.0, 0.0}}, {0, 0, 1, 1}, 2);
  const TrainedLearner learner = train_decision_tree(ds);
  const auto& tree = std::get<DecisionTree>(learner.model);
  CHECK(training_accuracy(learner, ds) == 1.0);
  // hand enumeration: all root candidates tie at zero gain, so the split is
  // feature 0 at 0.5; both children then split feature 1 at 0.5
  REQUIRE(!tree.nodes[0].is_leaf());
  CHECK(tree.nodes[0].feature == 0);
  CHECK(tree.nodes[0].threshold == doctest::Approx(0.5));
  CHECK(tree.nodes.size() == 7);
}

TEST_CASE("unconstrained trees fit conflict-free data perfectly") {
  for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
    Rng rng(seed);
    const int n = 40, d = 3;
    LabeledDataset ds;
    ds.d = d;
    ds.class_names = {"a", "b", "c"};
    std::vector<double> row(static_cast<std::size_t>(d));
    for (int i = 0; i < n; ++i) {
      for (double& v : row) v = rng.uniform(0.0, 1.0);  // duplicates have measure zero
      ds.push_row(row, static_cast<int>(rng.below(3)), "g" + std::to_string(i));
    }
    const TrainedLearner learner = train_decision_tree(ds);
    CHECK(training_accuracy(learner, ds) == 1.0);
  }
}

namespace {

// Exhaustive reference: every (feature, midpoint) split scored by summed
// child weighted Gini, first-best kept (feature asc, threshold asc).
struct OracleSplit {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

OracleSplit oracle_best_split(const LabeledDataset& ds, const std::vector<int>& rows, int c) {
  OracleSplit best;
  for (int f = 0; f < ds.d; ++f) {
    std::vector<double> values;
    for (int r : rows) values.push_back(ds.row(r)[static_cast<std::size_t>(f)]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t v = 0; v + 1 < values.size(); ++v) {
      const double threshold = values[v] + (values[v + 1] - values[v]) / 2.0;
      std::vector<double> lw(static_cast<std::size_t>(c), 0.0), rw(static_cast<std::size_t>(c), 0.0);
      double lt = 0.0, rt = 0.0;
      for (int r : rows) {
        const int label = ds.labels[static_cast<std::size_t>(r)];
        if (ds.row(r)[static_cast<std::size_t>(f)] <= threshold) {
          lw[static_cast<std::size_t>(label)] += 1.0;
          lt += 1.0;
        } else {
          rw[static_cast<std::size_t>(label)] += 1.0;
          rt += 1.0;
        }
      }
      auto gini = [](const std::vector<double>& w, double t) {
        if (t <= 0.0) return 0.0;
        double sq = 0.0;
        for (double v2 : w) sq += v2 * v2;
        return t - sq / t;
      };
      const double impurity = gini(lw, lt) + gini(rw, rt);
      if (!best.found || impurity < best.impurity) {
        best = {true, f, threshold, impurity};
      }
    }
  }
  return best;
}

void check_tree_against_oracle(const DecisionTree& tree, const LabeledDataset& ds,
                               const std::vector<int>& rows, int node_id) {
  const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_id)];
  if (node.is_leaf()) return;
  const OracleSplit expected = oracle_best_split(ds, rows, ds.n_classes());
  REQUIRE(expected.found);
  CHECK(node.feature == expected.feature);
  CHECK(node.threshold == doctest::Approx(expected.threshold).epsilon(1e-12));
  std::vector<int> left, right;
  for (int r : rows) {
    (ds.row(r)[static_cast<std::size_t>(node.feature)] <= node.threshold ? left : right).push_back(r);
  }
  check_tree_against_oracle(tree, ds, left, node.left);
  check_tree_against_oracle(tree, ds, right, node.right);
}

}  // namespace

TEST_CASE("tree splits match exhaustive enumeration on small datasets") {
  for (std::uint64_t seed : {21ull, 22ull, 23ull, 24ull, 25ull}) {
    Rng rng(seed);
    const int n = 5 + static_cast<int>(rng.below(26));  // up to 30
    const int d = 1 + static_cast<int>(rng.below(4));
    LabeledDataset ds;
    ds.d = d;
    ds.class_names = {"a", "b", "c"};
    std::vector<double> row(static_cast<std::size_t>(d));
    for (int i = 0; i < n; ++i) {
      for (double& v : row) v = std::round(rng.uniform(0.0, 8.0));  // force value ties
      ds.push_row(row, static_cast<int>(rng.below(3)), "g" + std::to_string(i));
    }
    const TrainedLearner learner = train_decision_tree(ds);
    const auto& tree = std::get<DecisionTree>(learner.model);
    check_tree_against_oracle(tree, ds, all_rows(ds), 0);
  }
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes
// ---------------------------------------------------------------------------

TEST_CASE("gnb symmetric case ties at 0.5 and picks the lower class id") {
  const LabeledDataset ds = dataset_from({{-6.0}, {-4.0}, {4.0}, {6.0}}, {0, 0, 1, 1}, 2);
  const TrainedLearner gnb = train_gaussian_nb(ds);
  const std::vector<double> scores = predict_scores(gnb, std::vector<double>{0.0});
  CHECK(std::abs(scores[0] - 0.5) < 1e-12);
  CHECK(std::abs(scores[1] - 0.5) < 1e-12);
  CHECK(predict(gnb, std::vector<double>{0.0}) == 0);
}

TEST_CASE("gnb: query at a class mean wins") {
  const LabeledDataset ds =
      dataset_from({{0.0, 0.0}, {0.2, 0.0}, {5.0, 5.0}, {5.2, 5.0}}, {0, 0, 1, 1}, 2);
  const TrainedLearner gnb = train_gaussian_nb(ds);
  CHECK(predict(gnb, std::vector<double>{0.1, 0.0}) == 0);
  CHECK(predict(gnb, std::vector<double>{5.1, 5.0}) == 1);
}

TEST_CASE("gnb posterior equals hand-evaluated Gaussian densities") {
  // class 0: {1, 3} -> mean 2, var 1; class 1: {8} -> var floored
  const LabeledDataset ds = dataset_from({{1.0}, {3.0}, {8.0}}, {0, 0, 1}, 2);
  const TrainedLearner learner = train_gaussian_nb(ds);
  const auto& gnb = std::get<GnbModel>(learner.model);

  const double x = 2.5;
  const double pooled_var = [&] {
    const double mean = (1.0 + 3.0 + 8.0) / 3.0;
    double v = 0.0;
    for (double s : {1.0, 3.0, 8.0}) v += (s - mean) * (s - mean);
    return v / 3.0;
  }();
  const double floor = 1e-9 * pooled_var;
  auto density = [](double q, double mean, double var) {
    return std::exp(-(q - mean) * (q - mean) / (2.0 * var)) / std::sqrt(2.0 * kPi * var);
  };
  const double joint0 = (2.0 / 3.0) * density(x, 2.0, 1.0);
  const double joint1 = (1.0 / 3.0) * density(x, 8.0, floor);
  const double expected0 = joint0 / (joint0 + joint1);

  const std::vector<double> scores = predict_scores(learner, std::vector<double>{x});
  CHECK(std::abs(scores[0] - expected0) < 1e-12);
  CHECK(gnb.variance[1] == doctest::Approx(floor));
}

// ---------------------------------------------------------------------------
// Random forest / extra trees
// ---------------------------------------------------------------------------

TEST_CASE("forest separates blobs on held-out points") {
  const LabeledDataset train = make_blobs(40, 3, 4, 8.0, 31);
  const LabeledDataset test = make_blobs(10, 3, 4, 8.0, 32);
  ForestParams params;
  params.n_trees = 30;
  params.seed = 7;
  const TrainedLearner forest = train_random_forest(train, params);
  CHECK(training_accuracy(forest, test) == 1.0);
}

TEST_CASE("degenerate forest equals the plain decision tree") {
  const LabeledDataset ds = make_blobs(25, 2, 3, 2.0, 41);
  ForestParams params;
  params.n_trees = 1;
  params.max_features = ds.d;
  params.bootstrap = false;
  const TrainedLearner forest = train_random_forest(ds, params);
  const TrainedLearner tree = train_decision_tree(ds);
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> x(static_cast<std::size_t>(ds.d));
    for (double& v : x) v = rng.uniform(-3.0, 6.0);
    CHECK(predict(forest, x) == predict(tree, x));
  }
  CHECK(std::get<ForestModel>(forest.model).trees[0] == std::get<DecisionTree>(tree.model));
}

TEST_CASE("same seed gives structurally identical forests") {
  const LabeledDataset ds = make_blobs(20, 3, 5, 3.0, 51);
  ForestParams params;
  params.n_trees = 12;
  params.seed = 99;
  const TrainedLearner a = train_random_forest(ds, params);
  const TrainedLearner b = train_random_forest(ds, params);
  CHECK(std::get<ForestModel>(a.model) == std::get<ForestModel>(b.model));
}

TEST_CASE("forest vote fractions reflect tree counts") {
  const LabeledDataset ds = make_blobs(30, 2, 3, 6.0, 61);
  ForestParams params;
  params.n_trees = 100;
  params.seed = 3;
  const TrainedLearner forest = train_random_forest(ds, params);
  const auto& model = std::get<ForestModel>(forest.model);
  std::vector<double> x(3, 3.0);  // between the blobs
  int votes_for_1 = 0;
  for (const auto& tree : model.trees) {
    if (tree.predict(x) == 1) ++votes_for_1;
  }
  const std::vector<double> scores = predict_scores(forest, x);
  CHECK(scores[1] == doctest::Approx(votes_for_1 / 100.0));
}

TEST_CASE("extra trees: separable data, determinism, midpoint degenerate mode") {
  const LabeledDataset train = make_blobs(40, 3, 4, 8.0, 71);
  const LabeledDataset test = make_blobs(10, 3, 4, 8.0, 72);
  ExtraTreesParams params;
  params.n_trees = 30;
  params.seed = 5;
  const TrainedLearner a = train_extra_trees(train, params);
  CHECK(training_accuracy(a, test) == 1.0);

  const TrainedLearner b = train_extra_trees(train, params);
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.uniform(-2.0, 18.0);
    CHECK(predict(a, x) == predict(b, x));
  }

  // forced midpoints with all features: on this 4-point instance the split
  // must be feature 0 at (0+1)/2, then feature 1 likewise
  const LabeledDataset tiny =
      dataset_from({{0.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}, {1.0, 0.0}}, {0, 0, 1, 1}, 2);
  ExtraTreesParams midpoint;
  midpoint.n_trees = 1;
  midpoint.max_features = 2;
  midpoint.midpoint_thresholds = true;
  const TrainedLearner deterministic = train_extra_trees(tiny, midpoint);
  const auto& tree = std::get<ForestModel>(deterministic.model).trees[0];
  REQUIRE(!tree.nodes[0].is_leaf());
  CHECK(tree.nodes[0].feature == 0);
  CHECK(tree.nodes[0].threshold == doctest::Approx(0.5));
  CHECK(training_accuracy(deterministic, tiny) == 1.0);
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

TEST_CASE("logreg gradient matches central finite differences") {
  Rng rng(13);
  const int n = 12, d = 3, c = 3;
  LabeledDataset ds;
  ds.d = d;
  ds.class_names = {"a", "b", "c"};
  std::vector<double> row(static_cast<std::size_t>(d));
  for (int i = 0; i < n; ++i) {
    for (double& v : row) v = rng.uniform(-1.0, 1.0);
    ds.push_row(row, static_cast<int>(rng.below(c)), "g" + std::to_string(i));
  }

  std::vector<double> w(static_cast<std::size_t>(c) * d), b(static_cast<std::size_t>(c));
  for (double& v : w) v = rng.uniform(-0.5, 0.5);
  for (double& v : b) v = rng.uniform(-0.5, 0.5);
  const double l2 = 0.7;

  std::vector<double> gw, gb;
  logreg_gradient(ds, w, b, l2, gw, gb);

  const double h = 1e-6;
  for (std::size_t j = 0; j < w.size(); ++j) {
    auto wp = w, wm = w;
    wp[j] += h;
    wm[j] -= h;
    const double fd =
        (logreg_objective(ds, wp, b, l2) - logreg_objective(ds, wm, b, l2)) / (2.0 * h);
    CHECK(gw[j] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    auto bp = b, bm = b;
    bp[j] += h;
    bm[j] -= h;
    const double fd =
        (logreg_objective(ds, w, bp, l2) - logreg_objective(ds, w, bm, l2)) / (2.0 * h);
    CHECK(gb[j] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("logreg finds the midpoint boundary of a symmetric 1-d problem") {
  LabeledDataset ds;
  ds.d = 1;
  ds.class_names = {"lo", "hi"};
  for (int i = 0; i < 20; ++i) {
    const double offset = 0.1 * i;
    ds.push_row(std::vector<double>{1.0 - offset}, 0, "a" + std::to_string(i));
    ds.push_row(std::vector<double>{3.0 + offset}, 1, "b" + std::to_string(i));
  }
  const TrainedLearner learner = train_logistic_regression(ds);
  // boundary where the two class scores cross
  double lo = 1.0, hi = 3.0;
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const std::vector<double> s = predict_scores(learner, std::vector<double>{mid});
    (s[1] > s[0] ? hi : lo) = mid;
  }
  CHECK(0.5 * (lo + hi) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("logreg reaches full training accuracy on separable blobs") {
  const LabeledDataset ds = make_blobs(40, 3, 2, 10.0, 81);
  const TrainedLearner learner = train_logistic_regression(ds);
  CHECK(training_accuracy(learner, ds) == 1.0);
  CHECK(std::get<LogRegModel>(learner.model).converged);
}

// ---------------------------------------------------------------------------
// Shared prediction surface
// ---------------------------------------------------------------------------

TEST_CASE("scores sum to one and argmax agrees with predict") {
  const LabeledDataset ds = make_blobs(25, 3, 4, 3.0, 91);
  std::vector<TrainedLearner> learners;
  learners.push_back(train_linear_svm(ds));
  learners.push_back(train_knn(ds));
  learners.push_back(train_decision_tree(ds));
  learners.push_back(train_gaussian_nb(ds));
  learners.push_back(train_random_forest(ds, ForestParams{.n_trees = 20}));
  learners.push_back(train_logistic_regression(ds));
  learners.push_back(train_extra_trees(ds, ExtraTreesParams{.n_trees = 20}));

  Rng rng(15);
  for (const auto& learner : learners) {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> x(4);
      for (double& v : x) v = rng.uniform(-2.0, 10.0);
      const std::vector<double> scores = predict_scores(learner, x);
      REQUIRE(scores.size() == 3);
      double total = 0.0;
      for (double s : scores) {
        CHECK(s >= 0.0);
        total += s;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
      // argmax must agree with predict under the shared lowest-id tie rule,
      // except knn whose documented tie rule is nearest-member
      if (learner.kind != LearnerKind::knn) {
        int arg = 0;
        for (int k = 1; k < 3; ++k) {
          if (scores[static_cast<std::size_t>(k)] > scores[static_cast<std::size_t>(arg)]) arg = k;
        }
        CHECK(arg == predict(learner, x));
      } else {
        CHECK(scores[static_cast<std::size_t>(predict(learner, x))] ==
              doctest::Approx(*std::max_element(scores.begin(), scores.end())));
      }
    }
  }
}

TEST_CASE("only svm scores are flagged uncalibrated") {
  const LabeledDataset ds = make_blobs(10, 2, 2, 6.0, 103);
  CHECK(!scores_calibrated(train_linear_svm(ds)));
  CHECK(scores_calibrated(train_gaussian_nb(ds)));
  CHECK(scores_calibrated(train_knn(ds)));
}

TEST_CASE("dimension mismatch raises a shape error") {
  const LabeledDataset ds = make_blobs(10, 2, 3, 5.0, 101);
  const TrainedLearner gnb = train_gaussian_nb(ds);
  CHECK_THROWS_WITH_AS(predict(gnb, std::vector<double>{1.0, 2.0}),
                       doctest::Contains("shape_mismatch"), Error);
}

TEST_CASE("zero-variance dimensions are dropped, not fatal") {
  LabeledDataset ds = make_blobs(20, 2, 2, 6.0, 111);
  // append a constant column
  LabeledDataset wide;
  wide.d = 3;
  wide.class_names = ds.class_names;
  for (int i = 0; i < ds.n; ++i) {
    std::vector<double> row(ds.row(i).begin(), ds.row(i).end());
    row.push_back(42.0);
    wide.push_row(row, ds.labels[static_cast<std::size_t>(i)], ds.groups[static_cast<std::size_t>(i)]);
  }
  const TrainedLearner svm = train_linear_svm(wide);
  const auto& model = std::get<LinearSvmModel>(svm.model);
  REQUIRE(model.standardizer.dropped.size() == 1);
  CHECK(model.standardizer.dropped[0] == 2);
  CHECK(training_accuracy(svm, wide) == 1.0);
}

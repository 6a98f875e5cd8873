#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mispron/dataset.hpp"
#include "mispron/error.hpp"
#include "mispron/parallel.hpp"
#include "mispron/rng.hpp"
#include "mispron/tree.hpp"

namespace mispron {

enum class LearnerKind { svm, knn, dtree, gnb, rforest, logreg, xtrees };

inline const char* learner_kind_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::svm: return "svm";
    case LearnerKind::knn: return "knn";
    case LearnerKind::dtree: return "dtree";
    case LearnerKind::gnb: return "gnb";
    case LearnerKind::rforest: return "rforest";
    case LearnerKind::logreg: return "logreg";
    case LearnerKind::xtrees: return "xtrees";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct SvmParams {
  double c = 0.02;
  double tol = 1e-4;
  int max_epochs = 10000;
  std::uint64_t seed = 0;
};

struct KnnParams {
  int k = 3;
};

struct GnbParams {};

struct ForestParams {
  int n_trees = 100;
  int max_features = 0;  // 0 = floor(sqrt(d))
  bool bootstrap = true;
  TreeParams tree;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct ExtraTreesParams {
  int n_trees = 100;
  int max_features = 0;
  bool midpoint_thresholds = false;  // replaces random cuts with (min+max)/2
  TreeParams tree;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct LogRegParams {
  double l2 = 1.0;
  double grad_tol = 1e-6;
  int max_iters = 10000;
};

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

// One-vs-rest linear SVMs over standardized features with an augmented bias
// feature. weights is C x (d+1) row-major.
struct LinearSvmModel {
  Standardizer standardizer;
  std::vector<double> weights;
  int n_classes = 0;
  int d = 0;

  double decision_value(int klass, std::span<const double> raw) const {
    const std::vector<double> x = standardizer.apply(raw);
    const double* w = weights.data() + static_cast<std::size_t>(klass) * (d + 1);
    double acc = w[d];  // bias term
    for (int j = 0; j < d; ++j) acc += w[j] * x[static_cast<std::size_t>(j)];
    return acc;
  }
};

struct KnnModel {
  Standardizer standardizer;
  int k = 3;
  std::vector<double> train;  // n x d, standardized
  std::vector<int> labels;
  int n = 0;
  int d = 0;
  int n_classes = 0;
};

struct GnbModel {
  std::vector<double> log_prior;  // C
  std::vector<double> mean;       // C x d
  std::vector<double> variance;   // C x d, floored
  int n_classes = 0;
  int d = 0;

  double log_joint(int klass, std::span<const double> x) const {
    double acc = log_prior[static_cast<std::size_t>(klass)];
    const double* mu = mean.data() + static_cast<std::size_t>(klass) * d;
    const double* var = variance.data() + static_cast<std::size_t>(klass) * d;
    for (int j = 0; j < d; ++j) {
      const double diff = x[static_cast<std::size_t>(j)] - mu[j];
      acc += -0.5 * std::log(2.0 * kPi * var[j]) - diff * diff / (2.0 * var[j]);
    }
    return acc;
  }
};

struct ForestModel {
  std::vector<DecisionTree> trees;

  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

// Multinomial softmax regression on standardized features.
struct LogRegModel {
  Standardizer standardizer;
  std::vector<double> weights;  // C x d
  std::vector<double> bias;     // C
  int n_classes = 0;
  int d = 0;
  bool converged = true;
};

struct TrainedLearner {
  LearnerKind kind = LearnerKind::dtree;
  std::vector<std::string> class_names;
  int dim = 0;
  std::variant<LinearSvmModel, KnnModel, DecisionTree, GnbModel, ForestModel, LogRegModel> model;
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace detail {

// Dual coordinate descent for the L1-loss binary SVM: minimize
// 0.5*|w|^2 + C*sum hinge(y_i, w.x_i) via its box-constrained dual,
// maintaining w explicitly. Rows are visited in a seeded random order each
// epoch; the pass stops when the projected-gradient spread falls under tol.
inline void svm_binary_dual_cd(const LabeledDataset& std_ds, const std::vector<signed char>& y,
                               double c, double tol, int max_epochs, Rng& rng, double* w_out) {
  const int n = std_ds.n;
  const int d = std_ds.d;
  std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
  std::vector<double> w(static_cast<std::size_t>(d) + 1, 0.0);
  std::vector<double> q_ii(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const auto r = std_ds.row(i);
    double acc = 1.0;  // bias feature
    for (double v : r) acc += v * v;
    q_ii[static_cast<std::size_t>(i)] = acc;
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    rng.shuffle(order);
    double pg_max = -1e300, pg_min = 1e300;
    for (int i : order) {
      const auto r = std_ds.row(i);
      double margin = w[static_cast<std::size_t>(d)];
      for (int j = 0; j < d; ++j) margin += w[static_cast<std::size_t>(j)] * r[static_cast<std::size_t>(j)];
      const double g = y[static_cast<std::size_t>(i)] * margin - 1.0;

      double pg = g;
      const double a = alpha[static_cast<std::size_t>(i)];
      if (a <= 0.0) {
        pg = std::min(g, 0.0);
      } else if (a >= c) {
        pg = std::max(g, 0.0);
      }
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);

      if (std::abs(pg) > 1e-12) {
        const double a_new = std::clamp(a - g / q_ii[static_cast<std::size_t>(i)], 0.0, c);
        const double delta = (a_new - a) * y[static_cast<std::size_t>(i)];
        if (delta != 0.0) {
          for (int j = 0; j < d; ++j) w[static_cast<std::size_t>(j)] += delta * r[static_cast<std::size_t>(j)];
          w[static_cast<std::size_t>(d)] += delta;
          alpha[static_cast<std::size_t>(i)] = a_new;
        }
      }
    }
    if (pg_max - pg_min < tol) break;
  }
  std::copy(w.begin(), w.end(), w_out);
}

}  // namespace detail

inline TrainedLearner train_linear_svm(const LabeledDataset& ds, const SvmParams& params = {}) {
  validate_dataset(ds);
  if (params.c <= 0.0) raise(ErrorKind::param, "bad_param", "svm C must be positive");
  const int c = ds.n_classes();

  LinearSvmModel model;
  model.standardizer = Standardizer::fit(ds);
  const LabeledDataset std_ds = model.standardizer.apply(ds);
  model.n_classes = c;
  model.d = ds.d;
  model.weights.assign(static_cast<std::size_t>(c) * (ds.d + 1), 0.0);

  for (int klass = 0; klass < c; ++klass) {
    std::vector<signed char> y(static_cast<std::size_t>(ds.n));
    for (int i = 0; i < ds.n; ++i) {
      y[static_cast<std::size_t>(i)] = ds.labels[static_cast<std::size_t>(i)] == klass ? 1 : -1;
    }
    Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(klass)));
    detail::svm_binary_dual_cd(std_ds, y, params.c, params.tol, params.max_epochs, rng,
                               model.weights.data() + static_cast<std::size_t>(klass) * (ds.d + 1));
  }

  TrainedLearner learner;
  learner.kind = LearnerKind::svm;
  learner.class_names = ds.class_names;
  learner.dim = ds.d;
  learner.model = std::move(model);
  return learner;
}

inline TrainedLearner train_knn(const LabeledDataset& ds, const KnnParams& params = {}) {
  validate_dataset(ds);
  if (params.k < 1) raise(ErrorKind::param, "bad_param", "k must be >= 1");
  if (params.k > ds.n) raise(ErrorKind::param, "bad_param", "k exceeds the number of rows");

  KnnModel model;
  model.standardizer = Standardizer::fit(ds);
  model.k = params.k;
  model.n = ds.n;
  model.d = ds.d;
  model.n_classes = ds.n_classes();
  model.labels = ds.labels;
  model.train = model.standardizer.apply(ds).features;

  TrainedLearner learner;
  learner.kind = LearnerKind::knn;
  learner.class_names = ds.class_names;
  learner.dim = ds.d;
  learner.model = std::move(model);
  return learner;
}

inline TrainedLearner train_decision_tree(const LabeledDataset& ds, const TreeParams& params = {}) {
  validate_dataset(ds);
  TrainedLearner learner;
  learner.kind = LearnerKind::dtree;
  learner.class_names = ds.class_names;
  learner.dim = ds.d;
  learner.model = train_tree(ds, all_rows(ds), params);
  return learner;
}

inline TrainedLearner train_gaussian_nb(const LabeledDataset& ds, const GnbParams& = {}) {
  validate_dataset(ds);
  const int c = ds.n_classes();

  GnbModel model;
  model.n_classes = c;
  model.d = ds.d;
  model.log_prior.assign(static_cast<std::size_t>(c), 0.0);
  model.mean.assign(static_cast<std::size_t>(c) * ds.d, 0.0);
  model.variance.assign(static_cast<std::size_t>(c) * ds.d, 0.0);

  std::vector<int> count(static_cast<std::size_t>(c), 0);
  for (int i = 0; i < ds.n; ++i) {
    const int label = ds.labels[static_cast<std::size_t>(i)];
    ++count[static_cast<std::size_t>(label)];
    const auto r = ds.row(i);
    for (int j = 0; j < ds.d; ++j) {
      model.mean[static_cast<std::size_t>(label) * ds.d + j] += r[static_cast<std::size_t>(j)];
    }
  }
  for (int k = 0; k < c; ++k) {
    if (count[static_cast<std::size_t>(k)] == 0) {
      raise(ErrorKind::data, "invalid_dataset", "class without samples: " + ds.class_names[static_cast<std::size_t>(k)]);
    }
    for (int j = 0; j < ds.d; ++j) {
      model.mean[static_cast<std::size_t>(k) * ds.d + j] /= count[static_cast<std::size_t>(k)];
    }
    model.log_prior[static_cast<std::size_t>(k)] =
        std::log(static_cast<double>(count[static_cast<std::size_t>(k)]) / ds.n);
  }
  for (int i = 0; i < ds.n; ++i) {
    const int label = ds.labels[static_cast<std::size_t>(i)];
    const auto r = ds.row(i);
    for (int j = 0; j < ds.d; ++j) {
      const double diff = r[static_cast<std::size_t>(j)] - model.mean[static_cast<std::size_t>(label) * ds.d + j];
      model.variance[static_cast<std::size_t>(label) * ds.d + j] += diff * diff;
    }
  }
  // Variance floor: 1e-9 of the largest per-dimension variance over the whole
  // training set, so constant dimensions stay harmless.
  double max_pooled = 0.0;
  {
    std::vector<double> pooled_mean(static_cast<std::size_t>(ds.d), 0.0);
    for (int i = 0; i < ds.n; ++i) {
      const auto r = ds.row(i);
      for (int j = 0; j < ds.d; ++j) pooled_mean[static_cast<std::size_t>(j)] += r[static_cast<std::size_t>(j)];
    }
    for (double& m : pooled_mean) m /= ds.n;
    for (int j = 0; j < ds.d; ++j) {
      double v = 0.0;
      for (int i = 0; i < ds.n; ++i) {
        const double diff = ds.row(i)[static_cast<std::size_t>(j)] - pooled_mean[static_cast<std::size_t>(j)];
        v += diff * diff;
      }
      max_pooled = std::max(max_pooled, v / ds.n);
    }
  }
  const double floor = max_pooled > 0.0 ? 1e-9 * max_pooled : 1e-9;
  for (int k = 0; k < c; ++k) {
    for (int j = 0; j < ds.d; ++j) {
      auto& v = model.variance[static_cast<std::size_t>(k) * ds.d + j];
      v = std::max(v / count[static_cast<std::size_t>(k)], floor);
    }
  }

  TrainedLearner learner;
  learner.kind = LearnerKind::gnb;
  learner.class_names = ds.class_names;
  learner.dim = ds.d;
  learner.model = std::move(model);
  return learner;
}

inline TrainedLearner train_random_forest(const LabeledDataset& ds, const ForestParams& params = {}) {
  validate_dataset(ds);
  if (params.n_trees < 1) raise(ErrorKind::param, "bad_param", "n_trees must be >= 1");
  const int max_features =
      params.max_features > 0 ? params.max_features
                              : std::max(1, static_cast<int>(std::floor(std::sqrt(ds.d))));

  ForestModel model;
  model.trees.resize(static_cast<std::size_t>(params.n_trees));
  parallel_for(static_cast<std::size_t>(params.n_trees), params.jobs, [&](std::size_t t) {
    Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(t)));
    const std::vector<int> rows = params.bootstrap ? bootstrap_rows(ds.n, rng) : all_rows(ds);
    model.trees[t] =
        train_tree(ds, rows, params.tree, {}, max_features, ThresholdRule::midpoints, &rng);
  });

  TrainedLearner learner;
  learner.kind = LearnerKind::rforest;
  learner.class_names = ds.class_names;
  learner.dim = ds.d;
  learner.model = std::move(model);
  return learner;
}

// Extremely randomized trees: full sample per tree, one random cut per
// candidate feature.
inline TrainedLearner train_extra_trees(const LabeledDataset& ds, const ExtraTreesParams& params = {}) {
  validate_dataset(ds);
  if (params.n_trees < 1) raise(ErrorKind::param, "bad_param", "n_trees must be >= 1");
  const int max_features =
      params.max_features > 0 ? params.max_features
                              : std::max(1, static_cast<int>(std::floor(std::sqrt(ds.d))));
  const ThresholdRule rule =
      params.midpoint_thresholds ? ThresholdRule::range_midpoint : ThresholdRule::random_uniform;

  ForestModel model;
  model.trees.resize(static_cast<std::size_t>(params.n_trees));
  parallel_for(static_cast<std::size_t>(params.n_trees), params.jobs, [&](std::size_t t) {
    Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(t)));
    model.trees[t] = train_tree(ds, all_rows(ds), params.tree, {}, max_features, rule, &rng);
  });

  TrainedLearner learner;
  learner.kind = LearnerKind::xtrees;
  learner.class_names = ds.class_names;
  learner.dim = ds.d;
  learner.model = std::move(model);
  return learner;
}

// ---------------------------------------------------------------------------
// Multinomial logistic regression (stacking meta-learner)
// ---------------------------------------------------------------------------

namespace detail {

inline void softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

}  // namespace detail

// Mean NLL with an L2 penalty on the weights (biases unpenalized):
// J = (1/n) * [ sum_i -log p(y_i | x_i) + (l2/2) * |W|^2 ].
inline double logreg_objective(const LabeledDataset& std_ds, const std::vector<double>& w,
                               const std::vector<double>& b, double l2) {
  const int n = std_ds.n, d = std_ds.d, c = std_ds.n_classes();
  double nll = 0.0;
  std::vector<double> z(static_cast<std::size_t>(c));
  for (int i = 0; i < n; ++i) {
    const auto r = std_ds.row(i);
    for (int k = 0; k < c; ++k) {
      double acc = b[static_cast<std::size_t>(k)];
      const double* wk = w.data() + static_cast<std::size_t>(k) * d;
      for (int j = 0; j < d; ++j) acc += wk[j] * r[static_cast<std::size_t>(j)];
      z[static_cast<std::size_t>(k)] = acc;
    }
    const double m = *std::max_element(z.begin(), z.end());
    double lse = 0.0;
    for (double v : z) lse += std::exp(v - m);
    nll += m + std::log(lse) - z[static_cast<std::size_t>(std_ds.labels[static_cast<std::size_t>(i)])];
  }
  double penalty = 0.0;
  for (double v : w) penalty += v * v;
  return (nll + 0.5 * l2 * penalty) / n;
}

// Gradient of logreg_objective in (w, b).
inline void logreg_gradient(const LabeledDataset& std_ds, const std::vector<double>& w,
                            const std::vector<double>& b, double l2, std::vector<double>& gw,
                            std::vector<double>& gb) {
  const int n = std_ds.n, d = std_ds.d, c = std_ds.n_classes();
  gw.assign(w.size(), 0.0);
  gb.assign(b.size(), 0.0);
  std::vector<double> p(static_cast<std::size_t>(c));
  for (int i = 0; i < n; ++i) {
    const auto r = std_ds.row(i);
    for (int k = 0; k < c; ++k) {
      double acc = b[static_cast<std::size_t>(k)];
      const double* wk = w.data() + static_cast<std::size_t>(k) * d;
      for (int j = 0; j < d; ++j) acc += wk[j] * r[static_cast<std::size_t>(j)];
      p[static_cast<std::size_t>(k)] = acc;
    }
    detail::softmax_inplace(p);
    p[static_cast<std::size_t>(std_ds.labels[static_cast<std::size_t>(i)])] -= 1.0;
    for (int k = 0; k < c; ++k) {
      const double pk = p[static_cast<std::size_t>(k)];
      if (pk == 0.0) continue;
      double* gwk = gw.data() + static_cast<std::size_t>(k) * d;
      for (int j = 0; j < d; ++j) gwk[j] += pk * r[static_cast<std::size_t>(j)];
      gb[static_cast<std::size_t>(k)] += pk;
    }
  }
  for (std::size_t j = 0; j < w.size(); ++j) gw[j] = (gw[j] + l2 * w[j]) / n;
  for (double& v : gb) v /= n;
}

// Full-batch gradient descent with backtracking (Armijo) line search.
// Non-convergence is reported on the model, never silently dropped.
inline TrainedLearner train_logistic_regression(const LabeledDataset& ds,
                                                const LogRegParams& params = {}) {
  validate_dataset(ds);
  const int c = ds.n_classes();

  LogRegModel model;
  model.standardizer = Standardizer::fit(ds);
  const LabeledDataset std_ds = model.standardizer.apply(ds);
  model.n_classes = c;
  model.d = ds.d;
  model.weights.assign(static_cast<std::size_t>(c) * ds.d, 0.0);
  model.bias.assign(static_cast<std::size_t>(c), 0.0);

  std::vector<double> gw, gb;
  double objective = logreg_objective(std_ds, model.weights, model.bias, params.l2);
  double step = 1.0;
  bool converged = false;
  std::vector<double> w_try, b_try;
  for (int iter = 0; iter < params.max_iters; ++iter) {
    logreg_gradient(std_ds, model.weights, model.bias, params.l2, gw, gb);
    double grad_sq = 0.0;
    for (double v : gw) grad_sq += v * v;
    for (double v : gb) grad_sq += v * v;
    if (std::sqrt(grad_sq) < params.grad_tol) {
      converged = true;
      break;
    }
    step = std::min(step * 2.0, 1e6);  // recover from conservative steps
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      w_try = model.weights;
      b_try = model.bias;
      for (std::size_t j = 0; j < w_try.size(); ++j) w_try[j] -= step * gw[j];
      for (std::size_t j = 0; j < b_try.size(); ++j) b_try[j] -= step * gb[j];
      const double candidate = logreg_objective(std_ds, w_try, b_try, params.l2);
      if (candidate <= objective - 1e-4 * step * grad_sq) {
        model.weights.swap(w_try);
        model.bias.swap(b_try);
        objective = candidate;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent direction progress at machine precision
  }
  model.converged = converged;

  TrainedLearner learner;
  learner.kind = LearnerKind::logreg;
  learner.class_names = ds.class_names;
  learner.dim = ds.d;
  learner.model = std::move(model);
  return learner;
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

namespace detail {

inline int argmax_lowest_tie(const std::vector<double>& scores) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(scores.size()); ++k) {
    if (scores[static_cast<std::size_t>(k)] > scores[static_cast<std::size_t>(best)]) best = k;
  }
  return best;
}

// Neighbor order: ascending distance, ties by row index. Vote ties go to the
// tied class owning the nearest neighbor.
inline std::pair<int, std::vector<double>> knn_vote(const KnnModel& model,
                                                    std::span<const double> raw) {
  const std::vector<double> x = model.standardizer.apply(raw);
  std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(model.n));
  for (int i = 0; i < model.n; ++i) {
    const double* row = model.train.data() + static_cast<std::size_t>(i) * model.d;
    double acc = 0.0;
    for (int j = 0; j < model.d; ++j) {
      const double diff = x[static_cast<std::size_t>(j)] - row[j];
      acc += diff * diff;
    }
    dist[static_cast<std::size_t>(i)] = {acc, i};
  }
  std::sort(dist.begin(), dist.end());

  std::vector<double> votes(static_cast<std::size_t>(model.n_classes), 0.0);
  for (int r = 0; r < model.k; ++r) {
    votes[static_cast<std::size_t>(model.labels[static_cast<std::size_t>(dist[static_cast<std::size_t>(r)].second)])] += 1.0;
  }
  double top = 0.0;
  for (double v : votes) top = std::max(top, v);
  int winner = -1;
  for (int r = 0; r < model.k && winner < 0; ++r) {
    const int label = model.labels[static_cast<std::size_t>(dist[static_cast<std::size_t>(r)].second)];
    if (votes[static_cast<std::size_t>(label)] == top) winner = label;
  }
  for (double& v : votes) v /= model.k;
  return {winner, std::move(votes)};
}

inline std::pair<int, std::vector<double>> forest_vote(const ForestModel& model,
                                                       std::span<const double> x) {
  const int c = model.trees.front().n_classes;
  std::vector<double> votes(static_cast<std::size_t>(c), 0.0);
  for (const auto& tree : model.trees) votes[static_cast<std::size_t>(tree.predict(x))] += 1.0;
  const int winner = argmax_lowest_tie(votes);
  for (double& v : votes) v /= static_cast<double>(model.trees.size());
  return {winner, std::move(votes)};
}

}  // namespace detail

inline std::vector<double> predict_scores(const TrainedLearner& learner, std::span<const double> x);

inline void check_dim(const TrainedLearner& learner, std::span<const double> x) {
  if (static_cast<int>(x.size()) != learner.dim) {
    raise(ErrorKind::param, "shape_mismatch",
          "expected " + std::to_string(learner.dim) + "-dimensional input, got " +
              std::to_string(x.size()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) raise(ErrorKind::param, "bad_param", "non-finite input value");
  }
}

inline int predict(const TrainedLearner& learner, std::span<const double> x) {
  check_dim(learner, x);
  if (const auto* svm = std::get_if<LinearSvmModel>(&learner.model)) {
    std::vector<double> decisions(static_cast<std::size_t>(svm->n_classes));
    for (int k = 0; k < svm->n_classes; ++k) decisions[static_cast<std::size_t>(k)] = svm->decision_value(k, x);
    return detail::argmax_lowest_tie(decisions);
  }
  if (const auto* knn = std::get_if<KnnModel>(&learner.model)) {
    return detail::knn_vote(*knn, x).first;
  }
  if (const auto* tree = std::get_if<DecisionTree>(&learner.model)) {
    return tree->predict(x);
  }
  if (const auto* gnb = std::get_if<GnbModel>(&learner.model)) {
    std::vector<double> joint(static_cast<std::size_t>(gnb->n_classes));
    for (int k = 0; k < gnb->n_classes; ++k) joint[static_cast<std::size_t>(k)] = gnb->log_joint(k, x);
    return detail::argmax_lowest_tie(joint);
  }
  if (const auto* forest = std::get_if<ForestModel>(&learner.model)) {
    return detail::forest_vote(*forest, x).first;
  }
  return detail::argmax_lowest_tie(predict_scores(learner, x));  // logreg
}

// SVM scores are a softmax over decision values: they order classes correctly
// but are not probabilities. Everything else returns vote fractions or
// normalized posteriors.
inline bool scores_calibrated(const TrainedLearner& learner) {
  return learner.kind != LearnerKind::svm;
}

// Per-class scores summing to 1; see scores_calibrated for their meaning.
inline std::vector<double> predict_scores(const TrainedLearner& learner, std::span<const double> x) {
  check_dim(learner, x);
  if (const auto* svm = std::get_if<LinearSvmModel>(&learner.model)) {
    std::vector<double> z(static_cast<std::size_t>(svm->n_classes));
    for (int k = 0; k < svm->n_classes; ++k) z[static_cast<std::size_t>(k)] = svm->decision_value(k, x);
    detail::softmax_inplace(z);
    return z;
  }
  if (const auto* knn = std::get_if<KnnModel>(&learner.model)) {
    return detail::knn_vote(*knn, x).second;
  }
  if (const auto* tree = std::get_if<DecisionTree>(&learner.model)) {
    return tree->leaf_distribution(x);
  }
  if (const auto* gnb = std::get_if<GnbModel>(&learner.model)) {
    std::vector<double> z(static_cast<std::size_t>(gnb->n_classes));
    for (int k = 0; k < gnb->n_classes; ++k) z[static_cast<std::size_t>(k)] = gnb->log_joint(k, x);
    detail::softmax_inplace(z);  // normalized posterior
    return z;
  }
  if (const auto* forest = std::get_if<ForestModel>(&learner.model)) {
    return detail::forest_vote(*forest, x).second;
  }
  const auto& logreg = std::get<LogRegModel>(learner.model);
  std::vector<double> z(static_cast<std::size_t>(logreg.n_classes));
  const std::vector<double> std_x = logreg.standardizer.apply(x);
  for (int k = 0; k < logreg.n_classes; ++k) {
    double acc = logreg.bias[static_cast<std::size_t>(k)];
    const double* wk = logreg.weights.data() + static_cast<std::size_t>(k) * logreg.d;
    for (int j = 0; j < logreg.d; ++j) acc += wk[j] * std_x[static_cast<std::size_t>(j)];
    z[static_cast<std::size_t>(k)] = acc;
  }
  detail::softmax_inplace(z);
  return z;
}

inline double training_accuracy(const TrainedLearner& learner, const LabeledDataset& ds) {
  int hits = 0;
  for (int i = 0; i < ds.n; ++i) {
    if (predict(learner, ds.row(i)) == ds.labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / ds.n;
}

}  // namespace mispron

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mispron/dataset.hpp"
#include "mispron/error.hpp"
#include "mispron/learners.hpp"
#include "mispron/rng.hpp"
#include "mispron/split.hpp"
#include "mispron/tree.hpp"

namespace mispron {

// A base-learner recipe; the kind selects which parameter block applies.
struct LearnerSpec {
  LearnerKind kind = LearnerKind::dtree;
  SvmParams svm;
  KnnParams knn;
  TreeParams tree;
  GnbParams gnb;
  ForestParams forest;
  ExtraTreesParams xtrees;
  LogRegParams logreg;
};

// Ordered member list; order matters because vote tie-breaking sums member
// scores in this order.
struct Committee {
  std::vector<LearnerSpec> members;

  // svm(C=0.02), knn(k=3), dtree, gnb, rforest
  static Committee default_five() {
    Committee c;
    LearnerSpec svm;
    svm.kind = LearnerKind::svm;
    LearnerSpec knn;
    knn.kind = LearnerKind::knn;
    LearnerSpec dtree;
    dtree.kind = LearnerKind::dtree;
    LearnerSpec gnb;
    gnb.kind = LearnerKind::gnb;
    LearnerSpec forest;
    forest.kind = LearnerKind::rforest;
    c.members = {svm, knn, dtree, gnb, forest};
    return c;
  }
};

// Trains one spec with its seeds re-derived from `seed` so committee members
// and resamples stay independent yet reproducible.
inline TrainedLearner train_learner(const LabeledDataset& ds, LearnerSpec spec,
                                    std::uint64_t seed) {
  switch (spec.kind) {
    case LearnerKind::svm:
      spec.svm.seed = mix_seed(seed, hash64("svm"));
      return train_linear_svm(ds, spec.svm);
    case LearnerKind::knn:
      return train_knn(ds, spec.knn);
    case LearnerKind::dtree:
      return train_decision_tree(ds, spec.tree);
    case LearnerKind::gnb:
      return train_gaussian_nb(ds, spec.gnb);
    case LearnerKind::rforest:
      spec.forest.seed = mix_seed(seed, hash64("rforest"));
      return train_random_forest(ds, spec.forest);
    case LearnerKind::logreg:
      return train_logistic_regression(ds, spec.logreg);
    case LearnerKind::xtrees:
      spec.xtrees.seed = mix_seed(seed, hash64("xtrees"));
      return train_extra_trees(ds, spec.xtrees);
  }
  raise(ErrorKind::param, "bad_param", "unknown learner kind");
}

// ---------------------------------------------------------------------------
// Vote combination
// ---------------------------------------------------------------------------

// Plurality over member labels. Ties are resolved by the summed member scores
// of the tied classes, then by the lower class id. Returned scores are the
// vote fractions.
inline std::pair<int, std::vector<double>> voting_decide(
    const std::vector<int>& member_labels, const std::vector<std::vector<double>>& member_scores,
    int n_classes) {
  std::vector<double> votes(static_cast<std::size_t>(n_classes), 0.0);
  for (int label : member_labels) votes[static_cast<std::size_t>(label)] += 1.0;
  double top = 0.0;
  for (double v : votes) top = std::max(top, v);

  std::vector<int> tied;
  for (int k = 0; k < n_classes; ++k) {
    if (votes[static_cast<std::size_t>(k)] == top) tied.push_back(k);
  }
  int winner = tied.front();
  if (tied.size() > 1 && !member_scores.empty()) {
    double best_sum = -1.0;
    for (int k : tied) {
      double sum = 0.0;
      for (const auto& s : member_scores) sum += s[static_cast<std::size_t>(k)];
      if (sum > best_sum) {  // strict >, so equal sums keep the lower id
        best_sum = sum;
        winner = k;
      }
    }
  }
  for (double& v : votes) v /= static_cast<double>(member_labels.size());
  return {winner, std::move(votes)};
}

// ---------------------------------------------------------------------------
// Ensemble models
// ---------------------------------------------------------------------------

enum class EnsembleKind { voting, bagging, adaboost_m1, stacking };

inline const char* ensemble_kind_name(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::voting: return "voting";
    case EnsembleKind::bagging: return "bagging";
    case EnsembleKind::adaboost_m1: return "adaboost_m1";
    case EnsembleKind::stacking: return "stacking";
  }
  return "?";
}

struct VotingModel {
  std::vector<TrainedLearner> members;
  // Training-set accuracy per member, recorded at fit time. (Cross-validated
  // member accuracy belongs to the evaluation layer, which reports it.)
  std::vector<double> member_training_accuracy;
};

struct BaggingModel {
  std::vector<TrainedLearner> members;  // one per bootstrap bag
};

struct AdaBoostRound {
  double epsilon = 0.0;          // weighted error of the round
  double log_inv_beta = 0.0;     // member weight
  double weight_sum_after = 0.0; // instance-weight total after renormalizing
};

struct AdaBoostModel {
  std::vector<DecisionTree> members;
  std::vector<double> log_inv_beta;
  std::vector<AdaBoostRound> rounds;  // audit trail
  int n_classes = 0;
};

// Meta features are [original d columns | member scores, C per member, in
// committee order].
struct StackingModel {
  std::vector<TrainedLearner> members;
  TrainedLearner meta;
  int base_dim = 0;
  int n_classes = 0;

  int meta_width() const {
    return base_dim + static_cast<int>(members.size()) * n_classes;
  }
};

struct EnsembleModel {
  EnsembleKind kind = EnsembleKind::voting;
  std::vector<std::string> class_names;
  int dim = 0;
  std::variant<VotingModel, BaggingModel, AdaBoostModel, StackingModel> model;
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

inline EnsembleModel train_voting(const LabeledDataset& ds, const Committee& committee,
                                  std::uint64_t seed) {
  validate_dataset(ds);
  if (committee.members.size() < 2) {
    raise(ErrorKind::param, "bad_param", "a committee needs at least 2 members");
  }
  VotingModel model;
  for (std::size_t m = 0; m < committee.members.size(); ++m) {
    model.members.push_back(
        train_learner(ds, committee.members[m], mix_seed(seed, static_cast<std::uint64_t>(m))));
    model.member_training_accuracy.push_back(training_accuracy(model.members.back(), ds));
  }

  EnsembleModel out;
  out.kind = EnsembleKind::voting;
  out.class_names = ds.class_names;
  out.dim = ds.d;
  out.model = std::move(model);
  return out;
}

struct BaggingParams {
  LearnerSpec base;  // decision tree unless configured otherwise
  int n_bags = 50;
  std::uint64_t seed = 0;
};

inline EnsembleModel train_bagging(const LabeledDataset& ds, const BaggingParams& params = {}) {
  validate_dataset(ds);
  if (params.n_bags < 1) raise(ErrorKind::param, "bad_param", "n_bags must be >= 1");

  BaggingModel model;
  for (int bag = 0; bag < params.n_bags; ++bag) {
    Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(bag)));
    const std::vector<int> rows = bootstrap_rows(ds.n, rng);
    const LabeledDataset resampled = select_rows(ds, rows);
    model.members.push_back(
        train_learner(resampled, params.base, mix_seed(params.seed, 0x9a99ull + bag)));
  }

  EnsembleModel out;
  out.kind = EnsembleKind::bagging;
  out.class_names = ds.class_names;
  out.dim = ds.d;
  out.model = std::move(model);
  return out;
}

struct AdaBoostParams {
  TreeParams base{.max_depth = 5, .min_leaf = 1};
  int rounds = 50;
  std::uint64_t seed = 0;
};

// AdaBoost.M1. Instance weights start uniform; correctly classified weights
// shrink by beta = eps/(1-eps) each round and the vector renormalizes to 1.
// A round with eps >= 0.5 is discarded and boosting stops (an error if it is
// the first round); eps == 0 caps beta at 1e-10 and stops with that member.
inline EnsembleModel train_adaboost_m1(const LabeledDataset& ds, const AdaBoostParams& params = {}) {
  validate_dataset(ds);
  if (params.rounds < 1) raise(ErrorKind::param, "bad_param", "rounds must be >= 1");

  AdaBoostModel model;
  model.n_classes = ds.n_classes();
  std::vector<double> weights(static_cast<std::size_t>(ds.n), 1.0 / ds.n);
  const std::vector<int> rows = all_rows(ds);

  for (int round = 0; round < params.rounds; ++round) {
    DecisionTree tree = train_tree(ds, rows, params.base, weights);
    double eps = 0.0;
    std::vector<bool> correct(static_cast<std::size_t>(ds.n));
    for (int i = 0; i < ds.n; ++i) {
      correct[static_cast<std::size_t>(i)] =
          tree.predict(ds.row(i)) == ds.labels[static_cast<std::size_t>(i)];
      if (!correct[static_cast<std::size_t>(i)]) eps += weights[static_cast<std::size_t>(i)];
    }

    if (eps >= 0.5) {
      if (round == 0) {
        raise(ErrorKind::training, "boost_failed",
              "base learner error " + std::to_string(eps) + " >= 0.5 on round 1");
      }
      break;  // discard this round
    }

    const double beta = std::max(eps / (1.0 - eps), 1e-10);
    model.members.push_back(std::move(tree));
    model.log_inv_beta.push_back(std::log(1.0 / beta));

    double total = 0.0;
    for (int i = 0; i < ds.n; ++i) {
      if (correct[static_cast<std::size_t>(i)]) weights[static_cast<std::size_t>(i)] *= beta;
      total += weights[static_cast<std::size_t>(i)];
    }
    for (double& w : weights) w /= total;
    double audit_sum = 0.0;
    for (double w : weights) audit_sum += w;
    model.rounds.push_back({eps, model.log_inv_beta.back(), audit_sum});

    if (eps == 0.0) break;  // nothing left to reweight
  }

  EnsembleModel out;
  out.kind = EnsembleKind::adaboost_m1;
  out.class_names = ds.class_names;
  out.dim = ds.d;
  out.model = std::move(model);
  return out;
}

// ---------------------------------------------------------------------------
// Stacking
// ---------------------------------------------------------------------------

using MemberTrainer = std::function<TrainedLearner(const LabeledDataset&)>;

// Out-of-fold stacking over injectable trainers (tests pass instrumented
// members). Fold construction is group-aware, so no member ever scores a row
// whose group it saw during training.
inline StackingModel train_stacking_with(const LabeledDataset& ds,
                                         const std::vector<MemberTrainer>& member_trainers,
                                         const MemberTrainer& meta_trainer, int oof_folds,
                                         std::uint64_t seed) {
  validate_dataset(ds);
  if (member_trainers.empty()) raise(ErrorKind::param, "bad_param", "stacking needs members");

  std::vector<std::string> label_names(static_cast<std::size_t>(ds.n));
  for (int i = 0; i < ds.n; ++i) {
    label_names[static_cast<std::size_t>(i)] =
        ds.class_names[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])];
  }
  const SplitPlan plan = kfold_rows(label_names, ds.groups, oof_folds, mix_seed(seed, hash64("oof")));

  const int c = ds.n_classes();
  const int meta_width = ds.d + static_cast<int>(member_trainers.size()) * c;
  std::vector<double> meta_features(static_cast<std::size_t>(ds.n) * meta_width, 0.0);
  for (int i = 0; i < ds.n; ++i) {
    const auto r = ds.row(i);
    std::copy(r.begin(), r.end(),
              meta_features.begin() + static_cast<std::size_t>(i) * meta_width);
  }

  for (const Fold& fold : plan.folds) {
    const LabeledDataset fold_train = select_rows(ds, fold.train_indices);
    for (std::size_t m = 0; m < member_trainers.size(); ++m) {
      const TrainedLearner member = member_trainers[m](fold_train);
      for (int row : fold.validation_indices) {
        const std::vector<double> scores = predict_scores(member, ds.row(row));
        std::copy(scores.begin(), scores.end(),
                  meta_features.begin() + static_cast<std::size_t>(row) * meta_width + ds.d +
                      m * static_cast<std::size_t>(c));
      }
    }
  }

  StackingModel model;
  model.base_dim = ds.d;
  model.n_classes = c;
  for (const auto& trainer : member_trainers) model.members.push_back(trainer(ds));

  LabeledDataset meta_ds;
  meta_ds.d = meta_width;
  meta_ds.n = ds.n;
  meta_ds.features = std::move(meta_features);
  meta_ds.labels = ds.labels;
  meta_ds.groups = ds.groups;
  meta_ds.class_names = ds.class_names;
  model.meta = meta_trainer(meta_ds);
  return model;
}

enum class StackingMeta { logistic, rforest, extra_trees };

inline const char* stacking_meta_name(StackingMeta meta) {
  switch (meta) {
    case StackingMeta::logistic: return "logistic";
    case StackingMeta::rforest: return "rforest";
    case StackingMeta::extra_trees: return "extra_trees";
  }
  return "?";
}

struct StackingParams {
  Committee committee = Committee::default_five();
  StackingMeta meta = StackingMeta::logistic;
  int oof_folds = 5;
  std::uint64_t seed = 0;
};

inline EnsembleModel train_stacking(const LabeledDataset& ds, const StackingParams& params = {}) {
  std::vector<MemberTrainer> trainers;
  for (std::size_t m = 0; m < params.committee.members.size(); ++m) {
    const LearnerSpec spec = params.committee.members[m];
    const std::uint64_t member_seed = mix_seed(params.seed, static_cast<std::uint64_t>(m));
    trainers.push_back([spec, member_seed](const LabeledDataset& data) {
      return train_learner(data, spec, member_seed);
    });
  }
  const std::uint64_t meta_seed = mix_seed(params.seed, hash64("meta"));
  const StackingMeta meta = params.meta;
  MemberTrainer meta_trainer = [meta, meta_seed](const LabeledDataset& data) {
    LearnerSpec spec;
    switch (meta) {
      case StackingMeta::logistic: spec.kind = LearnerKind::logreg; break;
      case StackingMeta::rforest: spec.kind = LearnerKind::rforest; break;
      case StackingMeta::extra_trees: spec.kind = LearnerKind::xtrees; break;
    }
    return train_learner(data, spec, meta_seed);
  };

  EnsembleModel out;
  out.kind = EnsembleKind::stacking;
  out.class_names = ds.class_names;
  out.dim = ds.d;
  out.model = train_stacking_with(ds, trainers, meta_trainer, params.oof_folds, params.seed);
  return out;
}

// ---------------------------------------------------------------------------
// Ensemble prediction
// ---------------------------------------------------------------------------

namespace detail {

inline std::pair<int, std::vector<double>> members_vote(const std::vector<TrainedLearner>& members,
                                                        std::span<const double> x, int n_classes) {
  std::vector<int> labels;
  std::vector<std::vector<double>> scores;
  labels.reserve(members.size());
  scores.reserve(members.size());
  for (const auto& member : members) {
    labels.push_back(predict(member, x));
    scores.push_back(predict_scores(member, x));
  }
  return voting_decide(labels, scores, n_classes);
}

inline std::vector<double> stacking_meta_row(const StackingModel& model,
                                             std::span<const double> x) {
  std::vector<double> meta_row(x.begin(), x.end());
  meta_row.reserve(static_cast<std::size_t>(model.meta_width()));
  for (const auto& member : model.members) {
    const std::vector<double> scores = predict_scores(member, x);
    meta_row.insert(meta_row.end(), scores.begin(), scores.end());
  }
  return meta_row;
}

}  // namespace detail

inline std::vector<double> predict_scores(const EnsembleModel& ensemble, std::span<const double> x);

inline int predict(const EnsembleModel& ensemble, std::span<const double> x) {
  const int c = static_cast<int>(ensemble.class_names.size());
  if (const auto* voting = std::get_if<VotingModel>(&ensemble.model)) {
    return detail::members_vote(voting->members, x, c).first;
  }
  if (const auto* bagging = std::get_if<BaggingModel>(&ensemble.model)) {
    return detail::members_vote(bagging->members, x, c).first;
  }
  if (std::get_if<AdaBoostModel>(&ensemble.model) != nullptr) {
    return detail::argmax_lowest_tie(predict_scores(ensemble, x));
  }
  const auto& stacking = std::get<StackingModel>(ensemble.model);
  return predict(stacking.meta, detail::stacking_meta_row(stacking, x));
}

inline std::vector<double> predict_scores(const EnsembleModel& ensemble, std::span<const double> x) {
  const int c = static_cast<int>(ensemble.class_names.size());
  if (const auto* voting = std::get_if<VotingModel>(&ensemble.model)) {
    return detail::members_vote(voting->members, x, c).second;
  }
  if (const auto* bagging = std::get_if<BaggingModel>(&ensemble.model)) {
    return detail::members_vote(bagging->members, x, c).second;
  }
  if (const auto* boost = std::get_if<AdaBoostModel>(&ensemble.model)) {
    std::vector<double> mass(static_cast<std::size_t>(c), 0.0);
    for (std::size_t t = 0; t < boost->members.size(); ++t) {
      mass[static_cast<std::size_t>(boost->members[t].predict(x))] += boost->log_inv_beta[t];
    }
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    if (total > 0.0) {
      for (double& v : mass) v /= total;
    }
    return mass;
  }
  const auto& stacking = std::get<StackingModel>(ensemble.model);
  return predict_scores(stacking.meta, detail::stacking_meta_row(stacking, x));
}

}  // namespace mispron

#pragma once

#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mispron/ensembles.hpp"
#include "mispron/error.hpp"
#include "mispron/learners.hpp"

namespace mispron {

inline constexpr int kBundleFormatVersion = 1;

using Json = nlohmann::json;

// Either a single learner or an ensemble; the CLI persists both the same way.
using AnyModel = std::variant<TrainedLearner, EnsembleModel>;

inline int predict(const AnyModel& model, std::span<const double> x) {
  return std::visit([&](const auto& m) { return predict(m, x); }, model);
}

inline std::vector<double> predict_scores(const AnyModel& model, std::span<const double> x) {
  return std::visit([&](const auto& m) { return predict_scores(m, x); }, model);
}

inline int model_dim(const AnyModel& model) {
  return std::visit([](const auto& m) { return m.dim; }, model);
}

inline const std::vector<std::string>& model_class_names(const AnyModel& model) {
  return std::visit([](const auto& m) -> const std::vector<std::string>& { return m.class_names; },
                    model);
}

namespace detail {

inline Json standardizer_to_json(const Standardizer& s) {
  return Json{{"mean", s.mean}, {"scale", s.scale}, {"dropped", s.dropped}};
}

inline Standardizer standardizer_from_json(const Json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  s.dropped = j.at("dropped").get<std::vector<int>>();
  return s;
}

inline Json tree_to_json(const DecisionTree& tree) {
  Json nodes = Json::array();
  for (const auto& node : tree.nodes) {
    nodes.push_back(Json{{"f", node.feature},
                         {"t", node.threshold},
                         {"l", node.left},
                         {"r", node.right},
                         {"k", node.klass},
                         {"p", node.class_fraction}});
  }
  return Json{{"n_classes", tree.n_classes}, {"nodes", std::move(nodes)}};
}

inline DecisionTree tree_from_json(const Json& j) {
  DecisionTree tree;
  tree.n_classes = j.at("n_classes").get<int>();
  for (const auto& jn : j.at("nodes")) {
    TreeNode node;
    node.feature = jn.at("f").get<int>();
    node.threshold = jn.at("t").get<double>();
    node.left = jn.at("l").get<int>();
    node.right = jn.at("r").get<int>();
    node.klass = jn.at("k").get<int>();
    node.class_fraction = jn.at("p").get<std::vector<double>>();
    tree.nodes.push_back(std::move(node));
  }
  return tree;
}

}  // namespace detail

inline Json learner_to_json(const TrainedLearner& learner) {
  Json j{{"kind", learner_kind_name(learner.kind)},
         {"class_names", learner.class_names},
         {"dim", learner.dim}};
  if (const auto* svm = std::get_if<LinearSvmModel>(&learner.model)) {
    j["params"] = Json{{"standardizer", detail::standardizer_to_json(svm->standardizer)},
                       {"weights", svm->weights},
                       {"n_classes", svm->n_classes},
                       {"d", svm->d}};
  } else if (const auto* knn = std::get_if<KnnModel>(&learner.model)) {
    j["params"] = Json{{"standardizer", detail::standardizer_to_json(knn->standardizer)},
                       {"k", knn->k},
                       {"train", knn->train},
                       {"labels", knn->labels},
                       {"n", knn->n},
                       {"d", knn->d},
                       {"n_classes", knn->n_classes}};
  } else if (const auto* tree = std::get_if<DecisionTree>(&learner.model)) {
    j["params"] = detail::tree_to_json(*tree);
  } else if (const auto* gnb = std::get_if<GnbModel>(&learner.model)) {
    j["params"] = Json{{"log_prior", gnb->log_prior},
                       {"mean", gnb->mean},
                       {"variance", gnb->variance},
                       {"n_classes", gnb->n_classes},
                       {"d", gnb->d}};
  } else if (const auto* forest = std::get_if<ForestModel>(&learner.model)) {
    Json trees = Json::array();
    for (const auto& tree : forest->trees) trees.push_back(detail::tree_to_json(tree));
    j["params"] = Json{{"trees", std::move(trees)}};
  } else {
    const auto& logreg = std::get<LogRegModel>(learner.model);
    j["params"] = Json{{"standardizer", detail::standardizer_to_json(logreg.standardizer)},
                       {"weights", logreg.weights},
                       {"bias", logreg.bias},
                       {"n_classes", logreg.n_classes},
                       {"d", logreg.d},
                       {"converged", logreg.converged}};
  }
  return j;
}

inline TrainedLearner learner_from_json(const Json& j) {
  TrainedLearner learner;
  const std::string kind = j.at("kind").get<std::string>();
  learner.class_names = j.at("class_names").get<std::vector<std::string>>();
  learner.dim = j.at("dim").get<int>();
  const Json& p = j.at("params");

  if (kind == "svm") {
    learner.kind = LearnerKind::svm;
    LinearSvmModel svm;
    svm.standardizer = detail::standardizer_from_json(p.at("standardizer"));
    svm.weights = p.at("weights").get<std::vector<double>>();
    svm.n_classes = p.at("n_classes").get<int>();
    svm.d = p.at("d").get<int>();
    learner.model = std::move(svm);
  } else if (kind == "knn") {
    learner.kind = LearnerKind::knn;
    KnnModel knn;
    knn.standardizer = detail::standardizer_from_json(p.at("standardizer"));
    knn.k = p.at("k").get<int>();
    knn.train = p.at("train").get<std::vector<double>>();
    knn.labels = p.at("labels").get<std::vector<int>>();
    knn.n = p.at("n").get<int>();
    knn.d = p.at("d").get<int>();
    knn.n_classes = p.at("n_classes").get<int>();
    learner.model = std::move(knn);
  } else if (kind == "dtree") {
    learner.kind = LearnerKind::dtree;
    learner.model = detail::tree_from_json(p);
  } else if (kind == "gnb") {
    learner.kind = LearnerKind::gnb;
    GnbModel gnb;
    gnb.log_prior = p.at("log_prior").get<std::vector<double>>();
    gnb.mean = p.at("mean").get<std::vector<double>>();
    gnb.variance = p.at("variance").get<std::vector<double>>();
    gnb.n_classes = p.at("n_classes").get<int>();
    gnb.d = p.at("d").get<int>();
    learner.model = std::move(gnb);
  } else if (kind == "rforest" || kind == "xtrees") {
    learner.kind = kind == "rforest" ? LearnerKind::rforest : LearnerKind::xtrees;
    ForestModel forest;
    for (const auto& jt : p.at("trees")) forest.trees.push_back(detail::tree_from_json(jt));
    learner.model = std::move(forest);
  } else if (kind == "logreg") {
    learner.kind = LearnerKind::logreg;
    LogRegModel logreg;
    logreg.standardizer = detail::standardizer_from_json(p.at("standardizer"));
    logreg.weights = p.at("weights").get<std::vector<double>>();
    logreg.bias = p.at("bias").get<std::vector<double>>();
    logreg.n_classes = p.at("n_classes").get<int>();
    logreg.d = p.at("d").get<int>();
    logreg.converged = p.at("converged").get<bool>();
    learner.model = std::move(logreg);
  } else {
    raise(ErrorKind::format, "bad_model", "unknown learner kind: " + kind);
  }
  return learner;
}

inline Json ensemble_to_json(const EnsembleModel& ensemble) {
  Json j{{"kind", ensemble_kind_name(ensemble.kind)},
         {"class_names", ensemble.class_names},
         {"dim", ensemble.dim}};
  if (const auto* voting = std::get_if<VotingModel>(&ensemble.model)) {
    Json members = Json::array();
    for (const auto& m : voting->members) members.push_back(learner_to_json(m));
    j["params"] = Json{{"members", std::move(members)},
                       {"member_training_accuracy", voting->member_training_accuracy}};
  } else if (const auto* bagging = std::get_if<BaggingModel>(&ensemble.model)) {
    Json members = Json::array();
    for (const auto& m : bagging->members) members.push_back(learner_to_json(m));
    j["params"] = Json{{"members", std::move(members)}};
  } else if (const auto* boost = std::get_if<AdaBoostModel>(&ensemble.model)) {
    Json members = Json::array();
    for (const auto& tree : boost->members) members.push_back(detail::tree_to_json(tree));
    Json rounds = Json::array();
    for (const auto& r : boost->rounds) {
      rounds.push_back(Json{{"epsilon", r.epsilon},
                            {"log_inv_beta", r.log_inv_beta},
                            {"weight_sum_after", r.weight_sum_after}});
    }
    j["params"] = Json{{"members", std::move(members)},
                       {"log_inv_beta", boost->log_inv_beta},
                       {"rounds", std::move(rounds)},
                       {"n_classes", boost->n_classes}};
  } else {
    const auto& stacking = std::get<StackingModel>(ensemble.model);
    Json members = Json::array();
    for (const auto& m : stacking.members) members.push_back(learner_to_json(m));
    j["params"] = Json{{"members", std::move(members)},
                       {"meta", learner_to_json(stacking.meta)},
                       {"base_dim", stacking.base_dim},
                       {"n_classes", stacking.n_classes}};
  }
  return j;
}

inline EnsembleModel ensemble_from_json(const Json& j) {
  EnsembleModel ensemble;
  const std::string kind = j.at("kind").get<std::string>();
  ensemble.class_names = j.at("class_names").get<std::vector<std::string>>();
  ensemble.dim = j.at("dim").get<int>();
  const Json& p = j.at("params");

  if (kind == "voting") {
    ensemble.kind = EnsembleKind::voting;
    VotingModel model;
    for (const auto& jm : p.at("members")) model.members.push_back(learner_from_json(jm));
    model.member_training_accuracy =
        p.at("member_training_accuracy").get<std::vector<double>>();
    ensemble.model = std::move(model);
  } else if (kind == "bagging") {
    ensemble.kind = EnsembleKind::bagging;
    BaggingModel model;
    for (const auto& jm : p.at("members")) model.members.push_back(learner_from_json(jm));
    ensemble.model = std::move(model);
  } else if (kind == "adaboost_m1") {
    ensemble.kind = EnsembleKind::adaboost_m1;
    AdaBoostModel model;
    for (const auto& jm : p.at("members")) model.members.push_back(detail::tree_from_json(jm));
    model.log_inv_beta = p.at("log_inv_beta").get<std::vector<double>>();
    for (const auto& jr : p.at("rounds")) {
      model.rounds.push_back({jr.at("epsilon").get<double>(), jr.at("log_inv_beta").get<double>(),
                              jr.at("weight_sum_after").get<double>()});
    }
    model.n_classes = p.at("n_classes").get<int>();
    ensemble.model = std::move(model);
  } else if (kind == "stacking") {
    ensemble.kind = EnsembleKind::stacking;
    StackingModel model;
    for (const auto& jm : p.at("members")) model.members.push_back(learner_from_json(jm));
    model.meta = learner_from_json(p.at("meta"));
    model.base_dim = p.at("base_dim").get<int>();
    model.n_classes = p.at("n_classes").get<int>();
    ensemble.model = std::move(model);
  } else {
    raise(ErrorKind::format, "bad_model", "unknown ensemble kind: " + kind);
  }
  return ensemble;
}

inline Json model_to_json(const AnyModel& model) {
  if (const auto* learner = std::get_if<TrainedLearner>(&model)) {
    Json j = learner_to_json(*learner);
    j["model_family"] = "learner";
    return j;
  }
  Json j = ensemble_to_json(std::get<EnsembleModel>(model));
  j["model_family"] = "ensemble";
  return j;
}

inline AnyModel model_from_json(const Json& j) {
  const std::string family = j.at("model_family").get<std::string>();
  if (family == "learner") return learner_from_json(j);
  if (family == "ensemble") return ensemble_from_json(j);
  raise(ErrorKind::format, "bad_model", "unknown model family: " + family);
}

// ---------------------------------------------------------------------------
// Model bundle: a self-contained file for prediction
// ---------------------------------------------------------------------------

struct ModelBundle {
  int format_version = kBundleFormatVersion;
  std::map<std::string, std::string> config;  // pipeline snapshot
  AnyModel model;
  std::vector<std::string> class_names;

  ModelBundle() : model(TrainedLearner{}) {}
};

inline Json bundle_to_json(const ModelBundle& bundle) {
  return Json{{"format_version", bundle.format_version},
              {"config", bundle.config},
              {"class_names", bundle.class_names},
              {"model", model_to_json(bundle.model)}};
}

inline ModelBundle bundle_from_json(const Json& j) {
  ModelBundle bundle;
  bundle.format_version = j.at("format_version").get<int>();
  if (bundle.format_version != kBundleFormatVersion) {
    raise(ErrorKind::version, "version_mismatch",
          "bundle format " + std::to_string(bundle.format_version) + ", expected " +
              std::to_string(kBundleFormatVersion));
  }
  bundle.config = j.at("config").get<std::map<std::string, std::string>>();
  bundle.class_names = j.at("class_names").get<std::vector<std::string>>();
  bundle.model = model_from_json(j.at("model"));
  return bundle;
}

inline void save_bundle(const ModelBundle& bundle, const std::string& path) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) raise(ErrorKind::io, "io_error", "cannot write bundle: " + path);
  file << bundle_to_json(bundle).dump(2) << '\n';
}

inline ModelBundle load_bundle(const std::string& path) {
  std::ifstream file(path);
  if (!file) raise(ErrorKind::io, "io_error", "cannot open bundle: " + path);
  Json j;
  try {
    file >> j;
  } catch (const Json::exception& e) {
    raise(ErrorKind::format, "bad_model", std::string("bundle parse failure: ") + e.what());
  }
  return bundle_from_json(j);
}

}  // namespace mispron

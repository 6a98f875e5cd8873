#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mispron/corpus.hpp"
#include "mispron/error.hpp"
#include "mispron/rng.hpp"

namespace mispron {

struct Fold {
  std::vector<int> train_indices;
  std::vector<int> validation_indices;
};

// Row indices into the structure the plan was built from (manifest entries or
// dataset rows). Groups are always assigned whole, so nothing derived from one
// source recording can sit on both sides.
struct SplitPlan {
  std::vector<int> train_indices;
  std::vector<int> test_indices;
  std::vector<Fold> folds;
};

namespace detail {

struct Group {
  std::string id;
  std::string label;
  std::vector<int> rows;
};

// Groups rows by group id, sorted lexicographically so the result does not
// depend on input order. Each group must carry a single label.
inline std::vector<Group> collect_groups(const std::vector<std::string>& labels,
                                         const std::vector<std::string>& group_ids) {
  std::map<std::string, Group> by_id;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& g = by_id[group_ids[i]];
    if (g.rows.empty()) {
      g.id = group_ids[i];
      g.label = labels[i];
    } else if (g.label != labels[i]) {
      raise(ErrorKind::data, "inconsistent_group",
            "group " + group_ids[i] + " spans labels " + g.label + " and " + labels[i]);
    }
    g.rows.push_back(static_cast<int>(i));
  }
  std::vector<Group> groups;
  groups.reserve(by_id.size());
  for (auto& [id, g] : by_id) groups.push_back(std::move(g));
  return groups;
}

inline std::map<std::string, std::vector<int>> groups_by_label(std::vector<Group>& groups) {
  std::map<std::string, std::vector<int>> per_label;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    per_label[groups[gi].label].push_back(static_cast<int>(gi));
  }
  return per_label;
}

}  // namespace detail

// Group-aware stratified holdout over (label, group) rows. Per class, whole
// groups are shuffled with a class-local generator and round(fraction * n)
// of them go to the test side.
inline SplitPlan stratified_split_rows(const std::vector<std::string>& labels,
                                       const std::vector<std::string>& group_ids,
                                       double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    raise(ErrorKind::param, "bad_param", "test_fraction must lie in (0,1)");
  }
  auto groups = detail::collect_groups(labels, group_ids);
  auto per_label = detail::groups_by_label(groups);

  SplitPlan plan;
  for (auto& [label, idxs] : per_label) {
    if (idxs.size() < 2) {
      raise(ErrorKind::data, "unsatisfiable_stratification",
            "class " + label + " has a single group; cannot stratify");
    }
    Rng rng(mix_seed(seed, hash64(label)));
    std::vector<int> shuffled = idxs;  // already sorted by group id via collect_groups
    rng.shuffle(shuffled);
    const auto n_test = static_cast<std::size_t>(
        std::lround(test_fraction * static_cast<double>(shuffled.size())));
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
      const auto& rows = groups[static_cast<std::size_t>(shuffled[i])].rows;
      auto& side = i < n_test ? plan.test_indices : plan.train_indices;
      side.insert(side.end(), rows.begin(), rows.end());
    }
  }
  std::sort(plan.train_indices.begin(), plan.train_indices.end());
  std::sort(plan.test_indices.begin(), plan.test_indices.end());
  return plan;
}

// Group-aware stratified k-fold: per class, shuffled groups are dealt
// round-robin, so every group validates exactly once.
inline SplitPlan kfold_rows(const std::vector<std::string>& labels,
                            const std::vector<std::string>& group_ids, int k,
                            std::uint64_t seed) {
  if (k < 2) raise(ErrorKind::param, "bad_param", "k must be >= 2");
  auto groups = detail::collect_groups(labels, group_ids);
  auto per_label = detail::groups_by_label(groups);

  std::vector<std::vector<int>> fold_groups(static_cast<std::size_t>(k));
  for (auto& [label, idxs] : per_label) {
    if (idxs.size() < static_cast<std::size_t>(k)) {
      raise(ErrorKind::data, "unsatisfiable_fold",
            "class " + label + " has " + std::to_string(idxs.size()) + " groups; need >= " +
                std::to_string(k));
    }
    Rng rng(mix_seed(seed, hash64(label)));
    std::vector<int> shuffled = idxs;
    rng.shuffle(shuffled);
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
      fold_groups[i % static_cast<std::size_t>(k)].push_back(shuffled[i]);
    }
  }

  SplitPlan plan;
  plan.folds.resize(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    auto& fold = plan.folds[static_cast<std::size_t>(f)];
    for (int g = 0; g < static_cast<int>(groups.size()); ++g) {
      const auto& bucket = fold_groups[static_cast<std::size_t>(f)];
      const bool in_fold = std::find(bucket.begin(), bucket.end(), g) != bucket.end();
      const auto& rows = groups[static_cast<std::size_t>(g)].rows;
      auto& side = in_fold ? fold.validation_indices : fold.train_indices;
      side.insert(side.end(), rows.begin(), rows.end());
    }
    std::sort(fold.train_indices.begin(), fold.train_indices.end());
    std::sort(fold.validation_indices.begin(), fold.validation_indices.end());
  }
  return plan;
}

namespace detail {

// Rows participating in split construction: originals only.
inline void manifest_rows(const CorpusManifest& manifest, std::vector<std::string>& labels,
                          std::vector<std::string>& group_ids, std::vector<int>& row_map) {
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    if (e.origin != EntryOrigin::original) continue;
    labels.push_back(e.label);
    group_ids.push_back(e.group);
    row_map.push_back(static_cast<int>(i));
  }
}

inline std::vector<int> remap(const std::vector<int>& indices, const std::vector<int>& row_map) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(row_map[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace detail

// 80/20-style holdout over a manifest; only original entries participate and
// returned indices refer to manifest entry positions.
inline SplitPlan stratified_split(const CorpusManifest& manifest, double test_fraction,
                                  std::uint64_t seed) {
  std::vector<std::string> labels, group_ids;
  std::vector<int> row_map;
  detail::manifest_rows(manifest, labels, group_ids, row_map);
  if (labels.empty()) raise(ErrorKind::data, "empty_corpus", "manifest has no original entries");
  SplitPlan plan = stratified_split_rows(labels, group_ids, test_fraction, seed);
  plan.train_indices = detail::remap(plan.train_indices, row_map);
  plan.test_indices = detail::remap(plan.test_indices, row_map);
  return plan;
}

inline SplitPlan kfold(const CorpusManifest& manifest, int k, std::uint64_t seed) {
  std::vector<std::string> labels, group_ids;
  std::vector<int> row_map;
  detail::manifest_rows(manifest, labels, group_ids, row_map);
  if (labels.empty()) raise(ErrorKind::data, "empty_corpus", "manifest has no original entries");
  SplitPlan plan = kfold_rows(labels, group_ids, k, seed);
  for (auto& fold : plan.folds) {
    fold.train_indices = detail::remap(fold.train_indices, row_map);
    fold.validation_indices = detail::remap(fold.validation_indices, row_map);
  }
  return plan;
}

// JSON export for audits.
inline std::string split_plan_to_json(const SplitPlan& plan) {
  std::ostringstream out;
  auto dump = [&](const std::vector<int>& v) {
    out << '[';
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
    out << ']';
  };
  out << "{\"train\":";
  dump(plan.train_indices);
  out << ",\"test\":";
  dump(plan.test_indices);
  out << ",\"folds\":[";
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    out << (f ? "," : "") << "{\"train\":";
    dump(plan.folds[f].train_indices);
    out << ",\"validation\":";
    dump(plan.folds[f].validation_indices);
    out << '}';
  }
  out << "]}";
  return out.str();
}

}  // namespace mispron

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mispron/error.hpp"
#include "mispron/features.hpp"

namespace mispron {

// Row-major feature matrix with integer class ids and group identities.
struct LabeledDataset {
  std::vector<double> features;  // n x d
  std::vector<int> labels;       // class ids in [0, C)
  std::vector<std::string> groups;
  std::vector<std::string> class_names;
  int n = 0;
  int d = 0;

  std::span<const double> row(int i) const {
    return {features.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
  }
  int n_classes() const { return static_cast<int>(class_names.size()); }

  void push_row(std::span<const double> values, int label, std::string group) {
    features.insert(features.end(), values.begin(), values.end());
    labels.push_back(label);
    groups.push_back(std::move(group));
    ++n;
  }
};

inline void validate_dataset(const LabeledDataset& ds) {
  const int c = ds.n_classes();
  if (c < 2) raise(ErrorKind::data, "invalid_dataset", "need at least 2 classes");
  if (ds.n < c) raise(ErrorKind::data, "invalid_dataset", "need at least one row per class");
  if (ds.d <= 0) raise(ErrorKind::data, "invalid_dataset", "feature dimension must be positive");
  if (ds.labels.size() != static_cast<std::size_t>(ds.n) ||
      ds.groups.size() != static_cast<std::size_t>(ds.n) ||
      ds.features.size() != static_cast<std::size_t>(ds.n) * ds.d) {
    raise(ErrorKind::data, "invalid_dataset", "inconsistent row counts");
  }
  for (int label : ds.labels) {
    if (label < 0 || label >= c) raise(ErrorKind::data, "invalid_dataset", "label out of range");
  }
  for (double v : ds.features) {
    if (!std::isfinite(v)) raise(ErrorKind::data, "invalid_dataset", "non-finite feature value");
  }
}

inline LabeledDataset select_rows(const LabeledDataset& ds, const std::vector<int>& indices) {
  LabeledDataset out;
  out.d = ds.d;
  out.class_names = ds.class_names;
  for (int i : indices) {
    out.push_row(ds.row(i), ds.labels[static_cast<std::size_t>(i)],
                 ds.groups[static_cast<std::size_t>(i)]);
  }
  return out;
}

// Per-dimension (x - mean) / std, fitted on training data. Zero-variance
// dimensions are dropped: their scale is zero, so they contribute nothing
// downstream.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1/std, or 0 for dropped dimensions
  std::vector<int> dropped;

  static Standardizer fit(const LabeledDataset& ds) {
    Standardizer s;
    s.mean.assign(static_cast<std::size_t>(ds.d), 0.0);
    s.scale.assign(static_cast<std::size_t>(ds.d), 0.0);
    for (int i = 0; i < ds.n; ++i) {
      const auto r = ds.row(i);
      for (int j = 0; j < ds.d; ++j) s.mean[static_cast<std::size_t>(j)] += r[static_cast<std::size_t>(j)];
    }
    for (double& m : s.mean) m /= ds.n;
    std::vector<double> var(static_cast<std::size_t>(ds.d), 0.0);
    for (int i = 0; i < ds.n; ++i) {
      const auto r = ds.row(i);
      for (int j = 0; j < ds.d; ++j) {
        const double dlt = r[static_cast<std::size_t>(j)] - s.mean[static_cast<std::size_t>(j)];
        var[static_cast<std::size_t>(j)] += dlt * dlt;
      }
    }
    for (int j = 0; j < ds.d; ++j) {
      const double v = var[static_cast<std::size_t>(j)] / ds.n;
      if (v > 0.0) {
        s.scale[static_cast<std::size_t>(j)] = 1.0 / std::sqrt(v);
      } else {
        s.dropped.push_back(j);
      }
    }
    return s;
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) * scale[j];
    return out;
  }

  LabeledDataset apply(const LabeledDataset& ds) const {
    LabeledDataset out = ds;
    for (int i = 0; i < ds.n; ++i) {
      for (int j = 0; j < ds.d; ++j) {
        auto& v = out.features[static_cast<std::size_t>(i) * ds.d + j];
        v = (v - mean[static_cast<std::size_t>(j)]) * scale[static_cast<std::size_t>(j)];
      }
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Feature table CSV: group,label,kind,v0..v{n-1}
// ---------------------------------------------------------------------------

struct FeatureTableRow {
  std::string group;
  std::string label;
  FeatureKind kind = FeatureKind::mel128;
  std::vector<double> values;
};

inline void save_feature_table(const std::vector<FeatureTableRow>& rows, const std::string& path) {
  if (rows.empty()) raise(ErrorKind::data, "empty_table", "no feature rows to write");
  const std::size_t width = rows.front().values.size();
  std::ostringstream out;
  out << "group,label,kind";
  for (std::size_t i = 0; i < width; ++i) out << ",v" << i;
  out << '\n';
  char buf[40];
  for (const auto& row : rows) {
    if (row.values.size() != width) {
      raise(ErrorKind::data, "ragged_table", "feature rows have differing widths");
    }
    out << row.group << ',' << row.label << ',' << feature_kind_name(row.kind);
    for (double v : row.values) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) raise(ErrorKind::io, "io_error", "cannot write feature table: " + path);
  file << out.str();
}

inline std::vector<FeatureTableRow> load_feature_table(const std::string& path) {
  std::ifstream file(path);
  if (!file) raise(ErrorKind::io, "io_error", "cannot open feature table: " + path);
  std::string line;
  if (!std::getline(file, line) || line.rfind("group,label,kind", 0) != 0) {
    raise(ErrorKind::format, "bad_table", "unexpected feature table header in " + path);
  }
  std::vector<FeatureTableRow> rows;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    FeatureTableRow row;
    if (!std::getline(ss, row.group, ',') || !std::getline(ss, row.label, ',') ||
        !std::getline(ss, field, ',')) {
      raise(ErrorKind::format, "bad_table", "short feature row: " + line);
    }
    row.kind = parse_feature_kind(field);
    while (std::getline(ss, field, ',')) row.values.push_back(std::stod(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Builds a trainable dataset; class ids follow the sorted label order.
inline LabeledDataset dataset_from_rows(const std::vector<FeatureTableRow>& rows) {
  if (rows.empty()) raise(ErrorKind::data, "empty_table", "no feature rows");
  std::map<std::string, int> ids;
  for (const auto& row : rows) ids.emplace(row.label, 0);
  int next = 0;
  for (auto& [name, id] : ids) id = next++;

  LabeledDataset ds;
  ds.d = static_cast<int>(rows.front().values.size());
  ds.class_names.resize(ids.size());
  for (const auto& [name, id] : ids) ds.class_names[static_cast<std::size_t>(id)] = name;
  for (const auto& row : rows) {
    ds.push_row(row.values, ids.at(row.label), row.group);
  }
  return ds;
}

}  // namespace mispron

#include "pushrank/labeling.hpp"

#include <algorithm>
#include <cmath>

#include "pushrank/csv.hpp"
#include "pushrank/error.hpp"

namespace pushrank {

int SensitivityLabels::sensitive_count(int p) const {
  int c = 0;
  for (int i = 0; i < drug_count(); ++i)
    if (at(p, i) == Label::Sensitive) ++c;
  return c;
}

int SensitivityLabels::insensitive_count(int p) const {
  int c = 0;
  for (int i = 0; i < drug_count(); ++i)
    if (at(p, i) == Label::Insensitive) ++c;
  return c;
}

double percentile_threshold(std::vector<double> values, double theta) {
  if (values.empty()) throw Error("percentile of empty value list");
  if (!(theta > 0.0 && theta < 100.0))
    throw Error("theta must lie strictly between 0 and 100");
  for (double v : values)
    if (!std::isfinite(v)) throw Error("non-finite value in percentile input");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  // 1-indexed interpolated rank on the ascending sort.
  const double rank = 1.0 + (theta / 100.0) * static_cast<double>(n - 1);
  const size_t lo = static_cast<size_t>(std::floor(rank));
  const double frac = rank - static_cast<double>(lo);
  if (lo >= n) return values[n - 1];
  return values[lo - 1] + frac * (values[lo] - values[lo - 1]);
}

namespace {

SensitivityLabels label_with_thresholds(const ResponseMatrix& resp,
                                        const std::vector<double>& thresholds,
                                        double theta, LabelSource source) {
  SensitivityLabels out;
  out.cell_line_ids = resp.cell_line_ids;
  out.drug_ids = resp.drug_ids;
  out.theta = theta;
  out.source = source;
  out.labels = Eigen::Array<int8_t, Eigen::Dynamic, Eigen::Dynamic>::Constant(
      resp.cell_count(), resp.drug_count(), static_cast<int8_t>(Label::Unknown));
  for (int p = 0; p < resp.cell_count(); ++p)
    for (int i = 0; i < resp.drug_count(); ++i)
      if (resp.observed(p, i))
        out.labels(p, i) = static_cast<int8_t>(resp.values(p, i) < thresholds[p]
                                                   ? Label::Sensitive
                                                   : Label::Insensitive);
  return out;
}

std::vector<double> per_cell_thresholds(const ResponseMatrix& resp, double theta,
                                        const char* what) {
  std::vector<double> thresholds(resp.cell_count());
  for (int p = 0; p < resp.cell_count(); ++p) {
    std::vector<double> vals;
    for (int i = 0; i < resp.drug_count(); ++i)
      if (resp.observed(p, i)) vals.push_back(resp.values(p, i));
    if (vals.empty())
      throw Error("cell line " + resp.cell_line_ids[p] + " has no observed " +
                  what + " responses");
    thresholds[p] = percentile_threshold(std::move(vals), theta);
  }
  return thresholds;
}

}  // namespace

std::pair<SensitivityLabels, SensitivityLabels> label_train_test(
    const ResponseMatrix& train, const ResponseMatrix& test, double theta) {
  if (train.cell_line_ids != test.cell_line_ids)
    throw Error("train and test matrices must share the cell-line axis");
  auto thresholds = per_cell_thresholds(train, theta, "training");
  return {label_with_thresholds(train, thresholds, theta, LabelSource::TrainDerived),
          label_with_thresholds(test, thresholds, theta, LabelSource::TrainDerived)};
}

SensitivityLabels label_new_cell_lines(const ResponseMatrix& test, double theta) {
  auto thresholds = per_cell_thresholds(test, theta, "ground-truth");
  return label_with_thresholds(test, thresholds, theta,
                               LabelSource::GroundTruthDerived);
}

SensitivityLabels load_labels(const std::string& path) {
  auto table = csv::read_table(path);
  SensitivityLabels out;
  out.drug_ids.assign(table.header.begin() + 1, table.header.end());
  const int n = static_cast<int>(out.drug_ids.size());
  const int m = static_cast<int>(table.rows.size());
  out.labels = Eigen::Array<int8_t, Eigen::Dynamic, Eigen::Dynamic>::Constant(
      m, n, static_cast<int8_t>(Label::Unknown));
  for (int r = 0; r < m; ++r) {
    const auto& row = table.rows[r];
    if (static_cast<int>(row.size()) != n + 1)
      throw Error("label row " + std::to_string(r + 2) + " has wrong width");
    out.cell_line_ids.push_back(row[0]);
    for (int c = 0; c < n; ++c) {
      const std::string& f = row[c + 1];
      if (f == "NA" || f.empty()) continue;
      if (f == "1")
        out.labels(r, c) = static_cast<int8_t>(Label::Sensitive);
      else if (f == "0")
        out.labels(r, c) = static_cast<int8_t>(Label::Insensitive);
      else
        throw Error("bad label '" + f + "' at row " + row[0] + ", column " +
                    out.drug_ids[c]);
    }
  }
  return out;
}

void write_labels(const SensitivityLabels& labels, const std::string& path) {
  std::vector<std::string> lines;
  std::string header;
  for (const auto& id : labels.drug_ids) header += "," + id;
  lines.push_back(header);
  for (int p = 0; p < labels.cell_count(); ++p) {
    std::string line = labels.cell_line_ids[p];
    for (int i = 0; i < labels.drug_count(); ++i) {
      switch (labels.at(p, i)) {
        case Label::Sensitive: line += ",1"; break;
        case Label::Insensitive: line += ",0"; break;
        case Label::Unknown: line += ",NA"; break;
      }
    }
    lines.push_back(line);
  }
  csv::write_lines(path, lines);
}

}  // namespace pushrank

#ifndef PUSHRANK_LABELING_HPP
#define PUSHRANK_LABELING_HPP

#include <cstdint>
#include <utility>

#include "pushrank/data.hpp"

namespace pushrank {

enum class Label : int8_t { Unknown = -1, Insensitive = 0, Sensitive = 1 };

enum class LabelSource { TrainDerived, GroundTruthDerived };

/// Per-(cell line, drug) sensitive/insensitive/unknown labels from
/// per-cell-line percentile thresholds. Unknown exactly where the labeling
/// input was missing.
struct SensitivityLabels {
  std::vector<std::string> cell_line_ids;
  std::vector<std::string> drug_ids;
  Eigen::Array<int8_t, Eigen::Dynamic, Eigen::Dynamic> labels;  // m x n
  double theta = 0.0;
  LabelSource source = LabelSource::TrainDerived;

  Label at(int p, int i) const { return static_cast<Label>(labels(p, i)); }
  int cell_count() const { return static_cast<int>(cell_line_ids.size()); }
  int drug_count() const { return static_cast<int>(drug_ids.size()); }
  int sensitive_count(int p) const;
  int insensitive_count(int p) const;
};

/// theta-th percentile of the values, linear interpolation between closest
/// ranks: r = 1 + (theta/100)*(N-1) on the ascending sort (1-indexed).
double percentile_threshold(std::vector<double> values, double theta);

/// Thresholds from training observations only; a drug is sensitive in a cell
/// line iff its observed response is strictly below that cell line's
/// threshold. Both matrices must share the cell-line axis.
std::pair<SensitivityLabels, SensitivityLabels> label_train_test(
    const ResponseMatrix& train, const ResponseMatrix& test, double theta);

/// Ground-truth scheme for held-out cell lines: threshold from each cell
/// line's own observed responses.
SensitivityLabels label_new_cell_lines(const ResponseMatrix& test, double theta);

SensitivityLabels load_labels(const std::string& path);
void write_labels(const SensitivityLabels& labels, const std::string& path);

}  // namespace pushrank

#endif

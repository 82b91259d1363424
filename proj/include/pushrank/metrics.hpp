#ifndef PUSHRANK_METRICS_HPP
#define PUSHRANK_METRICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "pushrank/data.hpp"
#include "pushrank/labeling.hpp"

namespace pushrank::metrics {

/// Fraction of strictly ordered ground-truth pairs (lower truth = ranked
/// higher) that the predicted scores order correctly; predicted ties count
/// as incorrect. Undefined (nullopt) when every truth pair is tied.
std::optional<double> concordance_index(const std::vector<double>& truth,
                                        const std::vector<double>& predicted);

/// Concordance restricted to drugs labeled sensitive; undefined with fewer
/// than two of them.
std::optional<double> sensitive_ci(const std::vector<double>& truth,
                                   const std::vector<double>& predicted,
                                   const std::vector<Label>& labels);

// The ranked variants take the labels of drugs in predicted rank order
// (best first).
double precision_at(const std::vector<Label>& ranked, int j);
double ap_at_k(const std::vector<Label>& ranked, int k);  // 0 when no hit in top k
int ah_at_k(const std::vector<Label>& ranked, int k);     // a count, not a ratio

/// Overlap of the truth top-k (k lowest responses, ties by ascending id) with
/// the predicted top-k (highest scores, ties by ascending id), divided by k.
double at_k(const std::vector<double>& truth, const std::vector<double>& predicted,
            const std::vector<std::string>& ids, int k);

/// Among new drugs inside the truth top-k, the fraction recovered in the
/// predicted top-k. Undefined when no new drug reaches the truth top-k.
std::optional<double> nt_k(const std::vector<double>& truth,
                           const std::vector<double>& predicted,
                           const std::vector<std::string>& ids,
                           const std::vector<bool>& is_new, int k);

/// Mean absolute within-cell-line ranking-percentile difference of a drug
/// pair (most sensitive = highest percentile), over the cell lines observing
/// both drugs. Undefined when no cell line qualifies.
std::optional<double> delta_rank_pct(const ResponseMatrix& resp, int drug_i,
                                     int drug_j);

/// |sensitive-cell-line ratio difference| of a drug pair; ratios are over
/// cell lines with a known label for the drug.
std::optional<double> delta_eff_pct(const SensitivityLabels& labels, int drug_i,
                                    int drug_j);

std::vector<std::optional<double>> delta_rank_pct(
    const ResponseMatrix& resp, const std::vector<std::pair<int, int>>& pairs);
std::vector<std::optional<double>> delta_eff_pct(
    const SensitivityLabels& labels, const std::vector<std::pair<int, int>>& pairs);

struct Mean {
  double value = 0.0;
  int defined = 0;
  int excluded = 0;
  bool has_value() const { return defined > 0; }
};

Mean mean_defined(const std::vector<std::optional<double>>& xs);

}  // namespace pushrank::metrics

#endif

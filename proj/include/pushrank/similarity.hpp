#ifndef PUSHRANK_SIMILARITY_HPP
#define PUSHRANK_SIMILARITY_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pushrank/data.hpp"

namespace pushrank {

enum class SimilarityKind { Cosine, Rbf, LatentRbf, SpearmanProfile };

/// Symmetric m x m cell-line similarity weights. `observed` marks pairs with
/// a defined similarity (profile similarity leaves sparse pairs undefined).
struct SimilarityMatrix {
  std::vector<std::string> ids;
  Eigen::MatrixXd values;
  BoolMask observed;
  SimilarityKind kind = SimilarityKind::Cosine;

  int size() const { return static_cast<int>(ids.size()); }
  void validate() const;  // symmetry within 1e-12, diagonal/range per kind
};

SimilarityMatrix cosine_similarity(const Eigen::MatrixXd& features,
                                   const std::vector<std::string>& ids);

SimilarityMatrix rbf_similarity(const Eigen::MatrixXd& features,
                                const std::vector<std::string>& ids,
                                double gamma,
                                SimilarityKind kind = SimilarityKind::Rbf);

/// 1 / (2 * median pairwise squared distance).
double median_heuristic_gamma(const Eigen::MatrixXd& features);

/// Spearman rank correlation of response profiles over commonly observed
/// drugs; pairs sharing fewer than 3 drugs are left undefined.
SimilarityMatrix spearman_profile_similarity(const ResponseMatrix& resp);

// Tie-aware average ranks and the rank correlation built on them.
std::vector<double> average_ranks(std::span<const double> values);
std::optional<double> spearman_correlation(std::span<const double> a,
                                           std::span<const double> b);

struct GroupCorrelation {
  std::string group;
  double rho;
  int pair_count;
};

struct CorrelationResult {
  std::vector<GroupCorrelation> groups;
  std::vector<std::string> warnings;
};

/// Spearman correlation between the upper-triangle entries of two aligned
/// similarity matrices, overall ("all") or within each group.
CorrelationResult similarity_correlation(
    const SimilarityMatrix& a, const SimilarityMatrix& b,
    const std::map<std::string, std::string>* grouping = nullptr);

/// Sub-matrix over an id subset, preserving subset order.
SimilarityMatrix restrict_similarity(const SimilarityMatrix& sim,
                                     const std::vector<std::string>& ids);

/// Percentile of the off-diagonal entries (default holdout threshold source).
double offdiagonal_percentile(const SimilarityMatrix& sim, double pct);

SimilarityMatrix load_similarity(const std::string& path);
void write_similarity(const SimilarityMatrix& sim, const std::string& path);

}  // namespace pushrank

#endif

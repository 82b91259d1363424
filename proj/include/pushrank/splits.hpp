#ifndef PUSHRANK_SPLITS_HPP
#define PUSHRANK_SPLITS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pushrank/data.hpp"
#include "pushrank/similarity.hpp"

namespace pushrank {

/// Per-entry fold assignment over observed entries.
///   -2 unobserved, -1 pinned to training in every fold, 0..k-1 fold index.
/// Pinned entries exist so that every drug stays trainable in every fold and
/// every cell line keeps training data.
struct FoldSplit {
  int fold_count = 0;
  uint64_t seed = 0;
  Eigen::ArrayXXi assignment;          // m x n
  std::vector<std::string> warnings;   // constraint-repair records

  static constexpr int kUnobserved = -2;
  static constexpr int kPinned = -1;
};

FoldSplit kfold_split(const ResponseMatrix& resp, int k, uint64_t seed);

/// Entries outside fold `fold` (including pinned) form the training mask.
ResponseMatrix fold_train_matrix(const ResponseMatrix& resp,
                                 const FoldSplit& split, int fold);
/// Entries assigned exactly to fold `fold`. Not re-validated: a drug or cell
/// line may legitimately have no test entries in a given fold.
ResponseMatrix fold_test_matrix(const ResponseMatrix& resp,
                                const FoldSplit& split, int fold);

struct HoldoutSplit {
  std::vector<std::string> test_cell_lines;   // selection order
  std::vector<std::string> train_cell_lines;  // original order
  double similarity_threshold = 0.0;
  uint64_t seed = 0;
};

/// Greedy hold-out of new cell lines: repeatedly take the candidate with the
/// most similar candidates (similarity > threshold, ties by ascending id) as
/// a test cell line, protect its most similar candidate as training, and
/// remove both from the pool.
HoldoutSplit holdout_split(const ResponseMatrix& resp,
                           const SimilarityMatrix& sim, int n_new,
                           double sim_threshold, uint64_t seed = 0);

void write_fold_split(const FoldSplit& split, const ResponseMatrix& resp,
                      const std::string& path);
void write_holdout_split(const HoldoutSplit& split, const std::string& path);
FoldSplit load_fold_split(const std::string& path, const ResponseMatrix& resp);

}  // namespace pushrank

#endif

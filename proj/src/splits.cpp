#include "pushrank/splits.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "pushrank/csv.hpp"
#include "pushrank/error.hpp"

namespace pushrank {

FoldSplit kfold_split(const ResponseMatrix& resp, int k, uint64_t seed) {
  if (k < 2) throw Error("fold count must be at least 2");
  const int m = resp.cell_count(), n = resp.drug_count();
  FoldSplit split;
  split.fold_count = k;
  split.seed = seed;
  split.assignment = Eigen::ArrayXXi::Constant(m, n, FoldSplit::kUnobserved);
  std::mt19937_64 rng(seed);

  for (int p = 0; p < m; ++p) {
    auto obs = resp.observed_drugs(p);
    const int c = static_cast<int>(obs.size());
    if (c == 1) {
      // A lone entry would leave this cell line without training data in
      // its own fold.
      split.assignment(p, obs[0]) = FoldSplit::kPinned;
      split.warnings.push_back("cell line " + resp.cell_line_ids[p] +
                               " has a single observed entry; pinned to training");
      continue;
    }
    // Balanced sizes, the +1 folds chosen at random per cell line.
    std::vector<int> folds(k);
    std::iota(folds.begin(), folds.end(), 0);
    std::shuffle(folds.begin(), folds.end(), rng);
    const int base = c / k, rem = c % k;
    std::vector<int> labels;
    labels.reserve(c);
    for (int idx = 0; idx < k; ++idx)
      for (int t = 0; t < base + (idx < rem ? 1 : 0); ++t)
        labels.push_back(folds[idx]);
    std::shuffle(labels.begin(), labels.end(), rng);
    for (int t = 0; t < c; ++t) split.assignment(p, obs[t]) = labels[t];
  }

  // Every drug must keep at least one training entry in every fold.
  for (int i = 0; i < n; ++i) {
    int first_fold = FoldSplit::kUnobserved;
    int first_cell = -1;
    bool pinned = false, spread = false;
    for (int p = 0; p < m; ++p) {
      int a = split.assignment(p, i);
      if (a == FoldSplit::kUnobserved) continue;
      if (a == FoldSplit::kPinned) { pinned = true; break; }
      if (first_fold == FoldSplit::kUnobserved) {
        first_fold = a;
        first_cell = p;
      } else if (a != first_fold) {
        spread = true;
        break;
      }
    }
    if (pinned || spread || first_cell < 0) continue;
    split.assignment(first_cell, i) = FoldSplit::kPinned;
    split.warnings.push_back("drug " + resp.drug_ids[i] +
                             " observed only inside fold " +
                             std::to_string(first_fold) + "; pinned entry at cell line " +
                             resp.cell_line_ids[first_cell] + " to training");
  }
  return split;
}

namespace {

ResponseMatrix masked_copy(const ResponseMatrix& resp, const BoolMask& keep) {
  ResponseMatrix out;
  out.cell_line_ids = resp.cell_line_ids;
  out.drug_ids = resp.drug_ids;
  out.values = resp.values;
  out.observed = resp.observed && keep;
  for (int p = 0; p < out.values.rows(); ++p)
    for (int i = 0; i < out.values.cols(); ++i)
      if (!out.observed(p, i)) out.values(p, i) = 0.0;
  return out;
}

}  // namespace

ResponseMatrix fold_train_matrix(const ResponseMatrix& resp,
                                 const FoldSplit& split, int fold) {
  if (fold < 0 || fold >= split.fold_count) throw Error("fold index out of range");
  BoolMask keep = split.assignment != fold && split.assignment != FoldSplit::kUnobserved;
  auto out = masked_copy(resp, keep);
  out.validate();
  return out;
}

ResponseMatrix fold_test_matrix(const ResponseMatrix& resp,
                                const FoldSplit& split, int fold) {
  if (fold < 0 || fold >= split.fold_count) throw Error("fold index out of range");
  BoolMask keep = split.assignment == fold;
  return masked_copy(resp, keep);
}

HoldoutSplit holdout_split(const ResponseMatrix& resp,
                           const SimilarityMatrix& sim, int n_new,
                           double sim_threshold, uint64_t seed) {
  if (resp.cell_line_ids != sim.ids)
    throw Error("similarity matrix ids do not match the response matrix");
  const int m = resp.cell_count();
  if (n_new < 1) throw Error("n_new must be positive");
  if (n_new >= m) throw Error("n_new must be smaller than the number of cell lines");

  std::vector<bool> in_pool(m, true);
  std::vector<int> test_idx, protected_idx;

  while (static_cast<int>(test_idx.size()) < n_new) {
    int best = -1, best_count = 0;
    for (int p = 0; p < m; ++p) {
      if (!in_pool[p]) continue;
      int count = 0;
      for (int q = 0; q < m; ++q)
        if (q != p && in_pool[q] && sim.values(p, q) > sim_threshold) ++count;
      if (count < 1) continue;
      if (best < 0 || count > best_count ||
          (count == best_count && resp.cell_line_ids[p] < resp.cell_line_ids[best])) {
        best = p;
        best_count = count;
      }
    }
    if (best < 0)
      throw Error("holdout pool exhausted: only " +
                  std::to_string(test_idx.size()) + " of " + std::to_string(n_new) +
                  " test cell lines were selectable at this threshold");
    int neighbor = -1;
    for (int q = 0; q < m; ++q) {
      if (q == best || !in_pool[q]) continue;
      if (neighbor < 0 || sim.values(best, q) > sim.values(best, neighbor) ||
          (sim.values(best, q) == sim.values(best, neighbor) &&
           resp.cell_line_ids[q] < resp.cell_line_ids[neighbor]))
        neighbor = q;
    }
    test_idx.push_back(best);
    protected_idx.push_back(neighbor);
    in_pool[best] = false;
    in_pool[neighbor] = false;
  }

  HoldoutSplit out;
  out.similarity_threshold = sim_threshold;
  out.seed = seed;
  for (int p : test_idx) out.test_cell_lines.push_back(resp.cell_line_ids[p]);
  std::vector<bool> is_test(m, false);
  for (int p : test_idx) is_test[p] = true;
  for (int p = 0; p < m; ++p)
    if (!is_test[p]) out.train_cell_lines.push_back(resp.cell_line_ids[p]);
  return out;
}

void write_fold_split(const FoldSplit& split, const ResponseMatrix& resp,
                      const std::string& path) {
  std::vector<std::string> lines = {"cell_line,drug,fold"};
  for (int p = 0; p < resp.cell_count(); ++p)
    for (int i = 0; i < resp.drug_count(); ++i) {
      int a = split.assignment(p, i);
      if (a == FoldSplit::kUnobserved) continue;
      lines.push_back(resp.cell_line_ids[p] + "," + resp.drug_ids[i] + "," +
                      std::to_string(a));
    }
  csv::write_lines(path, lines);
}

FoldSplit load_fold_split(const std::string& path, const ResponseMatrix& resp) {
  auto table = csv::read_table(path);
  if (table.header != std::vector<std::string>{"cell_line", "drug", "fold"})
    throw Error("unexpected fold file header in " + path);
  FoldSplit split;
  split.assignment = Eigen::ArrayXXi::Constant(resp.cell_count(), resp.drug_count(),
                                               FoldSplit::kUnobserved);
  int max_fold = -1;
  for (const auto& row : table.rows) {
    if (row.size() != 3) throw Error("bad fold row in " + path);
    int p = resp.cell_index(row[0]);
    int i = resp.drug_index(row[1]);
    if (p < 0) throw Error("unknown cell line " + row[0] + " in " + path);
    if (i < 0) throw Error("unknown drug " + row[1] + " in " + path);
    int fold = static_cast<int>(csv::parse_double(row[2], "fold column"));
    split.assignment(p, i) = fold;
    max_fold = std::max(max_fold, fold);
  }
  split.fold_count = max_fold + 1;
  return split;
}

void write_holdout_split(const HoldoutSplit& split, const std::string& path) {
  std::vector<std::string> lines = {"cell_line,role"};
  for (const auto& id : split.test_cell_lines) lines.push_back(id + ",test");
  for (const auto& id : split.train_cell_lines) lines.push_back(id + ",train");
  csv::write_lines(path, lines);
}

}  // namespace pushrank

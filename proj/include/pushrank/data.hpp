#ifndef PUSHRANK_DATA_HPP
#define PUSHRANK_DATA_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace pushrank {

using BoolMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Cell line x drug response scores with an explicit missing-value mask.
/// Lower score = more sensitive. Immutable by convention after construction.
struct ResponseMatrix {
  std::vector<std::string> cell_line_ids;  // length m
  std::vector<std::string> drug_ids;       // length n
  Eigen::MatrixXd values;                  // m x n, meaningful where observed
  BoolMask observed;                       // m x n

  int cell_count() const { return static_cast<int>(cell_line_ids.size()); }
  int drug_count() const { return static_cast<int>(drug_ids.size()); }
  long observed_count() const;

  int cell_index(const std::string& id) const;  // -1 when absent
  int drug_index(const std::string& id) const;

  /// Observed drug indices of one cell line, ascending.
  std::vector<int> observed_drugs(int p) const;

  /// Checks id uniqueness, finiteness, and that no row/column is all-missing.
  void validate() const;
};

/// Cell line x gene expression, fully observed.
struct ExpressionMatrix {
  std::vector<std::string> cell_line_ids;
  std::vector<std::string> gene_ids;
  Eigen::MatrixXd values;  // m x G

  int cell_count() const { return static_cast<int>(cell_line_ids.size()); }
  int gene_count() const { return static_cast<int>(gene_ids.size()); }
  int gene_index(const std::string& id) const;
  void validate() const;
};

ResponseMatrix load_response(const std::string& path);
void write_response(const ResponseMatrix& resp, const std::string& path);

ExpressionMatrix load_expression(const std::string& path);
void write_expression(const ExpressionMatrix& expr, const std::string& path);

/// Sub-matrix over the given id subsets, preserving subset order.
/// Re-validates; an all-missing row/column in the result is an error.
ResponseMatrix restrict_to(const ResponseMatrix& resp,
                           const std::vector<std::string>& cell_lines,
                           const std::vector<std::string>& drugs);

/// Requires identical ordered cell-line id lists; names the first mismatch.
void check_alignment(const ResponseMatrix& resp, const ExpressionMatrix& expr);

}  // namespace pushrank

#endif

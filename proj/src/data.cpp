#include "pushrank/data.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "pushrank/csv.hpp"
#include "pushrank/error.hpp"

namespace pushrank {

namespace {

void check_unique(const std::vector<std::string>& ids, const std::string& what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw Error("duplicate " + what + " id " + id);
  }
}

int index_of(const std::vector<std::string>& ids, const std::string& id) {
  for (size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return static_cast<int>(i);
  return -1;
}

struct ParsedGrid {
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  Eigen::MatrixXd values;
  BoolMask observed;
};

ParsedGrid parse_grid(const std::string& path) {
  auto table = csv::read_table(path);
  if (table.header.size() < 2) throw Error("no data columns in " + path);
  ParsedGrid g;
  g.col_ids.assign(table.header.begin() + 1, table.header.end());
  const int n = static_cast<int>(g.col_ids.size());
  const int m = static_cast<int>(table.rows.size());
  if (m == 0) throw Error("no data rows in " + path);
  g.values = Eigen::MatrixXd::Zero(m, n);
  g.observed = BoolMask::Constant(m, n, false);
  for (int r = 0; r < m; ++r) {
    const auto& row = table.rows[r];
    if (static_cast<int>(row.size()) != n + 1)
      throw Error("row " + std::to_string(r + 2) + " in " + path + " has " +
                  std::to_string(row.size()) + " fields, expected " +
                  std::to_string(n + 1));
    g.row_ids.push_back(row[0]);
    for (int c = 0; c < n; ++c) {
      const std::string& field = row[c + 1];
      if (field.empty()) continue;
      g.values(r, c) = csv::parse_double(
          field, "row " + row[0] + ", column " + g.col_ids[c]);
      g.observed(r, c) = true;
    }
  }
  return g;
}

std::vector<std::string> grid_lines(const std::vector<std::string>& row_ids,
                                    const std::vector<std::string>& col_ids,
                                    const Eigen::MatrixXd& values,
                                    const BoolMask* observed) {
  std::vector<std::string> lines;
  std::string header;
  for (const auto& id : col_ids) header += "," + id;
  lines.push_back(header);
  for (size_t r = 0; r < row_ids.size(); ++r) {
    std::string line = row_ids[r];
    for (size_t c = 0; c < col_ids.size(); ++c) {
      line += ",";
      if (!observed || (*observed)(r, c)) line += csv::format_double(values(r, c));
    }
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

long ResponseMatrix::observed_count() const {
  return static_cast<long>(observed.count());
}

int ResponseMatrix::cell_index(const std::string& id) const {
  return index_of(cell_line_ids, id);
}

int ResponseMatrix::drug_index(const std::string& id) const {
  return index_of(drug_ids, id);
}

std::vector<int> ResponseMatrix::observed_drugs(int p) const {
  std::vector<int> out;
  for (int i = 0; i < drug_count(); ++i)
    if (observed(p, i)) out.push_back(i);
  return out;
}

void ResponseMatrix::validate() const {
  check_unique(cell_line_ids, "cell line");
  check_unique(drug_ids, "drug");
  const int m = cell_count(), n = drug_count();
  if (values.rows() != m || values.cols() != n || observed.rows() != m ||
      observed.cols() != n)
    throw Error("response matrix dimensions do not match id lists");
  for (int p = 0; p < m; ++p) {
    bool any = false;
    for (int i = 0; i < n; ++i) {
      if (!observed(p, i)) continue;
      any = true;
      if (!std::isfinite(values(p, i)))
        throw Error("non-finite response at cell line " + cell_line_ids[p] +
                    ", drug " + drug_ids[i]);
    }
    if (!any)
      throw Error("cell line " + cell_line_ids[p] + " has no observed responses");
  }
  for (int i = 0; i < n; ++i) {
    if (!observed.col(i).any())
      throw Error("drug " + drug_ids[i] + " has no observed responses");
  }
}

int ExpressionMatrix::gene_index(const std::string& id) const {
  return index_of(gene_ids, id);
}

void ExpressionMatrix::validate() const {
  check_unique(cell_line_ids, "cell line");
  check_unique(gene_ids, "gene");
  if (values.rows() != cell_count() || values.cols() != gene_count())
    throw Error("expression matrix dimensions do not match id lists");
  if (!values.allFinite()) throw Error("non-finite expression value");
}

ResponseMatrix load_response(const std::string& path) {
  auto g = parse_grid(path);
  ResponseMatrix resp{std::move(g.row_ids), std::move(g.col_ids),
                      std::move(g.values), std::move(g.observed)};
  resp.validate();
  return resp;
}

void write_response(const ResponseMatrix& resp, const std::string& path) {
  csv::write_lines(path, grid_lines(resp.cell_line_ids, resp.drug_ids,
                                    resp.values, &resp.observed));
}

ExpressionMatrix load_expression(const std::string& path) {
  auto g = parse_grid(path);
  for (int r = 0; r < g.observed.rows(); ++r)
    for (int c = 0; c < g.observed.cols(); ++c)
      if (!g.observed(r, c))
        throw Error("missing expression value at row " + g.row_ids[r] +
                    ", column " + g.col_ids[c]);
  ExpressionMatrix expr{std::move(g.row_ids), std::move(g.col_ids),
                        std::move(g.values)};
  expr.validate();
  return expr;
}

void write_expression(const ExpressionMatrix& expr, const std::string& path) {
  csv::write_lines(path, grid_lines(expr.cell_line_ids, expr.gene_ids,
                                    expr.values, nullptr));
}

ResponseMatrix restrict_to(const ResponseMatrix& resp,
                           const std::vector<std::string>& cell_lines,
                           const std::vector<std::string>& drugs) {
  if (cell_lines.empty() || drugs.empty())
    throw Error("restriction subsets must be non-empty");
  std::vector<int> rows, cols;
  for (const auto& id : cell_lines) {
    int p = resp.cell_index(id);
    if (p < 0) throw Error("unknown cell line " + id);
    rows.push_back(p);
  }
  for (const auto& id : drugs) {
    int i = resp.drug_index(id);
    if (i < 0) throw Error("unknown drug " + id);
    cols.push_back(i);
  }
  ResponseMatrix out;
  out.cell_line_ids = cell_lines;
  out.drug_ids = drugs;
  out.values = Eigen::MatrixXd::Zero(rows.size(), cols.size());
  out.observed = BoolMask::Constant(rows.size(), cols.size(), false);
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < cols.size(); ++c) {
      out.values(r, c) = resp.values(rows[r], cols[c]);
      out.observed(r, c) = resp.observed(rows[r], cols[c]);
    }
  out.validate();
  return out;
}

void check_alignment(const ResponseMatrix& resp, const ExpressionMatrix& expr) {
  const auto& a = resp.cell_line_ids;
  const auto& b = expr.cell_line_ids;
  for (const auto& id : a)
    if (index_of(b, id) < 0)
      throw Error("cell line " + id + " missing from expression data");
  for (const auto& id : b)
    if (index_of(a, id) < 0)
      throw Error("cell line " + id + " missing from response data");
  if (a != b) throw Error("cell line order differs between response and expression");
}

}  // namespace pushrank

#include "pushrank/synthetic.hpp"

#include <cstdio>
#include <random>

#include "pushrank/error.hpp"

namespace pushrank {

namespace {

std::string padded_id(const char* prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s%03d", prefix, i + 1);
  return buf;
}

Eigen::MatrixXd seeded_normal(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd x(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) x(r, c) = dist(rng);
  return x;
}

}  // namespace

SyntheticData generate_synthetic(int m, int n, int l_true, double noise_sigma,
                                 double missing_frac, uint64_t seed) {
  if (m < 2 || n < 2) throw Error("need at least 2 cell lines and 2 drugs");
  if (l_true < 1) throw Error("l_true must be at least 1");
  if (noise_sigma < 0.0) throw Error("noise sigma must be non-negative");
  if (missing_frac < 0.0 || missing_frac >= 0.5)
    throw Error("missing fraction must lie in [0, 0.5)");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticData out;
  Eigen::MatrixXd U = seeded_normal(l_true, m, rng);
  Eigen::MatrixXd V = seeded_normal(l_true, n, rng);

  out.response.cell_line_ids.reserve(m);
  out.response.drug_ids.reserve(n);
  for (int p = 0; p < m; ++p)
    out.response.cell_line_ids.push_back(padded_id("CL", p));
  for (int i = 0; i < n; ++i) out.response.drug_ids.push_back(padded_id("D", i));

  // Lower response = more sensitive, so the planted score is negated.
  out.response.values = Eigen::MatrixXd(m, n);
  for (int p = 0; p < m; ++p)
    for (int i = 0; i < n; ++i)
      out.response.values(p, i) =
          -U.col(p).dot(V.col(i)) + noise_sigma * noise(rng);

  const int genes = 5 * l_true;
  Eigen::MatrixXd map = seeded_normal(genes, l_true, rng);
  out.expression.cell_line_ids = out.response.cell_line_ids;
  for (int g = 0; g < genes; ++g)
    out.expression.gene_ids.push_back(padded_id("G", g));
  out.expression.values = Eigen::MatrixXd(m, genes);
  for (int p = 0; p < m; ++p) {
    Eigen::VectorXd row = map * U.col(p);
    for (int g = 0; g < genes; ++g)
      out.expression.values(p, g) = row(g) + noise_sigma * noise(rng);
  }

  bool ok = false;
  for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
    out.response.observed = BoolMask::Constant(m, n, false);
    for (int p = 0; p < m; ++p)
      for (int i = 0; i < n; ++i)
        out.response.observed(p, i) = unit(rng) >= missing_frac;
    ok = true;
    for (int p = 0; p < m && ok; ++p)
      if (!out.response.observed.row(p).any()) ok = false;
    for (int i = 0; i < n && ok; ++i)
      if (!out.response.observed.col(i).any()) ok = false;
  }
  if (!ok)
    throw Error("could not draw a missing-value mask keeping every row and "
                "column observed (100 attempts)");
  for (int p = 0; p < m; ++p)
    for (int i = 0; i < n; ++i)
      if (!out.response.observed(p, i)) out.response.values(p, i) = 0.0;

  out.response.validate();
  out.expression.validate();
  out.planted = LatentModel{std::move(U), std::move(V),
                            out.response.cell_line_ids, out.response.drug_ids};
  return out;
}

}  // namespace pushrank

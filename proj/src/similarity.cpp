#include "pushrank/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pushrank/csv.hpp"
#include "pushrank/error.hpp"
#include "pushrank/labeling.hpp"

namespace pushrank {

void SimilarityMatrix::validate() const {
  const int m = size();
  if (values.rows() != m || values.cols() != m || observed.rows() != m ||
      observed.cols() != m)
    throw Error("similarity matrix dimensions do not match id list");
  for (int p = 0; p < m; ++p)
    for (int q = p; q < m; ++q) {
      if (observed(p, q) != observed(q, p))
        throw Error("asymmetric similarity mask");
      if (!observed(p, q)) continue;
      if (std::abs(values(p, q) - values(q, p)) > 1e-12)
        throw Error("similarity matrix not symmetric at " + ids[p] + "," + ids[q]);
    }
  if (kind == SimilarityKind::Cosine || kind == SimilarityKind::Rbf ||
      kind == SimilarityKind::LatentRbf) {
    for (int p = 0; p < m; ++p)
      if (!observed(p, p) || values(p, p) != 1.0)
        throw Error("similarity diagonal must be 1 at " + ids[p]);
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q) {
        double v = values(p, q);
        if (kind == SimilarityKind::Cosine && (v < -1.0 - 1e-12 || v > 1.0 + 1e-12))
          throw Error("cosine similarity out of [-1,1]");
        if (kind != SimilarityKind::Cosine && (v <= 0.0 || v > 1.0 + 1e-12))
          throw Error("rbf similarity out of (0,1]");
      }
  }
}

SimilarityMatrix cosine_similarity(const Eigen::MatrixXd& features,
                                   const std::vector<std::string>& ids) {
  const int m = static_cast<int>(features.rows());
  if (static_cast<int>(ids.size()) != m)
    throw Error("feature rows do not match id list");
  Eigen::VectorXd norms = features.rowwise().norm();
  for (int p = 0; p < m; ++p)
    if (norms(p) == 0.0) throw Error("all-zero feature row for " + ids[p]);
  SimilarityMatrix out;
  out.ids = ids;
  out.kind = SimilarityKind::Cosine;
  out.values = features * features.transpose();
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q) out.values(p, q) /= norms(p) * norms(q);
  out.values = ((out.values + out.values.transpose()) / 2.0).eval();
  out.values.diagonal().setOnes();
  out.observed = BoolMask::Constant(m, m, true);
  out.validate();
  return out;
}

SimilarityMatrix rbf_similarity(const Eigen::MatrixXd& features,
                                const std::vector<std::string>& ids, double gamma,
                                SimilarityKind kind) {
  if (!(gamma > 0.0)) throw Error("rbf gamma must be positive");
  const int m = static_cast<int>(features.rows());
  if (static_cast<int>(ids.size()) != m)
    throw Error("feature rows do not match id list");
  SimilarityMatrix out;
  out.ids = ids;
  out.kind = kind;
  out.values = Eigen::MatrixXd::Ones(m, m);
  for (int p = 0; p < m; ++p)
    for (int q = p + 1; q < m; ++q) {
      double d2 = (features.row(p) - features.row(q)).squaredNorm();
      double v = std::exp(-gamma * d2);
      out.values(p, q) = v;
      out.values(q, p) = v;
    }
  out.observed = BoolMask::Constant(m, m, true);
  out.validate();
  return out;
}

double median_heuristic_gamma(const Eigen::MatrixXd& features) {
  const int m = static_cast<int>(features.rows());
  std::vector<double> d2;
  d2.reserve(static_cast<size_t>(m) * (m - 1) / 2);
  for (int p = 0; p < m; ++p)
    for (int q = p + 1; q < m; ++q)
      d2.push_back((features.row(p) - features.row(q)).squaredNorm());
  if (d2.empty()) throw Error("need at least two rows for the bandwidth heuristic");
  std::sort(d2.begin(), d2.end());
  double median = (d2.size() % 2 == 1)
                      ? d2[d2.size() / 2]
                      : 0.5 * (d2[d2.size() / 2 - 1] + d2[d2.size() / 2]);
  if (median <= 0.0)
    throw Error("cannot infer rbf bandwidth: median pairwise distance is zero");
  return 1.0 / (2.0 * median);
}

std::vector<double> average_ranks(std::span<const double> values) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-indexed
    for (size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman_correlation(std::span<const double> a,
                                           std::span<const double> b) {
  if (a.size() != b.size()) throw Error("rank correlation inputs differ in length");
  if (a.size() < 2) return std::nullopt;
  auto ra = average_ranks(a);
  auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (size_t i = 0; i < a.size(); ++i) { ma += ra[i]; mb += rb[i]; }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

SimilarityMatrix spearman_profile_similarity(const ResponseMatrix& resp) {
  const int m = resp.cell_count();
  SimilarityMatrix out;
  out.ids = resp.cell_line_ids;
  out.kind = SimilarityKind::SpearmanProfile;
  out.values = Eigen::MatrixXd::Zero(m, m);
  out.observed = BoolMask::Constant(m, m, false);
  for (int p = 0; p < m; ++p) {
    out.values(p, p) = 1.0;
    out.observed(p, p) = true;
  }
  for (int p = 0; p < m; ++p)
    for (int q = p + 1; q < m; ++q) {
      std::vector<double> a, b;
      for (int i = 0; i < resp.drug_count(); ++i)
        if (resp.observed(p, i) && resp.observed(q, i)) {
          a.push_back(resp.values(p, i));
          b.push_back(resp.values(q, i));
        }
      if (a.size() < 3) continue;  // undefined pair
      auto rho = spearman_correlation(a, b);
      if (!rho) continue;
      out.values(p, q) = *rho;
      out.values(q, p) = *rho;
      out.observed(p, q) = true;
      out.observed(q, p) = true;
    }
  return out;
}

CorrelationResult similarity_correlation(
    const SimilarityMatrix& a, const SimilarityMatrix& b,
    const std::map<std::string, std::string>* grouping) {
  if (a.ids != b.ids) throw Error("similarity matrices are not aligned");
  CorrelationResult res;
  auto collect = [&](const std::vector<int>& members, const std::string& name) {
    std::vector<double> xs, ys;
    for (size_t s = 0; s < members.size(); ++s)
      for (size_t t = s + 1; t < members.size(); ++t) {
        int p = members[s], q = members[t];
        if (!a.observed(p, q) || !b.observed(p, q)) continue;
        xs.push_back(a.values(p, q));
        ys.push_back(b.values(p, q));
      }
    auto rho = spearman_correlation(xs, ys);
    if (rho)
      res.groups.push_back({name, *rho, static_cast<int>(xs.size())});
    else
      res.warnings.push_back("group " + name + " has no usable similarity pairs");
  };

  if (!grouping) {
    std::vector<int> all(a.size());
    std::iota(all.begin(), all.end(), 0);
    collect(all, "all");
    return res;
  }
  std::map<std::string, std::vector<int>> groups;
  for (int p = 0; p < a.size(); ++p) {
    auto it = grouping->find(a.ids[p]);
    if (it != grouping->end()) groups[it->second].push_back(p);
  }
  for (const auto& [name, members] : groups) {
    if (members.size() < 2) {
      res.warnings.push_back("group " + name + " has fewer than 2 members; skipped");
      continue;
    }
    collect(members, name);
  }
  return res;
}

SimilarityMatrix restrict_similarity(const SimilarityMatrix& sim,
                                     const std::vector<std::string>& ids) {
  std::vector<int> idx;
  for (const auto& id : ids) {
    auto it = std::find(sim.ids.begin(), sim.ids.end(), id);
    if (it == sim.ids.end()) throw Error("unknown cell line " + id);
    idx.push_back(static_cast<int>(it - sim.ids.begin()));
  }
  SimilarityMatrix out;
  out.ids = ids;
  out.kind = sim.kind;
  const int m = static_cast<int>(idx.size());
  out.values = Eigen::MatrixXd::Zero(m, m);
  out.observed = BoolMask::Constant(m, m, false);
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q) {
      out.values(p, q) = sim.values(idx[p], idx[q]);
      out.observed(p, q) = sim.observed(idx[p], idx[q]);
    }
  return out;
}

double offdiagonal_percentile(const SimilarityMatrix& sim, double pct) {
  std::vector<double> vals;
  for (int p = 0; p < sim.size(); ++p)
    for (int q = p + 1; q < sim.size(); ++q)
      if (sim.observed(p, q)) vals.push_back(sim.values(p, q));
  if (vals.empty()) throw Error("no off-diagonal similarities");
  return percentile_threshold(std::move(vals), pct);
}

SimilarityMatrix load_similarity(const std::string& path) {
  auto table = csv::read_table(path);
  SimilarityMatrix out;
  out.ids.assign(table.header.begin() + 1, table.header.end());
  const int m = static_cast<int>(out.ids.size());
  if (static_cast<int>(table.rows.size()) != m)
    throw Error("similarity matrix in " + path + " is not square");
  out.values = Eigen::MatrixXd::Zero(m, m);
  out.observed = BoolMask::Constant(m, m, false);
  for (int p = 0; p < m; ++p) {
    const auto& row = table.rows[p];
    if (static_cast<int>(row.size()) != m + 1 || row[0] != out.ids[p])
      throw Error("similarity row order mismatch in " + path);
    for (int q = 0; q < m; ++q) {
      if (row[q + 1].empty()) continue;
      out.values(p, q) = csv::parse_double(row[q + 1], "similarity " + out.ids[p]);
      out.observed(p, q) = true;
    }
  }
  return out;
}

void write_similarity(const SimilarityMatrix& sim, const std::string& path) {
  std::vector<std::string> lines;
  std::string header;
  for (const auto& id : sim.ids) header += "," + id;
  lines.push_back(header);
  for (int p = 0; p < sim.size(); ++p) {
    std::string line = sim.ids[p];
    for (int q = 0; q < sim.size(); ++q) {
      line += ",";
      if (sim.observed(p, q)) line += csv::format_double(sim.values(p, q));
    }
    lines.push_back(line);
  }
  csv::write_lines(path, lines);
}

}  // namespace pushrank

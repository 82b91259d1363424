#include "pushrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "pushrank/error.hpp"

namespace pushrank::metrics {

std::optional<double> concordance_index(const std::vector<double>& truth,
                                        const std::vector<double>& predicted) {
  if (truth.size() != predicted.size())
    throw Error("truth and prediction lengths differ");
  long pairs = 0, correct = 0;
  for (size_t i = 0; i < truth.size(); ++i)
    for (size_t j = i + 1; j < truth.size(); ++j) {
      if (truth[i] == truth[j]) continue;  // tied ground truth carries no order
      ++pairs;
      // Lower response = more sensitive = should score strictly higher.
      const size_t hi = truth[i] < truth[j] ? i : j;
      const size_t lo = truth[i] < truth[j] ? j : i;
      if (predicted[hi] > predicted[lo]) ++correct;
    }
  if (pairs == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(pairs);
}

std::optional<double> sensitive_ci(const std::vector<double>& truth,
                                   const std::vector<double>& predicted,
                                   const std::vector<Label>& labels) {
  if (labels.size() != truth.size()) throw Error("label length mismatch");
  std::vector<double> t, s;
  for (size_t i = 0; i < truth.size(); ++i)
    if (labels[i] == Label::Sensitive) {
      t.push_back(truth[i]);
      s.push_back(predicted[i]);
    }
  if (t.size() < 2) return std::nullopt;
  return concordance_index(t, s);
}

double precision_at(const std::vector<Label>& ranked, int j) {
  if (j < 1 || j > static_cast<int>(ranked.size()))
    throw Error("precision position out of range");
  int hits = 0;
  for (int r = 0; r < j; ++r)
    if (ranked[r] == Label::Sensitive) ++hits;
  return static_cast<double>(hits) / static_cast<double>(j);
}

double ap_at_k(const std::vector<Label>& ranked, int k) {
  if (k < 1) throw Error("k must be positive");
  const int kk = std::min<int>(k, static_cast<int>(ranked.size()));
  int hits = 0;
  double sum = 0.0;
  for (int r = 0; r < kk; ++r) {
    if (ranked[r] != Label::Sensitive) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

int ah_at_k(const std::vector<Label>& ranked, int k) {
  if (k < 1) throw Error("k must be positive");
  const int kk = std::min<int>(k, static_cast<int>(ranked.size()));
  int hits = 0;
  for (int r = 0; r < kk; ++r)
    if (ranked[r] == Label::Sensitive) ++hits;
  return hits;
}

namespace {

// Indices of the k best entries; `better(a, b)` breaks ties by ascending id.
std::vector<size_t> top_k_indices(size_t n, int k,
                                  const std::function<bool(size_t, size_t)>& better) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), better);
  order.resize(static_cast<size_t>(k));
  return order;
}

}  // namespace

double at_k(const std::vector<double>& truth, const std::vector<double>& predicted,
            const std::vector<std::string>& ids, int k) {
  const size_t n = truth.size();
  if (predicted.size() != n || ids.size() != n) throw Error("input length mismatch");
  if (k < 1 || static_cast<size_t>(k) > n)
    throw Error("k exceeds the number of drugs");
  auto truth_top = top_k_indices(n, k, [&](size_t a, size_t b) {
    if (truth[a] != truth[b]) return truth[a] < truth[b];
    return ids[a] < ids[b];
  });
  auto pred_top = top_k_indices(n, k, [&](size_t a, size_t b) {
    if (predicted[a] != predicted[b]) return predicted[a] > predicted[b];
    return ids[a] < ids[b];
  });
  std::vector<bool> in_pred(n, false);
  for (size_t i : pred_top) in_pred[i] = true;
  int overlap = 0;
  for (size_t i : truth_top)
    if (in_pred[i]) ++overlap;
  return static_cast<double>(overlap) / static_cast<double>(k);
}

std::optional<double> nt_k(const std::vector<double>& truth,
                           const std::vector<double>& predicted,
                           const std::vector<std::string>& ids,
                           const std::vector<bool>& is_new, int k) {
  const size_t n = truth.size();
  if (predicted.size() != n || ids.size() != n || is_new.size() != n)
    throw Error("input length mismatch");
  if (k < 1 || static_cast<size_t>(k) > n)
    throw Error("k exceeds the number of drugs");
  auto truth_top = top_k_indices(n, k, [&](size_t a, size_t b) {
    if (truth[a] != truth[b]) return truth[a] < truth[b];
    return ids[a] < ids[b];
  });
  auto pred_top = top_k_indices(n, k, [&](size_t a, size_t b) {
    if (predicted[a] != predicted[b]) return predicted[a] > predicted[b];
    return ids[a] < ids[b];
  });
  std::vector<bool> in_pred(n, false);
  for (size_t i : pred_top) in_pred[i] = true;
  int denom = 0, num = 0;
  for (size_t i : truth_top) {
    if (!is_new[i]) continue;
    ++denom;
    if (in_pred[i]) ++num;
  }
  if (denom == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(denom);
}

std::optional<double> delta_rank_pct(const ResponseMatrix& resp, int drug_i,
                                     int drug_j) {
  double sum = 0.0;
  int cells = 0;
  for (int p = 0; p < resp.cell_count(); ++p) {
    if (!resp.observed(p, drug_i) || !resp.observed(p, drug_j)) continue;
    auto obs = resp.observed_drugs(p);
    const double n_obs = static_cast<double>(obs.size());
    auto percentile = [&](int drug) {
      int greater = 0, tied = 0;
      for (int d : obs) {
        if (d == drug) continue;
        if (resp.values(p, d) > resp.values(p, drug)) ++greater;
        else if (resp.values(p, d) == resp.values(p, drug)) ++tied;
      }
      // Most sensitive (lowest response) gets the highest percentile.
      return 100.0 * (static_cast<double>(greater) + 0.5 * tied) / n_obs;
    };
    sum += std::abs(percentile(drug_i) - percentile(drug_j));
    ++cells;
  }
  if (cells == 0) return std::nullopt;
  return sum / static_cast<double>(cells);
}

std::optional<double> delta_eff_pct(const SensitivityLabels& labels, int drug_i,
                                    int drug_j) {
  auto ratio = [&](int drug) -> std::optional<double> {
    int known = 0, sensitive = 0;
    for (int p = 0; p < labels.cell_count(); ++p) {
      Label l = labels.at(p, drug);
      if (l == Label::Unknown) continue;
      ++known;
      if (l == Label::Sensitive) ++sensitive;
    }
    if (known == 0) return std::nullopt;
    return static_cast<double>(sensitive) / static_cast<double>(known);
  };
  auto ri = ratio(drug_i), rj = ratio(drug_j);
  if (!ri || !rj) return std::nullopt;
  return std::abs(*ri - *rj);
}

std::vector<std::optional<double>> delta_rank_pct(
    const ResponseMatrix& resp, const std::vector<std::pair<int, int>>& pairs) {
  std::vector<std::optional<double>> out;
  out.reserve(pairs.size());
  for (const auto& [i, j] : pairs) out.push_back(delta_rank_pct(resp, i, j));
  return out;
}

std::vector<std::optional<double>> delta_eff_pct(
    const SensitivityLabels& labels, const std::vector<std::pair<int, int>>& pairs) {
  std::vector<std::optional<double>> out;
  out.reserve(pairs.size());
  for (const auto& [i, j] : pairs) out.push_back(delta_eff_pct(labels, i, j));
  return out;
}

Mean mean_defined(const std::vector<std::optional<double>>& xs) {
  Mean m;
  double sum = 0.0;
  for (const auto& x : xs) {
    if (x) {
      sum += *x;
      ++m.defined;
    } else {
      ++m.excluded;
    }
  }
  if (m.defined > 0) m.value = sum / m.defined;
  return m;
}

}  // namespace pushrank::metrics

#include "pushrank/elastic_net.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "pushrank/error.hpp"

namespace pushrank {

namespace {

struct Standardized {
  Eigen::MatrixXd Xs;          // zero mean, unit (population) variance columns
  Eigen::VectorXd yc;          // centered y
  Eigen::VectorXd mean, sd;    // per column; sd == 0 marks a constant column
  double y_mean = 0.0;
};

Standardized standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) throw Error("X and y row counts differ");
  if (X.rows() < 2) throw Error("need at least two rows to fit");
  if (!X.allFinite() || !y.allFinite()) throw Error("non-finite fit input");
  Standardized s;
  const int m = static_cast<int>(X.rows()), g = static_cast<int>(X.cols());
  s.mean = X.colwise().mean();
  s.sd = Eigen::VectorXd::Zero(g);
  s.Xs = Eigen::MatrixXd::Zero(m, g);
  for (int j = 0; j < g; ++j) {
    Eigen::VectorXd c = X.col(j).array() - s.mean(j);
    double var = c.squaredNorm() / m;
    s.sd(j) = std::sqrt(var);
    if (s.sd(j) > 0.0) s.Xs.col(j) = c / s.sd(j);
  }
  s.y_mean = y.mean();
  s.yc = y.array() - s.y_mean;
  return s;
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Coordinate-wise KKT residual of the standardized objective.
double kkt_residual(const Eigen::VectorXd& grad_smooth, const Eigen::VectorXd& ws,
                    double lambda1, int j) {
  if (ws(j) != 0.0)
    return std::abs(grad_smooth(j) + lambda1 * (ws(j) > 0 ? 1.0 : -1.0));
  return std::max(0.0, std::abs(grad_smooth(j)) - lambda1);
}

struct CdResult {
  Eigen::VectorXd ws;
  int sweeps = 0;
  bool converged = false;
};

CdResult coordinate_descent(const Standardized& s, double lambda1, double lambda2,
                            double tol, int max_iter, const Eigen::VectorXd* ws0) {
  const int m = static_cast<int>(s.Xs.rows()), g = static_cast<int>(s.Xs.cols());
  CdResult r;
  r.ws = ws0 ? *ws0 : Eigen::VectorXd::Zero(g);

  // Covariance updates: c = Xs'yc once, gram columns cached on activation.
  Eigen::VectorXd c = s.Xs.transpose() * s.yc;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(g, g);
  std::vector<bool> cached(g, false);
  auto ensure_gram = [&](int j) {
    if (cached[j]) return;
    gram.col(j) = s.Xs.transpose() * s.Xs.col(j);
    cached[j] = true;
  };
  for (int j = 0; j < g; ++j)
    if (r.ws(j) != 0.0) ensure_gram(j);

  auto smooth_gradient = [&]() {
    // -(1/m) Xs'(yc - Xs ws) + lambda2 * ws
    Eigen::VectorXd xw = Eigen::VectorXd::Zero(g);
    for (int j = 0; j < g; ++j)
      if (r.ws(j) != 0.0) {
        ensure_gram(j);
        xw += gram.col(j) * r.ws(j);
      }
    return ((xw - c) / m + lambda2 * r.ws).eval();
  };

  for (int sweep = 0; sweep < max_iter; ++sweep) {
    for (int j = 0; j < g; ++j) {
      if (s.sd(j) == 0.0) continue;  // constant column
      double dot = 0.0;
      for (int k = 0; k < g; ++k) {
        if (k == j || r.ws(k) == 0.0) continue;
        ensure_gram(k);
        dot += gram(j, k) * r.ws(k);
      }
      const double z = (c(j) - dot) / m;  // gram(j,j)/m == 1 by construction
      const double w_new = soft_threshold(z, lambda1) / (1.0 + lambda2);
      if (w_new != 0.0) ensure_gram(j);
      r.ws(j) = w_new;
    }
    r.sweeps = sweep + 1;
    Eigen::VectorXd grad = smooth_gradient();
    bool ok = true;
    for (int j = 0; j < g && ok; ++j) {
      if (s.sd(j) == 0.0) continue;
      if (kkt_residual(grad, r.ws, lambda1, j) > tol) ok = false;
    }
    if (ok) {
      r.converged = true;
      break;
    }
  }
  return r;
}

ElasticNetFit to_original_scale(const Standardized& s, const CdResult& cd,
                                double lambda1, double lambda2) {
  ElasticNetFit fit;
  const int g = static_cast<int>(s.Xs.cols());
  fit.weights = Eigen::VectorXd::Zero(g);
  double offset = 0.0;
  for (int j = 0; j < g; ++j) {
    if (s.sd(j) == 0.0) continue;
    fit.weights(j) = cd.ws(j) / s.sd(j);
    offset += fit.weights(j) * s.mean(j);
  }
  fit.intercept = s.y_mean - offset;
  fit.lambda1 = lambda1;
  fit.lambda2 = lambda2;
  fit.iterations = cd.sweeps;
  fit.converged = cd.converged;
  return fit;
}

Eigen::VectorXd standardized_weights(const Standardized& s, const ElasticNetFit& fit) {
  Eigen::VectorXd ws = Eigen::VectorXd::Zero(fit.weights.size());
  for (int j = 0; j < ws.size(); ++j)
    if (s.sd(j) > 0.0) ws(j) = fit.weights(j) * s.sd(j);
  return ws;
}

}  // namespace

std::vector<int> ElasticNetFit::support(double eps) const {
  std::vector<int> out;
  for (int j = 0; j < weights.size(); ++j)
    if (std::abs(weights(j)) > eps) out.push_back(j);
  return out;
}

ElasticNetFit elastic_net_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              double lambda1, double lambda2, double tol,
                              int max_iter, const ElasticNetFit* warm_start) {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw Error("penalties must be non-negative");
  if (max_iter < 1) throw Error("max_iter must be positive");
  Standardized s = standardize(X, y);
  Eigen::VectorXd ws0;
  const Eigen::VectorXd* ws0p = nullptr;
  if (warm_start) {
    ws0 = standardized_weights(s, *warm_start);
    ws0p = &ws0;
  }
  CdResult cd = coordinate_descent(s, lambda1, lambda2, tol, max_iter, ws0p);
  return to_original_scale(s, cd, lambda1, lambda2);
}

double elastic_net_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const ElasticNetFit& fit) {
  Standardized s = standardize(X, y);
  Eigen::VectorXd ws = standardized_weights(s, fit);
  Eigen::VectorXd resid = s.yc - s.Xs * ws;
  return resid.squaredNorm() / (2.0 * X.rows()) + fit.lambda1 * ws.lpNorm<1>() +
         0.5 * fit.lambda2 * ws.squaredNorm();
}

double lambda1_saturation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Standardized s = standardize(X, y);
  return (s.Xs.transpose() * s.yc).cwiseAbs().maxCoeff() / X.rows();
}

RegularizationPath regularization_path(const Eigen::MatrixXd& X,
                                       const Eigen::VectorXd& y,
                                       const PathConfig& cfg) {
  if (cfg.n_lambdas < 2) throw Error("n_lambdas must be at least 2");
  double lmax = lambda1_saturation(X, y);
  if (lmax <= 0.0) lmax = 1e-3;  // degenerate target; every fit is zero anyway
  const double lmin = lmax * 1e-3;
  std::vector<double> lambdas(cfg.n_lambdas);
  for (int t = 0; t < cfg.n_lambdas; ++t)
    lambdas[t] = lmax * std::pow(lmin / lmax, static_cast<double>(t) /
                                                  (cfg.n_lambdas - 1));

  const int m = static_cast<int>(X.rows());
  const int n_folds = std::min(3, m);

  RegularizationPath path;
  path.points.reserve(cfg.n_lambdas);

  // Warm-started fits on the full data.
  const ElasticNetFit* prev = nullptr;
  for (double l1 : lambdas) {
    ElasticNetFit fit = elastic_net_fit(X, y, l1, cfg.lambda2_ratio * l1, cfg.tol,
                                        cfg.max_iter, prev);
    path.points.push_back({l1, std::move(fit), 0.0});
    prev = &path.points.back().fit;
  }

  // Held-out MSE per lambda over a round-robin fold split.
  std::vector<double> cv(cfg.n_lambdas, 0.0);
  std::vector<int> cv_count(cfg.n_lambdas, 0);
  for (int f = 0; f < n_folds; ++f) {
    std::vector<int> tr, te;
    for (int r = 0; r < m; ++r) (r % n_folds == f ? te : tr).push_back(r);
    if (tr.size() < 2 || te.empty()) continue;
    Eigen::MatrixXd Xtr(tr.size(), X.cols()), Xte(te.size(), X.cols());
    Eigen::VectorXd ytr(tr.size()), yte(te.size());
    for (size_t r = 0; r < tr.size(); ++r) {
      Xtr.row(r) = X.row(tr[r]);
      ytr(r) = y(tr[r]);
    }
    for (size_t r = 0; r < te.size(); ++r) {
      Xte.row(r) = X.row(te[r]);
      yte(r) = y(te[r]);
    }
    ElasticNetFit warm_fit;
    bool has_warm = false;
    for (int t = 0; t < cfg.n_lambdas; ++t) {
      ElasticNetFit fit = elastic_net_fit(Xtr, ytr, lambdas[t],
                                          cfg.lambda2_ratio * lambdas[t], cfg.tol,
                                          cfg.max_iter, has_warm ? &warm_fit : nullptr);
      Eigen::VectorXd pred = (Xte * fit.weights).array() + fit.intercept;
      cv[t] += (pred - yte).squaredNorm();
      cv_count[t] += static_cast<int>(te.size());
      warm_fit = std::move(fit);
      has_warm = true;
    }
  }
  int best = 0;
  for (int t = 0; t < cfg.n_lambdas; ++t) {
    path.points[t].cv_mse = cv_count[t] > 0 ? cv[t] / cv_count[t] : 0.0;
    if (path.points[t].cv_mse < path.points[best].cv_mse) best = t;
  }
  path.best_index = best;
  return path;
}

std::vector<std::string> select_genes(const ResponseMatrix& resp,
                                      const ExpressionMatrix& expr,
                                      const PathConfig& cfg) {
  if (resp.cell_line_ids != expr.cell_line_ids)
    throw Error("response and expression matrices are not aligned");

  // Per-drug fits are independent; run them concurrently and merge the
  // supports in drug order (the union is order-independent anyway).
  auto support_for = [&](int d) -> std::vector<int> {
    std::vector<int> rows;
    for (int p = 0; p < resp.cell_count(); ++p)
      if (resp.observed(p, d)) rows.push_back(p);
    if (rows.size() < 2) return {};
    Eigen::MatrixXd X(rows.size(), expr.gene_count());
    Eigen::VectorXd y(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
      X.row(r) = expr.values.row(rows[r]);
      y(r) = resp.values(rows[r], d);
    }
    auto path = regularization_path(X, y, cfg);
    return path.points[path.best_index].fit.support();
  };

  const int n_drugs = resp.drug_count();
  const unsigned workers = std::max(
      1u, std::min(std::thread::hardware_concurrency() == 0
                       ? 1u
                       : std::thread::hardware_concurrency(),
                   static_cast<unsigned>(n_drugs)));
  std::vector<std::vector<int>> supports(n_drugs);
  std::vector<std::exception_ptr> errors(workers);
  auto worker = [&](unsigned w) {
    try {
      for (int d = static_cast<int>(w); d < n_drugs;
           d += static_cast<int>(workers))
        supports[d] = support_for(d);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers > 1) {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  } else {
    worker(0);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::set<int> selected;
  for (const auto& s : supports)
    for (int j : s) selected.insert(j);
  if (selected.empty())
    throw Error("no genes selected for any drug; weaken the regularization "
                "(more lambdas or a smaller l2 ratio)");
  std::vector<std::string> out;
  for (int j : selected) out.push_back(expr.gene_ids[j]);
  return out;
}

}  // namespace pushrank

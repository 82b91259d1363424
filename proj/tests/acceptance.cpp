// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Each check pins its tolerance in code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "pushrank/data.hpp"
#include "pushrank/elastic_net.hpp"
#include "pushrank/error.hpp"
#include "pushrank/experiment.hpp"
#include "pushrank/labeling.hpp"
#include "pushrank/metrics.hpp"
#include "pushrank/model.hpp"
#include "pushrank/similarity.hpp"
#include "pushrank/splits.hpp"
#include "pushrank/synthetic.hpp"
#include "test_support.hpp"

using namespace pushrank;
namespace me = pushrank::metrics;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;
std::vector<std::vector<double>> g_traces;  // every training run in the suite

void record_traces(const GridPointResult& r) {
  for (const auto& t : r.loss_traces) g_traces.push_back(t);
}

void report(int criterion, bool pass, const std::string& what, double seconds) {
  std::printf("[%s] criterion %2d: %s (%.2fs)\n", pass ? "PASS" : "FAIL",
              criterion, what.c_str(), seconds);
  if (!pass) ++g_failures;
}

struct Timer {
  Clock::time_point start = Clock::now();
  double seconds() const {
    return std::chrono::duration<double>(Clock::now() - start).count();
  }
};

// ---------------------------------------------------------------------------

void criterion_gradients() {
  Timer timer;
  double worst = 0.0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    auto inst = test_support::random_instance(seed, 6, 12, 3);
    const LossWeights w{0.4, 0.3, 2.0};  // all four terms active
    auto g = gradients(inst.model, inst.labels, &inst.sim, w);
    const double h = 1e-5;
    auto check = [&](Eigen::MatrixXd& M, const Eigen::MatrixXd& G) {
      for (int c = 0; c < M.cols(); ++c)
        for (int r = 0; r < M.rows(); ++r) {
          const double keep = M(r, c);
          M(r, c) = keep + h;
          const double up = surrogate_loss(inst.model, inst.labels, &inst.sim, w);
          M(r, c) = keep - h;
          const double dn = surrogate_loss(inst.model, inst.labels, &inst.sim, w);
          M(r, c) = keep;
          const double fd = (up - dn) / (2.0 * h);
          const double a = G(r, c);
          if (std::abs(a) < 1e-12 && std::abs(fd) < 1e-12) continue;
          worst = std::max(worst, std::abs(a - fd) /
                                      std::max(std::abs(a), std::abs(fd)));
        }
    };
    check(inst.model.U, g.dU);
    check(inst.model.V, g.dV);
  }
  const double secs = timer.seconds();
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "analytic gradients vs central differences, max rel err %.3g "
                "(<= 1e-5) on 20 instances", worst);
  report(1, worst <= 1e-5 && secs < 10.0, buf, secs);
}

void criterion_loss_oracle() {
  Timer timer;
  double worst = 0.0;
  for (uint64_t seed = 40; seed < 60; ++seed) {
    auto inst = test_support::random_instance(seed, 6, 12, 3);
    const LossWeights w{0.35, 0.2, 1.2};
    const double lib = surrogate_loss(inst.model, inst.labels, &inst.sim, w);
    const double ora = test_support::oracle_loss(inst.model.U, inst.model.V,
                                                 inst.labels, &inst.W, w);
    worst = std::max(worst, std::abs(lib - ora));
  }
  const double secs = timer.seconds();
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "loss vs brute-force evaluator, max abs diff %.3g (<= 1e-10) "
                "on 20 instances", worst);
  report(2, worst <= 1e-10 && secs < 5.0, buf, secs);
}

void criterion_metric_oracles() {
  Timer timer;
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  bool ok = true;
  for (int trial = 0; trial < 100 && ok; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);  // up to 8
    std::vector<double> truth(n), pred(n);
    std::vector<Label> labels(n);
    std::vector<bool> is_new(n);
    auto ids = test_support::make_ids("D", n);
    for (int i = 0; i < n; ++i) {
      truth[i] = std::round(val(rng) * 4.0) / 4.0;
      pred[i] = std::round(val(rng) * 4.0) / 4.0;
      labels[i] = (rng() % 2) ? Label::Sensitive : Label::Insensitive;
      is_new[i] = rng() % 2;
    }
    const int k = 1 + static_cast<int>(rng() % n);

    auto close = [](std::optional<double> a, std::optional<double> b) {
      if (a.has_value() != b.has_value()) return false;
      if (!a) return true;
      return std::abs(*a - *b) <= 1e-12;
    };
    ok = ok && close(me::concordance_index(truth, pred),
                     test_support::oracle_ci(truth, pred));
    ok = ok && close(me::sensitive_ci(truth, pred, labels),
                     test_support::oracle_sci(truth, pred, labels));

    std::vector<size_t> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (pred[a] != pred[b]) return pred[a] > pred[b];
      return ids[a] < ids[b];
    });
    std::vector<Label> ranked;
    for (size_t i : order) ranked.push_back(labels[i]);
    ok = ok && std::abs(me::ap_at_k(ranked, k) -
                        test_support::oracle_ap_at_k(ranked, k)) <= 1e-12;
    ok = ok && me::ah_at_k(ranked, k) == test_support::oracle_ah_at_k(ranked, k);
    ok = ok && std::abs(me::at_k(truth, pred, ids, k) -
                        test_support::oracle_at_k(truth, pred, ids, k)) <= 1e-12;
    ok = ok && close(me::nt_k(truth, pred, ids, is_new, k),
                     test_support::oracle_nt_k(truth, pred, ids, is_new, k));
  }
  const double secs = timer.seconds();
  report(3, ok && secs < 10.0,
         "ci/sci/ap@k/ah@k/at@k/nt@k vs exhaustive oracles on 100 instances",
         secs);
}

// Shared setup for criteria 4 and 5.
ExperimentConfig planted_kfold_config(const ResponseMatrix& resp,
                                      const std::string& dir) {
  ExperimentConfig cfg;
  cfg.response_path = dir + "/response.csv";
  write_response(resp, cfg.response_path);
  cfg.theta = 10.0;
  cfg.protocol = Protocol::Kfold;
  cfg.k_list = {5};
  cfg.folds = 5;
  cfg.latent_dims = {5};
  cfg.alphas = {0.0};
  cfg.betas = {0.1};
  cfg.gammas = {0.0};
  cfg.optimizer.learning_rate = 0.3;
  cfg.optimizer.max_epochs = 800;
  cfg.optimizer.convergence_tol = 1e-9;
  cfg.optimizer.sample_repeats = 5;
  cfg.seed = 2024;
  cfg.use_gene_selection = false;
  return cfg;
}

double summary_value(const GridPointResult& r, const std::string& name) {
  for (const auto& [n, mean] : r.summary)
    if (n == name) return mean.has_value() ? mean.value : std::nan("");
  return std::nan("");
}

// Random-ranking baseline with the same splits, labels, and aggregation.
struct RandomBaseline {
  double ap_mean;
  double ah_q975;
};

RandomBaseline random_ranking_baseline(const ResponseMatrix& resp, int folds,
                                       double theta, uint64_t seed, int k,
                                       int trials) {
  // per (fold, cell): the multiset of test labels
  std::vector<std::vector<std::vector<Label>>> fold_cell_labels(folds);
  auto split = kfold_split(resp, folds, seed);
  for (int f = 0; f < folds; ++f) {
    auto train = fold_train_matrix(resp, split, f);
    auto test = fold_test_matrix(resp, split, f);
    auto [lab_tr, lab_te] = label_train_test(train, test, theta);
    (void)lab_tr;
    for (int p = 0; p < resp.cell_count(); ++p) {
      std::vector<Label> labels;
      for (int i : test.observed_drugs(p)) labels.push_back(lab_te.at(p, i));
      fold_cell_labels[f].push_back(std::move(labels));
    }
  }

  std::mt19937_64 rng(seed ^ 0xabcdef12345ULL);
  std::vector<double> ap_trials, ah_trials;
  for (int t = 0; t < trials; ++t) {
    std::vector<std::optional<double>> ap_fold_means, ah_fold_means;
    for (int f = 0; f < folds; ++f) {
      std::vector<std::optional<double>> aps, ahs;
      for (auto labels : fold_cell_labels[f]) {
        if (labels.empty()) {
          aps.push_back(std::nullopt);
          ahs.push_back(std::nullopt);
          continue;
        }
        const bool any = std::any_of(labels.begin(), labels.end(), [](Label l) {
          return l == Label::Sensitive;
        });
        if (!any) {
          aps.push_back(std::nullopt);
          ahs.push_back(std::nullopt);
          continue;
        }
        std::shuffle(labels.begin(), labels.end(), rng);
        aps.push_back(me::ap_at_k(labels, k));
        ahs.push_back(static_cast<double>(me::ah_at_k(labels, k)));
      }
      auto am = me::mean_defined(aps);
      auto hm = me::mean_defined(ahs);
      ap_fold_means.push_back(am.has_value() ? std::optional<double>(am.value)
                                             : std::nullopt);
      ah_fold_means.push_back(hm.has_value() ? std::optional<double>(hm.value)
                                             : std::nullopt);
    }
    ap_trials.push_back(me::mean_defined(ap_fold_means).value);
    ah_trials.push_back(me::mean_defined(ah_fold_means).value);
  }
  double ap_mean = 0.0;
  for (double v : ap_trials) ap_mean += v;
  ap_mean /= ap_trials.size();
  std::sort(ah_trials.begin(), ah_trials.end());
  const size_t idx = static_cast<size_t>(std::ceil(0.975 * ah_trials.size())) - 1;
  return {ap_mean, ah_trials[idx]};
}

void criterion_planted_recovery(const std::string& dir) {
  Timer timer;
  auto data = generate_synthetic(40, 60, 5, 0.05, 0.2, 2024);
  auto cfg = planted_kfold_config(data.response, dir);
  auto result = run_grid_point(data.response, nullptr, cfg, cfg.grid()[0]);
  record_traces(result);
  const double model_ap = summary_value(result, "ap@5");
  const double model_ah = summary_value(result, "ah@5");
  auto baseline = random_ranking_baseline(data.response, cfg.folds, cfg.theta,
                                          cfg.seed, 5, 1000);
  const bool pass = model_ap >= 2.0 * baseline.ap_mean &&
                    model_ah > baseline.ah_q975;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "planted recovery: AP@5 %.3f vs 2x random %.3f, AH@5 %.3f vs "
                "97.5th pct %.3f", model_ap, 2.0 * baseline.ap_mean, model_ah,
                baseline.ah_q975);
  const double secs = timer.seconds();
  report(4, pass && secs < 300.0, buf, secs);
}

void criterion_push_direction(const std::string& dir) {
  Timer timer;
  auto data = generate_synthetic(40, 60, 5, 0.05, 0.2, 2024);
  auto cfg = planted_kfold_config(data.response, dir);
  double mean_push = 0.0, mean_order = 0.0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    auto push = run_grid_point(data.response, nullptr, cfg, {5, 0.0, 0.1, 0.0});
    auto order = run_grid_point(data.response, nullptr, cfg, {5, 1.0, 0.1, 0.0});
    record_traces(push);
    record_traces(order);
    mean_push += summary_value(push, "ap@5");
    mean_order += summary_value(order, "ap@5");
  }
  mean_push /= 5.0;
  mean_order /= 5.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "push direction: mean AP@5 %.3f at alpha=0 vs %.3f at alpha=1 "
                "over 5 seeds", mean_push, mean_order);
  report(5, mean_push > mean_order, buf, timer.seconds());
}

// Two latent clusters sharing cell-line vectors; expression encodes the
// cluster, observations are scarce so pooling through the similarity
// regularizer matters.
SyntheticData cluster_dataset(uint64_t seed) {
  const int m = 40, n = 60, l = 4, genes = 8;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Eigen::MatrixXd centers(l, 2);
  for (int c = 0; c < 2; ++c)
    for (int r = 0; r < l; ++r) centers(r, c) = normal(rng);
  Eigen::MatrixXd U(l, m);
  for (int p = 0; p < m; ++p) U.col(p) = centers.col(p < m / 2 ? 0 : 1);
  Eigen::MatrixXd V(l, n);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < l; ++r) V(r, i) = normal(rng);

  SyntheticData out;
  out.response.cell_line_ids = test_support::make_ids("CL", m);
  out.response.drug_ids = test_support::make_ids("D", n);
  out.response.values = Eigen::MatrixXd(m, n);
  for (int p = 0; p < m; ++p)
    for (int i = 0; i < n; ++i)
      out.response.values(p, i) = -U.col(p).dot(V.col(i)) + 0.3 * normal(rng);

  out.expression.cell_line_ids = out.response.cell_line_ids;
  out.expression.gene_ids = test_support::make_ids("G", genes);
  out.expression.values = Eigen::MatrixXd(m, genes);
  for (int p = 0; p < m; ++p)
    for (int g = 0; g < genes; ++g) {
      const bool mine = (p < m / 2) == (g < genes / 2);
      out.expression.values(p, g) = (mine ? 1.0 : 0.0) + 0.05 * normal(rng);
    }

  // Scarce observations per cell line so that pooling matters; every drug
  // keeps enough coverage to stay trainable after the holdout.
  for (int attempt = 0; attempt < 100; ++attempt) {
    out.response.observed = BoolMask::Constant(m, n, false);
    for (int p = 0; p < m; ++p)
      for (int i = 0; i < n; ++i)
        out.response.observed(p, i) = unit(rng) < 0.22;
    bool ok = true;
    for (int p = 0; p < m && ok; ++p)
      if (out.response.observed.row(p).count() < 6) ok = false;
    for (int i = 0; i < n && ok; ++i)
      if (out.response.observed.col(i).count() < 4) ok = false;
    if (ok) break;
    if (attempt == 99) throw Error("cluster mask resampling failed");
  }
  for (int p = 0; p < m; ++p)
    for (int i = 0; i < n; ++i)
      if (!out.response.observed(p, i)) out.response.values(p, i) = 0.0;
  out.response.validate();
  out.expression.validate();
  out.planted = LatentModel{std::move(U), std::move(V),
                            out.response.cell_line_ids, out.response.drug_ids};
  return out;
}

void criterion_similarity_regularizer(const std::string& dir) {
  Timer timer;
  double mean_with = 0.0, mean_without = 0.0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    auto data = cluster_dataset(seed);
    ExperimentConfig cfg;
    cfg.response_path = dir + "/cluster_response.csv";
    write_response(data.response, cfg.response_path);
    cfg.theta = 25.0;
    cfg.protocol = Protocol::Holdout;
    cfg.k_list = {5};
    cfg.n_new = 4;
    cfg.threshold_pct = 50.0;
    cfg.top_k_neighbors = 10;
    cfg.latent_dims = {4};
    cfg.alphas = {0.0};
    cfg.betas = {0.1};
    cfg.gammas = {0.0};
    cfg.optimizer.learning_rate = 0.2;
    cfg.optimizer.max_epochs = 250;
    cfg.optimizer.convergence_tol = 1e-9;
    cfg.optimizer.sample_repeats = 3;
    cfg.seed = seed;
    cfg.use_gene_selection = false;
    // Cosine keeps the two expression clusters nearly orthogonal, so the
    // regularizer only ties cluster mates together.
    auto sim = cosine_similarity(data.expression.values,
                                 data.expression.cell_line_ids);
    auto with = run_grid_point(data.response, &sim, cfg, {4, 0.0, 0.1, 100.0});
    auto without = run_grid_point(data.response, &sim, cfg, {4, 0.0, 0.1, 0.0});
    record_traces(with);
    record_traces(without);
    mean_with += summary_value(with, "ap@5");
    mean_without += summary_value(without, "ap@5");
  }
  mean_with /= 5.0;
  mean_without /= 5.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "similarity regularizer: holdout mean AP@5 %.3f at gamma=100 "
                "vs %.3f at gamma=0 over 5 seeds", mean_with, mean_without);
  report(6, mean_with > mean_without, buf, timer.seconds());
}

void criterion_cold_start() {
  Timer timer;
  auto data = generate_synthetic(12, 20, 3, 0.05, 0.1, 77);
  auto labels = label_train_test(data.response, data.response, 25.0).first;
  auto tl = TrainingLabels::from(data.response, labels);
  OptimizerConfig oc;
  oc.max_epochs = 60;
  oc.seed = 5;
  auto tr = train(data.response, tl, nullptr, 3, {0.0, 0.1, 0.0}, oc);
  g_traces.push_back(tr.loss_trace);

  // A new cell line with expression identical to training cell line 4.
  const int twin = 4;
  const double gamma = median_heuristic_gamma(data.expression.values);
  Eigen::VectorXd sim_vec(12);
  for (int q = 0; q < 12; ++q) {
    const double d2 = (data.expression.values.row(twin) -
                       data.expression.values.row(q)).squaredNorm();
    sim_vec(q) = std::exp(-gamma * d2);
  }
  auto u = extrapolate_cell_line(tr.model, sim_vec, 1);
  std::vector<int> all(20);
  for (int i = 0; i < 20; ++i) all[i] = i;
  auto ranked_new = rank_drugs_for_vector(tr.model, u, all);
  auto ranked_twin = rank_drugs(tr.model, twin, all);
  bool same = true;
  for (size_t r = 0; r < ranked_new.size(); ++r)
    if (ranked_new[r].id != ranked_twin[r].id) same = false;
  const bool exact_vector =
      (u - tr.model.U.col(twin)).cwiseAbs().maxCoeff() == 0.0;
  report(7, same && exact_vector,
         "cold start: a twin cell line reproduces the training ranking exactly",
         timer.seconds());
}

void criterion_elastic_net() {
  Timer timer;
  bool ols_ok = true;
  {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::MatrixXd X(5, 3);
      Eigen::VectorXd y(5);
      for (int r = 0; r < 5; ++r) {
        for (int c = 0; c < 3; ++c) X(r, c) = normal(rng);
        y(r) = normal(rng);
      }
      auto fit = elastic_net_fit(X, y, 0.0, 0.0, 1e-10, 20000);
      Eigen::MatrixXd A(5, 4);
      A.col(0).setOnes();
      A.rightCols(3) = X;
      Eigen::VectorXd beta = (A.transpose() * A).ldlt().solve(A.transpose() * y);
      if (std::abs(fit.intercept - beta(0)) > 1e-8) ols_ok = false;
      for (int c = 0; c < 3; ++c)
        if (std::abs(fit.weights(c) - beta(c + 1)) > 1e-8) ols_ok = false;
    }
  }

  int recoveries = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd X(60, 20);
    for (int r = 0; r < 60; ++r)
      for (int c = 0; c < 20; ++c) X(r, c) = normal(rng);
    Eigen::VectorXd y(60);
    for (int r = 0; r < 60; ++r)
      y(r) = 3.0 * X(r, 2) - 2.0 * X(r, 7) + 0.01 * normal(rng);
    PathConfig cfg;
    cfg.n_lambdas = 30;
    cfg.lambda2_ratio = 0.1;
    auto path = regularization_path(X, y, cfg);
    auto support = path.points[path.best_index].fit.support();
    const bool has2 = std::find(support.begin(), support.end(), 2) != support.end();
    const bool has7 = std::find(support.begin(), support.end(), 7) != support.end();
    if (has2 && has7 && support.size() <= 6) ++recoveries;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "elastic net: OLS match %s, planted support recovered %d/10 "
                "(need >= 8)", ols_ok ? "ok" : "FAILED", recoveries);
  report(8, ols_ok && recoveries >= 8, buf, timer.seconds());
}

void criterion_monotone_traces() {
  Timer timer;
  bool ok = !g_traces.empty();
  size_t checked = 0;
  for (const auto& trace : g_traces) {
    for (size_t t = 1; t < trace.size(); ++t)
      if (trace[t] > trace[t - 1]) ok = false;
    ++checked;
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "loss traces non-increasing on all %zu training runs in the suite",
                checked);
  report(9, ok, buf, timer.seconds());
}

void criterion_determinism(const std::string& dir) {
  Timer timer;
  auto data = generate_synthetic(16, 20, 2, 0.05, 0.15, 11);
  ExperimentConfig cfg;
  cfg.response_path = dir + "/det_response.csv";
  cfg.expression_path = dir + "/det_expression.csv";
  write_response(data.response, cfg.response_path);
  write_expression(data.expression, cfg.expression_path);
  cfg.theta = 20.0;
  cfg.protocol = Protocol::Kfold;
  cfg.k_list = {3};
  cfg.folds = 3;
  cfg.latent_dims = {2};
  cfg.alphas = {0.0};
  cfg.betas = {0.1};
  cfg.gammas = {1.0};
  cfg.optimizer.max_epochs = 40;
  cfg.seed = 31;
  cfg.use_gene_selection = false;

  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  cfg.out_dir = dir + "/det_a";
  auto a = run_experiment(cfg);
  for (const auto& r : a.results) record_traces(r);
  cfg.out_dir = dir + "/det_b";
  auto b = run_experiment(cfg);
  bool same = a.written_files.size() == b.written_files.size();
  if (same)
    for (size_t i = 0; i < a.written_files.size(); ++i)
      if (slurp(a.written_files[i]) != slurp(b.written_files[i])) same = false;
  report(10, same, "identical config and seed give byte-identical reports",
         timer.seconds());
}

}  // namespace

int main() {
  const auto dir =
      (std::filesystem::temp_directory_path() / "pushrank_acceptance").string();
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  try {
    criterion_gradients();
    criterion_loss_oracle();
    criterion_metric_oracles();
    criterion_planted_recovery(dir);
    criterion_push_direction(dir);
    criterion_similarity_regularizer(dir);
    criterion_cold_start();
    criterion_elastic_net();
    criterion_monotone_traces();
    criterion_determinism(dir);
  } catch (const std::exception& e) {
    std::printf("[FAIL] suite aborted: %s\n", e.what());
    return 1;
  }
  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criteria failed\n", g_failures);
  return 1;
}

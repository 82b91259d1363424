#include "pushrank/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pushrank/csv.hpp"
#include "pushrank/error.hpp"
#include "pushrank/labeling.hpp"
#include "pushrank/splits.hpp"

namespace pushrank {

namespace {

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

template <typename F>
auto with_stage(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error("[stage " + stage + "] " + e.what());
  }
}

uint64_t fold_seed(uint64_t base, int fold) {
  return base + 1000003ULL * static_cast<uint64_t>(fold);
}

}  // namespace

Protocol protocol_from_string(const std::string& s) {
  if (s == "kfold") return Protocol::Kfold;
  if (s == "transductive") return Protocol::Transductive;
  if (s == "holdout") return Protocol::Holdout;
  throw Error("unknown protocol '" + s + "' (kfold|transductive|holdout)");
}

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::Kfold: return "kfold";
    case Protocol::Transductive: return "transductive";
    case Protocol::Holdout: return "holdout";
  }
  return "?";
}

std::string GridPoint::tag() const {
  return "l" + std::to_string(latent_dim) + "_a" + short_num(alpha) + "_b" +
         short_num(beta) + "_g" + short_num(gamma);
}

bool GridPoint::operator<(const GridPoint& o) const {
  if (latent_dim != o.latent_dim) return latent_dim < o.latent_dim;
  if (alpha != o.alpha) return alpha < o.alpha;
  if (beta != o.beta) return beta < o.beta;
  return gamma < o.gamma;
}

std::vector<GridPoint> ExperimentConfig::grid() const {
  std::vector<GridPoint> out;
  for (int l : latent_dims)
    for (double a : alphas)
      for (double b : betas)
        for (double g : gammas) out.push_back({l, a, b, g});
  return out;
}

void ExperimentConfig::validate() const {
  if (response_path.empty()) throw Error("response path is required");
  if (latent_dims.empty() || alphas.empty() || betas.empty() || gammas.empty())
    throw Error("grid lists must be non-empty");
  if (k_list.empty()) throw Error("k list must be non-empty");
  if (folds < 2 && protocol != Protocol::Holdout)
    throw Error("fold count must be at least 2");
  if (!(theta > 0.0 && theta < 100.0))
    throw Error("theta must lie strictly between 0 and 100");
  if (protocol == Protocol::Holdout && expression_path.empty())
    throw Error("the holdout protocol requires expression data");
  optimizer.validate();
}

namespace {

std::vector<std::string> metric_names_for(const ExperimentConfig& cfg) {
  std::vector<std::string> names;
  for (int k : cfg.k_list) names.push_back("ap@" + std::to_string(k));
  for (int k : cfg.k_list) names.push_back("ah@" + std::to_string(k));
  names.push_back("ci");
  names.push_back("sci");
  if (cfg.protocol == Protocol::Transductive) {
    for (int k : cfg.k_list) names.push_back("at@" + std::to_string(k));
    for (int k : cfg.k_list) names.push_back("nt@" + std::to_string(k));
  }
  return names;
}

struct RankedEval {
  std::vector<Label> ranked_labels;     // predicted order, best first
  std::vector<double> truth, predicted; // aligned by drug subset order
  std::vector<Label> labels;
  std::vector<std::string> ids;
  std::vector<bool> is_new;
};

// Base metrics shared by every protocol. Cells without any sensitive drug
// among the evaluated set are excluded from ap/ah (and sci degenerates).
void fill_common_metrics(const ExperimentConfig& cfg, const RankedEval& ev,
                         CellRow& row, size_t& slot) {
  const bool any_sensitive =
      std::any_of(ev.ranked_labels.begin(), ev.ranked_labels.end(),
                  [](Label l) { return l == Label::Sensitive; });
  for (int k : cfg.k_list) {
    if (any_sensitive) row.values[slot] = metrics::ap_at_k(ev.ranked_labels, k);
    ++slot;
  }
  for (int k : cfg.k_list) {
    if (any_sensitive)
      row.values[slot] = static_cast<double>(metrics::ah_at_k(ev.ranked_labels, k));
    ++slot;
  }
  row.values[slot++] = metrics::concordance_index(ev.truth, ev.predicted);
  row.values[slot++] = metrics::sensitive_ci(ev.truth, ev.predicted, ev.labels);
}

}  // namespace

SimilarityMatrix build_experiment_similarity(const ResponseMatrix& resp,
                                             const ExpressionMatrix& expr,
                                             const ExperimentConfig& cfg) {
  check_alignment(resp, expr);
  Eigen::MatrixXd features = expr.values;
  if (cfg.use_gene_selection) {
    auto genes = with_stage("select-genes", [&] {
      return select_genes(resp, expr, cfg.gene_selection);
    });
    features.resize(expr.cell_count(), genes.size());
    for (size_t c = 0; c < genes.size(); ++c)
      features.col(c) = expr.values.col(expr.gene_index(genes[c]));
  }
  return with_stage("similarity", [&]() -> SimilarityMatrix {
    if (cfg.similarity_kind == "cosine")
      return cosine_similarity(features, expr.cell_line_ids);
    if (cfg.similarity_kind == "rbf")
      return rbf_similarity(features, expr.cell_line_ids,
                            cfg.sim_gamma ? *cfg.sim_gamma
                                          : median_heuristic_gamma(features));
    throw Error("unknown similarity kind '" + cfg.similarity_kind + "'");
  });
}

GridPointResult run_grid_point(const ResponseMatrix& resp,
                               const SimilarityMatrix* sim,
                               const ExperimentConfig& cfg, const GridPoint& gp) {
  GridPointResult result;
  result.point = gp;
  result.metric_names = metric_names_for(cfg);
  const LossWeights weights{gp.alpha, gp.beta, gp.gamma};
  if ((gp.gamma > 0.0 || cfg.protocol == Protocol::Holdout) && !sim)
    throw Error("[stage similarity] similarity matrix required (gamma > 0 or holdout)");

  if (cfg.protocol == Protocol::Holdout) {
    const double threshold = with_stage("split", [&] {
      return offdiagonal_percentile(*sim, cfg.threshold_pct);
    });
    const HoldoutSplit hs = with_stage("split", [&] {
      return holdout_split(resp, *sim, cfg.n_new, threshold, cfg.seed);
    });
    const ResponseMatrix train_resp = with_stage("split", [&] {
      return restrict_to(resp, hs.train_cell_lines, resp.drug_ids);
    });
    const auto train_labels = with_stage("label", [&] {
      return label_train_test(train_resp, train_resp, cfg.theta).first;
    });
    const auto tl = TrainingLabels::from(train_resp, train_labels);
    SimilarityMatrix sim_train = restrict_similarity(*sim, hs.train_cell_lines);
    OptimizerConfig oc = cfg.optimizer;
    oc.seed = fold_seed(cfg.seed, 0);
    const TrainResult tr = with_stage("train", [&] {
      return train(train_resp, tl, gp.gamma > 0.0 ? &sim_train : nullptr,
                   gp.latent_dim, weights, oc);
    });
    result.loss_traces.push_back(tr.loss_trace);

    FoldReport report;
    report.name = "holdout";
    for (const auto& test_id : hs.test_cell_lines) {
      const int p = resp.cell_index(test_id);
      CellRow row;
      row.cell_line = test_id;
      row.values.assign(result.metric_names.size(), std::nullopt);
      Eigen::VectorXd sim_vec(static_cast<int>(hs.train_cell_lines.size()));
      for (size_t q = 0; q < hs.train_cell_lines.size(); ++q)
        sim_vec(q) = sim->values(p, resp.cell_index(hs.train_cell_lines[q]));
      const auto obs = resp.observed_drugs(p);
      if (!obs.empty()) {
        const Eigen::VectorXd u = with_stage("rank", [&] {
          return extrapolate_cell_line(tr.model, sim_vec, cfg.top_k_neighbors);
        });
        const auto ranked = rank_drugs_for_vector(tr.model, u, obs);
        std::vector<double> values;
        for (int i : obs) values.push_back(resp.values(p, i));
        const double thr = percentile_threshold(values, cfg.theta);
        RankedEval ev;
        for (const auto& rd : ranked)
          ev.ranked_labels.push_back(resp.values(p, rd.index) < thr
                                         ? Label::Sensitive
                                         : Label::Insensitive);
        for (size_t t = 0; t < obs.size(); ++t) {
          ev.truth.push_back(resp.values(p, obs[t]));
          ev.predicted.push_back(u.dot(tr.model.V.col(obs[t])));
          ev.labels.push_back(ev.truth.back() < thr ? Label::Sensitive
                                                    : Label::Insensitive);
        }
        size_t slot = 0;
        fill_common_metrics(cfg, ev, row, slot);
      }
      report.cells.push_back(std::move(row));
    }
    result.folds.push_back(std::move(report));
  } else {
    const FoldSplit split = with_stage("split", [&] {
      return kfold_split(resp, cfg.folds, cfg.seed);
    });
    for (int f = 0; f < cfg.folds; ++f) {
      const ResponseMatrix train_resp = fold_train_matrix(resp, split, f);
      const ResponseMatrix test_resp = fold_test_matrix(resp, split, f);
      const auto [lab_train, lab_test] = with_stage("label", [&] {
        return label_train_test(train_resp, test_resp, cfg.theta);
      });
      const auto tl = TrainingLabels::from(train_resp, lab_train);
      OptimizerConfig oc = cfg.optimizer;
      oc.seed = fold_seed(cfg.seed, f);
      const TrainResult tr = with_stage("train", [&] {
        return train(train_resp, tl, gp.gamma > 0.0 ? sim : nullptr,
                     gp.latent_dim, weights, oc);
      });
      result.loss_traces.push_back(tr.loss_trace);

      FoldReport report;
      report.name = "fold" + std::to_string(f);
      for (int p = 0; p < resp.cell_count(); ++p) {
        CellRow row;
        row.cell_line = resp.cell_line_ids[p];
        row.values.assign(result.metric_names.size(), std::nullopt);
        if (cfg.protocol == Protocol::Kfold) {
          const auto test_drugs = test_resp.observed_drugs(p);
          if (!test_drugs.empty()) {
            const auto ranked = rank_drugs(tr.model, p, test_drugs);
            RankedEval ev;
            for (const auto& rd : ranked)
              ev.ranked_labels.push_back(lab_test.at(p, rd.index));
            for (int i : test_drugs) {
              ev.truth.push_back(test_resp.values(p, i));
              ev.predicted.push_back(score(tr.model, p, i));
              ev.labels.push_back(lab_test.at(p, i));
            }
            size_t slot = 0;
            fill_common_metrics(cfg, ev, row, slot);
          }
        } else {  // transductive: rank training and testing drugs together
          const auto all_obs = resp.observed_drugs(p);
          const auto ranked = rank_drugs(tr.model, p, all_obs);
          RankedEval ev;
          auto label_of = [&](int i) {
            return split.assignment(p, i) == f ? lab_test.at(p, i)
                                               : lab_train.at(p, i);
          };
          for (const auto& rd : ranked) ev.ranked_labels.push_back(label_of(rd.index));
          for (int i : all_obs) {
            ev.truth.push_back(resp.values(p, i));
            ev.predicted.push_back(score(tr.model, p, i));
            ev.labels.push_back(label_of(i));
            ev.ids.push_back(resp.drug_ids[i]);
            ev.is_new.push_back(split.assignment(p, i) == f);
          }
          size_t slot = 0;
          fill_common_metrics(cfg, ev, row, slot);
          const int n_obs = static_cast<int>(all_obs.size());
          for (int k : cfg.k_list) {
            if (n_obs >= k)
              row.values[slot] = metrics::at_k(ev.truth, ev.predicted, ev.ids, k);
            ++slot;
          }
          for (int k : cfg.k_list) {
            if (n_obs >= k)
              row.values[slot] =
                  metrics::nt_k(ev.truth, ev.predicted, ev.ids, ev.is_new, k);
            ++slot;
          }
        }
        report.cells.push_back(std::move(row));
      }
      result.folds.push_back(std::move(report));
    }
  }

  // Mean over fold means; excluded counts accumulate over (fold, cell) rows.
  for (size_t mi = 0; mi < result.metric_names.size(); ++mi) {
    std::vector<std::optional<double>> fold_means;
    int excluded = 0;
    for (const auto& fold : result.folds) {
      std::vector<std::optional<double>> cells;
      for (const auto& row : fold.cells) cells.push_back(row.values[mi]);
      auto fm = metrics::mean_defined(cells);
      excluded += fm.excluded;
      fold_means.push_back(fm.has_value() ? std::optional<double>(fm.value)
                                          : std::nullopt);
    }
    auto overall = metrics::mean_defined(fold_means);
    overall.excluded = excluded;
    result.summary.emplace_back(result.metric_names[mi], overall);
  }
  return result;
}

namespace {

using nlohmann::json;

std::vector<std::string> cells_csv_lines(const GridPointResult& r,
                                         const FoldReport& fold,
                                         const ExperimentConfig& cfg) {
  std::vector<std::string> lines;
  lines.push_back("# protocol=" + to_string(cfg.protocol) +
                  " seed=" + std::to_string(cfg.seed) + " theta=" +
                  short_num(cfg.theta) + " latent_dim=" +
                  std::to_string(r.point.latent_dim) + " alpha=" +
                  short_num(r.point.alpha) + " beta=" + short_num(r.point.beta) +
                  " gamma=" + short_num(r.point.gamma) + " " + fold.name);
  std::string header = "cell_line";
  for (const auto& name : r.metric_names) header += "," + name;
  lines.push_back(header);
  for (const auto& row : fold.cells) {
    std::string line = row.cell_line;
    for (const auto& v : row.values)
      line += "," + (v ? csv::format_double(*v) : std::string("NA"));
    lines.push_back(line);
  }
  std::string mean_line = "MEAN";
  std::string excl_line = "EXCLUDED";
  for (size_t mi = 0; mi < r.metric_names.size(); ++mi) {
    std::vector<std::optional<double>> cells;
    for (const auto& row : fold.cells) cells.push_back(row.values[mi]);
    auto m = metrics::mean_defined(cells);
    mean_line += "," + (m.has_value() ? csv::format_double(m.value)
                                      : std::string("NA"));
    excl_line += "," + std::to_string(m.excluded);
  }
  lines.push_back(mean_line);
  lines.push_back(excl_line);
  return lines;
}

std::string aligned(const std::string& s, size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, bool with_best) {
  cfg.validate();
  ExperimentOutcome outcome;
  const ResponseMatrix resp = with_stage("load", [&] {
    return load_response(cfg.response_path);
  });

  const bool need_sim = cfg.protocol == Protocol::Holdout ||
                        std::any_of(cfg.gammas.begin(), cfg.gammas.end(),
                                    [](double g) { return g > 0.0; });
  SimilarityMatrix sim;
  if (need_sim) {
    if (cfg.expression_path.empty())
      throw Error("[stage similarity] expression data required "
                  "(non-zero gamma or holdout protocol)");
    const ExpressionMatrix expr = with_stage("load", [&] {
      return load_expression(cfg.expression_path);
    });
    sim = build_experiment_similarity(resp, expr, cfg);
  }

  std::filesystem::create_directories(cfg.out_dir);
  const auto grid = cfg.grid();
  for (const auto& gp : grid) {
    GridPointResult result;
    try {
      result = run_grid_point(resp, need_sim ? &sim : nullptr, cfg, gp);
    } catch (const Error& e) {
      throw Error("grid point " + gp.tag() + ": " + e.what());
    }
    for (const auto& fold : result.folds) {
      const std::string path =
          cfg.out_dir + "/cells_" + gp.tag() + "_" + fold.name + ".csv";
      csv::write_lines(path, cells_csv_lines(result, fold, cfg));
      outcome.written_files.push_back(path);
    }
    outcome.results.push_back(std::move(result));
  }

  // summary.csv: one row per grid point, full parameter tuple and seed.
  {
    std::vector<std::string> lines;
    std::string header = "protocol,seed,theta,latent_dim,alpha,beta,gamma";
    const auto& names = outcome.results.front().metric_names;
    for (const auto& n : names) header += "," + n;
    for (const auto& n : names) header += "," + n + "_excluded";
    lines.push_back(header);
    for (const auto& r : outcome.results) {
      std::string line = to_string(cfg.protocol) + "," + std::to_string(cfg.seed) +
                         "," + csv::format_double(cfg.theta) + "," +
                         std::to_string(r.point.latent_dim) + "," +
                         csv::format_double(r.point.alpha) + "," +
                         csv::format_double(r.point.beta) + "," +
                         csv::format_double(r.point.gamma);
      for (const auto& [name, mean] : r.summary)
        line += "," + (mean.has_value() ? csv::format_double(mean.value)
                                        : std::string("NA"));
      for (const auto& [name, mean] : r.summary)
        line += "," + std::to_string(mean.excluded);
      lines.push_back(line);
    }
    csv::write_lines(cfg.out_dir + "/summary.csv", lines);
    outcome.written_files.push_back(cfg.out_dir + "/summary.csv");
  }

  // summary.txt: aligned text table of the same means.
  {
    std::vector<std::string> lines;
    const auto& names = outcome.results.front().metric_names;
    std::string header = aligned("l", 6) + aligned("alpha", 8) +
                         aligned("beta", 8) + aligned("gamma", 8);
    for (const auto& n : names) header += aligned(n, 10);
    lines.push_back(header);
    for (const auto& r : outcome.results) {
      char buf[32];
      std::string line = aligned(std::to_string(r.point.latent_dim), 6) +
                         aligned(short_num(r.point.alpha), 8) +
                         aligned(short_num(r.point.beta), 8) +
                         aligned(short_num(r.point.gamma), 8);
      for (const auto& [name, mean] : r.summary) {
        if (mean.has_value()) {
          std::snprintf(buf, sizeof(buf), "%.4f", mean.value);
          line += aligned(buf, 10);
        } else {
          line += aligned("NA", 10);
        }
      }
      lines.push_back(line);
    }
    csv::write_lines(cfg.out_dir + "/summary.txt", lines);
    outcome.written_files.push_back(cfg.out_dir + "/summary.txt");
  }

  if (with_best || grid.size() > 1) {
    std::vector<std::string> lines = {"metric,latent_dim,alpha,beta,gamma,value"};
    for (const auto& [name, gp] : best_per_metric(outcome.results)) {
      double value = 0.0;
      for (const auto& r : outcome.results)
        if (!(r.point < gp) && !(gp < r.point))
          for (const auto& [n, mean] : r.summary)
            if (n == name) value = mean.value;
      lines.push_back(name + "," + std::to_string(gp.latent_dim) + "," +
                      csv::format_double(gp.alpha) + "," +
                      csv::format_double(gp.beta) + "," +
                      csv::format_double(gp.gamma) + "," +
                      csv::format_double(value));
    }
    csv::write_lines(cfg.out_dir + "/best.csv", lines);
    outcome.written_files.push_back(cfg.out_dir + "/best.csv");
  }
  return outcome;
}

std::vector<std::pair<std::string, GridPoint>> best_per_metric(
    const std::vector<GridPointResult>& results) {
  std::vector<std::pair<std::string, GridPoint>> out;
  if (results.empty()) return out;
  for (size_t mi = 0; mi < results.front().metric_names.size(); ++mi) {
    const std::string& name = results.front().metric_names[mi];
    bool found = false;
    GridPoint best{};
    double best_value = 0.0;
    for (const auto& r : results) {
      const auto& mean = r.summary[mi].second;
      if (!mean.has_value()) continue;
      if (!found || mean.value > best_value ||
          (mean.value == best_value && r.point < best)) {
        best = r.point;
        best_value = mean.value;
        found = true;
      }
    }
    if (found) out.emplace_back(name, best);
  }
  return out;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("config parse error in " + path + ": " + e.what());
  }
  ExperimentConfig cfg;
  cfg.response_path = j.value("response", cfg.response_path);
  cfg.expression_path = j.value("expression", cfg.expression_path);
  cfg.theta = j.value("theta", cfg.theta);
  if (j.contains("protocol")) cfg.protocol = protocol_from_string(j["protocol"]);
  if (j.contains("k")) cfg.k_list = j["k"].get<std::vector<int>>();
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    if (g.contains("latent_dim"))
      cfg.latent_dims = g["latent_dim"].get<std::vector<int>>();
    if (g.contains("alpha")) cfg.alphas = g["alpha"].get<std::vector<double>>();
    if (g.contains("beta")) cfg.betas = g["beta"].get<std::vector<double>>();
    if (g.contains("gamma")) cfg.gammas = g["gamma"].get<std::vector<double>>();
  }
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    cfg.optimizer.learning_rate =
        o.value("learning_rate", cfg.optimizer.learning_rate);
    cfg.optimizer.max_epochs = o.value("max_epochs", cfg.optimizer.max_epochs);
    cfg.optimizer.convergence_tol =
        o.value("tol", cfg.optimizer.convergence_tol);
    cfg.optimizer.sample_repeats =
        o.value("sample_repeats", cfg.optimizer.sample_repeats);
  }
  cfg.folds = j.value("folds", cfg.folds);
  cfg.n_new = j.value("n_new", cfg.n_new);
  cfg.threshold_pct = j.value("threshold_pct", cfg.threshold_pct);
  cfg.top_k_neighbors = j.value("top_k_neighbors", cfg.top_k_neighbors);
  if (j.contains("similarity")) {
    const auto& s = j["similarity"];
    cfg.similarity_kind = s.value("kind", cfg.similarity_kind);
    if (s.contains("gamma")) cfg.sim_gamma = s["gamma"].get<double>();
    cfg.use_gene_selection =
        s.value("use_gene_selection", cfg.use_gene_selection);
    cfg.gene_selection.n_lambdas =
        s.value("n_lambdas", cfg.gene_selection.n_lambdas);
    cfg.gene_selection.lambda2_ratio =
        s.value("l2_ratio", cfg.gene_selection.lambda2_ratio);
    cfg.gene_selection.tol = s.value("tol", cfg.gene_selection.tol);
    cfg.gene_selection.max_iter =
        s.value("max_iter", cfg.gene_selection.max_iter);
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.out_dir = j.value("out", cfg.out_dir);
  return cfg;
}

void write_experiment_config(const ExperimentConfig& cfg, const std::string& path) {
  json j;
  j["response"] = cfg.response_path;
  if (!cfg.expression_path.empty()) j["expression"] = cfg.expression_path;
  j["theta"] = cfg.theta;
  j["protocol"] = to_string(cfg.protocol);
  j["k"] = cfg.k_list;
  j["grid"] = {{"latent_dim", cfg.latent_dims},
               {"alpha", cfg.alphas},
               {"beta", cfg.betas},
               {"gamma", cfg.gammas}};
  j["optimizer"] = {{"learning_rate", cfg.optimizer.learning_rate},
                    {"max_epochs", cfg.optimizer.max_epochs},
                    {"tol", cfg.optimizer.convergence_tol},
                    {"sample_repeats", cfg.optimizer.sample_repeats}};
  j["folds"] = cfg.folds;
  j["n_new"] = cfg.n_new;
  j["threshold_pct"] = cfg.threshold_pct;
  j["top_k_neighbors"] = cfg.top_k_neighbors;
  j["similarity"] = {{"kind", cfg.similarity_kind},
                     {"use_gene_selection", cfg.use_gene_selection},
                     {"n_lambdas", cfg.gene_selection.n_lambdas},
                     {"l2_ratio", cfg.gene_selection.lambda2_ratio},
                     {"tol", cfg.gene_selection.tol},
                     {"max_iter", cfg.gene_selection.max_iter}};
  if (cfg.sim_gamma) j["similarity"]["gamma"] = *cfg.sim_gamma;
  j["seed"] = cfg.seed;
  j["out"] = cfg.out_dir;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write config file: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace pushrank

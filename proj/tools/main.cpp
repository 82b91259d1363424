// Command-line toolkit around the pushrank library: synthetic data, labeling,
// splits, gene selection, similarities, training, ranking, evaluation, and the
// full experiment pipeline.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "pushrank/csv.hpp"
#include "pushrank/elastic_net.hpp"
#include "pushrank/error.hpp"
#include "pushrank/experiment.hpp"
#include "pushrank/labeling.hpp"
#include "pushrank/metrics.hpp"
#include "pushrank/model.hpp"
#include "pushrank/similarity.hpp"
#include "pushrank/splits.hpp"
#include "pushrank/synthetic.hpp"

namespace pr = pushrank;
using nlohmann::json;

namespace {

struct SimulateArgs {
  int m = 40, n = 60, latent_dim = 5;
  double noise = 0.05, missing_frac = 0.2;
  uint64_t seed = 0;
  std::string out = "synthetic";
};

int cmd_simulate(const SimulateArgs& a) {
  auto data = pr::generate_synthetic(a.m, a.n, a.latent_dim, a.noise,
                                     a.missing_frac, a.seed);
  std::filesystem::create_directories(a.out);
  pr::write_response(data.response, a.out + "/response.csv");
  pr::write_expression(data.expression, a.out + "/expression.csv");
  json meta = {{"m", a.m},           {"n", a.n},
               {"latent_dim", a.latent_dim}, {"noise", a.noise},
               {"missing_frac", a.missing_frac}, {"seed", a.seed}};
  pr::save_model(data.planted, a.out + "/planted", meta.dump(2));
  std::cout << "wrote " << a.out << "/response.csv (" << data.response.cell_count()
            << " cell lines x " << data.response.drug_count() << " drugs, "
            << data.response.observed_count() << " observed)\n";
  return 0;
}

struct LabelArgs {
  std::string response, test, scheme = "train", out = "labels.csv", out_test;
  double theta = 5.0;
};

int cmd_label(const LabelArgs& a) {
  auto resp = pr::load_response(a.response);
  if (a.scheme == "ground-truth") {
    pr::write_labels(pr::label_new_cell_lines(resp, a.theta), a.out);
  } else if (a.scheme == "train") {
    if (a.test.empty()) {
      pr::write_labels(pr::label_train_test(resp, resp, a.theta).first, a.out);
    } else {
      auto test = pr::load_response(a.test);
      auto [ltr, lte] = pr::label_train_test(resp, test, a.theta);
      pr::write_labels(ltr, a.out);
      if (!a.out_test.empty()) pr::write_labels(lte, a.out_test);
    }
  } else {
    throw pr::Error("unknown labeling scheme '" + a.scheme + "'");
  }
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

struct SplitArgs {
  std::string response, sim, out = "split.csv";
  int kfold = 0, holdout = 0;
  uint64_t seed = 0;
  double threshold_pct = 90.0;
  std::optional<double> threshold;
};

int cmd_split(const SplitArgs& a) {
  auto resp = pr::load_response(a.response);
  if ((a.kfold > 0) == (a.holdout > 0))
    throw pr::Error("choose exactly one of --kfold and --holdout");
  if (a.kfold > 0) {
    auto split = pr::kfold_split(resp, a.kfold, a.seed);
    pr::write_fold_split(split, resp, a.out);
    for (const auto& w : split.warnings) std::cerr << "warning: " << w << "\n";
  } else {
    if (a.sim.empty()) throw pr::Error("--holdout requires --sim");
    auto sim = pr::load_similarity(a.sim);
    double thr = a.threshold ? *a.threshold
                             : pr::offdiagonal_percentile(sim, a.threshold_pct);
    auto split = pr::holdout_split(resp, sim, a.holdout, thr, a.seed);
    pr::write_holdout_split(split, a.out);
    std::cout << "threshold " << thr << ", " << split.test_cell_lines.size()
              << " test cell lines\n";
  }
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

struct SelectGenesArgs {
  std::string response, expression, out = "genes.txt";
  pr::PathConfig path;
};

int cmd_select_genes(const SelectGenesArgs& a) {
  auto resp = pr::load_response(a.response);
  auto expr = pr::load_expression(a.expression);
  auto genes = pr::select_genes(resp, expr, a.path);
  pr::csv::write_lines(a.out, genes);
  std::cout << "selected " << genes.size() << " genes -> " << a.out << "\n";
  return 0;
}

struct SimilarityArgs {
  std::string expression, response, genes, model_dir, kind = "rbf",
              out = "similarity.csv";
  std::optional<double> gamma;
};

int cmd_similarity(const SimilarityArgs& a) {
  pr::SimilarityMatrix sim;
  if (a.kind == "spearman") {
    if (a.response.empty()) throw pr::Error("--kind spearman requires --response");
    sim = pr::spearman_profile_similarity(pr::load_response(a.response));
  } else if (!a.model_dir.empty()) {
    // latent-vector similarity: rbf over the learned cell-line vectors
    auto model = pr::load_model(a.model_dir);
    Eigen::MatrixXd features = model.U.transpose();
    double g = a.gamma ? *a.gamma : pr::median_heuristic_gamma(features);
    sim = pr::rbf_similarity(features, model.cell_line_ids, g,
                             pr::SimilarityKind::LatentRbf);
  } else {
    if (a.expression.empty()) throw pr::Error("--expression is required");
    auto expr = pr::load_expression(a.expression);
    Eigen::MatrixXd features = expr.values;
    if (!a.genes.empty()) {
      auto table = pr::csv::read_table(a.genes);
      std::vector<std::string> ids = {table.header.empty() ? ""
                                                           : table.header[0]};
      for (const auto& row : table.rows)
        if (!row.empty() && !row[0].empty()) ids.push_back(row[0]);
      features.resize(expr.cell_count(), ids.size());
      for (size_t c = 0; c < ids.size(); ++c) {
        int g = expr.gene_index(ids[c]);
        if (g < 0) throw pr::Error("unknown gene " + ids[c]);
        features.col(c) = expr.values.col(g);
      }
    }
    if (a.kind == "cosine") {
      sim = pr::cosine_similarity(features, expr.cell_line_ids);
    } else if (a.kind == "rbf") {
      double g = a.gamma ? *a.gamma : pr::median_heuristic_gamma(features);
      sim = pr::rbf_similarity(features, expr.cell_line_ids, g);
    } else {
      throw pr::Error("unknown similarity kind '" + a.kind + "'");
    }
  }
  pr::write_similarity(sim, a.out);
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string response, labels, sim, out_dir = "model", method = "push";
  double theta = 5.0;
  int latent_dim = 10;
  double alpha = 0.0, beta = 0.1, gamma = 100.0, reg = 0.01;
  pr::OptimizerConfig opt;
};

int cmd_train(const TrainArgs& a) {
  auto resp = pr::load_response(a.response);
  std::cout << "loaded " << resp.cell_count() << " cell lines x "
            << resp.drug_count() << " drugs, " << resp.observed_count()
            << " observed\n";
  pr::TrainResult res;
  json meta = {{"method", a.method},
               {"latent_dim", a.latent_dim},
               {"learning_rate", a.opt.learning_rate},
               {"max_epochs", a.opt.max_epochs},
               {"tol", a.opt.convergence_tol},
               {"seed", a.opt.seed}};
  if (a.method == "pointwise") {
    res = pr::baseline_pointwise_mf(resp, a.latent_dim, a.reg, a.opt);
    meta["reg"] = a.reg;
  } else if (a.method == "push") {
    pr::SensitivityLabels labels;
    if (!a.labels.empty()) {
      labels = pr::load_labels(a.labels);
    } else {
      labels = pr::label_train_test(resp, resp, a.theta).first;
    }
    auto tl = pr::TrainingLabels::from(resp, labels);
    pr::SimilarityMatrix sim;
    bool have_sim = false;
    if (!a.sim.empty()) {
      sim = pr::load_similarity(a.sim);
      have_sim = true;
    }
    pr::LossWeights w{a.alpha, a.beta, a.gamma};
    res = pr::train(resp, tl, have_sim ? &sim : nullptr, a.latent_dim, w, a.opt);
    meta["alpha"] = a.alpha;
    meta["beta"] = a.beta;
    meta["gamma"] = a.gamma;
    meta["sample_repeats"] = a.opt.sample_repeats;
    meta["theta"] = a.theta;
  } else {
    throw pr::Error("unknown method '" + a.method + "' (push|pointwise)");
  }
  meta["epochs_run"] = res.epochs_run;
  meta["final_loss"] = res.loss_trace.back();
  pr::save_model(res.model, a.out_dir, meta.dump(2));
  std::cout << "trained " << res.epochs_run << " epochs, final loss "
            << res.loss_trace.back() << " -> " << a.out_dir << "\n";
  return 0;
}

struct RankArgs {
  std::string model_dir = "model", cell_line, sim_vector, drugs, out, matrix_out;
  int top_k = 10;
  bool negate = false;
};

int cmd_rank(const RankArgs& a) {
  auto model = pr::load_model(a.model_dir);
  if (!a.matrix_out.empty()) {
    // full cell x drug score matrix, consumable by `evaluate`
    pr::ResponseMatrix scores;
    scores.cell_line_ids = model.cell_line_ids;
    scores.drug_ids = model.drug_ids;
    scores.values = (model.U.transpose() * model.V) * (a.negate ? -1.0 : 1.0);
    scores.observed = pr::BoolMask::Constant(model.cell_count(),
                                             model.drug_count(), true);
    pr::write_response(scores, a.matrix_out);
    std::cout << "wrote " << a.matrix_out << "\n";
    return 0;
  }
  std::vector<int> subset;
  if (a.drugs.empty()) {
    subset.resize(model.drug_count());
    for (int i = 0; i < model.drug_count(); ++i) subset[i] = i;
  } else {
    for (const auto& id : pr::csv::split_line(a.drugs)) {
      auto it = std::find(model.drug_ids.begin(), model.drug_ids.end(), id);
      if (it == model.drug_ids.end()) throw pr::Error("unknown drug " + id);
      subset.push_back(static_cast<int>(it - model.drug_ids.begin()));
    }
  }
  std::vector<pr::RankedDrug> ranked;
  if (!a.sim_vector.empty()) {
    // Cold start: similarity-to-training file with rows "cell_line,similarity".
    auto table = pr::csv::read_table(a.sim_vector);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(model.cell_count());
    for (const auto& row : table.rows) {
      if (row.size() != 2) throw pr::Error("bad similarity row in " + a.sim_vector);
      auto it = std::find(model.cell_line_ids.begin(), model.cell_line_ids.end(),
                          row[0]);
      if (it == model.cell_line_ids.end())
        throw pr::Error("unknown cell line " + row[0]);
      s(it - model.cell_line_ids.begin()) =
          pr::csv::parse_double(row[1], "similarity for " + row[0]);
    }
    auto u = pr::extrapolate_cell_line(model, s, a.top_k);
    ranked = pr::rank_drugs_for_vector(model, u, subset);
  } else {
    if (a.cell_line.empty())
      throw pr::Error("provide --cell-line or --sim-vector");
    auto it = std::find(model.cell_line_ids.begin(), model.cell_line_ids.end(),
                        a.cell_line);
    if (it == model.cell_line_ids.end())
      throw pr::Error("unknown cell line " + a.cell_line);
    ranked = pr::rank_drugs(model, static_cast<int>(it - model.cell_line_ids.begin()),
                            subset);
  }
  std::vector<std::string> lines = {"rank,drug,score"};
  for (size_t r = 0; r < ranked.size(); ++r)
    lines.push_back(std::to_string(r + 1) + "," + ranked[r].id + "," +
                    pr::csv::format_double(ranked[r].score));
  if (a.out.empty()) {
    for (const auto& l : lines) std::cout << l << "\n";
  } else {
    pr::csv::write_lines(a.out, lines);
    std::cout << "wrote " << a.out << "\n";
  }
  return 0;
}

struct EvaluateArgs {
  std::string pred, truth, labels, split, out = "metrics.csv";
  std::string metrics_list = "ap,ah,ci,sci";
  std::string k_list = "5,10";
  int fold = -1;
};

int cmd_evaluate(const EvaluateArgs& a) {
  auto pred = pr::load_response(a.pred);
  auto truth = pr::load_response(a.truth);
  auto labels = pr::load_labels(a.labels);
  if (pred.cell_line_ids != truth.cell_line_ids ||
      pred.drug_ids != truth.drug_ids)
    throw pr::Error("prediction and truth matrices are not aligned");
  if (labels.cell_line_ids != truth.cell_line_ids ||
      labels.drug_ids != truth.drug_ids)
    throw pr::Error("labels are not aligned with the truth matrix");

  std::vector<int> ks;
  for (const auto& f : pr::csv::split_line(a.k_list))
    ks.push_back(static_cast<int>(pr::csv::parse_double(f, "--k")));
  std::vector<std::string> wanted;
  for (const auto& f : pr::csv::split_line(a.metrics_list)) {
    if (f != "ap" && f != "ah" && f != "ci" && f != "sci" && f != "at" &&
        f != "nt")
      throw pr::Error("unknown metric '" + f + "' (ap,ah,ci,sci,at,nt)");
    wanted.push_back(f);
  }
  auto want = [&](const std::string& name) {
    return std::find(wanted.begin(), wanted.end(), name) != wanted.end();
  };

  pr::FoldSplit split;
  bool have_split = false;
  if (want("at") || want("nt")) {
    if (a.split.empty() || a.fold < 0)
      throw pr::Error("at/nt metrics need --split and --fold");
    split = pr::load_fold_split(a.split, truth);
    have_split = true;
  }

  std::vector<std::string> names;
  for (const auto& mname : wanted) {
    if (mname == "ci" || mname == "sci") {
      names.push_back(mname);
    } else {
      for (int k : ks) names.push_back(mname + "@" + std::to_string(k));
    }
  }

  std::vector<std::string> lines;
  std::string header = "cell_line";
  for (const auto& nm : names) header += "," + nm;
  lines.push_back(header);

  std::vector<std::vector<std::optional<double>>> columns(names.size());
  for (int p = 0; p < truth.cell_count(); ++p) {
    auto obs = truth.observed_drugs(p);
    std::vector<std::optional<double>> row(names.size());
    if (!obs.empty()) {
      std::vector<double> t, s;
      std::vector<pr::Label> lab;
      std::vector<std::string> ids;
      std::vector<bool> is_new;
      for (int i : obs) {
        t.push_back(truth.values(p, i));
        s.push_back(pred.values(p, i));
        lab.push_back(labels.at(p, i));
        ids.push_back(truth.drug_ids[i]);
        is_new.push_back(have_split && split.assignment(p, i) == a.fold);
      }
      std::vector<size_t> order(obs.size());
      for (size_t r = 0; r < order.size(); ++r) order[r] = r;
      std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
        if (s[x] != s[y]) return s[x] > s[y];
        return ids[x] < ids[y];
      });
      std::vector<pr::Label> ranked;
      for (size_t r : order) ranked.push_back(lab[r]);
      const bool any_sensitive =
          std::any_of(lab.begin(), lab.end(),
                      [](pr::Label l) { return l == pr::Label::Sensitive; });
      size_t col = 0;
      for (const auto& mname : wanted) {
        if (mname == "ci") {
          row[col++] = pr::metrics::concordance_index(t, s);
        } else if (mname == "sci") {
          row[col++] = pr::metrics::sensitive_ci(t, s, lab);
        } else {
          for (int k : ks) {
            if (mname == "ap" && any_sensitive)
              row[col] = pr::metrics::ap_at_k(ranked, k);
            else if (mname == "ah" && any_sensitive)
              row[col] = static_cast<double>(pr::metrics::ah_at_k(ranked, k));
            else if (mname == "at" && static_cast<int>(obs.size()) >= k)
              row[col] = pr::metrics::at_k(t, s, ids, k);
            else if (mname == "nt" && static_cast<int>(obs.size()) >= k)
              row[col] = pr::metrics::nt_k(t, s, ids, is_new, k);
            ++col;
          }
        }
      }
    }
    std::string line = truth.cell_line_ids[p];
    for (size_t c = 0; c < names.size(); ++c) {
      line += "," + (row[c] ? pr::csv::format_double(*row[c]) : std::string("NA"));
      columns[c].push_back(row[c]);
    }
    lines.push_back(line);
  }
  std::string mean_line = "MEAN";
  std::string excl_line = "EXCLUDED";
  for (size_t c = 0; c < names.size(); ++c) {
    auto m = pr::metrics::mean_defined(columns[c]);
    mean_line += "," + (m.has_value() ? pr::csv::format_double(m.value)
                                      : std::string("NA"));
    excl_line += "," + std::to_string(m.excluded);
  }
  lines.push_back(mean_line);
  lines.push_back(excl_line);
  pr::csv::write_lines(a.out, lines);
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

struct RunArgs {
  std::string config;
  std::string response, expression, out, protocol, sim_kind;
  std::optional<double> theta;
  std::optional<uint64_t> seed;
  std::optional<int> folds, n_new, epochs, sample_repeats, top_k_neighbors;
  std::optional<int> n_lambdas;
  std::optional<double> lr, tol, threshold_pct, l2_ratio, sim_gamma;
  std::vector<int> k_list, latent_dims;
  std::vector<double> alphas, betas, gammas;
  bool no_gene_selection = false;
};

pr::ExperimentConfig build_config(const RunArgs& a) {
  pr::ExperimentConfig cfg;
  if (!a.config.empty()) cfg = pr::load_experiment_config(a.config);
  if (!a.response.empty()) cfg.response_path = a.response;
  if (!a.expression.empty()) cfg.expression_path = a.expression;
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (!a.protocol.empty()) cfg.protocol = pr::protocol_from_string(a.protocol);
  if (!a.sim_kind.empty()) cfg.similarity_kind = a.sim_kind;
  if (a.sim_gamma) cfg.sim_gamma = *a.sim_gamma;
  if (a.theta) cfg.theta = *a.theta;
  if (a.seed) cfg.seed = *a.seed;
  if (a.folds) cfg.folds = *a.folds;
  if (a.n_new) cfg.n_new = *a.n_new;
  if (a.epochs) cfg.optimizer.max_epochs = *a.epochs;
  if (a.sample_repeats) cfg.optimizer.sample_repeats = *a.sample_repeats;
  if (a.lr) cfg.optimizer.learning_rate = *a.lr;
  if (a.tol) cfg.optimizer.convergence_tol = *a.tol;
  if (a.threshold_pct) cfg.threshold_pct = *a.threshold_pct;
  if (a.top_k_neighbors) cfg.top_k_neighbors = *a.top_k_neighbors;
  if (a.n_lambdas) cfg.gene_selection.n_lambdas = *a.n_lambdas;
  if (a.l2_ratio) cfg.gene_selection.lambda2_ratio = *a.l2_ratio;
  if (!a.k_list.empty()) cfg.k_list = a.k_list;
  if (!a.latent_dims.empty()) cfg.latent_dims = a.latent_dims;
  if (!a.alphas.empty()) cfg.alphas = a.alphas;
  if (!a.betas.empty()) cfg.betas = a.betas;
  if (!a.gammas.empty()) cfg.gammas = a.gammas;
  if (a.no_gene_selection) cfg.use_gene_selection = false;
  return cfg;
}

int cmd_run(const RunArgs& a, bool with_best) {
  auto cfg = build_config(a);
  if (with_best && a.config.empty()) {
    // default search ranges when the grid is not pinned down explicitly
    if (a.latent_dims.empty()) cfg.latent_dims = {5, 10, 15, 30, 50};
    if (a.alphas.empty()) cfg.alphas = {0.0, 0.1, 0.5, 0.9, 1.0};
    if (a.betas.empty()) cfg.betas = {0.1, 1.0};
    if (a.gammas.empty()) cfg.gammas = {0.0, 1.0, 100.0};
  }
  auto outcome = pr::run_experiment(cfg, with_best);
  for (const auto& f : outcome.written_files) std::cout << "wrote " << f << "\n";
  return 0;
}

void add_run_flags(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("--config", a.config, "JSON config file");
  cmd->add_option("--response", a.response, "response matrix CSV");
  cmd->add_option("--expression", a.expression, "expression matrix CSV");
  cmd->add_option("--out", a.out, "output directory");
  cmd->add_option("--protocol", a.protocol, "kfold|transductive|holdout");
  cmd->add_option("--sim-kind", a.sim_kind, "cosine|rbf");
  cmd->add_option("--sim-gamma", a.sim_gamma, "rbf bandwidth override");
  cmd->add_option("--theta", a.theta, "sensitivity percentile");
  cmd->add_option("--seed", a.seed, "random seed");
  cmd->add_option("--folds", a.folds, "fold count");
  cmd->add_option("--n-new", a.n_new, "held-out cell lines");
  cmd->add_option("--epochs", a.epochs, "max training epochs");
  cmd->add_option("--sample-repeats", a.sample_repeats, "gradient sample repeats");
  cmd->add_option("--lr", a.lr, "learning rate");
  cmd->add_option("--tol", a.tol, "convergence tolerance");
  cmd->add_option("--threshold-pct", a.threshold_pct,
                  "holdout similarity threshold percentile");
  cmd->add_option("--top-k-neighbors", a.top_k_neighbors,
                  "neighbors for cold-start extrapolation");
  cmd->add_option("--n-lambdas", a.n_lambdas, "gene-selection path length");
  cmd->add_option("--l2-ratio", a.l2_ratio, "gene-selection lambda2/lambda1");
  cmd->add_option("--k", a.k_list, "evaluation cutoffs")->delimiter(',');
  cmd->add_option("--latent-dim", a.latent_dims, "latent dimensions")
      ->delimiter(',');
  cmd->add_option("--alpha", a.alphas, "push/order trade-offs")->delimiter(',');
  cmd->add_option("--beta", a.betas, "norm regularizer weights")->delimiter(',');
  cmd->add_option("--gamma", a.gammas, "similarity regularizer weights")
      ->delimiter(',');
  cmd->add_flag("--no-gene-selection", a.no_gene_selection,
                "use all genes for similarity");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint push-and-rank drug selection toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
  simulate->add_option("--m", sim_args.m, "cell lines");
  simulate->add_option("--n", sim_args.n, "drugs");
  simulate->add_option("--latent-dim", sim_args.latent_dim, "planted dimension");
  simulate->add_option("--noise", sim_args.noise, "noise sigma");
  simulate->add_option("--missing-frac", sim_args.missing_frac, "missing fraction");
  simulate->add_option("--seed", sim_args.seed, "random seed");
  simulate->add_option("--out", sim_args.out, "output directory");

  LabelArgs label_args;
  auto* label = app.add_subcommand("label", "derive sensitivity labels");
  label->add_option("--response", label_args.response, "response CSV")->required();
  label->add_option("--test", label_args.test, "test response CSV (train scheme)");
  label->add_option("--theta", label_args.theta, "percentile threshold");
  label->add_option("--scheme", label_args.scheme, "train|ground-truth");
  label->add_option("--out", label_args.out, "labels CSV");
  label->add_option("--out-test", label_args.out_test, "test labels CSV");

  SplitArgs split_args;
  auto* split = app.add_subcommand("split", "produce experiment splits");
  split->add_option("--response", split_args.response, "response CSV")->required();
  split->add_option("--kfold", split_args.kfold, "fold count");
  split->add_option("--holdout", split_args.holdout, "held-out cell lines");
  split->add_option("--sim", split_args.sim, "similarity CSV (holdout)");
  split->add_option("--seed", split_args.seed, "random seed");
  split->add_option("--threshold-pct", split_args.threshold_pct,
                    "similarity threshold percentile");
  split->add_option("--threshold", split_args.threshold,
                    "explicit similarity threshold");
  split->add_option("--out", split_args.out, "output CSV");

  SelectGenesArgs gene_args;
  auto* genes = app.add_subcommand("select-genes", "elastic-net gene selection");
  genes->add_option("--response", gene_args.response, "response CSV")->required();
  genes->add_option("--expression", gene_args.expression, "expression CSV")
      ->required();
  genes->add_option("--n-lambdas", gene_args.path.n_lambdas, "path length");
  genes->add_option("--l2-ratio", gene_args.path.lambda2_ratio, "lambda2/lambda1");
  genes->add_option("--tol", gene_args.path.tol, "KKT tolerance");
  genes->add_option("--max-iter", gene_args.path.max_iter, "max sweeps");
  genes->add_option("--out", gene_args.out, "selected gene list file");

  SimilarityArgs simil_args;
  auto* simil = app.add_subcommand("similarity", "cell-line similarity matrix");
  simil->add_option("--expression", simil_args.expression, "expression CSV");
  simil->add_option("--response", simil_args.response, "response CSV (spearman)");
  simil->add_option("--kind", simil_args.kind, "cosine|rbf|spearman");
  simil->add_option("--gamma", simil_args.gamma, "rbf bandwidth");
  simil->add_option("--genes", simil_args.genes, "gene subset file");
  simil->add_option("--model-dir", simil_args.model_dir,
                    "latent-vector similarity from a trained model");
  simil->add_option("--out", simil_args.out, "similarity CSV");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "fit latent vectors");
  train->add_option("--response", train_args.response, "training response CSV")
      ->required();
  train->add_option("--method", train_args.method, "push|pointwise");
  train->add_option("--labels", train_args.labels, "labels CSV");
  train->add_option("--reg", train_args.reg, "pointwise regularization");
  train->add_option("--theta", train_args.theta, "percentile when labeling here");
  train->add_option("--sim", train_args.sim, "similarity CSV");
  train->add_option("--latent-dim", train_args.latent_dim, "latent dimension");
  train->add_option("--alpha", train_args.alpha, "push/order trade-off");
  train->add_option("--beta", train_args.beta, "norm regularizer weight");
  train->add_option("--gamma", train_args.gamma, "similarity regularizer weight");
  train->add_option("--lr", train_args.opt.learning_rate, "learning rate");
  train->add_option("--epochs", train_args.opt.max_epochs, "max epochs");
  train->add_option("--tol", train_args.opt.convergence_tol, "convergence tol");
  train->add_option("--sample-repeats", train_args.opt.sample_repeats,
                    "gradient sample repeats");
  train->add_option("--seed", train_args.opt.seed, "random seed");
  train->add_option("--out-dir", train_args.out_dir, "model directory");

  RankArgs rank_args;
  auto* rank = app.add_subcommand("rank", "rank drugs for a cell line");
  rank->add_option("--model-dir", rank_args.model_dir, "model directory");
  rank->add_option("--cell-line", rank_args.cell_line, "training cell line id");
  rank->add_option("--sim-vector", rank_args.sim_vector,
                   "cold start: cell_line,similarity CSV");
  rank->add_option("--top-k", rank_args.top_k, "neighbors for cold start");
  rank->add_option("--drugs", rank_args.drugs, "comma-separated drug subset");
  rank->add_option("--out", rank_args.out, "ranking CSV (stdout if omitted)");
  rank->add_option("--matrix-out", rank_args.matrix_out,
                   "write the full score matrix instead of one ranking");
  rank->add_flag("--negate", rank_args.negate,
                 "negate matrix scores (response-approximating models)");

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "score predictions");
  evaluate->add_option("--pred", eval_args.pred, "prediction score CSV")->required();
  evaluate->add_option("--truth", eval_args.truth, "ground-truth response CSV")
      ->required();
  evaluate->add_option("--labels", eval_args.labels, "labels CSV")->required();
  evaluate->add_option("--k", eval_args.k_list, "cutoff list");
  evaluate->add_option("--metrics", eval_args.metrics_list,
                       "subset of ap,ah,ci,sci,at,nt");
  evaluate->add_option("--split", eval_args.split, "fold assignment CSV");
  evaluate->add_option("--fold", eval_args.fold, "fold index marking new drugs");
  evaluate->add_option("--out", eval_args.out, "metrics CSV");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "full experiment pipeline");
  add_run_flags(run, run_args);

  RunArgs grid_args;
  auto* grid = app.add_subcommand("grid", "grid search with best-point report");
  add_run_flags(grid, grid_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(sim_args);
    if (label->parsed()) return cmd_label(label_args);
    if (split->parsed()) return cmd_split(split_args);
    if (genes->parsed()) return cmd_select_genes(gene_args);
    if (simil->parsed()) return cmd_similarity(simil_args);
    if (train->parsed()) return cmd_train(train_args);
    if (rank->parsed()) return cmd_rank(rank_args);
    if (evaluate->parsed()) return cmd_evaluate(eval_args);
    if (run->parsed()) return cmd_run(run_args, false);
    if (grid->parsed()) return cmd_run(grid_args, true);
  } catch (const pr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

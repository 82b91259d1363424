#ifndef PUSHRANK_EXPERIMENT_HPP
#define PUSHRANK_EXPERIMENT_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pushrank/data.hpp"
#include "pushrank/elastic_net.hpp"
#include "pushrank/metrics.hpp"
#include "pushrank/model.hpp"
#include "pushrank/similarity.hpp"

namespace pushrank {

enum class Protocol { Kfold, Transductive, Holdout };

Protocol protocol_from_string(const std::string& s);
std::string to_string(Protocol p);

struct GridPoint {
  int latent_dim;
  double alpha;
  double beta;
  double gamma;

  std::string tag() const;  // filesystem-friendly parameter tuple
  bool operator<(const GridPoint& o) const;
};

struct ExperimentConfig {
  std::string response_path;
  std::string expression_path;  // optional unless required by the protocol
  double theta = 5.0;
  Protocol protocol = Protocol::Kfold;
  std::vector<int> k_list = {5, 10};

  std::vector<int> latent_dims = {10};
  std::vector<double> alphas = {0.0};
  std::vector<double> betas = {0.1};
  std::vector<double> gammas = {100.0};

  OptimizerConfig optimizer;
  int folds = 5;

  int n_new = 10;               // holdout size
  double threshold_pct = 90.0;  // holdout similarity threshold percentile
  int top_k_neighbors = 10;     // cold-start extrapolation

  std::string similarity_kind = "rbf";  // cosine | rbf
  std::optional<double> sim_gamma;      // rbf bandwidth; median heuristic if unset
  bool use_gene_selection = true;
  PathConfig gene_selection;

  uint64_t seed = 0;
  std::string out_dir = "out";

  std::vector<GridPoint> grid() const;
  void validate() const;
};

ExperimentConfig load_experiment_config(const std::string& path);
void write_experiment_config(const ExperimentConfig& cfg, const std::string& path);

struct CellRow {
  std::string cell_line;
  std::vector<std::optional<double>> values;  // aligned with metric_names
};

struct FoldReport {
  std::string name;  // "fold0".. or "holdout"
  std::vector<CellRow> cells;
};

struct GridPointResult {
  GridPoint point;
  std::vector<std::string> metric_names;
  std::vector<FoldReport> folds;
  // Per metric: mean over fold means and total excluded (fold, cell) rows.
  std::vector<std::pair<std::string, metrics::Mean>> summary;
  std::vector<std::vector<double>> loss_traces;  // one per training run
};

/// Executes label -> split -> train -> rank -> evaluate for one grid point.
/// `sim` is the cell-line similarity over the full cell set (required for
/// the holdout protocol or a non-zero gamma).
GridPointResult run_grid_point(const ResponseMatrix& resp,
                               const SimilarityMatrix* sim,
                               const ExperimentConfig& cfg, const GridPoint& gp);

/// Builds the cell-line similarity for an experiment: selected genes
/// (optional) then cosine or rbf with the median-heuristic bandwidth.
SimilarityMatrix build_experiment_similarity(const ResponseMatrix& resp,
                                             const ExpressionMatrix& expr,
                                             const ExperimentConfig& cfg);

struct ExperimentOutcome {
  std::vector<GridPointResult> results;
  std::vector<std::string> written_files;
};

/// Full pipeline: loads inputs, runs every grid point, writes per-grid-point
/// cell tables, summary.csv, summary.txt and (for multi-point grids or when
/// `with_best`) best.csv into cfg.out_dir. Identical config and seed produce
/// byte-identical files.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                 bool with_best = false);

/// Best grid point per metric, ties by ascending parameter tuple.
std::vector<std::pair<std::string, GridPoint>> best_per_metric(
    const std::vector<GridPointResult>& results);

}  // namespace pushrank

#endif

#ifndef PUSHRANK_MODEL_HPP
#define PUSHRANK_MODEL_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pushrank/data.hpp"
#include "pushrank/labeling.hpp"
#include "pushrank/similarity.hpp"

namespace pushrank {

/// Learned latent vectors: U columns are cell-line vectors u_p, V columns
/// are drug vectors v_i. A drug's score in a cell line is the dot product.
struct LatentModel {
  Eigen::MatrixXd U;  // l x m
  Eigen::MatrixXd V;  // l x n
  std::vector<std::string> cell_line_ids;
  std::vector<std::string> drug_ids;

  int latent_dim() const { return static_cast<int>(U.rows()); }
  int cell_count() const { return static_cast<int>(U.cols()); }
  int drug_count() const { return static_cast<int>(V.cols()); }
};

struct LossWeights {
  double alpha = 0.0;   // in [0,1]: trade-off between push and order terms
  double beta = 0.1;    // >= 0: norm regularizer
  double gamma = 100.0; // >= 0: cell-line similarity regularizer
  void validate() const;
};

struct OptimizerConfig {
  double learning_rate = 0.1;
  int max_epochs = 500;
  double convergence_tol = 1e-8;
  int sample_repeats = 3;
  uint64_t seed = 0;
  void validate() const;
};

/// Per-cell-line training structure: sensitive/insensitive drug index sets
/// and the ordered sensitive pairs (more sensitive first) from training
/// responses. Pairs with tied responses are dropped.
struct TrainingLabels {
  std::vector<std::vector<int>> sensitive;
  std::vector<std::vector<int>> insensitive;
  std::vector<std::vector<std::pair<int, int>>> sensitive_pairs;

  int cell_count() const { return static_cast<int>(sensitive.size()); }

  static TrainingLabels from(const ResponseMatrix& train,
                             const SensitivityLabels& labels);
};

double score(const LatentModel& model, int p, int i);

/// Smooth training loss:
///   (1-alpha) * push + alpha * order + (beta/2) * norm + (gamma/2) * csim
/// where push sums log(1+exp(-(f(d+)-f(d-)))) over (insensitive, sensitive)
/// pairs normalized per cell line by n+ * n-, order does the same over the
/// sensitive pairs normalized by the pair count, norm is |U|^2/m + |V|^2/n,
/// and csim is (1/m^2) sum_pq w_pq |u_p - u_q|^2.
/// `sim` may be null when gamma is zero.
double surrogate_loss(const LatentModel& model, const TrainingLabels& labels,
                      const SimilarityMatrix* sim, const LossWeights& w);

struct Gradients {
  Eigen::MatrixXd dU;
  Eigen::MatrixXd dV;
};

/// Exact analytic gradient of surrogate_loss. Requires symmetric sim.
Gradients gradients(const LatentModel& model, const TrainingLabels& labels,
                    const SimilarityMatrix* sim, const LossWeights& w);

/// Balanced per-epoch samples: each keeps every sensitive drug and draws
/// min(n+, n-) insensitive drugs uniformly without replacement; sensitive
/// pairs pass through unchanged.
std::vector<TrainingLabels> sample_epoch_labels(const TrainingLabels& labels,
                                                uint64_t seed, int repeats);

struct TrainResult {
  LatentModel model;
  std::vector<double> loss_trace;  // full-data loss, init + accepted epochs
  int epochs_run = 0;
  double final_learning_rate = 0.0;
};

/// Alternating gradient descent with balanced sampling: per epoch the
/// averaged sample gradient updates U with V fixed, then V with the updated
/// U; the learning rate halves (and the step is retried) whenever the
/// full-data loss would increase, so the recorded trace never increases.
TrainResult train(const ResponseMatrix& train_resp, const TrainingLabels& labels,
                  const SimilarityMatrix* sim, int latent_dim,
                  const LossWeights& w, const OptimizerConfig& cfg);

/// Similarity-weighted average of the top-k most similar training cell-line
/// vectors; weights are the similarities themselves.
Eigen::VectorXd extrapolate_cell_line(const LatentModel& model,
                                      const Eigen::VectorXd& sim_to_train,
                                      int top_k);

struct RankedDrug {
  int index;
  std::string id;
  double score;
};

/// Descending score, ties by ascending drug id.
std::vector<RankedDrug> rank_drugs(const LatentModel& model, int p,
                                   const std::vector<int>& drug_subset);
std::vector<RankedDrug> rank_drugs_for_vector(const LatentModel& model,
                                              const Eigen::VectorXd& u,
                                              const std::vector<int>& drug_subset);

/// Ranking for response-approximating models: ascending predicted response
/// (lower = more sensitive), ties by ascending drug id.
std::vector<RankedDrug> rank_drugs_by_response(const LatentModel& model, int p,
                                               const std::vector<int>& drug_subset);

/// Point-wise matrix-factorization comparator: squared error on observed
/// responses plus reg * (|U|^2 + |V|^2), same alternating machinery.
/// Rankings from this model order by ascending predicted response.
TrainResult baseline_pointwise_mf(const ResponseMatrix& train_resp,
                                  int latent_dim, double reg,
                                  const OptimizerConfig& cfg);

void save_model(const LatentModel& model, const std::string& dir,
                const std::string& metadata_json);
LatentModel load_model(const std::string& dir);
std::string load_model_metadata(const std::string& dir);

}  // namespace pushrank

#endif

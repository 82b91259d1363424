#include "pushrank/model.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>

#include "pushrank/csv.hpp"
#include "pushrank/error.hpp"

namespace pushrank {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  if (z > 0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

// 1 / (1 + exp(z)), i.e. sigmoid(-z).
double inv_logit_neg(double z) {
  if (z > 0) {
    double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

void require_sim(const SimilarityMatrix* sim, const LossWeights& w, int m) {
  if (w.gamma > 0.0) {
    if (!sim) throw Error("gamma > 0 requires a cell-line similarity matrix");
    if (sim->size() != m)
      throw Error("similarity matrix size does not match the cell-line count");
  }
}

}  // namespace

void LossWeights::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("alpha must lie in [0,1]");
  if (beta < 0.0) throw Error("beta must be non-negative");
  if (gamma < 0.0) throw Error("gamma must be non-negative");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (max_epochs < 0) throw Error("max_epochs must be non-negative");
  if (convergence_tol < 0.0) throw Error("convergence tolerance must be non-negative");
  if (sample_repeats < 1) throw Error("sample_repeats must be at least 1");
}

TrainingLabels TrainingLabels::from(const ResponseMatrix& train,
                                    const SensitivityLabels& labels) {
  if (labels.cell_line_ids != train.cell_line_ids ||
      labels.drug_ids != train.drug_ids)
    throw Error("labels are not aligned with the training matrix");
  TrainingLabels out;
  const int m = train.cell_count();
  out.sensitive.resize(m);
  out.insensitive.resize(m);
  out.sensitive_pairs.resize(m);
  for (int p = 0; p < m; ++p) {
    for (int i = 0; i < train.drug_count(); ++i) {
      switch (labels.at(p, i)) {
        case Label::Sensitive: out.sensitive[p].push_back(i); break;
        case Label::Insensitive: out.insensitive[p].push_back(i); break;
        case Label::Unknown: break;
      }
    }
    const auto& sens = out.sensitive[p];
    for (size_t a = 0; a < sens.size(); ++a)
      for (size_t b = a + 1; b < sens.size(); ++b) {
        double ra = train.values(p, sens[a]);
        double rb = train.values(p, sens[b]);
        if (ra < rb)
          out.sensitive_pairs[p].emplace_back(sens[a], sens[b]);
        else if (rb < ra)
          out.sensitive_pairs[p].emplace_back(sens[b], sens[a]);
        // equal responses carry no order
      }
  }
  return out;
}

double score(const LatentModel& model, int p, int i) {
  return model.U.col(p).dot(model.V.col(i));
}

double surrogate_loss(const LatentModel& model, const TrainingLabels& labels,
                      const SimilarityMatrix* sim, const LossWeights& w) {
  w.validate();
  const int m = model.cell_count(), n = model.drug_count();
  if (labels.cell_count() != m) throw Error("labels do not match the model");
  require_sim(sim, w, m);

  double push = 0.0, order = 0.0;
  for (int p = 0; p < m; ++p) {
    const auto& sens = labels.sensitive[p];
    const auto& insens = labels.insensitive[p];
    if (!sens.empty() && !insens.empty()) {
      double acc = 0.0;
      for (int i : insens) {
        const double si = score(model, p, i);
        for (int j : sens) acc += softplus(si - score(model, p, j));
      }
      push += acc / (static_cast<double>(sens.size()) * insens.size());
    }
    const auto& pairs = labels.sensitive_pairs[p];
    if (!pairs.empty()) {
      double acc = 0.0;
      for (const auto& [hi, lo] : pairs)
        acc += softplus(score(model, p, lo) - score(model, p, hi));
      order += acc / static_cast<double>(pairs.size());
    }
  }
  if (!std::isfinite(push)) throw Error("non-finite push term in loss");
  if (!std::isfinite(order)) throw Error("non-finite order term in loss");

  double norm_reg = model.U.squaredNorm() / m + model.V.squaredNorm() / n;
  double sim_reg = 0.0;
  if (w.gamma > 0.0) {
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q) {
        if (p == q || !sim->observed(p, q)) continue;
        sim_reg += sim->values(p, q) * (model.U.col(p) - model.U.col(q)).squaredNorm();
      }
    sim_reg /= static_cast<double>(m) * m;
    if (!std::isfinite(sim_reg)) throw Error("non-finite similarity term in loss");
  }
  double loss = (1.0 - w.alpha) * push + w.alpha * order +
                0.5 * w.beta * norm_reg + 0.5 * w.gamma * sim_reg;
  if (!std::isfinite(loss)) throw Error("non-finite loss");
  return loss;
}

Gradients gradients(const LatentModel& model, const TrainingLabels& labels,
                    const SimilarityMatrix* sim, const LossWeights& w) {
  w.validate();
  const int m = model.cell_count(), n = model.drug_count();
  if (labels.cell_count() != m) throw Error("labels do not match the model");
  require_sim(sim, w, m);

  Gradients g;
  g.dU = Eigen::MatrixXd::Zero(model.latent_dim(), m);
  g.dV = Eigen::MatrixXd::Zero(model.latent_dim(), n);

  for (int p = 0; p < m; ++p) {
    const Eigen::VectorXd u = model.U.col(p);
    const auto& sens = labels.sensitive[p];
    const auto& insens = labels.insensitive[p];
    if (!sens.empty() && !insens.empty()) {
      const double c = (1.0 - w.alpha) /
                       (static_cast<double>(sens.size()) * insens.size());
      for (int i : insens) {
        const double si = score(model, p, i);
        for (int j : sens) {
          // d softplus(-(sj-si)) / d(sj-si) = -1/(1+exp(sj-si))
          const double gij = c * inv_logit_neg(score(model, p, j) - si);
          g.dU.col(p) += gij * (model.V.col(i) - model.V.col(j));
          g.dV.col(j) -= gij * u;
          g.dV.col(i) += gij * u;
        }
      }
    }
    const auto& pairs = labels.sensitive_pairs[p];
    if (!pairs.empty()) {
      const double c = w.alpha / static_cast<double>(pairs.size());
      for (const auto& [hi, lo] : pairs) {
        const double gab =
            c * inv_logit_neg(score(model, p, hi) - score(model, p, lo));
        g.dU.col(p) += gab * (model.V.col(lo) - model.V.col(hi));
        g.dV.col(hi) -= gab * u;
        g.dV.col(lo) += gab * u;
      }
    }
  }

  g.dU += (w.beta / m) * model.U;
  g.dV += (w.beta / n) * model.V;

  if (w.gamma > 0.0) {
    // Each unordered pair appears twice in the symmetric double sum.
    const double c = 2.0 * w.gamma / (static_cast<double>(m) * m);
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q) {
        if (p == q || !sim->observed(p, q)) continue;
        g.dU.col(p) += c * sim->values(p, q) * (model.U.col(p) - model.U.col(q));
      }
  }
  return g;
}

std::vector<TrainingLabels> sample_epoch_labels(const TrainingLabels& labels,
                                                uint64_t seed, int repeats) {
  if (repeats < 1) throw Error("repeats must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<TrainingLabels> out;
  out.reserve(repeats);
  for (int r = 0; r < repeats; ++r) {
    TrainingLabels s;
    s.sensitive = labels.sensitive;
    s.sensitive_pairs = labels.sensitive_pairs;
    s.insensitive.resize(labels.cell_count());
    for (int p = 0; p < labels.cell_count(); ++p) {
      const auto& pool = labels.insensitive[p];
      const size_t want = std::min(labels.sensitive[p].size(), pool.size());
      if (want == pool.size()) {
        s.insensitive[p] = pool;
        continue;
      }
      std::vector<int> draw = pool;
      std::shuffle(draw.begin(), draw.end(), rng);
      draw.resize(want);
      std::sort(draw.begin(), draw.end());
      s.insensitive[p] = std::move(draw);
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

struct EpochCallbacks {
  std::function<double(const Eigen::MatrixXd&, const Eigen::MatrixXd&)> loss;
  std::function<void(int epoch)> on_epoch;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, const Eigen::MatrixXd&)> grad_u;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, const Eigen::MatrixXd&)> grad_v;
};

struct DescentState {
  std::vector<double> trace;
  double eta = 0.0;
  int epochs = 0;
};

// Alternating descent with step halving: the recorded full-data loss never
// increases because increasing steps are reverted and retried at eta/2.
DescentState alternating_minimize(Eigen::MatrixXd& U, Eigen::MatrixXd& V,
                                  const OptimizerConfig& cfg,
                                  const EpochCallbacks& cb) {
  DescentState st;
  st.eta = cfg.learning_rate;
  st.trace.push_back(cb.loss(U, V));
  constexpr int kMaxHalvings = 200;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    cb.on_epoch(epoch);
    int nonfinite = 0, halvings = 0;
    bool stepped = false;
    while (true) {
      Eigen::MatrixXd U2 = U - st.eta * cb.grad_u(U, V);
      Eigen::MatrixXd V2 = V - st.eta * cb.grad_v(U2, V);
      double next;
      bool finite = true;
      try {
        next = cb.loss(U2, V2);
        finite = std::isfinite(next);
      } catch (const Error&) {
        finite = false;
        next = 0.0;
      }
      if (!finite) {
        if (++nonfinite >= 10)
          throw DivergenceError("training diverged: loss non-finite after 10 halvings",
                                st.trace);
        st.eta /= 2.0;
        continue;
      }
      nonfinite = 0;
      if (next > st.trace.back()) {
        st.eta /= 2.0;
        if (++halvings >= kMaxHalvings) break;  // step underflowed; give up
        continue;
      }
      U = std::move(U2);
      V = std::move(V2);
      st.trace.push_back(next);
      stepped = true;
      break;
    }
    st.epochs = epoch;
    if (!stepped) break;
    const size_t t = st.trace.size();
    const double prev = st.trace[t - 2];
    const double rel = std::abs(st.trace[t - 1] - prev) /
                       std::max(std::abs(prev), 1e-300);
    if (rel < cfg.convergence_tol) break;
  }
  return st;
}

Eigen::MatrixXd seeded_uniform(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.01, 0.01);
  Eigen::MatrixXd x(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) x(r, c) = dist(rng);
  return x;
}

}  // namespace

TrainResult train(const ResponseMatrix& train_resp, const TrainingLabels& labels,
                  const SimilarityMatrix* sim, int latent_dim,
                  const LossWeights& w, const OptimizerConfig& cfg) {
  if (latent_dim < 1) throw Error("latent dimension must be at least 1");
  w.validate();
  cfg.validate();
  const int m = train_resp.cell_count(), n = train_resp.drug_count();
  if (labels.cell_count() != m) throw Error("labels do not match the training matrix");
  require_sim(sim, w, m);
  if (w.gamma > 0.0 && sim->ids != train_resp.cell_line_ids)
    throw Error("similarity ids do not match the training cell lines");

  std::mt19937_64 init_rng(cfg.seed);
  Eigen::MatrixXd U = seeded_uniform(latent_dim, m, init_rng);
  Eigen::MatrixXd V = seeded_uniform(latent_dim, n, init_rng);
  std::mt19937_64 sample_rng(cfg.seed + 0x9e3779b97f4a7c15ULL);

  LatentModel scratch{U, V, train_resp.cell_line_ids, train_resp.drug_ids};
  std::vector<TrainingLabels> samples;

  EpochCallbacks cb;
  cb.loss = [&](const Eigen::MatrixXd& Uc, const Eigen::MatrixXd& Vc) {
    scratch.U = Uc;
    scratch.V = Vc;
    return surrogate_loss(scratch, labels, sim, w);
  };
  cb.on_epoch = [&](int) {
    samples = sample_epoch_labels(labels, sample_rng(), cfg.sample_repeats);
  };
  auto averaged = [&](const Eigen::MatrixXd& Uc, const Eigen::MatrixXd& Vc,
                      bool want_u) {
    scratch.U = Uc;
    scratch.V = Vc;
    Eigen::MatrixXd acc;
    for (size_t s = 0; s < samples.size(); ++s) {
      Gradients g = gradients(scratch, samples[s], sim, w);
      Eigen::MatrixXd& part = want_u ? g.dU : g.dV;
      if (s == 0)
        acc = std::move(part);
      else
        acc += part;
    }
    acc /= static_cast<double>(samples.size());
    return acc;
  };
  cb.grad_u = [&](const Eigen::MatrixXd& Uc, const Eigen::MatrixXd& Vc) {
    return averaged(Uc, Vc, true);
  };
  cb.grad_v = [&](const Eigen::MatrixXd& Uc, const Eigen::MatrixXd& Vc) {
    return averaged(Uc, Vc, false);
  };

  DescentState st = alternating_minimize(U, V, cfg, cb);
  TrainResult res;
  res.model = LatentModel{std::move(U), std::move(V), train_resp.cell_line_ids,
                          train_resp.drug_ids};
  res.loss_trace = std::move(st.trace);
  res.epochs_run = st.epochs;
  res.final_learning_rate = st.eta;
  return res;
}

TrainResult baseline_pointwise_mf(const ResponseMatrix& train_resp,
                                  int latent_dim, double reg,
                                  const OptimizerConfig& cfg) {
  if (latent_dim < 1) throw Error("latent dimension must be at least 1");
  if (reg < 0.0) throw Error("regularization must be non-negative");
  cfg.validate();
  const int m = train_resp.cell_count(), n = train_resp.drug_count();

  std::mt19937_64 init_rng(cfg.seed);
  Eigen::MatrixXd U = seeded_uniform(latent_dim, m, init_rng);
  Eigen::MatrixXd V = seeded_uniform(latent_dim, n, init_rng);

  EpochCallbacks cb;
  cb.loss = [&](const Eigen::MatrixXd& Uc, const Eigen::MatrixXd& Vc) {
    double sse = 0.0;
    for (int p = 0; p < m; ++p)
      for (int i = 0; i < n; ++i) {
        if (!train_resp.observed(p, i)) continue;
        const double e = train_resp.values(p, i) - Uc.col(p).dot(Vc.col(i));
        sse += e * e;
      }
    return sse + reg * (Uc.squaredNorm() + Vc.squaredNorm());
  };
  cb.on_epoch = [](int) {};
  cb.grad_u = [&](const Eigen::MatrixXd& Uc, const Eigen::MatrixXd& Vc) {
    Eigen::MatrixXd dU = 2.0 * reg * Uc;
    for (int p = 0; p < m; ++p)
      for (int i = 0; i < n; ++i) {
        if (!train_resp.observed(p, i)) continue;
        const double e = Uc.col(p).dot(Vc.col(i)) - train_resp.values(p, i);
        dU.col(p) += 2.0 * e * Vc.col(i);
      }
    return dU;
  };
  cb.grad_v = [&](const Eigen::MatrixXd& Uc, const Eigen::MatrixXd& Vc) {
    Eigen::MatrixXd dV = 2.0 * reg * Vc;
    for (int p = 0; p < m; ++p)
      for (int i = 0; i < n; ++i) {
        if (!train_resp.observed(p, i)) continue;
        const double e = Uc.col(p).dot(Vc.col(i)) - train_resp.values(p, i);
        dV.col(i) += 2.0 * e * Uc.col(p);
      }
    return dV;
  };

  DescentState st = alternating_minimize(U, V, cfg, cb);
  TrainResult res;
  res.model = LatentModel{std::move(U), std::move(V), train_resp.cell_line_ids,
                          train_resp.drug_ids};
  res.loss_trace = std::move(st.trace);
  res.epochs_run = st.epochs;
  res.final_learning_rate = st.eta;
  return res;
}

Eigen::VectorXd extrapolate_cell_line(const LatentModel& model,
                                      const Eigen::VectorXd& sim_to_train,
                                      int top_k) {
  if (top_k < 1) throw Error("top_k must be at least 1");
  if (sim_to_train.size() != model.cell_count())
    throw Error("similarity vector length does not match the model");
  if (!sim_to_train.allFinite()) throw Error("non-finite similarity weight");
  std::vector<int> order(model.cell_count());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return sim_to_train(a) > sim_to_train(b);
  });
  const int k = std::min<int>(top_k, static_cast<int>(order.size()));
  double wsum = 0.0;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(model.latent_dim());
  bool any_positive = false;
  for (int t = 0; t < k; ++t) {
    const double s = sim_to_train(order[t]);
    if (s > 0.0) any_positive = true;
    u += s * model.U.col(order[t]);
    wsum += s;
  }
  if (!any_positive || wsum <= 0.0)
    throw Error("no positive similarity among the top-k neighbors");
  return u / wsum;
}

namespace {

std::vector<RankedDrug> rank_scores(const LatentModel& model,
                                    const std::vector<int>& subset,
                                    const std::function<double(int)>& score_of) {
  if (subset.empty()) throw Error("drug subset must be non-empty");
  std::vector<RankedDrug> out;
  out.reserve(subset.size());
  for (int i : subset) {
    if (i < 0 || i >= model.drug_count()) throw Error("drug index out of range");
    out.push_back({i, model.drug_ids[i], score_of(i)});
  }
  std::sort(out.begin(), out.end(), [](const RankedDrug& a, const RankedDrug& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  return out;
}

}  // namespace

std::vector<RankedDrug> rank_drugs(const LatentModel& model, int p,
                                   const std::vector<int>& drug_subset) {
  if (p < 0 || p >= model.cell_count()) throw Error("cell-line index out of range");
  return rank_scores(model, drug_subset, [&](int i) { return score(model, p, i); });
}

std::vector<RankedDrug> rank_drugs_for_vector(const LatentModel& model,
                                              const Eigen::VectorXd& u,
                                              const std::vector<int>& drug_subset) {
  if (u.size() != model.latent_dim()) throw Error("latent vector size mismatch");
  return rank_scores(model, drug_subset,
                     [&](int i) { return u.dot(model.V.col(i)); });
}

std::vector<RankedDrug> rank_drugs_by_response(const LatentModel& model, int p,
                                               const std::vector<int>& drug_subset) {
  if (p < 0 || p >= model.cell_count()) throw Error("cell-line index out of range");
  auto ranked = rank_scores(model, drug_subset,
                            [&](int i) { return -score(model, p, i); });
  for (auto& rd : ranked) rd.score = -rd.score;  // report the predicted response
  return ranked;
}

namespace {

void write_factor_csv(const Eigen::MatrixXd& X, const std::vector<std::string>& ids,
                      const std::string& path) {
  std::vector<std::string> lines;
  std::string header = "id";
  for (int r = 0; r < X.rows(); ++r) header += ",f" + std::to_string(r + 1);
  lines.push_back(header);
  for (int c = 0; c < X.cols(); ++c) {
    std::string line = ids[c];
    for (int r = 0; r < X.rows(); ++r) line += "," + csv::format_double(X(r, c));
    lines.push_back(line);
  }
  csv::write_lines(path, lines);
}

std::pair<Eigen::MatrixXd, std::vector<std::string>> read_factor_csv(
    const std::string& path) {
  auto table = csv::read_table(path);
  const int l = static_cast<int>(table.header.size()) - 1;
  const int count = static_cast<int>(table.rows.size());
  Eigen::MatrixXd X(l, count);
  std::vector<std::string> ids;
  for (int c = 0; c < count; ++c) {
    const auto& row = table.rows[c];
    if (static_cast<int>(row.size()) != l + 1)
      throw Error("bad factor row in " + path);
    ids.push_back(row[0]);
    for (int r = 0; r < l; ++r)
      X(r, c) = csv::parse_double(row[r + 1], "factor " + row[0]);
  }
  return {X, ids};
}

}  // namespace

void save_model(const LatentModel& model, const std::string& dir,
                const std::string& metadata_json) {
  std::filesystem::create_directories(dir);
  write_factor_csv(model.U, model.cell_line_ids, dir + "/u.csv");
  write_factor_csv(model.V, model.drug_ids, dir + "/v.csv");
  std::ofstream meta(dir + "/meta.json", std::ios::binary);
  if (!meta) throw Error("cannot write model metadata in " + dir);
  meta << metadata_json << '\n';
}

LatentModel load_model(const std::string& dir) {
  auto [U, cells] = read_factor_csv(dir + "/u.csv");
  auto [V, drugs] = read_factor_csv(dir + "/v.csv");
  if (U.rows() != V.rows()) throw Error("latent dimensions differ between u and v");
  return LatentModel{std::move(U), std::move(V), std::move(cells), std::move(drugs)};
}

std::string load_model_metadata(const std::string& dir) {
  std::ifstream in(dir + "/meta.json");
  if (!in) throw Error("cannot read model metadata in " + dir);
  std::string all((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  return all;
}

}  // namespace pushrank

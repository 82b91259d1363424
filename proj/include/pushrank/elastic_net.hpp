#ifndef PUSHRANK_ELASTIC_NET_HPP
#define PUSHRANK_ELASTIC_NET_HPP

#include <string>
#include <vector>

#include "pushrank/data.hpp"

namespace pushrank {

struct ElasticNetFit {
  Eigen::VectorXd weights;  // original (unstandardized) scale
  double intercept = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  int iterations = 0;
  bool converged = false;

  std::vector<int> support(double eps = 0.0) const;
};

/// Coordinate descent (covariance updates) for
///   (1/2m)||y - Xw - b||^2 + lambda1*||w||_1 + (lambda2/2)*||w||^2
/// on internally standardized columns; constant columns get zero weight.
/// Convergence means every coordinate satisfies its KKT condition within tol.
ElasticNetFit elastic_net_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              double lambda1, double lambda2, double tol = 1e-6,
                              int max_iter = 1000,
                              const ElasticNetFit* warm_start = nullptr);

/// Objective value of a fit on the standardized problem (test hook).
double elastic_net_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const ElasticNetFit& fit);

/// Largest lambda1 with an all-zero solution (for the given lambda2 it is an
/// upper bound; the grid anchor).
double lambda1_saturation(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct PathPoint {
  double lambda1;
  ElasticNetFit fit;   // trained on the full data, warm-started
  double cv_mse;       // held-out MSE from the internal 3-fold split
};

struct RegularizationPath {
  std::vector<PathPoint> points;  // lambda1 descending
  int best_index = 0;             // argmin cv_mse, ties toward larger lambda1
};

struct PathConfig {
  int n_lambdas = 20;
  double lambda2_ratio = 0.5;  // lambda2 = ratio * lambda1
  double tol = 1e-6;
  int max_iter = 1000;
};

RegularizationPath regularization_path(const Eigen::MatrixXd& X,
                                       const Eigen::VectorXd& y,
                                       const PathConfig& cfg);

/// Per-drug best-lambda supports over the expression features, unioned.
/// Rows with missing response are excluded per drug. Empty union is an error.
std::vector<std::string> select_genes(const ResponseMatrix& resp,
                                      const ExpressionMatrix& expr,
                                      const PathConfig& cfg);

}  // namespace pushrank

#endif

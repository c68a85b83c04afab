#pragma once

// Comparison regressors: ordinary least squares, the linear-in-means social
// interaction model (SIM), and regression with network cohesion (RNC).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netreg/network_models.hpp"

namespace netreg {

enum class BaselineMethod { Ols, Sim, Rnc };

struct BaselineFit {
  BaselineMethod method = BaselineMethod::Ols;
  Eigen::VectorXd fitted_values;
  Eigen::VectorXd beta;
  /// SIM only.
  double gamma_ar = 0.0;
  Eigen::VectorXd eta;
  /// RNC only.
  Eigen::VectorXd mu;
  double lambda = 0.0;
  int cv_folds = 0;
  std::vector<double> grid;  // gamma grid (SIM) or lambda grid (RNC)
  std::vector<double> grid_score;  // RSS (SIM) or CV error (RNC); NaN where skipped
  std::vector<std::string> notes;
};

BaselineFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

struct SimOptions {
  std::vector<double> gamma_grid;  // empty means -0.99, -0.98, ..., 0.99
  /// Isolated nodes get zero neighbour averages (with a note) instead of an error.
  bool allow_isolated = true;
  /// Restrict to gamma = 0 and eta = 0 (the nested OLS model).
  bool fix_gamma_zero = false;
  bool drop_eta = false;
};

/// Y = gamma L Y + X beta + (L X) eta + eps with L = D^{-1} A, estimated by
/// profile least squares over the gamma grid.
BaselineFit fit_sim(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const AdjacencyMatrix& a,
                    const SimOptions& options = {});

std::vector<double> default_gamma_grid();

/// 17 log-spaced points on [1e-4, 1e4].
std::vector<double> default_lambda_grid();

/// argmin ||Y - X beta - mu||^2 + lambda mu^T L mu with L = D - A, lambda
/// chosen by K-fold cross-validation on held-out squared error.
BaselineFit fit_rnc(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const AdjacencyMatrix& a,
                    std::vector<double> lambda_grid = {}, int cv_folds = 10, std::uint64_t seed = 0);

/// Solution of the cohesion problem at a single lambda. Nodes with
/// observed[i] == false contribute no squared-error term. Throws
/// SingularSystem when the penalized system cannot be factored.
struct RncSolution {
  Eigen::VectorXd beta;
  Eigen::VectorXd mu;
  double objective = 0.0;
};
RncSolution solve_rnc(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& lap, double lambda,
                      const std::vector<bool>& observed);

}  // namespace netreg

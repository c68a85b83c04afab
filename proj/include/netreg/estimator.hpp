#pragma once

// Spectral projection regression: point estimates, variance and covariance
// estimates, normal inference for linear contrasts of beta and theta, and the
// chi-square test for the network-only component alpha.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netreg/network_models.hpp"
#include "netreg/rank_selection.hpp"
#include "netreg/spectral_core.hpp"

namespace netreg {

enum class RMode { Fixed, AutoThreshold, AutoBootstrap };

enum class ChisqDfMode {
  DimGamma,  // df = K - r, the dimension of gamma0
  PaperK,    // df = K
};

struct FitConfig {
  Eigen::Index K = 1;
  RMode r_mode = RMode::Fixed;
  Eigen::Index r = 0;  // used when r_mode == Fixed
  double alpha_level = 0.05;
  ChisqDfMode chisq_df_mode = ChisqDfMode::DimGamma;
  int bootstrap_B = 50;
  std::uint64_t bootstrap_seed = 0;
  /// Require every column of X to have norm sqrt(n) within 1%.
  bool check_scale = true;
};

struct NetworkTest {
  double chisq = 0.0;
  Eigen::Index df = 0;
  double pvalue = 1.0;
};

struct FitResult {
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd alpha_hat;
  Eigen::VectorXd fitted;  // X theta + X beta + alpha = H Y
  double sigma2_hat = 0.0;
  Eigen::Index dof = 0;  // n - p - K + r

  Eigen::MatrixXd cov_beta;
  Eigen::MatrixXd cov_theta;
  /// The same sandwiches divided by sigma2_hat.
  Eigen::MatrixXd cov_beta_unit;
  Eigen::MatrixXd cov_theta_unit;

  /// gamma_hat = W_c^T P_N Y and its covariance divided by sigma2_hat.
  Eigen::VectorXd gamma_hat;
  Eigen::MatrixXd gamma_cov_unit;
  Eigen::VectorXd gamma0;  // empty unless the test could be computed
  std::optional<NetworkTest> network_test;
  ChisqDfMode chisq_df_mode = ChisqDfMode::DimGamma;

  Eigen::Index r_used = 0;
  Eigen::Index K = 0;
  Eigen::VectorXd sigma_hat_values;
  std::optional<RankSelectionReport> rank_report;
  bool eigen_gap_warning = false;

  /// Set by model_guard_fit when the network component was dropped.
  bool fallback = false;

  ProjectionSetd projections;
  std::vector<std::string> notes;

  Eigen::Index n() const { return alpha_hat.size(); }
  Eigen::Index p() const { return beta_hat.size(); }
};

struct Inference {
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double z = 0.0;
  double pvalue = 1.0;
};

/// Fits Y = X theta + X beta + alpha + eps against the eigenvectors of P_hat.
/// `observed` supplies the adjacency matrix for the automatic r rules when
/// P_hat is not the adjacency matrix itself.
FitResult fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const NetworkEstimate& p_hat,
              const FitConfig& config, const AdjacencyMatrix* observed = nullptr);

/// Normal inference for omega^T beta (omega a unit vector).
Inference contrast_inference(const FitResult& fit, const Eigen::MatrixXd& x, const Eigen::VectorXd& omega,
                             double level = 0.05);

Inference coefficient_test(const FitResult& fit, const Eigen::MatrixXd& x, Eigen::Index j, double level = 0.05);

Inference theta_inference(const FitResult& fit, const Eigen::MatrixXd& x, Eigen::Index j, double level = 0.05);

NetworkTest network_effect_test(const FitResult& fit);

/// Plain least squares wrapped as a FitResult (theta = alpha = 0).
FitResult ols_fit_result(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Fits, runs the network test, and returns the OLS fit (fallback = true)
/// when the test does not reject at config.alpha_level.
FitResult model_guard_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const NetworkEstimate& p_hat,
                          const FitConfig& config, const AdjacencyMatrix* observed = nullptr);

/// Scales every column to norm sqrt(n). Zero columns are rejected.
Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& x);

}  // namespace netreg

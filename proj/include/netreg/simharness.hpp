#pragma once

// Monte Carlo engine for the simulation designs: SBM/DCBM networks at a target
// average degree, eigenspace or random covariates, and eigenspace, zero, or
// Laplacian-smooth individual effects.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netreg/estimator.hpp"
#include "netreg/network_models.hpp"

namespace netreg {

enum class NetworkKind { Sbm, Dcbm };
enum class DensityKind { TwoLogN, SqrtN, NTwoThirds, Explicit };
enum class DesignKind { Eigenspace, RandomCovariates };
enum class EffectKind { Eigenspace, ZeroGamma, SmoothLaplacian };
enum class Method { SP, SP_SBM, SP_DCBM, SP_L, SP_SBM_L, SP_DCBM_L, OLS, SIM, RNC };

std::string to_string(Method m);
std::string to_string(DensityKind d);
std::string to_string(NetworkKind k);
std::string to_string(DesignKind k);
std::string to_string(EffectKind k);
Method method_from_string(const std::string& s);
DensityKind density_from_string(const std::string& s);

struct ScenarioConfig {
  Eigen::Index n = 1000;
  Eigen::Index K = 4;  // communities and network-subspace dimension
  NetworkKind network = NetworkKind::Sbm;
  DensityKind density = DensityKind::SqrtN;
  double explicit_degree = 0.0;
  DesignKind design = DesignKind::Eigenspace;
  EffectKind effect = EffectKind::Eigenspace;
  Eigen::VectorXd beta = (Eigen::VectorXd(4) << 0, 1, 1, 1).finished();
  Eigen::VectorXd theta = (Eigen::VectorXd(4) << 1, 0, 0, 0).finished();
  Eigen::VectorXd gamma = (Eigen::VectorXd(4) << 0, 1, 1, 1).finished();
  /// alpha = alpha_scale * W_tilde gamma; <= 0 means sqrt(n).
  double alpha_scale = 0.0;
  double noise_sigma2 = 1.0;
  int reps = 50;
  std::uint64_t seed = 1;
  std::vector<Method> methods = {Method::SP, Method::SP_SBM};
  /// r for the SP fits: the design's true r (1) unless r_mode says otherwise.
  RMode r_mode = RMode::Fixed;
  Eigen::Index r = 1;
  int bootstrap_B = 50;
  double level = 0.05;
  ChisqDfMode chisq_df_mode = ChisqDfMode::DimGamma;
  int threads = 1;
  /// Keep the per-replicate chi-square statistics in the report.
  bool keep_statistics = false;
};

/// (1/n) sum_ij P_ij for the configured density schedule.
double target_degree(const ScenarioConfig& config);

/// Replicate-invariant parts of a scenario.
struct Population {
  ProbabilityMatrix P;
  CommunityAssignment g;
  Eigen::VectorXd nu;              // DCBM degree parameters (ones for SBM)
  Eigen::MatrixXd W;               // n x (K + 3): K leading eigenvectors, then 3 null-space directions
  Eigen::MatrixXd X;               // n x 4
  Eigen::VectorXd sigma;           // cosines between col(X) and S_K(P)
  Eigen::MatrixXd W_tilde;         // W_K V from the population alignment SVD
  Eigen::Index r = 1;
  double degree = 0.0;             // target average degree
  double d_max = 0.0;              // n max_ij P_ij
};

struct ScenarioData {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
  AdjacencyMatrix A;
  Eigen::VectorXd mean;  // E[Y] = X theta + X beta + alpha
  Eigen::VectorXd alpha;
};

Population build_population(const ScenarioConfig& config);

/// Deterministic per (config, replicate). Throws ConstraintViolation when the
/// eigenspace design breaks the identifiability constraints beyond 1e-8.
ScenarioData build_scenario(const ScenarioConfig& config, const Population& pop, int replicate);
ScenarioData build_scenario(const ScenarioConfig& config, int replicate);

struct Metric {
  double value = 0.0;
  double se = 0.0;  // Monte Carlo standard error
};

struct MethodReport {
  Method method = Method::SP;
  std::map<std::string, Metric> metrics;
  int reps = 0;
  int failures = 0;
  std::map<std::string, int> failure_codes;
  std::vector<double> chisq_samples;
  Eigen::Index chisq_df = 0;
};

struct ExperimentReport {
  ScenarioConfig config;
  double degree = 0.0;
  std::vector<MethodReport> methods;
  double wall_seconds = 0.0;

  const MethodReport& at(Method m) const;
};

/// Bias-SD ratio, coverage, theta coverage, and chi-square rejection rate of
/// the SP variants over config.reps replicates.
ExperimentReport run_inference_experiment(const ScenarioConfig& config);

/// Relative MSE of E[Y] for every configured method. SP variants use
/// model_guard_fit; their r comes from config.r_mode.
ExperimentReport run_comparison_experiment(const ScenarioConfig& config);

enum class ProbeVector {
  Orthogonal,  // unit vector orthogonal to S_K(P)
  Leading,     // w_1
  Design,      // X_2 / ||X_2|| of the eigenspace design
};

struct ConcentrationCell {
  double degree = 0.0;  // average expected degree
  double d = 0.0;       // n max P
  double bound = 0.0;   // 2 sqrt(K log n) / d
  std::vector<double> values;
  double fraction_within = 0.0;
  double median = 0.0;
  double q95 = 0.0;
  double max = 0.0;
  double lower_witness = 0.0;  // c / d with c calibrated at the densest cell
};

struct ConcentrationReport {
  Eigen::Index n = 0;
  Eigen::Index K = 0;
  ProbeVector probe = ProbeVector::Orthogonal;
  double c_calibrated = 0.0;
  std::vector<ConcentrationCell> cells;
};

/// ||(W_hat W_hat^T - W W^T) v|| over reps networks per density.
ConcentrationReport run_concentration_check(Eigen::Index n, Eigen::Index k, const std::vector<double>& degrees,
                                            int reps, std::uint64_t seed, ProbeVector probe = ProbeVector::Orthogonal,
                                            int threads = 1);

/// Runs body(i) for i in [0, count) on up to `threads` workers.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

}  // namespace netreg

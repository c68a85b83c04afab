#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "netreg/network_models.hpp"
#include "netreg/spectral_core.hpp"

namespace netreg {

enum class RankMethod { Threshold, Bootstrap };

struct RankSelectionReport {
  Eigen::Index r_hat = 0;
  Eigen::VectorXd sigma_hat;
  double threshold = 1.0;
  RankMethod method = RankMethod::Threshold;
  /// Bootstrap only: max_{k,b} |sigma_k^(b) - sigma_k|.
  double delta = 0.0;
  /// Bootstrap replicate count (0 for the threshold rule).
  int B = 0;
  /// Threshold rule only: the cutoff fell to 0 so every value qualifies.
  bool unreliable = false;
};

/// r_hat = max{i : sigma_i >= 1 - 4 sqrt(p K log n) / d_hat}.
RankSelectionReport select_r_threshold(const Eigen::VectorXd& sigma_hat, double d_hat, Eigen::Index p,
                                       Eigen::Index k, Eigen::Index n);

/// Rank-K eigen-truncation of A (top K by algebraic value), clamped to [0, 1]
/// and rescaled so (1/n) sum P*_ij = target_avg_degree. The clamp/rescale pair
/// runs twice.
ProbabilityMatrix svt_estimate(const AdjacencyMatrix& a, Eigen::Index k, double target_avg_degree);

/// Which operator of a bootstrap network supplies W_hat^(b).
enum class BootstrapOperator { Adjacency, Laplacian };

/// Bootstrap selector: resample B networks from the truncated estimate, measure
/// the largest deviation delta of their principal-angle cosines, and take
/// r_hat = max{k : sigma_k > 1 - delta}.
RankSelectionReport select_r_bootstrap(const AdjacencyMatrix& a, const OrthonormalBasisd& z, Eigen::Index k,
                                       int b = 50, std::uint64_t seed = 0,
                                       BootstrapOperator op = BootstrapOperator::Adjacency);

}  // namespace netreg

#pragma once

// Random network generation (inhomogeneous Erdos-Renyi, SBM, DCBM),
// parametric estimation of the edge-probability matrix, and Laplacians.
// Every routine here produces or consumes a NetworkEstimate, the matrix that
// feeds the spectral projection fit.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netreg/spectral_core.hpp"

namespace netreg {

enum class DiagConvention { Zero, Kept };

struct ProbabilityMatrix {
  Eigen::MatrixXd P;
  DiagConvention diag = DiagConvention::Kept;
  /// Number of entries clamped into [0, 1] during construction.
  Eigen::Index clamped = 0;

  Eigen::Index n() const { return P.rows(); }
};

struct AdjacencyMatrix {
  Eigen::MatrixXd A;

  Eigen::Index n() const { return A.rows(); }
};

/// Community labels, stored 0-based (files use 1-based labels).
class CommunityAssignment {
 public:
  CommunityAssignment() = default;
  /// `num_communities` < 0 means max(label) + 1.
  explicit CommunityAssignment(std::vector<int> labels, int num_communities = -1);

  /// Balanced contiguous blocks: node i gets label floor(i * k / n).
  static CommunityAssignment balanced(Eigen::Index n, int k);

  Eigen::Index n() const { return static_cast<Eigen::Index>(labels_.size()); }
  int num_communities() const { return num_communities_; }
  int operator[](Eigen::Index i) const { return labels_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<Eigen::Index>& counts() const { return counts_; }

  /// n x K 0/1 membership matrix.
  Eigen::MatrixXd membership() const;

 private:
  std::vector<int> labels_;
  int num_communities_ = 0;
  std::vector<Eigen::Index> counts_;
};

enum class NetworkSource { Adjacency, Laplacian, Sbm, Dcbm };

/// P_hat = factor * core * factor^T, kept when the estimate is exactly low rank
/// so its eigenvectors can be taken from the small core problem.
struct LowRankFactor {
  Eigen::MatrixXd factor;  // n x m
  Eigen::MatrixXd core;    // m x m symmetric
};

struct NetworkEstimate {
  Eigen::MatrixXd matrix;
  EigenDirection direction = EigenDirection::Largest;
  NetworkSource source = NetworkSource::Adjacency;
  std::optional<Eigen::MatrixXd> B_hat;
  std::optional<Eigen::VectorXd> nu_hat;
  std::optional<LowRankFactor> low_rank;
  std::vector<std::string> notes;

  Eigen::Index n() const { return matrix.rows(); }
};

// --- generation --------------------------------------------------------------

/// A_ij ~ Bernoulli(P_ij) independently for i < j; zero diagonal. Row i draws
/// from its own stream derived from (seed, i).
AdjacencyMatrix sample_inhomogeneous_er(const ProbabilityMatrix& p, std::uint64_t seed);

ProbabilityMatrix sbm_probability(const CommunityAssignment& g, const Eigen::MatrixXd& b);

/// P_ij = nu_i nu_j B_{g_i g_j}, clamped to <= 1 (count reported in `clamped`).
ProbabilityMatrix dcbm_probability(const CommunityAssignment& g, const Eigen::MatrixXd& b,
                                   const Eigen::VectorXd& nu);

/// Multiplies P so that (1/n) sum_ij P_ij equals `target`. Throws if the result
/// would leave [0, 1].
ProbabilityMatrix scale_to_average_degree(const ProbabilityMatrix& p, double target);

// --- estimation --------------------------------------------------------------

NetworkEstimate adjacency_estimate(const AdjacencyMatrix& a);

/// B_hat_kl = sum_{g_i=k, g_j=l} A_ij / (n_k n_l), P_hat_ij = B_hat_{g_i g_j}.
NetworkEstimate estimate_sbm(const AdjacencyMatrix& a, const CommunityAssignment& g);

/// nu_hat_i = n_k d_i / sum_{g_j=k} d_j,
/// B_hat_kl = (1 / (n_k n_l)) sum A_ij / (nu_hat_i nu_hat_j),
/// P_hat_ij = nu_hat_i nu_hat_j B_hat_{g_i g_j}.
NetworkEstimate estimate_dcbm(const AdjacencyMatrix& a, const CommunityAssignment& g);

/// L = D - A, routed to the smallest eigenvalues.
NetworkEstimate laplacian(const AdjacencyMatrix& a);

/// Laplacian of a (possibly parametric) estimate; keeps B_hat/nu_hat for reporting.
NetworkEstimate laplacian_of(const NetworkEstimate& estimate);

/// (1/n) sum_ij A_ij.
double average_degree(const AdjacencyMatrix& a);

/// Number of connected components (isolated nodes count as components).
Eigen::Index connected_components(const AdjacencyMatrix& a);

/// K eigenvectors of the estimate in its stored direction. Exactly low-rank
/// estimates are solved through their m x m core.
EigenBasisd network_eigvectors(const NetworkEstimate& estimate, Eigen::Index k);

}  // namespace netreg

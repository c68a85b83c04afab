#include "netreg/network_models.hpp"

#include <algorithm>
#include <numeric>

#include "netreg/errors.hpp"
#include "netreg/rng.hpp"

namespace netreg {

CommunityAssignment::CommunityAssignment(std::vector<int> labels, int num_communities)
    : labels_(std::move(labels)) {
  int max_label = -1;
  for (int l : labels_) {
    if (l < 0) throw Error(ErrorCode::InvalidInput, "community labels must be nonnegative (0-based)");
    max_label = std::max(max_label, l);
  }
  num_communities_ = num_communities < 0 ? max_label + 1 : num_communities;
  if (max_label >= num_communities_) {
    throw Error(ErrorCode::InvalidInput, "community label exceeds the number of communities");
  }
  counts_.assign(static_cast<std::size_t>(num_communities_), 0);
  for (int l : labels_) ++counts_[static_cast<std::size_t>(l)];
}

CommunityAssignment CommunityAssignment::balanced(Eigen::Index n, int k) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(i * k / n);
  return CommunityAssignment(std::move(labels), k);
}

Eigen::MatrixXd CommunityAssignment::membership() const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n(), num_communities_);
  for (Eigen::Index i = 0; i < n(); ++i) g(i, (*this)[i]) = 1.0;
  return g;
}

namespace {

void require_square(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, std::string(what) + " must be square");
}

void require_nonempty(const CommunityAssignment& g) {
  for (std::size_t k = 0; k < g.counts().size(); ++k) {
    if (g.counts()[k] == 0) {
      throw Error(ErrorCode::EmptyCommunity, "community " + std::to_string(k + 1) + " has no nodes");
    }
  }
}

Eigen::Index clamp_unit(Eigen::MatrixXd& m) {
  Eigen::Index clamped = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      double& v = m(i, j);
      if (v < 0.0) {
        v = 0.0;
        ++clamped;
      } else if (v > 1.0) {
        v = 1.0;
        ++clamped;
      }
    }
  }
  return clamped;
}

// Community sums S_kl = sum_{g_i=k, g_j=l} M_ij.
Eigen::MatrixXd block_sums(const Eigen::MatrixXd& m, const CommunityAssignment& g) {
  const Eigen::MatrixXd memb = g.membership();
  return memb.transpose() * m * memb;
}

}  // namespace

AdjacencyMatrix sample_inhomogeneous_er(const ProbabilityMatrix& p, std::uint64_t seed) {
  require_square(p.P, "probability matrix");
  const Eigen::Index n = p.n();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    CounterRng rng(stream_key(seed, {static_cast<std::uint64_t>(i)}));
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (rng.uniform() < p.P(j, i)) {
        a(j, i) = 1.0;
        a(i, j) = 1.0;
      }
    }
  }
  return {std::move(a)};
}

ProbabilityMatrix sbm_probability(const CommunityAssignment& g, const Eigen::MatrixXd& b) {
  require_square(b, "B");
  if (b.rows() != g.num_communities()) throw Error(ErrorCode::DimensionMismatch, "B size != number of communities");
  if ((b - b.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw Error(ErrorCode::InvalidInput, "B must be symmetric");
  if (b.minCoeff() < 0.0 || b.maxCoeff() > 1.0) throw Error(ErrorCode::InvalidInput, "B entries must be in [0, 1]");
  const Eigen::Index n = g.n();
  Eigen::MatrixXd p(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) p(i, j) = b(g[i], g[j]);
  return {std::move(p), DiagConvention::Kept, 0};
}

ProbabilityMatrix dcbm_probability(const CommunityAssignment& g, const Eigen::MatrixXd& b,
                                   const Eigen::VectorXd& nu) {
  if (nu.size() != g.n()) throw Error(ErrorCode::DimensionMismatch, "nu must have one entry per node");
  if (nu.minCoeff() <= 0.0) throw Error(ErrorCode::InvalidInput, "degree parameters must be positive");
  ProbabilityMatrix out = sbm_probability(g, b);
  out.P = nu.asDiagonal() * out.P * nu.asDiagonal();
  out.clamped = clamp_unit(out.P);
  return out;
}

ProbabilityMatrix scale_to_average_degree(const ProbabilityMatrix& p, double target) {
  const double current = p.P.sum() / static_cast<double>(p.n());
  if (!(current > 0.0) || !(target > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "average degree scaling needs positive current and target degrees");
  }
  ProbabilityMatrix out = p;
  out.P *= target / current;
  if (out.P.maxCoeff() > 1.0) {
    throw Error(ErrorCode::InvalidInput, "target average degree pushes edge probabilities above 1");
  }
  return out;
}

NetworkEstimate adjacency_estimate(const AdjacencyMatrix& a) {
  require_square(a.A, "adjacency matrix");
  NetworkEstimate est;
  est.matrix = a.A;
  est.direction = EigenDirection::Largest;
  est.source = NetworkSource::Adjacency;
  return est;
}

NetworkEstimate estimate_sbm(const AdjacencyMatrix& a, const CommunityAssignment& g) {
  require_square(a.A, "adjacency matrix");
  if (g.n() != a.n()) throw Error(ErrorCode::DimensionMismatch, "labels and network disagree on n");
  require_nonempty(g);
  const Eigen::VectorXd counts =
      Eigen::Map<const Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1>>(g.counts().data(), g.num_communities())
          .cast<double>();
  Eigen::MatrixXd b_hat = block_sums(a.A, g).cwiseQuotient(counts * counts.transpose());
  clamp_unit(b_hat);

  NetworkEstimate est;
  const Eigen::MatrixXd memb = g.membership();
  est.matrix = memb * b_hat * memb.transpose();
  est.direction = EigenDirection::Largest;
  est.source = NetworkSource::Sbm;
  est.low_rank = LowRankFactor{memb, b_hat};
  est.B_hat = std::move(b_hat);
  return est;
}

NetworkEstimate estimate_dcbm(const AdjacencyMatrix& a, const CommunityAssignment& g) {
  require_square(a.A, "adjacency matrix");
  if (g.n() != a.n()) throw Error(ErrorCode::DimensionMismatch, "labels and network disagree on n");
  require_nonempty(g);
  const Eigen::Index n = a.n();
  const int k = g.num_communities();
  const Eigen::VectorXd degree = a.A.rowwise().sum();
  Eigen::VectorXd community_degree = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) community_degree(g[i]) += degree(i);
  for (int c = 0; c < k; ++c) {
    if (!(community_degree(c) > 0.0)) {
      throw Error(ErrorCode::ZeroDegreeCommunity, "community " + std::to_string(c + 1) + " has zero total degree");
    }
  }

  NetworkEstimate est;
  Eigen::VectorXd nu(n);
  Eigen::Index floored = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double nk = static_cast<double>(g.counts()[static_cast<std::size_t>(g[i])]);
    nu(i) = nk * degree(i) / community_degree(g[i]);
    if (nu(i) < 1e-8) {
      nu(i) = 1e-8;
      ++floored;
    }
  }
  if (floored > 0) est.notes.push_back("IsolatedNode: " + std::to_string(floored) + " degree parameters floored at 1e-8");

  const Eigen::VectorXd inv_nu = nu.cwiseInverse();
  const Eigen::VectorXd counts =
      Eigen::Map<const Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1>>(g.counts().data(), k).cast<double>();
  const Eigen::MatrixXd weighted = inv_nu.asDiagonal() * a.A * inv_nu.asDiagonal();
  Eigen::MatrixXd b_hat = block_sums(weighted, g).cwiseQuotient(counts * counts.transpose());

  const Eigen::MatrixXd factor = nu.asDiagonal() * g.membership();
  est.matrix = factor * b_hat * factor.transpose();
  const Eigen::Index clamped = clamp_unit(est.matrix);
  if (clamped > 0) {
    est.notes.push_back("clamped " + std::to_string(clamped) + " estimated probabilities into [0, 1]");
  } else {
    est.low_rank = LowRankFactor{factor, b_hat};
  }
  est.direction = EigenDirection::Largest;
  est.source = NetworkSource::Dcbm;
  est.B_hat = std::move(b_hat);
  est.nu_hat = std::move(nu);
  return est;
}

NetworkEstimate laplacian(const AdjacencyMatrix& a) {
  require_square(a.A, "adjacency matrix");
  NetworkEstimate est;
  est.matrix = -a.A;
  est.matrix.diagonal() += a.A.rowwise().sum();
  est.direction = EigenDirection::Smallest;
  est.source = NetworkSource::Laplacian;
  return est;
}

NetworkEstimate laplacian_of(const NetworkEstimate& estimate) {
  NetworkEstimate est;
  est.matrix = -estimate.matrix;
  est.matrix.diagonal() += estimate.matrix.rowwise().sum();
  est.direction = EigenDirection::Smallest;
  est.source = NetworkSource::Laplacian;
  est.B_hat = estimate.B_hat;
  est.nu_hat = estimate.nu_hat;
  est.notes = estimate.notes;
  return est;
}

double average_degree(const AdjacencyMatrix& a) {
  if (a.n() == 0) return 0.0;
  return a.A.sum() / static_cast<double>(a.n());
}

Eigen::Index connected_components(const AdjacencyMatrix& a) {
  const Eigen::Index n = a.n();
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  auto find = [&](Eigen::Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  Eigen::Index components = n;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      if (a.A(i, j) != 0.0) {
        const Eigen::Index ri = find(i);
        const Eigen::Index rj = find(j);
        if (ri != rj) {
          parent[static_cast<std::size_t>(ri)] = rj;
          --components;
        }
      }
    }
  }
  return components;
}

EigenBasisd network_eigvectors(const NetworkEstimate& estimate, Eigen::Index k) {
  if (estimate.low_rank && estimate.direction == EigenDirection::Largest &&
      k <= estimate.low_rank->factor.cols() && estimate.low_rank->factor.cols() < estimate.n()) {
    const auto& lr = *estimate.low_rank;
    const Eigen::Index m = lr.factor.cols();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(lr.factor);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    if (r.diagonal().cwiseAbs().minCoeff() > 1e-10 * r.diagonal().cwiseAbs().maxCoeff()) {
      const Eigen::MatrixXd core = r * lr.core * r.transpose();
      const Eigen::MatrixXd sym = 0.5 * (core + core.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
      // Ascending; the complement of col(factor) contributes zeros.
      const Eigen::VectorXd vals = es.eigenvalues().reverse();
      const double norm = estimate.matrix.cwiseAbs().rowwise().sum().maxCoeff();
      if (vals(k - 1) > 1e-8 * norm) {
        EigenBasisd out;
        const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(estimate.n(), m);
        out.basis.matrix = q * es.eigenvectors().rowwise().reverse().leftCols(k);
        apply_sign_convention(out.basis.matrix);
        out.eigenvalues = vals.head(k);
        const double next = k < m ? std::max(vals(k), 0.0) : 0.0;
        out.gap = std::abs(vals(k - 1) - next);
        out.eigen_gap_warning = out.gap < 1e-8 * norm;
        return out;
      }
    }
  }
  return leading_eigvectors<double>(estimate.matrix, k, estimate.direction);
}

}  // namespace netreg

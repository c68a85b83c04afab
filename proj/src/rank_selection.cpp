#include "netreg/rank_selection.hpp"

#include <algorithm>
#include <cmath>

#include "netreg/errors.hpp"
#include "netreg/rng.hpp"

namespace netreg {

RankSelectionReport select_r_threshold(const Eigen::VectorXd& sigma_hat, double d_hat, Eigen::Index p,
                                       Eigen::Index k, Eigen::Index n) {
  if (!(d_hat > 0.0)) throw Error(ErrorCode::InvalidInput, "threshold rule needs a positive average degree");
  RankSelectionReport report;
  report.method = RankMethod::Threshold;
  report.sigma_hat = sigma_hat;
  const double raw = 1.0 - 4.0 * std::sqrt(static_cast<double>(p * k) * std::log(static_cast<double>(n))) / d_hat;
  report.threshold = std::max(0.0, raw);
  report.unreliable = raw <= 0.0;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sigma_hat.size(); ++i) {
    if (sigma_hat(i) >= report.threshold) r = i + 1;
  }
  report.r_hat = std::min<Eigen::Index>(r, std::min(p, k));
  return report;
}

namespace {

void rescale_to(Eigen::MatrixXd& p, double target) {
  const double current = p.sum() / static_cast<double>(p.rows());
  if (current > 0.0) p *= target / current;
}

}  // namespace

ProbabilityMatrix svt_estimate(const AdjacencyMatrix& a, Eigen::Index k, double target_avg_degree) {
  const EigenBasisd eig = leading_eigvectors<double>(a.A, k, EigenDirection::Largest);
  const Eigen::MatrixXd& w = eig.basis.matrix;
  Eigen::MatrixXd p = w * eig.eigenvalues.asDiagonal() * w.transpose();
  p = (0.5 * (p + p.transpose())).eval();
  p = p.cwiseMax(0.0).cwiseMin(1.0);
  for (int pass = 0; pass < 2; ++pass) {
    rescale_to(p, target_avg_degree);
    p = p.cwiseMax(0.0).cwiseMin(1.0);
  }
  return {std::move(p), DiagConvention::Kept, 0};
}

namespace {

EigenBasisd bootstrap_eigvectors(const AdjacencyMatrix& a, Eigen::Index k, BootstrapOperator op) {
  if (op == BootstrapOperator::Laplacian) return network_eigvectors(laplacian(a), k);
  return leading_eigvectors<double>(a.A, k, EigenDirection::Largest);
}

}  // namespace

RankSelectionReport select_r_bootstrap(const AdjacencyMatrix& a, const OrthonormalBasisd& z, Eigen::Index k, int b,
                                       std::uint64_t seed, BootstrapOperator op) {
  if (b < 1) throw Error(ErrorCode::InvalidInput, "bootstrap needs at least one replicate");
  if (z.rows() != a.n()) throw Error(ErrorCode::DimensionMismatch, "basis and network disagree on n");

  const OrthonormalBasisd w_hat = bootstrap_eigvectors(a, k, op).basis;
  const Eigen::VectorXd sigma = alignment_svd(z, w_hat).sigma_hat;
  const ProbabilityMatrix p_star = svt_estimate(a, k, average_degree(a));

  double delta = 0.0;
  for (int rep = 0; rep < b; ++rep) {
    const AdjacencyMatrix a_b = sample_inhomogeneous_er(p_star, stream_key(seed, {0xb007ULL, static_cast<std::uint64_t>(rep)}));
    const OrthonormalBasisd w_b = bootstrap_eigvectors(a_b, k, op).basis;
    const Eigen::VectorXd sigma_b = alignment_svd(z, w_b).sigma_hat;
    delta = std::max(delta, (sigma_b - sigma).cwiseAbs().maxCoeff());
  }

  RankSelectionReport report;
  report.method = RankMethod::Bootstrap;
  report.sigma_hat = sigma;
  report.delta = delta;
  report.B = b;
  report.threshold = 1.0 - delta;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > report.threshold) r = i + 1;
  }
  report.r_hat = r;
  return report;
}

}  // namespace netreg

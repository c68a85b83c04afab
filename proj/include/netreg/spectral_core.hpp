#pragma once

// Subspace primitives for spectral projection regression: orthonormal bases,
// partial eigendecompositions, the alignment SVD between the covariate and
// network subspaces, and the three projection operators built from it.
//
// Everything here is templated on the scalar type. Downstream modules use the
// double instantiations (see the aliases at the bottom).

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

#include <Eigen/Dense>

#include "netreg/errors.hpp"

namespace netreg {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class EigenDirection { Largest, Smallest };

namespace detail {

// Eigenpairs il..iu (1-based, ascending) of a symmetric matrix via Eigen's
// tridiagonalization and LAPACK ?stemr. Implemented in spectral_core.cpp.
void partial_eigen(const Mat<double>& a, int il, int iu, Vec<double>& values, Mat<double>& vectors);
void partial_eigen(const Mat<float>& a, int il, int iu, Vec<float>& values, Mat<float>& vectors);

template <typename Scalar>
constexpr bool has_lapack_v = std::is_same_v<Scalar, double> || std::is_same_v<Scalar, float>;

}  // namespace detail

/// Makes the first non-negligible entry of every column nonnegative.
template <typename Derived>
void apply_sign_convention(Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const Scalar scale = m.col(j).cwiseAbs().maxCoeff();
    if (scale == Scalar(0)) continue;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (std::abs(m(i, j)) > Scalar(1e-8) * scale) {
        if (m(i, j) < Scalar(0)) m.col(j) *= Scalar(-1);
        break;
      }
    }
  }
}

template <typename Scalar>
struct OrthonormalBasis {
  Mat<Scalar> matrix;

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }
};

template <typename Scalar>
struct EigenBasis {
  OrthonormalBasis<Scalar> basis;
  /// Eigenvalues in the requested order (descending for Largest).
  Vec<Scalar> eigenvalues;
  /// |lambda_K - lambda_{K+1}|; +inf when K == n.
  Scalar gap = std::numeric_limits<Scalar>::infinity();
  /// Non-fatal: the K-dimensional eigenspace is numerically ill-defined.
  bool eigen_gap_warning = false;
};

/// Orthonormal basis of col(X) from a Householder QR. Throws RankDeficient when
/// the smallest |R_ii| falls below 1e-10 times the largest.
template <typename Scalar>
OrthonormalBasis<Scalar> orthonormal_basis(const Mat<Scalar>& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (p == 0 || n < p) {
    throw Error(ErrorCode::RankDeficient, "orthonormal_basis needs 1 <= p <= n");
  }
  Eigen::HouseholderQR<Mat<Scalar>> qr(x);
  const Vec<Scalar> diag = qr.matrixQR().diagonal().cwiseAbs();
  if (!(diag.minCoeff() >= Scalar(1e-10) * diag.maxCoeff()) || diag.maxCoeff() == Scalar(0)) {
    throw Error(ErrorCode::RankDeficient, "design matrix is numerically rank deficient");
  }
  Mat<Scalar> q = qr.householderQ() * Mat<Scalar>::Identity(n, p);
  apply_sign_convention(q);
  return {std::move(q)};
}

/// K extreme eigenvectors of a symmetric matrix, ordered by algebraic value.
template <typename Scalar>
EigenBasis<Scalar> leading_eigvectors(const Mat<Scalar>& s, Eigen::Index k, EigenDirection direction) {
  const Eigen::Index n = s.rows();
  if (s.cols() != n) throw Error(ErrorCode::DimensionMismatch, "leading_eigvectors needs a square matrix");
  if (k < 1 || k > n) throw Error(ErrorCode::InvalidInput, "leading_eigvectors needs 1 <= K <= n");
  const Scalar scale = std::max(Scalar(1), s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10) * scale) {
    throw Error(ErrorCode::InvalidInput, "matrix is not symmetric");
  }

  // One extra eigenvalue past K to measure the gap.
  const Eigen::Index m = std::min(n, k + 1);
  Vec<Scalar> values;
  Mat<Scalar> vectors;
  const Scalar norm = s.cwiseAbs().rowwise().sum().maxCoeff();  // bounds the spectral norm
  bool solved = false;
  if constexpr (detail::has_lapack_v<Scalar>) {
    const int il = direction == EigenDirection::Largest ? static_cast<int>(n - m + 1) : 1;
    const int iu = direction == EigenDirection::Largest ? static_cast<int>(n) : static_cast<int>(m);
    detail::partial_eigen(s, il, iu, values, vectors);
    const Scalar resid = (s * vectors - vectors * values.asDiagonal()).colwise().norm().maxCoeff();
    solved = resid <= Scalar(0.1) * std::sqrt(std::numeric_limits<Scalar>::epsilon()) * std::max(norm, Scalar(1));
  }
  if (!solved) {
    Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(s);
    if (direction == EigenDirection::Largest) {
      values = es.eigenvalues().tail(m);
      vectors = es.eigenvectors().rightCols(m);
    } else {
      values = es.eigenvalues().head(m);
      vectors = es.eigenvectors().leftCols(m);
    }
  }
  if (direction == EigenDirection::Largest) {
    values.reverseInPlace();
    vectors = vectors.rowwise().reverse().eval();
  }

  EigenBasis<Scalar> out;
  out.eigenvalues = values.head(k);
  out.basis.matrix = vectors.leftCols(k);
  apply_sign_convention(out.basis.matrix);
  if (m > k) {
    out.gap = std::abs(values(k - 1) - values(k));
    out.eigen_gap_warning = out.gap < Scalar(1e-8) * norm;
  }
  return out;
}

template <typename Scalar>
struct AlignmentSVD {
  Mat<Scalar> U_hat;      // p x p
  Vec<Scalar> sigma_hat;  // min(p, K), nonincreasing, clamped to [0, 1]
  Mat<Scalar> V_hat;      // K x K
  Mat<Scalar> Z_hat;      // Z * U_hat
  Mat<Scalar> W_breve;    // W_hat * V_hat

  Eigen::Index n() const { return Z_hat.rows(); }
  Eigen::Index p() const { return Z_hat.cols(); }
  Eigen::Index K() const { return W_breve.cols(); }
};

/// SVD of Z^T W_hat; the singular values are cosines of the principal angles
/// between the covariate subspace and the network subspace.
template <typename Scalar>
AlignmentSVD<Scalar> alignment_svd(const OrthonormalBasis<Scalar>& z, const OrthonormalBasis<Scalar>& w_hat) {
  if (z.rows() != w_hat.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "bases must share the row dimension");
  }
  const Mat<Scalar> cross = z.matrix.transpose() * w_hat.matrix;
  Eigen::JacobiSVD<Mat<Scalar>> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  AlignmentSVD<Scalar> out;
  out.U_hat = svd.matrixU();
  out.V_hat = svd.matrixV();
  out.sigma_hat = svd.singularValues().cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
  out.Z_hat = z.matrix * out.U_hat;
  out.W_breve = w_hat.matrix * out.V_hat;
  return out;
}

/// Intersection, covariate-only, and network-only projections. Stored in
/// factored form: P_R = Zr Zr^T, P_C = Zc Gc, P_N = Wc Gn with
/// [Gc; Gn] = (M^T M)^{-1} M^T and M = [Zc, Wc].
template <typename Scalar>
class ProjectionSet {
 public:
  ProjectionSet() = default;
  ProjectionSet(Mat<Scalar> z_int, Mat<Scalar> z_comp, Mat<Scalar> w_comp, Mat<Scalar> g_cov,
                Mat<Scalar> g_net, Eigen::Index p, Eigen::Index k, Vec<Scalar> sigma)
      : z_int_(std::move(z_int)),
        z_comp_(std::move(z_comp)),
        w_comp_(std::move(w_comp)),
        g_cov_(std::move(g_cov)),
        g_net_(std::move(g_net)),
        p_(p),
        k_(k),
        sigma_(std::move(sigma)) {}

  Eigen::Index n() const { return z_int_.rows(); }
  Eigen::Index r() const { return z_int_.cols(); }
  Eigen::Index p() const { return p_; }
  Eigen::Index K() const { return k_; }
  const Vec<Scalar>& sigma_hat() const { return sigma_; }

  const Mat<Scalar>& intersection_basis() const { return z_int_; }  // Z_hat_{1:r}
  const Mat<Scalar>& covariate_complement() const { return z_comp_; }  // Z_hat_{(r+1):p}
  const Mat<Scalar>& network_complement() const { return w_comp_; }  // W_breve_{(r+1):K}
  const Mat<Scalar>& covariate_coefficients() const { return g_cov_; }
  const Mat<Scalar>& network_coefficients() const { return g_net_; }

  Mat<Scalar> P_R() const { return z_int_ * z_int_.transpose(); }
  Mat<Scalar> P_C() const { return z_comp_ * g_cov_; }
  Mat<Scalar> P_N() const { return w_comp_ * g_net_; }
  Mat<Scalar> H() const { return P_R() + P_C() + P_N(); }

  template <typename Derived>
  Mat<Scalar> apply_R(const Eigen::MatrixBase<Derived>& v) const {
    return z_int_ * (z_int_.transpose() * v);
  }
  template <typename Derived>
  Mat<Scalar> apply_C(const Eigen::MatrixBase<Derived>& v) const {
    return z_comp_ * (g_cov_ * v);
  }
  template <typename Derived>
  Mat<Scalar> apply_N(const Eigen::MatrixBase<Derived>& v) const {
    return w_comp_ * (g_net_ * v);
  }
  template <typename Derived>
  Mat<Scalar> apply_H(const Eigen::MatrixBase<Derived>& v) const {
    return apply_R(v) + apply_C(v) + apply_N(v);
  }
  /// P_C^T v and P_N^T v without materializing n x n operators.
  template <typename Derived>
  Mat<Scalar> apply_C_transpose(const Eigen::MatrixBase<Derived>& v) const {
    return g_cov_.transpose() * (z_comp_.transpose() * v);
  }
  template <typename Derived>
  Mat<Scalar> apply_N_transpose(const Eigen::MatrixBase<Derived>& v) const {
    return g_net_.transpose() * (w_comp_.transpose() * v);
  }

 private:
  Mat<Scalar> z_int_, z_comp_, w_comp_, g_cov_, g_net_;
  Eigen::Index p_ = 0;
  Eigen::Index k_ = 0;
  Vec<Scalar> sigma_;
};

template <typename Scalar>
ProjectionSet<Scalar> build_projections(const AlignmentSVD<Scalar>& svd, Eigen::Index r) {
  const Eigen::Index n = svd.n();
  const Eigen::Index p = svd.p();
  const Eigen::Index k = svd.K();
  const Eigen::Index q = std::min(p, k);
  if (r < 0 || r > q) throw Error(ErrorCode::InvalidInput, "r must satisfy 0 <= r <= min(p, K)");
  if (r < q && svd.sigma_hat(r) > Scalar(1) - Scalar(1e-8)) {
    throw Error(ErrorCode::DegenerateAngle,
                "sigma_hat_{r+1} is numerically 1; the intersection dimension is larger than r");
  }

  Mat<Scalar> z_int = svd.Z_hat.leftCols(r);
  Mat<Scalar> z_comp = svd.Z_hat.rightCols(p - r);
  Mat<Scalar> w_comp = svd.W_breve.rightCols(k - r);
  const Eigen::Index mc = p - r + k - r;
  Mat<Scalar> g_cov(p - r, n);
  Mat<Scalar> g_net(k - r, n);
  if (mc > 0) {
    Mat<Scalar> m(n, mc);
    m << z_comp, w_comp;
    const Mat<Scalar> gram = m.transpose() * m;
    Eigen::LDLT<Mat<Scalar>> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw Error(ErrorCode::DegenerateAngle, "M^T M is not invertible");
    }
    const Mat<Scalar> g = ldlt.solve(m.transpose());
    g_cov = g.topRows(p - r);
    g_net = g.bottomRows(k - r);
  }
  return ProjectionSet<Scalar>(std::move(z_int), std::move(z_comp), std::move(w_comp), std::move(g_cov),
                               std::move(g_net), p, k, svd.sigma_hat);
}

template <typename Scalar>
struct ClosedFormProjections {
  Mat<Scalar> P_C;
  Mat<Scalar> P_N;
};

/// Closed-form P_C / P_N as explicit sums over aligned singular pairs:
///   P_C = sum_int 1/(1-s^2) z z^T - s/(1-s^2) z w^T + sum_tail z z^T
/// and symmetrically for P_N. Used as an independent oracle for
/// build_projections.
template <typename Scalar>
ClosedFormProjections<Scalar> closed_form_projections(const AlignmentSVD<Scalar>& svd, Eigen::Index r,
                                                      Eigen::Index s) {
  const Eigen::Index n = svd.n();
  const Eigen::Index p = svd.p();
  const Eigen::Index k = svd.K();
  const Eigen::Index q = std::min(p, k);
  if (r < 0 || s < 0 || r + s > q) throw Error(ErrorCode::BadPartition, "need 0 <= r, s and r + s <= min(p, K)");
  const Scalar tol(1e-6);
  for (Eigen::Index i = 0; i < q; ++i) {
    const Scalar sv = svd.sigma_hat(i);
    const bool ok = i < r ? sv >= Scalar(1) - tol : (i < r + s ? (sv > tol && sv < Scalar(1) - tol) : sv <= tol);
    if (!ok) throw Error(ErrorCode::BadPartition, "(r, s) split disagrees with the singular values");
  }
  ClosedFormProjections<Scalar> out{Mat<Scalar>::Zero(n, n), Mat<Scalar>::Zero(n, n)};
  for (Eigen::Index i = r; i < r + s; ++i) {
    const Scalar sv = svd.sigma_hat(i);
    const Scalar denom = Scalar(1) - sv * sv;
    const auto zi = svd.Z_hat.col(i);
    const auto wi = svd.W_breve.col(i);
    out.P_C.noalias() += (zi * zi.transpose() - sv * zi * wi.transpose()) / denom;
    out.P_N.noalias() += (wi * wi.transpose() - sv * wi * zi.transpose()) / denom;
  }
  for (Eigen::Index i = r + s; i < p; ++i) out.P_C.noalias() += svd.Z_hat.col(i) * svd.Z_hat.col(i).transpose();
  for (Eigen::Index i = r + s; i < k; ++i) out.P_N.noalias() += svd.W_breve.col(i) * svd.W_breve.col(i).transpose();
  return out;
}

/// Spectral norm of (W_hat W_hat^T - W W^T) Z: how far the network subspace
/// moved, as seen from the covariate subspace.
template <typename Scalar>
Scalar subspace_perturbation(const OrthonormalBasis<Scalar>& z, const OrthonormalBasis<Scalar>& w,
                             const OrthonormalBasis<Scalar>& w_hat) {
  if (z.rows() != w.rows() || z.rows() != w_hat.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "bases must share the row dimension");
  }
  const Mat<Scalar> diff =
      w_hat.matrix * (w_hat.matrix.transpose() * z.matrix) - w.matrix * (w.matrix.transpose() * z.matrix);
  if (diff.cols() == 0) return Scalar(0);
  Eigen::JacobiSVD<Mat<Scalar>> svd(diff);
  return svd.singularValues()(0);
}

using OrthonormalBasisd = OrthonormalBasis<double>;
using EigenBasisd = EigenBasis<double>;
using AlignmentSVDd = AlignmentSVD<double>;
using ProjectionSetd = ProjectionSet<double>;

}  // namespace netreg

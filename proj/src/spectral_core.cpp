#include "netreg/spectral_core.hpp"

#include <string>
#include <vector>

#include <lapacke.h>

namespace netreg::detail {

namespace {

// Householder tridiagonalization in Eigen, then LAPACK ?stemr on the
// tridiagonal for eigenpairs il..iu, then back-transformation by Q. Keeps
// the O(n^3) reduction out of the system BLAS.
template <typename Scalar, typename Fn>
void tridiagonal_range(const Mat<Scalar>& a, int il, int iu, Vec<Scalar>& values, Mat<Scalar>& vectors, Fn&& stemr) {
  const int n = static_cast<int>(a.rows());
  const int count = iu - il + 1;
  const Eigen::Tridiagonalization<Mat<Scalar>> tri(a);
  Vec<Scalar> d = tri.diagonal();
  Vec<Scalar> e = Vec<Scalar>::Zero(n);
  if (n > 1) e.head(n - 1) = tri.subDiagonal();
  values.resize(n);
  Mat<Scalar> z(n, count);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(std::max(1, count)));
  lapack_int found = 0;
  lapack_logical tryrac = 1;
  const lapack_int info =
      stemr(n, d.data(), e.data(), il, iu, &found, values.data(), z.data(), count, support.data(), &tryrac);
  if (info != 0 || found != count) {
    throw Error(ErrorCode::InvalidInput, "symmetric eigensolver failed (info=" + std::to_string(info) + ")");
  }
  values.conservativeResize(count);
  vectors = tri.matrixQ() * z;
}

}  // namespace

void partial_eigen(const Mat<double>& a, int il, int iu, Vec<double>& values, Mat<double>& vectors) {
  tridiagonal_range<double>(a, il, iu, values, vectors,
                            [](int n, double* d, double* e, int lo, int hi, lapack_int* m, double* w, double* z,
                               int nzc, lapack_int* isuppz, lapack_logical* tryrac) {
                              return LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'I', n, d, e, 0.0, 0.0, lo, hi, m, w, z,
                                                    n, nzc, isuppz, tryrac);
                            });
}

void partial_eigen(const Mat<float>& a, int il, int iu, Vec<float>& values, Mat<float>& vectors) {
  tridiagonal_range<float>(a, il, iu, values, vectors,
                           [](int n, float* d, float* e, int lo, int hi, lapack_int* m, float* w, float* z, int nzc,
                              lapack_int* isuppz, lapack_logical* tryrac) {
                             return LAPACKE_sstemr(LAPACK_COL_MAJOR, 'V', 'I', n, d, e, 0.0f, 0.0f, lo, hi, m, w, z,
                                                   n, nzc, isuppz, tryrac);
                           });
}

}  // namespace netreg::detail

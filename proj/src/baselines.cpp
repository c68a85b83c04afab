#include "netreg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "netreg/errors.hpp"
#include "netreg/rng.hpp"
#include "netreg/spectral_core.hpp"

namespace netreg {

BaselineFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (y.size() != x.rows()) throw Error(ErrorCode::DimensionMismatch, "X and Y disagree on n");
  const OrthonormalBasisd z = orthonormal_basis<double>(x);  // rank check
  BaselineFit out;
  out.method = BaselineMethod::Ols;
  out.fitted_values = z.matrix * (z.matrix.transpose() * y);
  out.beta = x.householderQr().solve(y);
  return out;
}

std::vector<double> default_gamma_grid() {
  std::vector<double> grid;
  for (int i = -99; i <= 99; ++i) grid.push_back(i / 100.0);
  return grid;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 17; ++i) grid.push_back(std::pow(10.0, -4.0 + 0.5 * i));
  return grid;
}

BaselineFit fit_sim(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const AdjacencyMatrix& a,
                    const SimOptions& options) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (y.size() != n || a.n() != n) throw Error(ErrorCode::DimensionMismatch, "X, Y and A disagree on n");

  BaselineFit out;
  out.method = BaselineMethod::Sim;
  const Eigen::VectorXd deg = a.A.rowwise().sum();
  Eigen::VectorXd inv_deg(n);
  Eigen::Index isolated = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (deg(i) > 0.0) {
      inv_deg(i) = 1.0 / deg(i);
    } else {
      inv_deg(i) = 0.0;
      ++isolated;
    }
  }
  if (isolated > 0) {
    if (!options.allow_isolated) throw Error(ErrorCode::IsolatedNodes, "network has nodes without neighbours");
    out.notes.push_back("IsolatedNodes:" + std::to_string(isolated));
  }
  const Eigen::VectorXd ly = inv_deg.asDiagonal() * (a.A * y);

  const Eigen::Index q = options.drop_eta ? p : 2 * p;
  Eigen::MatrixXd design(n, q);
  design.leftCols(p) = x;
  if (!options.drop_eta) design.rightCols(p) = inv_deg.asDiagonal() * (a.A * x);

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  const Eigen::VectorXd b_y = qr.solve(y);
  const Eigen::VectorXd b_ly = qr.solve(ly);
  const Eigen::VectorXd res_y = y - design * b_y;
  const Eigen::VectorXd res_ly = ly - design * b_ly;

  out.grid = options.fix_gamma_zero ? std::vector<double>{0.0}
                                    : (options.gamma_grid.empty() ? default_gamma_grid() : options.gamma_grid);
  double best = std::numeric_limits<double>::infinity();
  for (double g : out.grid) {
    const double rss = (res_y - g * res_ly).squaredNorm();
    out.grid_score.push_back(rss);
    if (rss < best) {
      best = rss;
      out.gamma_ar = g;
    }
  }
  const Eigen::VectorXd b = b_y - out.gamma_ar * b_ly;
  out.beta = b.head(p);
  out.eta = options.drop_eta ? Eigen::VectorXd::Zero(p) : Eigen::VectorXd(b.tail(p));
  out.fitted_values = out.gamma_ar * ly + design * b;
  return out;
}

namespace {

constexpr double kRidge = 1e-8;

/// Eigendecomposition of the Laplacian, reused for every lambda and fold.
/// S = M + lambda L + eps I is handled as S0 - E_H E_H^T with
/// S0 = (1 + eps) I + lambda L diagonal in the eigenbasis, and the held-out
/// rows H enter through a Woodbury correction of size |H|.
struct CohesionSystem {
  Eigen::MatrixXd u;
  Eigen::VectorXd lam;

  explicit CohesionSystem(const Eigen::MatrixXd& lap) {
    EigenBasisd es = leading_eigvectors<double>(lap, lap.rows(), EigenDirection::Smallest);
    u = std::move(es.basis.matrix);
    lam = es.eigenvalues.cwiseMax(0.0);
  }

  /// S^{-1} R for R with zero rows on `held`.
  Eigen::MatrixXd solve(double lambda, const std::vector<Eigen::Index>& held, const Eigen::MatrixXd& r) const {
    const Eigen::VectorXd d = ((1.0 + kRidge) * Eigen::VectorXd::Ones(lam.size()) + lambda * lam).cwiseInverse();
    Eigen::MatrixXd g = u * (d.asDiagonal() * (u.transpose() * r));
    if (held.empty()) return g;
    const Eigen::Index h = static_cast<Eigen::Index>(held.size());
    Eigen::MatrixXd u_h(h, u.cols());
    Eigen::MatrixXd g_h(h, r.cols());
    for (Eigen::Index i = 0; i < h; ++i) {
      u_h.row(i) = u.row(held[static_cast<std::size_t>(i)]);
      g_h.row(i) = g.row(held[static_cast<std::size_t>(i)]);
    }
    const Eigen::MatrixXd c = Eigen::MatrixXd::Identity(h, h) - u_h * d.asDiagonal() * u_h.transpose();
    const Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "cohesion system is singular");
    const Eigen::MatrixXd corr = llt.solve(g_h);
    g.noalias() += u * (d.asDiagonal() * (u_h.transpose() * corr));
    return g;
  }
};

RncSolution solve_with(const CohesionSystem& sys, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const Eigen::MatrixXd& lap, double lambda, const std::vector<bool>& observed) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  std::vector<Eigen::Index> held;
  Eigen::VectorXd m(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i) = observed[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    if (m(i) == 0.0) held.push_back(i);
  }
  Eigen::MatrixXd rhs(n, p + 1);
  rhs.leftCols(p) = m.asDiagonal() * x;
  rhs.col(p) = m.asDiagonal() * y;
  if (lambda == 0.0 && held.empty()) {
    RncSolution exact;
    exact.beta = x.householderQr().solve(y);
    exact.mu = y - x * exact.beta;
    return exact;
  }
  const Eigen::MatrixXd q = sys.solve(lambda, held, rhs);

  // X^T M (X - Q_X) beta = X^T M (y - Q_y)
  const Eigen::MatrixXd lhs = rhs.leftCols(p).transpose() * (x - q.leftCols(p));
  const Eigen::VectorXd rvec = rhs.leftCols(p).transpose() * (y - q.col(p));
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(0.5 * (lhs + lhs.transpose()));
  if (qr.rank() < p) throw Error(ErrorCode::SingularSystem, "penalized normal equations are singular");
  RncSolution out;
  out.beta = qr.solve(rvec);
  out.mu = q.col(p) - q.leftCols(p) * out.beta;
  const Eigen::VectorXd resid = m.asDiagonal() * (y - x * out.beta - out.mu);
  out.objective = resid.squaredNorm() + lambda * out.mu.dot(lap * out.mu);
  return out;
}

}  // namespace

RncSolution solve_rnc(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& lap, double lambda,
                      const std::vector<bool>& observed) {
  if (y.size() != x.rows() || lap.rows() != x.rows() || static_cast<Eigen::Index>(observed.size()) != x.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "X, Y, L and the observation mask disagree on n");
  }
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidInput, "lambda must be nonnegative");
  return solve_with(CohesionSystem(lap), x, y, lap, lambda, observed);
}

BaselineFit fit_rnc(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const AdjacencyMatrix& a,
                    std::vector<double> lambda_grid, int cv_folds, std::uint64_t seed) {
  const Eigen::Index n = x.rows();
  if (y.size() != n || a.n() != n) throw Error(ErrorCode::DimensionMismatch, "X, Y and A disagree on n");
  if (cv_folds < 2 || cv_folds > n) throw Error(ErrorCode::InvalidInput, "cv_folds must lie in [2, n]");
  if (lambda_grid.empty()) lambda_grid = default_lambda_grid();

  const Eigen::MatrixXd lap = laplacian(a).matrix;
  const CohesionSystem sys(lap);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  CounterRng rng(stream_key(seed, {0xc0ffeeULL}));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) fold[static_cast<std::size_t>(order[i])] = static_cast<int>(i) % cv_folds;

  BaselineFit out;
  out.method = BaselineMethod::Rnc;
  out.cv_folds = cv_folds;
  out.grid = lambda_grid;
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (double lambda : lambda_grid) {
    double err = 0.0;
    try {
      for (int f = 0; f < cv_folds; ++f) {
        std::vector<bool> observed(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) observed[static_cast<std::size_t>(i)] = fold[static_cast<std::size_t>(i)] != f;
        const RncSolution s = solve_with(sys, x, y, lap, lambda, observed);
        for (Eigen::Index i = 0; i < n; ++i) {
          if (!observed[static_cast<std::size_t>(i)]) err += std::pow(y(i) - x.row(i).dot(s.beta) - s.mu(i), 2);
        }
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularSystem) throw;
      out.grid_score.push_back(std::numeric_limits<double>::quiet_NaN());
      out.notes.push_back("SingularSystem at lambda=" + std::to_string(lambda));
      continue;
    }
    out.grid_score.push_back(err / static_cast<double>(n));
    if (err < best) {
      best = err;
      out.lambda = lambda;
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::SingularSystem, "every lambda in the grid gave a singular system");

  const RncSolution s = solve_with(sys, x, y, lap, out.lambda, std::vector<bool>(static_cast<std::size_t>(n), true));
  out.beta = s.beta;
  out.mu = s.mu;
  out.fitted_values = x * out.beta + out.mu;
  return out;
}

}  // namespace netreg

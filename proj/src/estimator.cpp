#include "netreg/estimator.hpp"

#include <cmath>
#include <limits>

#include "netreg/errors.hpp"
#include "netreg/stats.hpp"

namespace netreg {

namespace {

void check_scale(const Eigen::MatrixXd& x) {
  const double target = std::sqrt(static_cast<double>(x.rows()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double norm = x.col(j).norm();
    if (std::abs(norm - target) > 0.01 * target) {
      throw Error(ErrorCode::InvalidInput, "column " + std::to_string(j) + " of X has norm " + std::to_string(norm) +
                                               ", expected sqrt(n); standardize the design first");
    }
  }
}

Eigen::Index resolve_r(const FitConfig& config, const OrthonormalBasisd& z, const AlignmentSVDd& svd,
                       const NetworkEstimate& p_hat, const AdjacencyMatrix* observed,
                       std::optional<RankSelectionReport>& report) {
  const Eigen::Index q = std::min(z.cols(), config.K);
  if (config.r_mode == RMode::Fixed) {
    if (config.r < 0 || config.r > q) throw Error(ErrorCode::InvalidInput, "fixed r must satisfy 0 <= r <= min(p, K)");
    return config.r;
  }
  AdjacencyMatrix owned;
  const AdjacencyMatrix* a = observed;
  if (a == nullptr) {
    if (p_hat.source != NetworkSource::Adjacency) {
      throw Error(ErrorCode::InvalidInput, "automatic r needs the observed adjacency matrix");
    }
    owned.A = p_hat.matrix;
    a = &owned;
  }
  if (config.r_mode == RMode::AutoThreshold) {
    report = select_r_threshold(svd.sigma_hat, average_degree(*a), z.cols(), config.K, z.rows());
  } else {
    const auto op = p_hat.direction == EigenDirection::Smallest ? BootstrapOperator::Laplacian
                                                                 : BootstrapOperator::Adjacency;
    report = select_r_bootstrap(*a, z, config.K, config.bootstrap_B, config.bootstrap_seed, op);
  }
  return std::min(report->r_hat, q);
}

Inference normal_inference(double estimate, double unit_sd, double sigma2, double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidInput, "level must lie in (0, 1)");
  if (!(unit_sd >= 1e-12)) {
    throw Error(ErrorCode::DegenerateDirection, "the requested direction carries no identifiable signal");
  }
  Inference out;
  out.estimate = estimate;
  out.std_error = std::sqrt(sigma2) * unit_sd;
  const double q = stats::normal_quantile(1.0 - level / 2.0);
  out.ci_lo = estimate - q * out.std_error;
  out.ci_hi = estimate + q * out.std_error;
  if (out.std_error > 0.0) {
    out.z = estimate / out.std_error;
  } else {
    out.z = estimate == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), estimate);
  }
  out.pvalue = std::isinf(out.z) ? 0.0 : stats::normal_two_sided_pvalue(out.z);
  return out;
}

void check_design(const FitResult& fit, const Eigen::MatrixXd& x) {
  if (x.cols() != fit.p() || x.rows() != fit.n()) {
    throw Error(ErrorCode::DimensionMismatch, "X does not match the fitted design");
  }
}

}  // namespace

Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x;
  const double target = std::sqrt(static_cast<double>(x.rows()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double norm = x.col(j).norm();
    if (!(norm > 0.0)) throw Error(ErrorCode::RankDeficient, "column " + std::to_string(j) + " is zero");
    out.col(j) *= target / norm;
  }
  return out;
}

FitResult fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const NetworkEstimate& p_hat,
              const FitConfig& config, const AdjacencyMatrix* observed) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (y.size() != n || p_hat.n() != n) throw Error(ErrorCode::DimensionMismatch, "X, Y and P_hat disagree on n");
  if (config.K < 1 || config.K > n - 1) throw Error(ErrorCode::InvalidInput, "K must satisfy 1 <= K <= n - 1");
  if (!(config.alpha_level > 0.0 && config.alpha_level < 1.0)) {
    throw Error(ErrorCode::InvalidInput, "alpha_level must lie in (0, 1)");
  }
  if (!y.allFinite() || !x.allFinite()) throw Error(ErrorCode::InvalidInput, "non-finite data");
  if (config.check_scale) check_scale(x);

  FitResult out;
  const OrthonormalBasisd z = orthonormal_basis<double>(x);
  const EigenBasisd eig = network_eigvectors(p_hat, config.K);
  const AlignmentSVDd svd = alignment_svd(z, eig.basis);
  const Eigen::Index r = resolve_r(config, z, svd, p_hat, observed, out.rank_report);

  const Eigen::Index dof = n - p - config.K + r;
  if (dof <= 0) throw Error(ErrorCode::DegreesOfFreedomExhausted, "n - p - K + r must be positive");

  out.projections = build_projections(svd, r);
  const ProjectionSetd& proj = out.projections;
  out.r_used = r;
  out.K = config.K;
  out.dof = dof;
  out.sigma_hat_values = svd.sigma_hat;
  out.eigen_gap_warning = eig.eigen_gap_warning;
  out.chisq_df_mode = config.chisq_df_mode;
  if (eig.eigen_gap_warning) out.notes.push_back("EigenGapWarning");
  for (const auto& note : p_hat.notes) out.notes.push_back(note);

  const Eigen::LLT<Eigen::MatrixXd> xtx(x.transpose() * x);
  const Eigen::MatrixXd xtx_inv = xtx.solve(Eigen::MatrixXd::Identity(p, p));

  const Eigen::VectorXd r_y = proj.apply_R(y);
  const Eigen::VectorXd c_y = proj.apply_C(y);
  out.theta_hat = xtx.solve(x.transpose() * r_y);
  out.beta_hat = xtx.solve(x.transpose() * c_y);
  out.alpha_hat = proj.apply_N(y);
  out.fitted = r_y + c_y + out.alpha_hat;
  out.sigma2_hat = (y - out.fitted).squaredNorm() / static_cast<double>(dof);

  // (X^T X)^{-1} X^T P P^T X (X^T X)^{-1}; P_R is symmetric so its square is itself.
  const Eigen::MatrixXd pc_t_x = proj.apply_C_transpose(x);
  const Eigen::MatrixXd pr_x = proj.apply_R(x);
  out.cov_beta_unit = xtx_inv * (pc_t_x.transpose() * pc_t_x) * xtx_inv;
  out.cov_theta_unit = xtx_inv * (x.transpose() * pr_x) * xtx_inv;
  out.cov_beta_unit = (0.5 * (out.cov_beta_unit + out.cov_beta_unit.transpose())).eval();
  out.cov_theta_unit = (0.5 * (out.cov_theta_unit + out.cov_theta_unit.transpose())).eval();
  out.cov_beta = out.sigma2_hat * out.cov_beta_unit;
  out.cov_theta = out.sigma2_hat * out.cov_theta_unit;

  if (config.K > r) {
    const Eigen::MatrixXd& w_c = proj.network_complement();
    const Eigen::MatrixXd q = proj.apply_N_transpose(w_c);  // P_N^T W_c
    out.gamma_hat = q.transpose() * y;
    out.gamma_cov_unit = q.transpose() * q;
    try {
      out.network_test = network_effect_test(out);
    } catch (const Error& e) {
      out.notes.push_back(std::string(to_string(e.code())));
    }
  }
  return out;
}

NetworkTest network_effect_test(const FitResult& fit) {
  const Eigen::Index m = fit.gamma_hat.size();
  if (m == 0) throw Error(ErrorCode::NoNetworkComponent, "K - r = 0: no network-only component to test");
  const Eigen::MatrixXd cov = fit.sigma2_hat * fit.gamma_cov_unit;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd& lambda = es.eigenvalues();
  if (!(lambda.minCoeff() > 1e-12 * fit.sigma2_hat) || !(fit.sigma2_hat > 0.0)) {
    throw Error(ErrorCode::SingularGammaCovariance, "covariance of gamma_hat is not positive definite");
  }
  const Eigen::MatrixXd& v = es.eigenvectors();
  const Eigen::VectorXd gamma0 = v * (lambda.cwiseSqrt().cwiseInverse().asDiagonal() * (v.transpose() * fit.gamma_hat));
  NetworkTest out;
  out.chisq = gamma0.squaredNorm();
  out.df = fit.chisq_df_mode == ChisqDfMode::PaperK ? fit.K : m;
  out.pvalue = stats::chi_squared_upper_tail(out.chisq, static_cast<double>(out.df));
  return out;
}

Inference contrast_inference(const FitResult& fit, const Eigen::MatrixXd& x, const Eigen::VectorXd& omega,
                             double level) {
  check_design(fit, x);
  if (omega.size() != fit.p()) throw Error(ErrorCode::DimensionMismatch, "omega must have length p");
  if (std::abs(omega.norm() - 1.0) > 1e-8) throw Error(ErrorCode::InvalidInput, "omega must be a unit vector");
  const double unit_var = omega.dot(fit.cov_beta_unit * omega);
  return normal_inference(omega.dot(fit.beta_hat), std::sqrt(std::max(0.0, unit_var)), fit.sigma2_hat, level);
}

Inference coefficient_test(const FitResult& fit, const Eigen::MatrixXd& x, Eigen::Index j, double level) {
  if (j < 0 || j >= fit.p()) throw Error(ErrorCode::InvalidInput, "coefficient index out of range");
  return contrast_inference(fit, x, Eigen::VectorXd::Unit(fit.p(), j), level);
}

Inference theta_inference(const FitResult& fit, const Eigen::MatrixXd& x, Eigen::Index j, double level) {
  check_design(fit, x);
  if (j < 0 || j >= fit.p()) throw Error(ErrorCode::InvalidInput, "coefficient index out of range");
  const double unit_var = fit.cov_theta_unit(j, j);
  return normal_inference(fit.theta_hat(j), std::sqrt(std::max(0.0, unit_var)), fit.sigma2_hat, level);
}

FitResult ols_fit_result(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (y.size() != n) throw Error(ErrorCode::DimensionMismatch, "X and Y disagree on n");
  if (n <= p) throw Error(ErrorCode::DegreesOfFreedomExhausted, "n - p must be positive");
  const OrthonormalBasisd z = orthonormal_basis<double>(x);
  const Eigen::LLT<Eigen::MatrixXd> xtx(x.transpose() * x);
  FitResult out;
  out.beta_hat = xtx.solve(x.transpose() * y);
  out.theta_hat = Eigen::VectorXd::Zero(p);
  out.alpha_hat = Eigen::VectorXd::Zero(n);
  out.fitted = z.matrix * (z.matrix.transpose() * y);
  out.dof = n - p;
  out.sigma2_hat = (y - out.fitted).squaredNorm() / static_cast<double>(out.dof);
  out.cov_beta_unit = xtx.solve(Eigen::MatrixXd::Identity(p, p));
  out.cov_theta_unit = Eigen::MatrixXd::Zero(p, p);
  out.cov_beta = out.sigma2_hat * out.cov_beta_unit;
  out.cov_theta = out.cov_theta_unit;
  return out;
}

FitResult model_guard_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const NetworkEstimate& p_hat,
                          const FitConfig& config, const AdjacencyMatrix* observed) {
  FitResult full = fit(x, y, p_hat, config, observed);
  if (!full.network_test || full.network_test->pvalue <= config.alpha_level) return full;
  FitResult ols = ols_fit_result(x, y);
  ols.fallback = true;
  ols.K = full.K;
  ols.r_used = full.r_used;
  ols.sigma_hat_values = full.sigma_hat_values;
  ols.rank_report = full.rank_report;
  ols.network_test = full.network_test;
  ols.chisq_df_mode = full.chisq_df_mode;
  ols.notes = full.notes;
  ols.notes.push_back("OlsFallback");
  return ols;
}

}  // namespace netreg

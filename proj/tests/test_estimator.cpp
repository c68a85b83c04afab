#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "netreg/errors.hpp"
#include "netreg/estimator.hpp"
#include "netreg/network_models.hpp"
#include "netreg/stats.hpp"

using namespace netreg;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = nd(gen);
  return m;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidInput;
}

// Four-block SBM with X_1 on w_1 and X_2..X_4 tilted 0.2 towards w_2..w_4, so
// col(X) meets S_4(P) in exactly one direction.
struct Design {
  ProbabilityMatrix P;
  CommunityAssignment g;
  MatrixXd W;  // leading eigenvectors of P
  MatrixXd X;
  NetworkEstimate exact;
};

Design make_design(Eigen::Index n, double degree, std::uint64_t seed) {
  Design d;
  d.g = CommunityAssignment::balanced(n, 4);
  const MatrixXd b = 0.2 * MatrixXd::Ones(4, 4) + 0.8 * MatrixXd::Identity(4, 4);
  d.P = scale_to_average_degree(sbm_probability(d.g, b), degree);
  d.exact.matrix = d.P.P;
  d.exact.source = NetworkSource::Sbm;
  d.W = leading_eigvectors<double>(d.P.P, 4, EigenDirection::Largest).basis.matrix;
  std::mt19937_64 gen(seed);
  MatrixXd u = gaussian(n, 3, gen);
  u -= d.W * (d.W.transpose() * u);
  u = u.householderQr().householderQ() * MatrixXd::Identity(n, 3);
  const double rn = std::sqrt(double(n));
  d.X.resize(n, 4);
  d.X.col(0) = rn * d.W.col(0);
  for (int j = 1; j < 4; ++j) d.X.col(j) = rn * (0.2 * d.W.col(j) + std::sqrt(0.96) * u.col(j - 1));
  return d;
}

FitConfig config_k4(Eigen::Index r = 1) {
  FitConfig c;
  c.K = 4;
  c.r = r;
  return c;
}

const VectorXd kBeta = (VectorXd(4) << 0, 1, 1, 1).finished();
const VectorXd kTheta = (VectorXd(4) << 1, 0, 0, 0).finished();

}  // namespace

TEST_CASE("noiseless exact recovery with P_hat = P") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Design d = make_design(120, 20, seed);
    std::mt19937_64 gen(seed + 100);
    const VectorXd gamma = gaussian(3, 1, gen);
    const VectorXd alpha = std::sqrt(120.0) * d.W.rightCols(3) * gamma;
    const VectorXd y = d.X * kTheta + d.X * kBeta + alpha;
    const FitResult f = fit(d.X, y, d.exact, config_k4());
    CHECK(max_abs(f.theta_hat - kTheta) < 1e-8);
    CHECK(max_abs(f.beta_hat - kBeta) < 1e-8);
    CHECK(max_abs(f.alpha_hat - alpha) < 1e-8);
    CHECK(f.sigma2_hat <= 1e-16 * y.squaredNorm() / 120.0);
    CHECK(f.dof == 120 - 4 - 4 + 1);
    CHECK(f.sigma_hat_values(0) == doctest::Approx(1.0));
    CHECK(max_abs(f.sigma_hat_values.tail(3) - VectorXd::Constant(3, 0.2)) < 1e-10);
  }
}

TEST_CASE("hat matrix structure on a noisy adjacency fit") {
  const Design d = make_design(150, 25, 4);
  const AdjacencyMatrix a = sample_inhomogeneous_er(d.P, 11);
  std::mt19937_64 gen(5);
  const VectorXd y = d.X * kBeta + gaussian(150, 1, gen);
  for (Eigen::Index r : {0, 1}) {
    const FitResult f = fit(d.X, y, adjacency_estimate(a), config_k4(r));
    const MatrixXd h = f.projections.H();
    CHECK(max_abs(h - h.transpose()) < 1e-10);
    CHECK(max_abs(h * h - h) < 1e-10);
    CHECK(h.trace() == doctest::Approx(double(4 + 4 - r)).epsilon(1e-10));
    CHECK((h * (y - h * y)).norm() <= 1e-8 * y.norm());
    CHECK((d.X * f.theta_hat + d.X * f.beta_hat + f.alpha_hat - h * y).norm() <= 1e-8 * (h * y).norm());
    CHECK((f.fitted - h * y).norm() <= 1e-8 * (h * y).norm());
    // Covariances are symmetric PSD.
    for (const MatrixXd* c : {&f.cov_beta, &f.cov_theta}) {
      CHECK(max_abs(*c - c->transpose()) < 1e-10);
      CHECK(Eigen::SelfAdjointEigenSolver<MatrixXd>(*c).eigenvalues().minCoeff() > -1e-10);
    }
  }
}

TEST_CASE("covariance oracle") {
  // cov_beta = sigma2 (X^T X)^{-1} X^T P_C P_C^T X (X^T X)^{-1} with dense P_C.
  const Design d = make_design(80, 15, 6);
  const AdjacencyMatrix a = sample_inhomogeneous_er(d.P, 3);
  std::mt19937_64 gen(7);
  const VectorXd y = d.X * kBeta + gaussian(80, 1, gen);
  const FitResult f = fit(d.X, y, adjacency_estimate(a), config_k4());
  const MatrixXd pc = f.projections.P_C();
  const MatrixXd pr = f.projections.P_R();
  const MatrixXd xtx_inv = (d.X.transpose() * d.X).inverse();
  const MatrixXd cb = f.sigma2_hat * xtx_inv * d.X.transpose() * pc * pc.transpose() * d.X * xtx_inv;
  const MatrixXd ct = f.sigma2_hat * xtx_inv * d.X.transpose() * pr * d.X * xtx_inv;
  CHECK(max_abs(f.cov_beta - cb) < 1e-10 * (1 + max_abs(cb)));
  CHECK(max_abs(f.cov_theta - ct) < 1e-10 * (1 + max_abs(ct)));
  const Inference inf = coefficient_test(f, d.X, 2);
  CHECK(inf.std_error == doctest::Approx(std::sqrt(cb(2, 2))).epsilon(1e-10));
  CHECK(inf.ci_hi - inf.estimate == doctest::Approx(1.959963984540054 * inf.std_error).epsilon(1e-9));
  CHECK(inf.pvalue == doctest::Approx(std::erfc(std::abs(inf.z) / std::sqrt(2.0))).epsilon(1e-10));
}

TEST_CASE("chi-square statistic against a direct quadratic form") {
  const Design d = make_design(100, 20, 8);
  const AdjacencyMatrix a = sample_inhomogeneous_er(d.P, 9);
  std::mt19937_64 gen(10);
  const VectorXd y = d.X * kBeta + gaussian(100, 1, gen);
  const FitResult f = fit(d.X, y, adjacency_estimate(a), config_k4());
  REQUIRE(f.network_test.has_value());
  // gamma_hat = W_c^T P_N Y and Sigma = sigma2 W_c^T P_N P_N^T W_c, densely.
  const MatrixXd pn = f.projections.P_N();
  const MatrixXd wc = f.projections.network_complement();
  const VectorXd g = wc.transpose() * pn * y;
  const MatrixXd s = f.sigma2_hat * wc.transpose() * pn * pn.transpose() * wc;
  const double q = g.dot(s.ldlt().solve(g));
  CHECK(f.network_test->chisq == doctest::Approx(q).epsilon(1e-9));
  CHECK(f.network_test->df == 3);
  CHECK(f.network_test->pvalue == doctest::Approx(stats::chi_squared_upper_tail(q, 3)).epsilon(1e-9));
  CHECK(f.network_test->pvalue >= 0.0);
  CHECK(f.network_test->pvalue <= 1.0);

  FitConfig paper = config_k4();
  paper.chisq_df_mode = ChisqDfMode::PaperK;
  const FitResult fk = fit(d.X, y, adjacency_estimate(a), paper);
  CHECK(fk.network_test->df == 4);
  CHECK(fk.network_test->chisq == doctest::Approx(q).epsilon(1e-9));
}

TEST_CASE("scale equivariance") {
  const Design d = make_design(100, 20, 12);
  const AdjacencyMatrix a = sample_inhomogeneous_er(d.P, 13);
  std::mt19937_64 gen(14);
  const VectorXd y = d.X * kBeta + 0.5 * std::sqrt(100.0) * d.W.col(2) + gaussian(100, 1, gen);
  const double c = -3.7;
  const FitResult f1 = fit(d.X, y, adjacency_estimate(a), config_k4());
  const FitResult f2 = fit(d.X, c * y, adjacency_estimate(a), config_k4());
  CHECK(max_abs(f2.beta_hat - c * f1.beta_hat) < 1e-10 * (1 + max_abs(f1.beta_hat)));
  CHECK(max_abs(f2.theta_hat - c * f1.theta_hat) < 1e-10 * (1 + max_abs(f1.theta_hat)));
  CHECK(max_abs(f2.alpha_hat - c * f1.alpha_hat) < 1e-10 * (1 + max_abs(f1.alpha_hat)));
  CHECK(max_abs(f2.gamma_hat - c * f1.gamma_hat) < 1e-10 * (1 + max_abs(f1.gamma_hat)));
  CHECK(f2.sigma2_hat == doctest::Approx(c * c * f1.sigma2_hat).epsilon(1e-10));
  CHECK(f2.network_test->chisq == doctest::Approx(f1.network_test->chisq).epsilon(1e-10));
  CHECK(f2.network_test->pvalue == doctest::Approx(f1.network_test->pvalue).epsilon(1e-10));
  for (Eigen::Index j = 1; j < 4; ++j)
    CHECK(coefficient_test(f2, d.X, j).pvalue == doctest::Approx(coefficient_test(f1, d.X, j).pvalue).epsilon(1e-10));
}

TEST_CASE("permutation equivariance") {
  const Eigen::Index n = 100;
  const Design d = make_design(n, 20, 15);
  const AdjacencyMatrix a = sample_inhomogeneous_er(d.P, 16);
  std::mt19937_64 gen(17);
  const VectorXd y = d.X * kBeta + gaussian(n, 1, gen);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + n, gen);
  const MatrixXd xp = perm * d.X;
  const AdjacencyMatrix ap{perm * a.A * perm.transpose()};
  const FitResult f1 = fit(d.X, y, adjacency_estimate(a), config_k4());
  const FitResult f2 = fit(xp, perm * y, adjacency_estimate(ap), config_k4());
  CHECK(max_abs(f2.beta_hat - f1.beta_hat) < 1e-8);
  CHECK(max_abs(f2.theta_hat - f1.theta_hat) < 1e-8);
  CHECK(max_abs(f2.alpha_hat - perm * f1.alpha_hat) < 1e-8);
  CHECK(std::abs(f2.sigma2_hat - f1.sigma2_hat) < 1e-8);
  CHECK(std::abs(f2.network_test->chisq - f1.network_test->chisq) < 1e-8);
}

TEST_CASE("inference edge cases") {
  const Design d = make_design(120, 20, 18);
  const VectorXd y = d.X * kTheta + d.X * kBeta;
  const FitResult f = fit(d.X, y, d.exact, config_k4());

  SUBCASE("beta_1 lies on the intersection and is not identifiable") {
    CHECK(code_of([&] { coefficient_test(f, d.X, 0); }) == ErrorCode::DegenerateDirection);
    CHECK(code_of([&] { contrast_inference(f, d.X, VectorXd::Unit(4, 0)); }) == ErrorCode::DegenerateDirection);
  }
  SUBCASE("contrast along e_j equals the coefficient test") {
    const Inference a = contrast_inference(f, d.X, VectorXd::Unit(4, 2));
    const Inference b = coefficient_test(f, d.X, 2);
    CHECK(a.estimate == b.estimate);
    CHECK(a.std_error == b.std_error);
    CHECK(a.pvalue == b.pvalue);
  }
  SUBCASE("omega must be a unit vector") {
    CHECK(code_of([&] { contrast_inference(f, d.X, VectorXd::Constant(4, 1.0)); }) == ErrorCode::InvalidInput);
  }
  SUBCASE("zero response gives z = 0 and p = 1") {
    const FitResult z = fit(d.X, VectorXd::Zero(120), d.exact, config_k4());
    const Inference inf = coefficient_test(z, d.X, 2);
    CHECK(inf.z == 0.0);
    CHECK(inf.pvalue == 1.0);
  }
  SUBCASE("theta is recovered and r = 0 leaves it empty") {
    CHECK(max_abs(f.theta_hat - kTheta) < 1e-8);
    std::mt19937_64 gen(19);
    const AdjacencyMatrix a = sample_inhomogeneous_er(d.P, 20);
    const VectorXd yn = y + gaussian(120, 1, gen);
    const FitResult f0 = fit(d.X, yn, adjacency_estimate(a), config_k4(0));
    CHECK(f0.theta_hat.isZero());
    for (Eigen::Index j = 0; j < 4; ++j)
      CHECK(code_of([&] { theta_inference(f0, d.X, j); }) == ErrorCode::DegenerateDirection);
  }
  SUBCASE("K = r leaves no network component") {
    FitConfig c;
    c.K = 1;
    c.r = 1;
    const FitResult f1 = fit(d.X, y, d.exact, c);
    CHECK_FALSE(f1.network_test.has_value());
    CHECK(code_of([&] { network_effect_test(f1); }) == ErrorCode::NoNetworkComponent);
  }
  SUBCASE("r below the intersection dimension is rejected") {
    CHECK(code_of([&] { fit(d.X, y, d.exact, config_k4(0)); }) == ErrorCode::DegenerateAngle);
  }
}

TEST_CASE("precondition errors") {
  const Design d = make_design(40, 10, 21);
  const VectorXd y = VectorXd::Ones(40);
  CHECK(code_of([&] { fit(2.0 * d.X, y, d.exact, config_k4()); }) == ErrorCode::InvalidInput);
  FitConfig loose = config_k4();
  loose.check_scale = false;
  CHECK_NOTHROW(fit(2.0 * d.X, y, d.exact, loose));
  CHECK(code_of([&] { fit(d.X, VectorXd::Ones(39), d.exact, config_k4()); }) == ErrorCode::DimensionMismatch);
  FitConfig big;
  big.K = 39;
  big.r = 0;
  // n - p - K + r = 40 - 4 - 39 < 0
  CHECK(code_of([&] { fit(d.X, y, d.exact, big); }) == ErrorCode::DegreesOfFreedomExhausted);
  FitConfig bad_r = config_k4(5);
  CHECK(code_of([&] { fit(d.X, y, d.exact, bad_r); }) == ErrorCode::InvalidInput);
  MatrixXd dup = d.X;
  dup.col(3) = dup.col(2);
  CHECK(code_of([&] { fit(dup, y, d.exact, config_k4()); }) == ErrorCode::RankDeficient);
  FitConfig autor = config_k4();
  autor.r_mode = RMode::AutoThreshold;
  CHECK(code_of([&] { fit(d.X, y, d.exact, autor); }) == ErrorCode::InvalidInput);
}

TEST_CASE("automatic r") {
  const Eigen::Index n = 400;
  const Design d = make_design(n, std::pow(double(n), 2.0 / 3.0), 22);
  const AdjacencyMatrix a = sample_inhomogeneous_er(d.P, 23);
  std::mt19937_64 gen(24);
  const VectorXd y = d.X * kTheta + d.X * kBeta + gaussian(n, 1, gen);
  FitConfig c = config_k4();
  c.r_mode = RMode::AutoBootstrap;
  c.bootstrap_B = 10;
  c.bootstrap_seed = 3;
  const FitResult f = fit(d.X, y, estimate_sbm(a, d.g), c, &a);
  REQUIRE(f.rank_report.has_value());
  CHECK(f.rank_report->method == RankMethod::Bootstrap);
  CHECK(f.r_used == f.rank_report->r_hat);
  const FitResult again = fit(d.X, y, estimate_sbm(a, d.g), c, &a);
  CHECK(again.r_used == f.r_used);
  CHECK(again.beta_hat == f.beta_hat);
}

TEST_CASE("model_guard_fit") {
  const Eigen::Index n = 200;
  const Design d = make_design(n, 30, 25);
  const AdjacencyMatrix a = sample_inhomogeneous_er(d.P, 26);
  std::mt19937_64 gen(27);
  const VectorXd noise = gaussian(n, 1, gen);
  const NetworkEstimate est = estimate_sbm(a, d.g);

  SUBCASE("strong network effect keeps the full fit") {
    const VectorXd y = d.X * kBeta + std::sqrt(double(n)) * d.W.rightCols(3).rowwise().sum() + noise;
    const FitResult f = model_guard_fit(d.X, y, est, config_k4());
    CHECK_FALSE(f.fallback);
    CHECK(f.network_test->pvalue <= 0.05);
  }
  SUBCASE("no network effect falls back to OLS when the test does not reject") {
    const VectorXd y = d.X * kBeta + noise;
    const FitResult full = fit(d.X, y, est, config_k4());
    const FitResult g = model_guard_fit(d.X, y, est, config_k4());
    CHECK(g.fallback == (full.network_test->pvalue > 0.05));
    if (g.fallback) {
      const VectorXd ols = d.X * (d.X.transpose() * d.X).ldlt().solve(d.X.transpose() * y);
      CHECK(max_abs(g.fitted - ols) < 1e-10);
      CHECK(g.alpha_hat.isZero());
    }
    const FitResult g2 = model_guard_fit(d.X, y, est, config_k4());
    CHECK(g2.fallback == g.fallback);
    CHECK(g2.fitted == g.fitted);
  }
}

TEST_CASE("variance estimate is consistent (n=2000, d=n^(2/3), SBM estimate)") {
  const Eigen::Index n = 2000;
  const Design d = make_design(n, std::pow(double(n), 2.0 / 3.0), 28);
  int ok = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::mt19937_64 gen(1000 + rep);
    const VectorXd y = d.X * kTheta + d.X * kBeta + gaussian(n, 1, gen);
    const AdjacencyMatrix a = sample_inhomogeneous_er(d.P, 2000 + rep);
    const FitResult f = fit(d.X, y, estimate_sbm(a, d.g), config_k4());
    if (std::abs(f.sigma2_hat - 1.0) <= 0.1) ++ok;
  }
  CHECK(ok >= 95);
}

TEST_CASE("standardize_columns") {
  MatrixXd x(4, 2);
  x << 1, 0, 1, 2, 1, 0, 1, 0;
  const MatrixXd s = standardize_columns(x);
  CHECK(s.col(0).norm() == doctest::Approx(2.0));
  CHECK(s.col(1).norm() == doctest::Approx(2.0));
  CHECK(s(1, 1) == doctest::Approx(2.0));
  x.col(1).setZero();
  CHECK(code_of([&] { standardize_columns(x); }) == ErrorCode::RankDeficient);
}

#include "netreg/simharness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <optional>
#include <random>
#include <thread>

#include "netreg/baselines.hpp"
#include "netreg/errors.hpp"
#include "netreg/rank_selection.hpp"
#include "netreg/rng.hpp"
#include "netreg/stats.hpp"

namespace netreg {

namespace {

// Stream tags under the scenario seed.
constexpr std::uint64_t kTagNu = 0x6e75;
constexpr std::uint64_t kTagNull = 0x6e756c6c;
constexpr std::uint64_t kTagDesign = 0x64657369;
constexpr std::uint64_t kTagNetwork = 1;
constexpr std::uint64_t kTagNoise = 2;
constexpr std::uint64_t kTagRnc = 3;
constexpr std::uint64_t kTagBootstrap = 4;

struct NamedMethod {
  Method method;
  const char* name;
};
constexpr NamedMethod kMethodNames[] = {
    {Method::SP, "SP"},         {Method::SP_SBM, "SP-SBM"},     {Method::SP_DCBM, "SP-DCBM"},
    {Method::SP_L, "SP-L"},     {Method::SP_SBM_L, "SP-SBM-L"}, {Method::SP_DCBM_L, "SP-DCBM-L"},
    {Method::OLS, "OLS"},       {Method::SIM, "SIM"},           {Method::RNC, "RNC"},
};

bool is_sp(Method m) { return m != Method::OLS && m != Method::SIM && m != Method::RNC; }

bool is_laplacian(Method m) { return m == Method::SP_L || m == Method::SP_SBM_L || m == Method::SP_DCBM_L; }

NetworkEstimate make_estimate(Method m, const AdjacencyMatrix& a, const CommunityAssignment& g) {
  switch (m) {
    case Method::SP: return adjacency_estimate(a);
    case Method::SP_SBM: return estimate_sbm(a, g);
    case Method::SP_DCBM: return estimate_dcbm(a, g);
    case Method::SP_L: return laplacian(a);
    case Method::SP_SBM_L: return laplacian_of(estimate_sbm(a, g));
    case Method::SP_DCBM_L: return laplacian_of(estimate_dcbm(a, g));
    default: throw Error(ErrorCode::InvalidInput, "not a subspace projection method");
  }
}

Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, std::uint64_t key) {
  CounterRng rng(key);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
  return m;
}

Metric mean_metric(const std::vector<double>& v) {
  if (v.empty()) return {std::nan(""), std::nan("")};
  return {stats::mean(v), stats::mc_stderr(v)};
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void count_failure(MethodReport& rep, ErrorCode code) {
  ++rep.failures;
  ++rep.failure_codes[std::string(to_string(code))];
}

}  // namespace

std::string to_string(Method m) {
  for (const auto& nm : kMethodNames)
    if (nm.method == m) return nm.name;
  return "?";
}

Method method_from_string(const std::string& s) {
  for (const auto& nm : kMethodNames)
    if (s == nm.name) return nm.method;
  throw Error(ErrorCode::InvalidInput, "unknown method '" + s + "'");
}

std::string to_string(DensityKind d) {
  switch (d) {
    case DensityKind::TwoLogN: return "2logn";
    case DensityKind::SqrtN: return "sqrtn";
    case DensityKind::NTwoThirds: return "n23";
    case DensityKind::Explicit: return "explicit";
  }
  return "?";
}

DensityKind density_from_string(const std::string& s) {
  if (s == "2logn") return DensityKind::TwoLogN;
  if (s == "sqrtn") return DensityKind::SqrtN;
  if (s == "n23") return DensityKind::NTwoThirds;
  throw Error(ErrorCode::InvalidInput, "unknown density '" + s + "' (use 2logn, sqrtn, n23, or a number)");
}

std::string to_string(NetworkKind k) { return k == NetworkKind::Sbm ? "sbm" : "dcbm"; }

std::string to_string(DesignKind k) { return k == DesignKind::Eigenspace ? "eigenspace" : "random_covariates"; }

std::string to_string(EffectKind k) {
  switch (k) {
    case EffectKind::Eigenspace: return "eigenspace";
    case EffectKind::ZeroGamma: return "zero_gamma";
    case EffectKind::SmoothLaplacian: return "smooth";
  }
  return "?";
}

double target_degree(const ScenarioConfig& config) {
  const double n = static_cast<double>(config.n);
  switch (config.density) {
    case DensityKind::TwoLogN: return 2.0 * std::log(n);
    case DensityKind::SqrtN: return std::sqrt(n);
    case DensityKind::NTwoThirds: return std::pow(n, 2.0 / 3.0);
    case DensityKind::Explicit: return config.explicit_degree;
  }
  return 0.0;
}

const MethodReport& ExperimentReport::at(Method m) const {
  for (const auto& r : methods)
    if (r.method == m) return r;
  throw Error(ErrorCode::InvalidInput, "method " + to_string(m) + " not in report");
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next++; i < count; i = next++) body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Population build_population(const ScenarioConfig& config) {
  const Eigen::Index n = config.n;
  const Eigen::Index k = config.K;
  if (config.reps < 1) throw Error(ErrorCode::InvalidInput, "reps must be >= 1");
  if (k != 4 || config.beta.size() != 4 || config.theta.size() != 4 || config.gamma.size() != k) {
    throw Error(ErrorCode::InvalidInput, "the simulation designs use p = K = 4");
  }
  if (n < 4 * k) throw Error(ErrorCode::InvalidInput, "n is too small for the design");
  Population pop;
  pop.degree = target_degree(config);
  if (!(pop.degree > 0.0 && pop.degree < static_cast<double>(n))) {
    throw Error(ErrorCode::InvalidInput, "target average degree must lie in (0, n)");
  }

  pop.g = CommunityAssignment::balanced(n, static_cast<int>(k));
  const Eigen::MatrixXd b0 = 0.2 * Eigen::MatrixXd::Ones(k, k) + 0.8 * Eigen::MatrixXd::Identity(k, k);
  pop.nu = Eigen::VectorXd::Ones(n);
  if (config.network == NetworkKind::Dcbm) {
    CounterRng rng(stream_key(config.seed, {kTagNu}));
    for (Eigen::Index i = 0; i < n; ++i) pop.nu(i) = 0.2 + 0.8 * rng.uniform();
  }
  const ProbabilityMatrix raw = dcbm_probability(pop.g, b0, pop.nu);
  pop.P = scale_to_average_degree(raw, pop.degree);
  const double kappa = pop.degree / (raw.P.sum() / static_cast<double>(n));
  pop.d_max = static_cast<double>(n) * pop.P.P.maxCoeff();

  NetworkEstimate exact;
  exact.matrix = pop.P.P;
  exact.low_rank = LowRankFactor{pop.nu.asDiagonal() * pop.g.membership(), kappa * b0};
  const Eigen::MatrixXd w_k = network_eigvectors(exact, k).basis.matrix;

  // Null-space directions: seeded Gaussian columns with S_K(P) projected out,
  // so the design columns stay delocalized.
  Eigen::MatrixXd null = standard_normal(n, 3, stream_key(config.seed, {kTagNull}));
  null -= w_k * (w_k.transpose() * null);
  null = orthonormal_basis<double>(null).matrix;
  null -= w_k * (w_k.transpose() * null);
  null = orthonormal_basis<double>(null).matrix;
  pop.W.resize(n, k + 3);
  pop.W << w_k, null;

  const double root_n = std::sqrt(static_cast<double>(n));
  pop.X.resize(n, 4);
  pop.X.col(0) = root_n * w_k.col(0);
  if (config.design == DesignKind::Eigenspace) {
    for (int j = 1; j < 4; ++j) pop.X.col(j) = root_n * (0.2 * w_k.col(j) + std::sqrt(0.96) * null.col(j - 1));
  } else {
    CounterRng rng(stream_key(config.seed, {kTagDesign}));
    std::normal_distribution<double> normal;
    std::exponential_distribution<double> expo(1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      pop.X(i, 1) = normal(rng);
      pop.X(i, 2) = rng.uniform();
      pop.X(i, 3) = expo(rng);
    }
    for (int j = 1; j < 4; ++j) pop.X.col(j) *= root_n / pop.X.col(j).norm();
  }

  const AlignmentSVDd svd = alignment_svd(orthonormal_basis<double>(pop.X), {w_k});
  pop.sigma = svd.sigma_hat;
  pop.W_tilde = svd.W_breve;
  pop.r = 0;
  while (pop.r < pop.sigma.size() && pop.sigma(pop.r) > 1.0 - 1e-8) ++pop.r;
  return pop;
}

ScenarioData build_scenario(const ScenarioConfig& config, int replicate) {
  return build_scenario(config, build_population(config), replicate);
}

ScenarioData build_scenario(const ScenarioConfig& config, const Population& pop, int replicate) {
  const Eigen::Index n = config.n;
  const Eigen::Index k = config.K;
  const auto rep = static_cast<std::uint64_t>(replicate);
  ScenarioData data;
  data.X = pop.X;
  data.A = sample_inhomogeneous_er(pop.P, stream_key(config.seed, {rep, kTagNetwork}));

  const double scale = config.alpha_scale > 0.0 ? config.alpha_scale : std::sqrt(static_cast<double>(n));
  switch (config.effect) {
    case EffectKind::ZeroGamma: data.alpha = Eigen::VectorXd::Zero(n); break;
    case EffectKind::Eigenspace:
      if (config.gamma.head(pop.r).cwiseAbs().maxCoeff() > 0.0) {
        throw Error(ErrorCode::ConstraintViolation, "gamma must vanish on the first r coordinates");
      }
      data.alpha = scale * (pop.W_tilde * config.gamma);
      break;
    case EffectKind::SmoothLaplacian: {
      // Average of the eigenvectors for the three smallest nonzero eigenvalues
      // of the observed Laplacian; one zero eigenvalue per component.
      const Eigen::Index zeros = connected_components(data.A);
      if (zeros + 3 > n) throw Error(ErrorCode::InvalidInput, "network has too many components for the smooth effect");
      const EigenBasisd e = leading_eigvectors<double>(laplacian(data.A).matrix, zeros + 3, EigenDirection::Smallest);
      data.alpha = scale * e.basis.matrix.rightCols(3).rowwise().mean();
      break;
    }
  }

  const Eigen::VectorXd x_theta = data.X * config.theta;
  const Eigen::VectorXd x_beta = data.X * config.beta;
  data.mean = x_theta + x_beta + data.alpha;

  if (config.design == DesignKind::Eigenspace && config.effect != EffectKind::SmoothLaplacian) {
    const Eigen::MatrixXd w_k = pop.W.leftCols(k);
    const AlignmentSVDd svd = alignment_svd(orthonormal_basis<double>(data.X), {w_k});
    const Eigen::MatrixXd r_basis = svd.Z_hat.leftCols(pop.r);
    auto in_r = [&](const Eigen::VectorXd& v) { return (v - r_basis * (r_basis.transpose() * v)).norm(); };
    auto along_r = [&](const Eigen::VectorXd& v) { return (r_basis.transpose() * v).norm(); };
    const double tol = 1e-8 * std::sqrt(static_cast<double>(n));
    const double worst = std::max({in_r(x_theta), along_r(x_beta), (data.alpha - w_k * (w_k.transpose() * data.alpha)).norm(),
                                   along_r(data.alpha)});
    if (worst > tol) throw Error(ErrorCode::ConstraintViolation, "generated effects violate the identifiability constraints");
  }

  const double sd = std::sqrt(config.noise_sigma2);
  data.Y = data.mean + sd * standard_normal(n, 1, stream_key(config.seed, {rep, kTagNoise}));
  return data;
}

ExperimentReport run_inference_experiment(const ScenarioConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  for (Method m : config.methods) {
    if (!is_sp(m)) throw Error(ErrorCode::InvalidInput, "inference experiments take SP variants only");
  }
  const Population pop = build_population(config);
  const std::size_t nm = config.methods.size();
  const auto reps = static_cast<std::size_t>(config.reps);

  struct Outcome {
    bool ok = false;
    ErrorCode code = ErrorCode::InvalidInput;
    Eigen::VectorXd beta;
    double coverage = 0.0;
    double theta_cover = std::nan("");
    double reject = std::nan("");
    double chisq = std::nan("");
    Eigen::Index df = 0;
    double sigma2 = 0.0;
    double r_used = 0.0;
  };
  std::vector<Outcome> out(reps * nm);

  parallel_for(config.reps, config.threads, [&](int rep) {
    const ScenarioData data = build_scenario(config, pop, rep);
    for (std::size_t mi = 0; mi < nm; ++mi) {
      Outcome& o = out[static_cast<std::size_t>(rep) * nm + mi];
      try {
        FitConfig fc;
        fc.K = config.K;
        fc.r_mode = config.r_mode;
        fc.r = config.r;
        fc.alpha_level = config.level;
        fc.chisq_df_mode = config.chisq_df_mode;
        fc.bootstrap_B = config.bootstrap_B;
        fc.bootstrap_seed = stream_key(config.seed, {static_cast<std::uint64_t>(rep), kTagBootstrap});
        const FitResult f = fit(data.X, data.Y, make_estimate(config.methods[mi], data.A, pop.g), fc, &data.A);
        o.beta = f.beta_hat;
        double covered = 0.0;
        for (Eigen::Index j = 1; j < 4; ++j) {
          const Inference inf = coefficient_test(f, data.X, j, config.level);
          covered += (inf.ci_lo <= config.beta(j) && config.beta(j) <= inf.ci_hi) ? 1.0 : 0.0;
        }
        o.coverage = covered / 3.0;
        try {
          const Inference th = theta_inference(f, data.X, 0, config.level);
          o.theta_cover = (th.ci_lo <= config.theta(0) && config.theta(0) <= th.ci_hi) ? 1.0 : 0.0;
        } catch (const Error&) {
        }
        if (f.network_test) {
          o.chisq = f.network_test->chisq;
          o.df = f.network_test->df;
          o.reject = f.network_test->pvalue < config.level ? 1.0 : 0.0;
        }
        o.sigma2 = f.sigma2_hat;
        o.r_used = static_cast<double>(f.r_used);
        o.ok = true;
      } catch (const Error& e) {
        o.code = e.code();
      }
    }
  });

  ExperimentReport report;
  report.config = config;
  report.degree = pop.degree;
  const bool null_effect = config.effect == EffectKind::ZeroGamma || config.gamma.isZero();
  for (std::size_t mi = 0; mi < nm; ++mi) {
    MethodReport mr;
    mr.method = config.methods[mi];
    std::vector<std::vector<double>> betas(4);
    std::vector<double> coverage, theta_cover, reject, sigma2, r_used;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const Outcome& o = out[rep * nm + mi];
      if (!o.ok) {
        count_failure(mr, o.code);
        continue;
      }
      ++mr.reps;
      for (int j = 0; j < 4; ++j) betas[static_cast<std::size_t>(j)].push_back(o.beta(j));
      coverage.push_back(o.coverage);
      if (!std::isnan(o.theta_cover)) theta_cover.push_back(o.theta_cover);
      if (!std::isnan(o.reject)) {
        reject.push_back(o.reject);
        if (config.keep_statistics) mr.chisq_samples.push_back(o.chisq);
        mr.chisq_df = o.df;
      }
      sigma2.push_back(o.sigma2);
      r_used.push_back(o.r_used);
    }
    if (mr.reps >= 2) {
      // Mean over beta_2..beta_4 of |mean - beta_j| / sd; the standard error of
      // each ratio is sqrt(1 + ratio^2 / 2) / sqrt(reps) (delta method).
      double ratio = 0.0;
      double ratio_se = 0.0;
      for (int j = 1; j < 4; ++j) {
        const auto& v = betas[static_cast<std::size_t>(j)];
        const double sd = stats::sample_sd(v);
        const double rj = sd > 0.0 ? std::abs(stats::mean(v) - config.beta(j)) / sd : std::nan("");
        ratio += rj / 3.0;
        ratio_se += std::sqrt(1.0 + rj * rj / 2.0) / std::sqrt(static_cast<double>(mr.reps)) / 3.0;
      }
      mr.metrics["bias_sd_ratio"] = {ratio, ratio_se};
    }
    mr.metrics["coverage"] = mean_metric(coverage);
    if (!theta_cover.empty()) mr.metrics["theta_coverage"] = mean_metric(theta_cover);
    if (!reject.empty()) {
      mr.metrics["rejection_rate"] = mean_metric(reject);
      if (null_effect) mr.metrics["type1_rate"] = mean_metric(reject);
    }
    mr.metrics["sigma2"] = mean_metric(sigma2);
    mr.metrics["r_used"] = mean_metric(r_used);
    report.methods.push_back(std::move(mr));
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ExperimentReport run_comparison_experiment(const ScenarioConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const Population pop = build_population(config);
  const std::size_t nm = config.methods.size();
  const auto reps = static_cast<std::size_t>(config.reps);

  struct Outcome {
    bool ok = false;
    ErrorCode code = ErrorCode::InvalidInput;
    double mse = 0.0;
    double fallback = std::nan("");
    double r_used = std::nan("");
  };
  std::vector<Outcome> out(reps * nm);

  parallel_for(config.reps, config.threads, [&](int rep) {
    const ScenarioData data = build_scenario(config, pop, rep);
    const double denom = data.mean.squaredNorm();
    const auto urep = static_cast<std::uint64_t>(rep);
    // r is selected once per operator and shared by the methods using it.
    std::optional<Eigen::Index> r_adj;
    std::optional<Eigen::Index> r_lap;
    auto select_r = [&](bool lap) -> Eigen::Index {
      std::optional<Eigen::Index>& slot = lap ? r_lap : r_adj;
      if (!slot) {
        const OrthonormalBasisd z = orthonormal_basis<double>(data.X);
        if (config.r_mode == RMode::Fixed) {
          slot = config.r;
        } else if (config.r_mode == RMode::AutoBootstrap) {
          slot = select_r_bootstrap(data.A, z, config.K, config.bootstrap_B,
                                    stream_key(config.seed, {urep, kTagBootstrap}),
                                    lap ? BootstrapOperator::Laplacian : BootstrapOperator::Adjacency)
                     .r_hat;
        } else {
          const NetworkEstimate est = lap ? laplacian(data.A) : adjacency_estimate(data.A);
          const AlignmentSVDd svd = alignment_svd(z, network_eigvectors(est, config.K).basis);
          slot = select_r_threshold(svd.sigma_hat, average_degree(data.A), data.X.cols(), config.K, config.n).r_hat;
        }
      }
      return *slot;
    };

    for (std::size_t mi = 0; mi < nm; ++mi) {
      Outcome& o = out[static_cast<std::size_t>(rep) * nm + mi];
      const Method m = config.methods[mi];
      try {
        Eigen::VectorXd fitted;
        if (is_sp(m)) {
          FitConfig fc;
          fc.K = config.K;
          fc.r_mode = RMode::Fixed;
          fc.r = select_r(is_laplacian(m));
          fc.alpha_level = config.level;
          fc.chisq_df_mode = config.chisq_df_mode;
          const FitResult f = model_guard_fit(data.X, data.Y, make_estimate(m, data.A, pop.g), fc, &data.A);
          fitted = f.fitted;
          o.fallback = f.fallback ? 1.0 : 0.0;
          o.r_used = static_cast<double>(f.r_used);
        } else if (m == Method::OLS) {
          fitted = fit_ols(data.X, data.Y).fitted_values;
        } else if (m == Method::SIM) {
          fitted = fit_sim(data.X, data.Y, data.A).fitted_values;
        } else {
          fitted = fit_rnc(data.X, data.Y, data.A, {}, 10, stream_key(config.seed, {urep, kTagRnc})).fitted_values;
        }
        o.mse = (fitted - data.mean).squaredNorm() / denom;
        o.ok = true;
      } catch (const Error& e) {
        o.code = e.code();
      }
    }
  });

  ExperimentReport report;
  report.config = config;
  report.degree = pop.degree;
  for (std::size_t mi = 0; mi < nm; ++mi) {
    MethodReport mr;
    mr.method = config.methods[mi];
    std::vector<double> mse, fallback, r_used;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const Outcome& o = out[rep * nm + mi];
      if (!o.ok) {
        count_failure(mr, o.code);
        continue;
      }
      ++mr.reps;
      mse.push_back(o.mse);
      if (!std::isnan(o.fallback)) fallback.push_back(o.fallback);
      if (!std::isnan(o.r_used)) r_used.push_back(o.r_used);
    }
    mr.metrics["relative_mse"] = mean_metric(mse);
    if (!fallback.empty()) mr.metrics["fallback_rate"] = mean_metric(fallback);
    if (!r_used.empty()) mr.metrics["r_used"] = mean_metric(r_used);
    report.methods.push_back(std::move(mr));
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ConcentrationReport run_concentration_check(Eigen::Index n, Eigen::Index k, const std::vector<double>& degrees,
                                            int reps, std::uint64_t seed, ProbeVector probe, int threads) {
  if (degrees.empty() || reps < 1) throw Error(ErrorCode::InvalidInput, "need at least one density and one replicate");
  ConcentrationReport report;
  report.n = n;
  report.K = k;
  report.probe = probe;
  for (std::size_t c = 0; c < degrees.size(); ++c) {
    ScenarioConfig cfg;
    cfg.n = n;
    cfg.K = k;
    cfg.density = DensityKind::Explicit;
    cfg.explicit_degree = degrees[c];
    cfg.seed = seed;
    cfg.gamma = Eigen::VectorXd::Zero(k);
    if (k != 4) throw Error(ErrorCode::InvalidInput, "the concentration check uses the K = 4 block design");
    const Population pop = build_population(cfg);
    const Eigen::MatrixXd w = pop.W.leftCols(k);
    Eigen::VectorXd v;
    switch (probe) {
      case ProbeVector::Orthogonal: v = pop.W.col(k); break;
      case ProbeVector::Leading: v = w.col(0); break;
      case ProbeVector::Design: v = pop.X.col(1).normalized(); break;
    }

    ConcentrationCell cell;
    cell.degree = degrees[c];
    cell.d = pop.d_max;
    cell.bound = 2.0 * std::sqrt(static_cast<double>(k) * std::log(static_cast<double>(n))) / cell.d;
    cell.values.resize(static_cast<std::size_t>(reps));
    parallel_for(reps, threads, [&](int rep) {
      const AdjacencyMatrix a =
          sample_inhomogeneous_er(pop.P, stream_key(seed, {0xc0c0ULL, c, static_cast<std::uint64_t>(rep)}));
      const Eigen::MatrixXd w_hat = leading_eigvectors<double>(a.A, k, EigenDirection::Largest).basis.matrix;
      cell.values[static_cast<std::size_t>(rep)] = (w_hat * (w_hat.transpose() * v) - w * (w.transpose() * v)).norm();
    });
    int within = 0;
    for (double x : cell.values) within += x <= cell.bound ? 1 : 0;
    cell.fraction_within = static_cast<double>(within) / reps;
    cell.median = quantile(cell.values, 0.5);
    cell.q95 = quantile(cell.values, 0.95);
    cell.max = *std::max_element(cell.values.begin(), cell.values.end());
    report.cells.push_back(std::move(cell));
  }
  const auto densest = std::max_element(report.cells.begin(), report.cells.end(),
                                        [](const auto& a, const auto& b) { return a.degree < b.degree; });
  report.c_calibrated = densest->median * densest->d;
  for (auto& cell : report.cells) cell.lower_witness = report.c_calibrated / cell.d;
  return report;
}

}  // namespace netreg

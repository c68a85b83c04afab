#pragma once

#include <span>

namespace netreg::stats {

double normal_cdf(double x);
double normal_quantile(double p);

/// Two-sided p-value of a standard normal statistic.
double normal_two_sided_pvalue(double z);

double chi_squared_cdf(double x, double df);
double chi_squared_upper_tail(double x, double df);

/// Asymptotic Kolmogorov distribution tail P(K > t).
double kolmogorov_upper_tail(double t);

struct KsResult {
  double statistic = 0.0;  // sup |F_n - F|
  double pvalue = 1.0;
};

/// One-sample KS test of `sample` against chi-squared(df). Uses the
/// Stephens small-sample correction on the asymptotic tail.
KsResult ks_test_chi_squared(std::span<const double> sample, double df);

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1 divisor); 0 for fewer than two values.
double sample_sd(std::span<const double> values);
/// sample_sd / sqrt(n).
double mc_stderr(std::span<const double> values);

}  // namespace netreg::stats

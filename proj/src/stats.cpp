#include "netreg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace netreg::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double normal_two_sided_pvalue(double z) {
  if (std::isnan(z)) return 1.0;
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

double chi_squared_cdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::cdf(boost::math::chi_squared_distribution<double>(df), x);
}

double chi_squared_upper_tail(double x, double df) {
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(df), x));
}

double kolmogorov_upper_tail(double t) {
  if (t <= 0.0) return 1.0;
  // Small t: the alternating series converges slowly; use the theta-function form.
  if (t < 1.18) {
    const double pi2 = M_PI * M_PI;
    const double y = std::exp(-pi2 / (8.0 * t * t));
    double sum = 0.0;
    for (int k = 1; k <= 7; k += 2) sum += std::pow(y, k * k);
    return 1.0 - std::sqrt(2.0 * M_PI) / t * sum;
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test_chi_squared(std::span<const double> sample, double df) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = chi_squared_cdf(sorted[i], df);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sqrt_n = std::sqrt(n);
  return {d, kolmogorov_upper_tail((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)};
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double mc_stderr(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return sample_sd(values) / std::sqrt(static_cast<double>(values.size()));
}

}  // namespace netreg::stats

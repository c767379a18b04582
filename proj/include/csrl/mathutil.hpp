#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace csrl {

inline double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean: empty input");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Population variance (divide by n). Two-pass for stability.
inline double population_variance(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("population_variance: empty input");
  double m = mean(v);
  double s = 0.0;
  for (double x : v) {
    double d = x - m;
    s += d * d;
  }
  return s / static_cast<double>(v.size());
}

inline double sample_stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double m = mean(v);
  double s = 0.0;
  for (double x : v) {
    double d = x - m;
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Quantile with linear interpolation between order statistics
/// (the R-7 / numpy default). p in [0, 1].
inline double quantile_linear(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile_linear: empty input");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile_linear: p outside [0,1]");
  std::sort(v.begin(), v.end());
  double h = (static_cast<double>(v.size()) - 1.0) * p;
  auto i = static_cast<std::size_t>(h);
  if (i + 1 >= v.size()) return v.back();
  double frac = h - static_cast<double>(i);
  return v[i] + frac * (v[i + 1] - v[i]);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

inline double normal_logpdf(double x, double mu, double sigma) {
  double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.91893853320467274178;  // log(sqrt(2*pi))
}

inline double cauchy_logpdf(double x, double loc, double scale) {
  double z = (x - loc) / scale;
  return -std::log(3.14159265358979323846 * scale * (1.0 + z * z));
}

namespace detail {

// Regularized incomplete gamma, series and continued-fraction branches.
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_contfrac(a, x);
}

/// Upper tail of the chi-square distribution with k degrees of freedom.
inline double chi_square_sf(double x, double k) {
  if (x <= 0.0) return 1.0;
  if (x < k + 1.0) return 1.0 - detail::gamma_p_series(k / 2.0, x / 2.0);
  return detail::gamma_q_contfrac(k / 2.0, x / 2.0);
}

/// Pearson chi-square statistic against expected counts.
inline double chi_square_statistic(std::span<const double> observed,
                                   std::span<const double> expected) {
  if (observed.size() != expected.size() || observed.empty())
    throw std::invalid_argument("chi_square_statistic: size mismatch");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) throw std::invalid_argument("chi_square_statistic: non-positive expected count");
    double d = observed[i] - expected[i];
    stat += d * d / expected[i];
  }
  return stat;
}

}  // namespace csrl

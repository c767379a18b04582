#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "csrl/mathutil.hpp"
#include "csrl/rng.hpp"

namespace csrl {

class EvalGridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation returns for one method: returns[t][run] on a shared step grid.
struct CurveSet {
  std::string label;
  std::vector<long long> steps;
  std::vector<std::vector<double>> returns;

  std::size_t step_count() const { return steps.size(); }
  std::size_t run_count() const { return returns.empty() ? 0 : returns[0].size(); }

  void validate() const {
    if (steps.size() != returns.size())
      throw std::invalid_argument("CurveSet: steps/returns length mismatch");
    if (steps.empty()) throw std::invalid_argument("CurveSet: empty evaluation grid");
    std::size_t runs = returns[0].size();
    if (runs == 0) throw std::invalid_argument("CurveSet: no runs");
    for (const auto& row : returns) {
      if (row.size() != runs)
        throw std::invalid_argument("CurveSet: missing values are not allowed");
      for (double v : row)
        if (!std::isfinite(v)) throw std::invalid_argument("CurveSet: non-finite return");
    }
  }
};

/// Per-run trailing mean over the previous `window` evaluations (shorter at
/// the start of the series). window <= 1 is a no-op.
inline CurveSet smooth_trailing_mean(const CurveSet& curves, int window) {
  if (window <= 1) return curves;
  CurveSet out = curves;
  std::size_t runs = curves.run_count();
  for (std::size_t j = 0; j < runs; ++j) {
    double acc = 0.0;
    for (std::size_t t = 0; t < curves.step_count(); ++t) {
      acc += curves.returns[t][j];
      if (t >= static_cast<std::size_t>(window)) acc -= curves.returns[t - window][j];
      std::size_t denom = std::min<std::size_t>(t + 1, static_cast<std::size_t>(window));
      out.returns[t][j] = acc / static_cast<double>(denom);
    }
  }
  return out;
}

struct McmcConfig {
  int chains = 4;
  int iterations = 20000;  // per chain, including burn-in
  int burn_in = 10000;
  int thinning = 5;
  int smoothing_window = 10;
  int adapt_batch = 25;  // step-size adaptation cadence during burn-in
  std::uint64_t seed = 20260810;
};

struct PriorBounds {
  double latent_lo = 0.0;
  double latent_hi = 0.0;
  double delta_lo = 0.0;
  double delta_hi = 0.0;
  double sigma_lo = 0.0;
  double sigma_hi = 0.0;
};

struct ChainDiagnostics {
  std::vector<double> acceptance_rates;  // per chain, latent coordinates, post burn-in
  double min_ess = 0.0;                  // lag-1 autocorrelation proxy, min over steps
  bool warning = false;
  std::string message;
};

struct PosteriorSummary {
  std::vector<long long> steps;
  std::vector<double> delta_mean;
  std::vector<double> delta_stddev;
  std::vector<double> delta_q025;
  std::vector<double> delta_q975;
  std::vector<std::pair<long long, long long>> significant;  // maximal ranges, lower q > 0
  ChainDiagnostics diagnostics;
  PriorBounds prior_bounds;
  std::uint64_t seed = 0;
};

/// Maximal contiguous step ranges where the lower credibility bound is > 0.
inline std::vector<std::pair<long long, long long>> significant_intervals(
    std::span<const long long> steps, std::span<const double> lower_bounds) {
  if (steps.size() != lower_bounds.size())
    throw std::invalid_argument("significant_intervals: size mismatch");
  std::vector<std::pair<long long, long long>> out;
  std::size_t i = 0;
  while (i < steps.size()) {
    if (lower_bounds[i] > 0.0) {
      std::size_t j = i;
      while (j + 1 < steps.size() && lower_bounds[j + 1] > 0.0) ++j;
      out.emplace_back(steps[i], steps[j]);
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

inline std::vector<std::pair<long long, long long>> significant_intervals(
    const PosteriorSummary& summary) {
  return significant_intervals(summary.steps, summary.delta_q025);
}

namespace detail {

/// State-space model of two learning curves:
///   mu[t]    ~ Normal(mu[t-1], sigma_mu)      latent true return, first arm
///   delta[t] ~ Cauchy(delta[t-1], sigma_x)    latent difference to second arm
///   P[t][j]  ~ Normal(mu[t], sigma_r)
///   X[t][j]  ~ Normal(mu[t] - delta[t], sigma_r)
/// Uniform priors on a bounded box; scales sampled on the log axis.
class CurveModelSampler {
 public:
  CurveModelSampler(const CurveSet& proposed, const CurveSet& baseline, PriorBounds bounds)
      : p_(proposed), x_(baseline), bounds_(bounds), t_count_(proposed.step_count()) {}

  struct ChainResult {
    std::vector<std::vector<double>> delta_samples;  // kept draws per step [t][k]
    double latent_acceptance = 0.0;
  };

  ChainResult run_chain(const McmcConfig& cfg, std::uint64_t seed) const {
    Rng rng(seed);
    const std::size_t T = t_count_;

    // Paper-style initialization: mu starts at the per-step mean of the first
    // arm; delta at the per-step mean difference.
    std::vector<double> mu(T), delta(T);
    for (std::size_t t = 0; t < T; ++t) {
      mu[t] = row_mean(p_.returns[t]);
      delta[t] = mu[t] - row_mean(x_.returns[t]);
      mu[t] = std::clamp(mu[t], bounds_.latent_lo, bounds_.latent_hi);
      delta[t] = std::clamp(delta[t], bounds_.delta_lo, bounds_.delta_hi);
    }
    double sigma_mu = init_sigma(series_diff_scale(mu));
    double sigma_x = init_sigma(series_diff_scale(delta));
    double sigma_r = init_sigma(residual_scale(mu, delta));

    std::vector<double> mu_step(T, 0.1 * (bounds_.sigma_hi / 10.0));
    std::vector<double> delta_step(T, 0.1 * (bounds_.sigma_hi / 10.0));
    double log_sigma_step[3] = {0.5, 0.5, 0.5};

    std::vector<int> mu_acc(T, 0), mu_try(T, 0), delta_acc(T, 0), delta_try(T, 0);
    int sigma_acc[3] = {0, 0, 0}, sigma_try[3] = {0, 0, 0};
    long long post_acc = 0, post_try = 0;

    ChainResult result;
    result.delta_samples.assign(T, {});

    for (int iter = 0; iter < cfg.iterations; ++iter) {
      bool burning = iter < cfg.burn_in;

      for (std::size_t t = 0; t < T; ++t) {
        double prop = mu[t] + mu_step[t] * rng.normal();
        ++mu_try[t];
        if (!burning) ++post_try;
        if (prop >= bounds_.latent_lo && prop <= bounds_.latent_hi) {
          double delta_lp = mu_local_lp(mu, delta, t, prop, sigma_mu, sigma_r) -
                            mu_local_lp(mu, delta, t, mu[t], sigma_mu, sigma_r);
          if (accept(rng, delta_lp)) {
            mu[t] = prop;
            ++mu_acc[t];
            if (!burning) ++post_acc;
          }
        }
      }

      for (std::size_t t = 0; t < T; ++t) {
        double prop = delta[t] + delta_step[t] * rng.normal();
        ++delta_try[t];
        if (!burning) ++post_try;
        if (prop >= bounds_.delta_lo && prop <= bounds_.delta_hi) {
          double delta_lp = delta_local_lp(mu, delta, t, prop, sigma_x, sigma_r) -
                            delta_local_lp(mu, delta, t, delta[t], sigma_x, sigma_r);
          if (accept(rng, delta_lp)) {
            delta[t] = prop;
            ++delta_acc[t];
            if (!burning) ++post_acc;
          }
        }
      }

      double* sigmas[3] = {&sigma_mu, &sigma_x, &sigma_r};
      for (int i = 0; i < 3; ++i) {
        double cur = *sigmas[i];
        double prop = cur * std::exp(log_sigma_step[i] * rng.normal());
        ++sigma_try[i];
        if (prop >= bounds_.sigma_lo && prop <= bounds_.sigma_hi) {
          double lp_new = sigma_lp(mu, delta, i, prop, sigma_r);
          double lp_old = sigma_lp(mu, delta, i, cur, sigma_r);
          // log proposal asymmetry for the multiplicative random walk
          if (accept(rng, lp_new - lp_old + std::log(prop) - std::log(cur))) {
            *sigmas[i] = prop;
            ++sigma_acc[i];
          }
        }
      }

      if (burning && (iter + 1) % cfg.adapt_batch == 0) {
        adapt(mu_step, mu_acc, mu_try);
        adapt(delta_step, delta_acc, delta_try);
        for (int i = 0; i < 3; ++i) {
          double rate = sigma_try[i] > 0 ? static_cast<double>(sigma_acc[i]) / sigma_try[i] : 0.0;
          if (rate > 0.5) log_sigma_step[i] *= 1.5;
          if (rate < 0.25) log_sigma_step[i] /= 1.5;
          sigma_acc[i] = sigma_try[i] = 0;
        }
      }

      if (!burning && (iter - cfg.burn_in) % cfg.thinning == 0)
        for (std::size_t t = 0; t < T; ++t) result.delta_samples[t].push_back(delta[t]);
    }

    result.latent_acceptance =
        post_try > 0 ? static_cast<double>(post_acc) / static_cast<double>(post_try) : 0.0;
    return result;
  }

 private:
  static double row_mean(const std::vector<double>& row) {
    double s = 0.0;
    for (double v : row) s += v;
    return s / static_cast<double>(row.size());
  }

  double series_diff_scale(const std::vector<double>& series) const {
    if (series.size() < 2) return 0.0;
    std::vector<double> diffs;
    diffs.reserve(series.size() - 1);
    for (std::size_t t = 1; t < series.size(); ++t) diffs.push_back(series[t] - series[t - 1]);
    return sample_stddev(diffs);
  }

  double residual_scale(const std::vector<double>& mu, const std::vector<double>& delta) const {
    double ss = 0.0;
    long long n = 0;
    for (std::size_t t = 0; t < t_count_; ++t) {
      for (double v : p_.returns[t]) {
        ss += (v - mu[t]) * (v - mu[t]);
        ++n;
      }
      for (double v : x_.returns[t]) {
        ss += (v - mu[t] + delta[t]) * (v - mu[t] + delta[t]);
        ++n;
      }
    }
    return n > 0 ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
  }

  double init_sigma(double estimate) const {
    double floor_value = std::max(bounds_.sigma_lo * 10.0, 1e-3 * bounds_.sigma_hi / 10.0);
    return std::clamp(std::max(estimate, floor_value), bounds_.sigma_lo, bounds_.sigma_hi);
  }

  static bool accept(Rng& rng, double log_ratio) {
    if (log_ratio >= 0.0) return true;
    return std::log(rng.uniform_double_open()) < log_ratio;
  }

  double mu_local_lp(const std::vector<double>& mu, const std::vector<double>& delta,
                     std::size_t t, double value, double sigma_mu, double sigma_r) const {
    double lp = 0.0;
    if (t > 0) lp += normal_logpdf(value, mu[t - 1], sigma_mu);
    if (t + 1 < t_count_) lp += normal_logpdf(mu[t + 1], value, sigma_mu);
    for (double v : p_.returns[t]) lp += normal_logpdf(v, value, sigma_r);
    for (double v : x_.returns[t]) lp += normal_logpdf(v, value - delta[t], sigma_r);
    return lp;
  }

  double delta_local_lp(const std::vector<double>& mu, const std::vector<double>& delta,
                        std::size_t t, double value, double sigma_x, double sigma_r) const {
    double lp = 0.0;
    if (t > 0) lp += cauchy_logpdf(value, delta[t - 1], sigma_x);
    if (t + 1 < t_count_) lp += cauchy_logpdf(delta[t + 1], value, sigma_x);
    for (double v : x_.returns[t]) lp += normal_logpdf(v, mu[t] - value, sigma_r);
    return lp;
  }

  /// Log-likelihood terms that involve the i-th scale (0: sigma_mu walk,
  /// 1: sigma_x walk, 2: sigma_r observations).
  double sigma_lp(const std::vector<double>& mu, const std::vector<double>& delta, int which,
                  double value, double /*sigma_r*/) const {
    double lp = 0.0;
    if (which == 0) {
      for (std::size_t t = 1; t < t_count_; ++t)
        lp += normal_logpdf(mu[t], mu[t - 1], value);
    } else if (which == 1) {
      for (std::size_t t = 1; t < t_count_; ++t)
        lp += cauchy_logpdf(delta[t], delta[t - 1], value);
    } else {
      for (std::size_t t = 0; t < t_count_; ++t) {
        for (double v : p_.returns[t]) lp += normal_logpdf(v, mu[t], value);
        for (double v : x_.returns[t]) lp += normal_logpdf(v, mu[t] - delta[t], value);
      }
    }
    return lp;
  }

  void adapt(std::vector<double>& steps, std::vector<int>& acc, std::vector<int>& tries) const {
    for (std::size_t t = 0; t < steps.size(); ++t) {
      if (tries[t] == 0) continue;
      double rate = static_cast<double>(acc[t]) / tries[t];
      if (rate > 0.5) steps[t] *= 1.5;
      if (rate < 0.25) steps[t] /= 1.5;
      acc[t] = 0;
      tries[t] = 0;
    }
  }

  const CurveSet& p_;
  const CurveSet& x_;
  PriorBounds bounds_;
  std::size_t t_count_;
};

inline double lag1_ess(std::span<const double> series) {
  std::size_t n = series.size();
  if (n < 3) return static_cast<double>(n);
  double m = mean(series);
  double var = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = series[i] - m;
    var += d * d;
    if (i + 1 < n) cov += d * (series[i + 1] - m);
  }
  if (var <= 0.0) return static_cast<double>(n);
  double rho = std::clamp(cov / var, -0.99, 0.99);
  return static_cast<double>(n) * (1.0 - rho) / (1.0 + rho);
}

}  // namespace detail

/// Posterior over the per-step return difference delta[t] between two
/// learning curves, fitted with component-wise random-walk Metropolis.
/// Returns are pre-smoothed by a trailing mean (cfg.smoothing_window).
inline PosteriorSummary fit_curve_model(const CurveSet& proposed, const CurveSet& baseline,
                                        const McmcConfig& cfg = {}) {
  proposed.validate();
  baseline.validate();
  if (proposed.steps != baseline.steps)
    throw EvalGridError("fit_curve_model: evaluation grids do not match");
  if (proposed.run_count() < 2 || baseline.run_count() < 2)
    throw std::invalid_argument("fit_curve_model: need at least 2 runs per arm");
  if (cfg.burn_in >= cfg.iterations)
    throw std::invalid_argument("fit_curve_model: burn_in must be below iterations");

  CurveSet p = smooth_trailing_mean(proposed, cfg.smoothing_window);
  CurveSet x = smooth_trailing_mean(baseline, cfg.smoothing_window);

  // Uniform prior box derived from the pooled smoothed data.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const CurveSet* cs : {&p, &x})
    for (const auto& row : cs->returns)
      for (double v : row) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  double spread = std::max({hi - lo, 1e-6 * std::max(std::fabs(lo), std::fabs(hi)), 1e-12});
  PriorBounds bounds;
  bounds.latent_lo = lo - 10.0 * spread;
  bounds.latent_hi = hi + 10.0 * spread;
  bounds.delta_lo = -10.0 * spread;
  bounds.delta_hi = 10.0 * spread;
  bounds.sigma_lo = 1e-9 * spread;
  bounds.sigma_hi = 10.0 * spread;

  detail::CurveModelSampler sampler(p, x, bounds);

  std::size_t T = p.step_count();
  std::vector<detail::CurveModelSampler::ChainResult> chains(cfg.chains);
  for (int c = 0; c < cfg.chains; ++c)
    chains[c] = sampler.run_chain(cfg, derive_seed(cfg.seed, static_cast<std::uint64_t>(c)));

  PosteriorSummary summary;
  summary.steps = p.steps;
  summary.prior_bounds = bounds;
  summary.seed = cfg.seed;
  summary.delta_mean.resize(T);
  summary.delta_stddev.resize(T);
  summary.delta_q025.resize(T);
  summary.delta_q975.resize(T);

  double min_ess = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> pooled;
    double ess = 0.0;
    for (const auto& chain : chains) {
      const auto& s = chain.delta_samples[t];
      pooled.insert(pooled.end(), s.begin(), s.end());
      ess += detail::lag1_ess(s);
    }
    min_ess = std::min(min_ess, ess);
    summary.delta_mean[t] = mean(pooled);
    summary.delta_stddev[t] = sample_stddev(pooled);
    summary.delta_q025[t] = quantile_linear(pooled, 0.025);
    summary.delta_q975[t] = quantile_linear(std::move(pooled), 0.975);
  }

  summary.diagnostics.min_ess = min_ess;
  for (const auto& chain : chains) {
    summary.diagnostics.acceptance_rates.push_back(chain.latent_acceptance);
    if (chain.latent_acceptance < 0.1 || chain.latent_acceptance > 0.6) {
      summary.diagnostics.warning = true;
      summary.diagnostics.message =
          "latent acceptance rate outside [0.1, 0.6] after adaptation; treat intervals "
          "with caution";
    }
  }
  summary.significant = significant_intervals(summary.steps, summary.delta_q025);
  return summary;
}

}  // namespace csrl

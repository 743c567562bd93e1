#ifndef SPD_STATS_HPP
#define SPD_STATS_HPP

#include <cstdint>
#include <utility>

namespace spd {

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

// Quantile of the chi-square distribution with k degrees of freedom.
double chi2_quantile(double p, double k);

// Exact two-sided 95% confidence interval for a Poisson mean given an
// observed total (Garwood construction via chi-square quantiles).
std::pair<double, double> poisson_interval_95(std::uint64_t observed);

// P(X <= k) for X ~ Poisson(lambda).
double poisson_cdf(std::uint64_t k, double lambda);

// Two-sided exact tail probability of observing a value at least as far
// from the mean as k under Poisson(lambda): min(1, 2*min(P(X<=k), P(X>=k))).
double poisson_two_sided_p(std::uint64_t k, double lambda);

// Standard normal CDF.
double normal_cdf(double z);

} // namespace spd

#endif

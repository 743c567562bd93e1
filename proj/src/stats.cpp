#include "spd/stats.hpp"

#include "spd/errors.hpp"

#include <cmath>
#include <limits>

namespace spd {

namespace {

// Series expansion, valid for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double term = sum;
    // Near x ~ a the series needs on the order of sqrt(a) terms.
    const int max_it = 1000 + static_cast<int>(20.0 * std::sqrt(a));
    for (int n = 0; n < max_it; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw numeric_error("incomplete gamma series did not converge");
}

// Continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
    const double tiny = std::numeric_limits<double>::min() / 1e-30;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    const int max_it = 1000 + static_cast<int>(20.0 * std::sqrt(a));
    for (int i = 1; i < max_it; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16)
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw numeric_error("incomplete gamma continued fraction did not converge");
}

} // namespace

double gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0)
        throw numeric_error("gamma_p: invalid arguments");
    if (x == 0.0)
        return 0.0;
    return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double chi2_quantile(double p, double k) {
    if (!(p > 0.0) || !(p < 1.0) || !(k > 0.0))
        throw numeric_error("chi2_quantile: invalid arguments");
    // Bisection on the CDF; monotone and well bounded.
    double lo = 0.0;
    double hi = k + 10.0;
    while (gamma_p(k / 2.0, hi / 2.0) < p)
        hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (gamma_p(k / 2.0, mid / 2.0) < p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-12 * (1.0 + hi))
            break;
    }
    return 0.5 * (lo + hi);
}

std::pair<double, double> poisson_interval_95(std::uint64_t observed) {
    double n = static_cast<double>(observed);
    double lo = observed == 0 ? 0.0 : 0.5 * chi2_quantile(0.025, 2.0 * n);
    double hi = 0.5 * chi2_quantile(0.975, 2.0 * (n + 1.0));
    return {lo, hi};
}

double poisson_cdf(std::uint64_t k, double lambda) {
    if (lambda <= 0.0)
        return 1.0;
    // P(X <= k) = Q(k + 1, lambda) = 1 - P(k + 1, lambda)
    return 1.0 - gamma_p(static_cast<double>(k) + 1.0, lambda);
}

double poisson_two_sided_p(std::uint64_t k, double lambda) {
    double lower = poisson_cdf(k, lambda);
    double upper = k == 0 ? 1.0 : 1.0 - poisson_cdf(k - 1, lambda);
    double p = 2.0 * std::min(lower, upper);
    return p < 1.0 ? p : 1.0;
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

} // namespace spd

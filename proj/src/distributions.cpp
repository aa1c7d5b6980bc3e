#include "blockform/distributions.hpp"

#include <cmath>
#include <numbers>

#include "blockform/errors.hpp"

namespace blockform::stats {

namespace {

// Acklam's rational approximation, relative error < 1.2e-9 before refinement.
double acklam_quantile(double p) {
    constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                            1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                            6.680131188771972e+01,  -1.328068155288572e+01};
    constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                            -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                            3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

constexpr double gamma_eps = 1e-16;
constexpr int gamma_max_iter = 10000;

double gamma_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < gamma_max_iter; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * gamma_eps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
double gamma_continued_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < gamma_max_iter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < gamma_eps) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InputError("normal_quantile: p must lie in (0, 1)");
    if (p > 0.5) return -normal_quantile(1.0 - p);
    const double x = acklam_quantile(p);
    return x - (normal_cdf(x) - p) / normal_pdf(x);
}

double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw InputError("regularized_gamma_p: need a > 0 and x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_series(a, x);
    return 1.0 - gamma_continued_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw InputError("regularized_gamma_q: need a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_series(a, x);
    return gamma_continued_fraction(a, x);
}

double chi_squared_cdf(double x, double dof) {
    if (x <= 0.0) return 0.0;
    return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

double chi_squared_quantile(double p, double dof) {
    if (!(p > 0.0 && p < 1.0)) throw InputError("chi_squared_quantile: p must lie in (0, 1)");
    if (!(dof > 0.0)) throw InputError("chi_squared_quantile: degrees of freedom must be positive");

    const double z = normal_quantile(p);
    const double h = 2.0 / (9.0 * dof);
    const double base = 1.0 - h + z * std::sqrt(h);
    const double guess = base > 0.0 ? dof * base * base * base : 0.5 * dof;

    // Bracket [lo, hi] around the root, then bisect.
    double lo = 0.0;
    double hi = guess > 0.0 ? guess : 1.0;
    while (chi_squared_cdf(hi, dof) < p) {
        lo = hi;
        hi *= 2.0;
    }
    for (int it = 0; it < 400 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (chi_squared_cdf(mid, dof) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double binomial_pmf(std::size_t k, std::size_t trials, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("binomial_pmf: p must lie in [0, 1]");
    if (k > trials) return 0.0;
    if (p == 0.0) return k == 0 ? 1.0 : 0.0;
    if (p == 1.0) return k == trials ? 1.0 : 0.0;
    const double n = static_cast<double>(trials);
    const double kk = static_cast<double>(k);
    const double log_choose = std::lgamma(n + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(n - kk + 1.0);
    return std::exp(log_choose + kk * std::log(p) + (n - kk) * std::log1p(-p));
}

double binomial_cdf(std::size_t k, std::size_t trials, double p) {
    if (k >= trials) return 1.0;
    double sum = 0.0;
    for (std::size_t j = 0; j <= k; ++j) sum += binomial_pmf(j, trials, p);
    return sum < 1.0 ? sum : 1.0;
}

}  // namespace blockform::stats

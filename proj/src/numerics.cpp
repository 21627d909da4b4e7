#include "pbcast/numerics.hpp"

#include "pbcast/core.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>

namespace pbcast {

double log_sum_exp(double a, double b) {
    if (a == log_zero) return b;
    if (b == log_zero) return a;
    double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

double log_sum_exp(std::span<const double> xs) {
    double m = log_zero;
    for (double x : xs) m = std::max(m, x);
    if (m == log_zero) return log_zero;
    if (std::isinf(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

double log1m_exp(double x) {
    if (x > 0.0) x = 0.0;
    if (x == 0.0) return log_zero;
    // Maechler's split point keeps full precision on both sides.
    return x > -M_LN2 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

double log_diff_exp(double a, double b) {
    if (b == log_zero) return a;
    if (b >= a) return log_zero;
    return a + log1m_exp(b - a);
}

double log_choose(std::uint64_t n, std::uint64_t k) {
    if (k > n) return log_zero;
    return std::lgamma(double(n) + 1) - std::lgamma(double(k) + 1) - std::lgamma(double(n - k) + 1);
}

static void check_p(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability outside [0,1]");
}

double log_binom_pmf(std::uint64_t n, double p, std::uint64_t k) {
    check_p(p);
    if (k > n) throw DomainError("binomial outcome exceeds trial count");
    if (p == 0.0) return k == 0 ? 0.0 : log_zero;
    if (p == 1.0) return k == n ? 0.0 : log_zero;
    return log_choose(n, k) + double(k) * std::log(p) + double(n - k) * std::log1p(-p);
}

// Direct log-space summation of pmf terms lo..hi, used when the incomplete
// beta result underflows.
static double summed_range(std::uint64_t n, double p, std::uint64_t lo, std::uint64_t hi) {
    std::vector<double> terms;
    terms.reserve(hi - lo + 1);
    for (std::uint64_t k = lo; k <= hi; ++k) terms.push_back(log_binom_pmf(n, p, k));
    return log_sum_exp(terms);
}

double log_binom_tail(std::uint64_t n, double p, std::int64_t k0) {
    check_p(p);
    if (k0 <= 0) return 0.0;
    if (std::uint64_t(k0) > n) return log_zero;
    if (p == 0.0) return log_zero;
    if (p == 1.0) return 0.0;
    auto k = std::uint64_t(k0);
    // P[X >= k] = I_p(k, n-k+1).
    double upper = boost::math::ibeta(double(k), double(n - k + 1), p);
    if (upper > 0.5) return std::log1p(-boost::math::ibetac(double(k), double(n - k + 1), p));
    if (upper > 1e-280) return std::log(upper);
    return summed_range(n, p, k, n);
}

double log_binom_cdf(std::uint64_t n, double p, std::int64_t k) {
    check_p(p);
    if (k < 0) return log_zero;
    if (std::uint64_t(k) >= n) return 0.0;
    if (p == 0.0) return 0.0;
    if (p == 1.0) return log_zero;
    auto kk = std::uint64_t(k) + 1;
    double lower = boost::math::ibetac(double(kk), double(n - kk + 1), p);
    if (lower > 0.5) return std::log1p(-boost::math::ibeta(double(kk), double(n - kk + 1), p));
    if (lower > 1e-280) return std::log(lower);
    return summed_range(n, p, 0, std::uint64_t(k));
}

std::vector<double> binom_pmf(std::uint64_t n, double p) {
    std::vector<double> out(n + 1);
    for (std::uint64_t k = 0; k <= n; ++k) out[k] = std::exp(log_binom_pmf(n, p, k));
    return out;
}

MergeCheck binomial_merge_check(std::uint32_t a, std::uint32_t b, std::uint32_t x, std::uint32_t y) {
    if (b == 0 || x + y > b) throw DomainError("merge check needs x + y <= B, B > 0");
    MergeCheck out;
    out.convolved.assign(a + 1, 0.0);
    auto px = binom_pmf(a, double(x) / b);
    double q = b == x ? 0.0 : double(y) / double(b - x);
    for (std::uint32_t xv = 0; xv <= a; ++xv) {
        auto py = binom_pmf(a - xv, q);
        for (std::uint32_t yv = 0; yv + xv <= a; ++yv) out.convolved[xv + yv] += px[xv] * py[yv];
    }
    out.reference = binom_pmf(a, double(x + y) / b);
    return out;
}

double chernoff_union_bound(double n, double k, double h) {
    if (k <= 0.0 || n <= 0.0) return 0.0;
    if (h > (k - std::sqrt(k)) / n) return 0.0;
    if (h <= 0.0) return log_zero;
    return cap_log(k * (1.0 + std::log(n * h / k)) - n * h);
}

}  // namespace pbcast

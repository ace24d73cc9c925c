#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "neuroglm/errors.hpp"

// Distribution functions shared by the filtering and masking stages. The t
// CDF goes through the regularized incomplete beta function (Lentz continued
// fraction); the quantile inverts the CDF by bisection.

namespace neuroglm::stats {

/// Continued-fraction evaluation for the incomplete beta (modified Lentz).
inline double beta_cont_frac(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 3e-16;
    constexpr double fpmin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin)
        d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin)
            d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin)
            c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin)
            d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin)
            c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps)
            break;
    }
    return h;
}

/// Regularized incomplete beta I_x(a, b).
inline double betainc(double a, double b, double x) {
    if (x <= 0.0)
        return 0.0;
    if (x >= 1.0)
        return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                            std::lgamma(b) + a * std::log(x) +
                            b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_cont_frac(a, b, x) / a;
    return 1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b;
}

/// Student-t CDF with dof degrees of freedom.
inline double t_cdf(double t, double dof) {
    if (dof <= 0.0)
        throw ValidationError("t_cdf: dof must be positive");
    if (std::isinf(t))
        return t > 0.0 ? 1.0 : 0.0;
    const double x = dof / (dof + t * t);
    const double tail = 0.5 * betainc(0.5 * dof, 0.5, x);
    return t >= 0.0 ? 1.0 - tail : tail;
}

/// One-sided upper-tail p-value P(T > t).
inline double t_sf(double t, double dof) { return 1.0 - t_cdf(t, dof); }

/// Two-sided p-value for an observed t.
inline double t_two_sided_p(double t, double dof) {
    const double p = 2.0 * t_sf(std::fabs(t), dof);
    return p > 1.0 ? 1.0 : p;
}

/// Student-t quantile: smallest t with CDF(t) >= p, by bracketed bisection.
inline double t_quantile(double p, double dof) {
    if (!(p > 0.0 && p < 1.0))
        throw ValidationError("t_quantile: p must lie in (0,1)");
    if (dof <= 0.0)
        throw ValidationError("t_quantile: dof must be positive");
    if (p == 0.5)
        return 0.0;
    double lo = -1.0, hi = 1.0;
    while (t_cdf(lo, dof) > p)
        lo *= 2.0;
    while (t_cdf(hi, dof) < p)
        hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (t_cdf(mid, dof) < p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-13 * (1.0 + std::fabs(hi)))
            break;
    }
    return 0.5 * (lo + hi);
}

/// Standard normal CDF.
inline double norm_cdf(double z) {
    return 0.5 * std::erfc(-z / 1.4142135623730951);
}

struct Pearson {
    double r = 0.0;
    double p = 1.0; // two-sided
    bool degenerate = false; // a variable was constant
};

/// Pearson correlation with the two-sided p from t = r*sqrt(n-2)/sqrt(1-r^2).
inline Pearson pearson(const std::vector<double>& x,
                       const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size())
        throw DimsError("pearson: length mismatch");
    if (n < 4)
        throw ValidationError("pearson: needs at least 4 observations");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    Pearson out;
    if (sxx <= 0.0 || syy <= 0.0) {
        out.degenerate = true;
        return out;
    }
    out.r = sxy / std::sqrt(sxx * syy);
    if (out.r > 1.0)
        out.r = 1.0;
    if (out.r < -1.0)
        out.r = -1.0;
    const double dof = static_cast<double>(n) - 2.0;
    const double denom = 1.0 - out.r * out.r;
    if (denom <= 0.0) {
        out.p = 0.0;
        return out;
    }
    const double t = out.r * std::sqrt(dof / denom);
    out.p = t_two_sided_p(t, dof);
    return out;
}

struct OneSampleT {
    double t = 0.0;
    double p_greater = 1.0;
    double mean = 0.0;
    double sd = 0.0; // sample sd, n-1 denominator
};

/// One-sample t-test against 0, one-sided greater. Zero-variance samples get
/// t = +-inf by the sign of the mean (p 0 or 1).
inline OneSampleT one_sample_t_greater(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n < 2)
        throw ValidationError("one_sample_t: needs at least 2 observations");
    OneSampleT out;
    for (double x : v)
        out.mean += x;
    out.mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : v) {
        const double d = x - out.mean;
        ss += d * d;
    }
    out.sd = std::sqrt(ss / static_cast<double>(n - 1));
    const double dof = static_cast<double>(n - 1);
    if (out.sd == 0.0) {
        if (out.mean > 0.0) {
            out.t = std::numeric_limits<double>::infinity();
            out.p_greater = 0.0;
        } else if (out.mean < 0.0) {
            out.t = -std::numeric_limits<double>::infinity();
            out.p_greater = 1.0;
        } else {
            out.t = 0.0;
            out.p_greater = 1.0;
        }
        return out;
    }
    out.t = out.mean / (out.sd / std::sqrt(static_cast<double>(n)));
    out.p_greater = t_sf(out.t, dof);
    return out;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v)
        s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Sample standard deviation (n-1 denominator); 0 for n < 2.
inline double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2)
        return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) {
        const double d = x - m;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

} // namespace neuroglm::stats

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "pdqsign/errors.hpp"

namespace pdqsign {

// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Standard normal quantile: Acklam's rational approximation polished with one
// Halley step against erfc, giving near machine precision over (0, 1).
inline double normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw InvalidDimension("normal_quantile requires u in (0,1)");
    }
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (u < plow) {
        double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (u <= 1.0 - plow) {
        double q = u - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // One Halley refinement.
    double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - u;
    double g = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - g / (1.0 + x * g / 2.0);
    return x;
}

// Smallest integer k >= alpha * m, computed exactly from the binary
// representation of alpha (no floating-point product rounding).  This is the
// 1-based rank of an empirical quantile at level alpha over m values, i.e.
// the smallest k with k/m >= alpha.
inline long quantile_rank(double alpha, long m) {
    if (!(alpha > 0.0 && alpha <= 1.0) || m <= 0) {
        throw InvalidDimension("quantile_rank requires alpha in (0,1] and m >= 1");
    }
    int exp2 = 0;
    double frac = std::frexp(alpha, &exp2);             // alpha = frac * 2^exp2, frac in [0.5, 1)
    auto sig = static_cast<unsigned long long>(std::ldexp(frac, 53));  // exact 53-bit significand
    int shift = exp2 - 53;                              // alpha = sig * 2^shift, shift <= 0
    unsigned __int128 prod = static_cast<unsigned __int128>(sig) * static_cast<unsigned __int128>(m);
    // ceil(prod * 2^shift) with shift <= 0: shift right and round up on remainder.
    unsigned int s = static_cast<unsigned int>(-shift);
    if (s >= 120) return 1;  // alpha*m < 1: the rank of any positive alpha is 1
    unsigned __int128 k = prod >> s;
    if ((prod & (((unsigned __int128)1 << s) - 1)) != 0) k += 1;
    return static_cast<long>(k);
}

}  // namespace pdqsign

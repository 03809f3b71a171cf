#include "pdqsign/pdq_scale.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pdqsign/stats_util.hpp"

namespace pdqsign {

namespace {

// Shared per-column kernel; `scratch` is reused across columns to avoid
// reallocating the n(n-1)/2 buffer.
double column_quantile(const double* v, long n, double alpha, std::vector<double>& scratch) {
    const long m = n * (n - 1) / 2;
    scratch.resize(static_cast<size_t>(m));
    long idx = 0;
    for (long i = 0; i < n; ++i) {
        const double vi = v[i];
        for (long j = i + 1; j < n; ++j) {
            scratch[static_cast<size_t>(idx++)] = std::abs(vi - v[j]);
        }
    }
    const long k = quantile_rank(alpha, m);
    std::nth_element(scratch.begin(), scratch.begin() + (k - 1), scratch.end());
    return scratch[static_cast<size_t>(k - 1)];
}

}  // namespace

double pairwise_quantile(std::span<const double> v, double alpha) {
    if (v.size() < 2) throw InvalidDimension("pairwise_quantile requires n >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidDimension("alpha must be in (0,1)");
    std::vector<double> scratch;
    const double q = column_quantile(v.data(), static_cast<long>(v.size()), alpha, scratch);
    if (q == 0.0) {
        throw DegenerateScale("pairwise-difference quantile is zero", -1);
    }
    return q;
}

namespace {

DiagonalScale estimate_diag_impl(const SampleMatrix& sample, double alpha, bool parallel) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidDimension("alpha must be in (0,1)");
    const long n = sample.n();
    const int p = sample.p();
    Vector d(p);
    int degenerate = -1;

#pragma omp parallel if (parallel)
    {
        std::vector<double> scratch;
        // Column-major storage: copy the column once so the pair loop is
        // contiguous.
        std::vector<double> col(static_cast<size_t>(n));
#pragma omp for schedule(dynamic)
        for (int j = 0; j < p; ++j) {
            for (long i = 0; i < n; ++i) col[static_cast<size_t>(i)] = sample.values(i, j);
            const double q = column_quantile(col.data(), n, alpha, scratch);
            d(j) = q * q;
            if (q == 0.0) {
#pragma omp critical
                degenerate = (degenerate < 0 || j < degenerate) ? j : degenerate;
            }
        }
    }
    if (degenerate >= 0) {
        throw DegenerateScale(
            "pairwise-difference quantile is zero in coordinate " + std::to_string(degenerate),
            degenerate);
    }
    return DiagonalScale{std::move(d)};
}

}  // namespace

DiagonalScale estimate_diag(const SampleMatrix& sample, double alpha) {
    return estimate_diag_impl(sample, alpha, true);
}

DiagonalScale estimate_diag_serial(const SampleMatrix& sample, double alpha) {
    return estimate_diag_impl(sample, alpha, false);
}

}  // namespace pdqsign

#include "pdqsign/wild_bootstrap.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pdqsign/rng.hpp"
#include "pdqsign/stats_util.hpp"

namespace pdqsign {

namespace {

void check_inputs(const Matrix& s1, const Matrix& s2, const KMatrices& k) {
    const long p = s1.cols();
    if (s2.cols() != p || k.k1.rows() != p || k.k2.rows() != p || k.k3.rows() != p) {
        throw InvalidDimension("bootstrap: dimension mismatch between signs and K matrices");
    }
    if (s1.rows() < 2 || s2.rows() < 2) {
        throw InvalidDimension("bootstrap requires n1, n2 >= 2");
    }
}

}  // namespace

double bootstrap_statistic(const Matrix& s1, const Matrix& s2, const KMatrices& k, double b_hat,
                           const Vector& e1, const Vector& e2) {
    check_inputs(s1, s2, k);
    if (e1.size() != s1.rows() || e2.size() != s2.rows()) {
        throw InvalidDimension("bootstrap_statistic: multiplier length mismatch");
    }
    Vector sbar1 = s1.transpose() * e1 / static_cast<double>(s1.rows());
    Vector sbar2 = s2.transpose() * e2 / static_cast<double>(s2.rows());
    const double q = sbar1.dot(k.k1 * sbar1) + sbar2.dot(k.k2 * sbar2) - sbar1.dot(k.k3 * sbar2);
    return q - b_hat;
}

double bootstrap_draw(const Matrix& s1, const Matrix& s2, const KMatrices& k, double b_hat,
                      std::uint64_t key, int b) {
    SplitMix64 eng(stream_key(key, {stream::kBootstrap, static_cast<std::uint64_t>(b)}));
    Vector e1(s1.rows()), e2(s2.rows());
    for (long i = 0; i < e1.size(); ++i) e1(i) = (eng() >> 63) ? 1.0 : -1.0;
    for (long j = 0; j < e2.size(); ++j) e2(j) = (eng() >> 63) ? 1.0 : -1.0;
    return bootstrap_statistic(s1, s2, k, b_hat, e1, e2);
}

double tau_star(const Matrix& s1, const Matrix& s2, const KMatrices& k) {
    check_inputs(s1, s2, k);
    const double n1 = static_cast<double>(s1.rows());
    const double n2 = static_cast<double>(s2.rows());
    Matrix m11 = s1 * k.k1 * s1.transpose();
    Matrix m22 = s2 * k.k2 * s2.transpose();
    Matrix m12 = s1 * k.k3 * s2.transpose();
    const double within1 = m11.squaredNorm() - m11.diagonal().squaredNorm();
    const double within2 = m22.squaredNorm() - m22.diagonal().squaredNorm();
    const double cross = m12.squaredNorm();
    return std::sqrt(2.0 * within1 / std::pow(n1, 4) + 2.0 * within2 / std::pow(n2, 4) +
                     cross / (n1 * n1 * n2 * n2));
}

namespace {

BootstrapResult calibrate_impl(double t, const Matrix& s1, const Matrix& s2, const KMatrices& k,
                               double b_hat, int b, double level, std::uint64_t key,
                               bool parallel) {
    check_inputs(s1, s2, k);
    if (b < 19) throw InvalidDimension("calibrate requires B >= 19");
    if (!(level > 0.0 && level <= 1.0)) throw InvalidDimension("level must be in (0,1]");

    BootstrapResult out;
    out.b = b;
    out.level = level;
    out.draws.resize(b);

#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < b; ++i) {
        out.draws(i) = bootstrap_draw(s1, s2, k, b_hat, key, i);
    }

    out.tau_star_hat = tau_star(s1, s2, k);

    // Order-statistic critical value over the B draws.  rank 0 (level = 1)
    // and rank > B (level < 1/(B+1)) are the documented +-infinity edges.
    const long rank =
        (1.0 - level == 0.0) ? 0 : quantile_rank(1.0 - level, static_cast<long>(b) + 1);
    if (rank <= 0) {
        out.critical_value = -std::numeric_limits<double>::infinity();
    } else if (rank > b) {
        out.critical_value = std::numeric_limits<double>::infinity();
    } else {
        std::vector<double> sorted(out.draws.data(), out.draws.data() + b);
        std::nth_element(sorted.begin(), sorted.begin() + (rank - 1), sorted.end());
        out.critical_value = sorted[static_cast<size_t>(rank - 1)];
    }

    long exceed = 0;
    for (int i = 0; i < b; ++i) {
        if (out.draws(i) >= t) ++exceed;
    }
    out.p_value = static_cast<double>(1 + exceed) / static_cast<double>(b + 1);
    out.reject = t > out.critical_value;
    return out;
}

}  // namespace

BootstrapResult calibrate(double t, const Matrix& s1, const Matrix& s2, const KMatrices& k,
                          double b_hat, int b, double level, std::uint64_t key) {
    return calibrate_impl(t, s1, s2, k, b_hat, b, level, key, true);
}

BootstrapResult calibrate_serial(double t, const Matrix& s1, const Matrix& s2, const KMatrices& k,
                                 double b_hat, int b, double level, std::uint64_t key) {
    return calibrate_impl(t, s1, s2, k, b_hat, b, level, key, false);
}

}  // namespace pdqsign

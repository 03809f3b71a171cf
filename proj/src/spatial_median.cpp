#include "pdqsign/spatial_median.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace pdqsign {

namespace {

Vector columnwise_median(const Matrix& x) {
    const long n = x.rows();
    Vector med(x.cols());
    std::vector<double> col(static_cast<size_t>(n));
    for (long j = 0; j < x.cols(); ++j) {
        for (long i = 0; i < n; ++i) col[static_cast<size_t>(i)] = x(i, j);
        auto mid = col.begin() + n / 2;
        std::nth_element(col.begin(), mid, col.end());
        double hi = *mid;
        if (n % 2 == 0) {
            double lo = *std::max_element(col.begin(), mid);
            med(j) = 0.5 * (lo + hi);
        } else {
            med(j) = hi;
        }
    }
    return med;
}

}  // namespace

double median_objective(const Matrix& x, const Vector& m) {
    double f = 0.0;
    for (long i = 0; i < x.rows(); ++i) f += (x.row(i).transpose() - m).norm();
    return f;
}

Vector weiszfeld_step(const Matrix& x, const Vector& m, double guard) {
    const long n = x.rows();
    const long p = x.cols();
    Vector weighted_sum = Vector::Zero(p);  // sum of x_i / d_i over non-anchors
    Vector grad_sum = Vector::Zero(p);      // sum of (x_i - m) / d_i over non-anchors
    double wsum = 0.0;
    long anchors = 0;
    for (long i = 0; i < n; ++i) {
        Vector r = x.row(i).transpose() - m;
        const double d = r.norm();
        if (d <= guard) {
            ++anchors;
            continue;
        }
        const double w = 1.0 / d;
        weighted_sum += w * x.row(i).transpose();
        grad_sum += w * r;
        wsum += w;
    }
    if (anchors == n) return m;  // every observation coincides with m
    Vector t = weighted_sum / wsum;
    if (anchors == 0) return t;
    // Anchored update (Vardi-Zhang): when m sits on a data point, the point
    // is optimal iff ||grad_sum|| <= anchors; otherwise move a damped step.
    const double r = grad_sum.norm();
    if (r <= static_cast<double>(anchors)) return m;
    const double eta = static_cast<double>(anchors) / r;
    return (1.0 - eta) * t + eta * m;
}

GeometricMedianResult geometric_median(const Matrix& x, const MedianOptions& opts) {
    if (x.rows() < 2 || x.cols() < 1) {
        throw InvalidDimension("geometric_median requires n >= 2 and p >= 1");
    }
    GeometricMedianResult res;
    res.m = columnwise_median(x);
    res.data_scale = 0.0;
    for (long i = 0; i < x.rows(); ++i) {
        res.data_scale = std::max(res.data_scale, (x.row(i).transpose() - res.m).norm());
    }
    if (res.data_scale == 0.0) {
        // All rows identical: the common point is the median.
        res.converged = true;
        return res;
    }
    res.zero_guard = opts.zero_guard_rel * res.data_scale;
    for (res.iterations = 1; res.iterations <= opts.max_iter; ++res.iterations) {
        Vector next = weiszfeld_step(x, res.m, res.zero_guard);
        const double step = (next - res.m).norm() / res.data_scale;
        res.m = next;
        if (step < opts.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

SpatialFit fit_spatial(const SampleMatrix& sample, const DiagonalScale& scale,
                       const MedianOptions& opts) {
    const int n = sample.n();
    const int p = sample.p();
    if (scale.p() != p) throw InvalidDimension("scale dimension does not match sample");
    if ((scale.d.array() <= 0.0).any()) {
        throw InvalidDimension("scale entries must be strictly positive");
    }

    Matrix z = sample.values;
    z.array().rowwise() *= scale.inv_sqrt().transpose().array();

    GeometricMedianResult gm = geometric_median(z, opts);
    if (!gm.converged) {
        throw NotConverged("spatial median did not converge in " +
                               std::to_string(gm.iterations - 1) + " iterations",
                           gm.iterations - 1);
    }

    SpatialFit fit;
    fit.median_std = gm.m;
    fit.theta_hat = gm.m.cwiseProduct(scale.sqrt());
    fit.iterations = gm.iterations;
    fit.converged = true;
    fit.data_scale = gm.data_scale;
    fit.zero_guard = gm.zero_guard;

    fit.signs = Matrix::Zero(n, p);
    fit.resid_norms = Vector(n);
    double inv_norm_sum = 0.0;  // over non-flagged rows
    for (int i = 0; i < n; ++i) {
        Vector r = z.row(i).transpose() - gm.m;
        const double d = r.norm();
        fit.resid_norms(i) = d;
        if (d <= gm.zero_guard) {
            ++fit.zero_signs;
            continue;
        }
        fit.signs.row(i) = (r / d).transpose();
        inv_norm_sum += 1.0 / d;
    }
    if (fit.zero_signs > n / 10) {
        throw DegenerateFit("more than 10% of residuals are zero-flagged (" +
                            std::to_string(fit.zero_signs) + " of " + std::to_string(n) + ")");
    }

    fit.omega_hat.noalias() = fit.signs.transpose() * fit.signs / static_cast<double>(n);
    fit.omega_hat = 0.5 * (fit.omega_hat + fit.omega_hat.transpose()).eval();

    // g_hat = (n^{-1} sum 1/||Y_i||) I - n^{-1} sum ||Y_i||^{-1} S_i S_i^T
    Vector w(n);
    for (int i = 0; i < n; ++i) {
        const double d = fit.resid_norms(i);
        w(i) = (d <= gm.zero_guard) ? 0.0 : 1.0 / std::sqrt(d);
    }
    Matrix weighted = w.asDiagonal() * fit.signs;
    fit.g_hat.noalias() = weighted.transpose() * weighted / static_cast<double>(-n);
    fit.g_hat += (inv_norm_sum / n) * Matrix::Identity(p, p);
    fit.g_hat = 0.5 * (fit.g_hat + fit.g_hat.transpose()).eval();
    return fit;
}

}  // namespace pdqsign

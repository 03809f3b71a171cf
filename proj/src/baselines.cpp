#include "pdqsign/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pdqsign/stats_util.hpp"

namespace pdqsign {

namespace {

double column_median(std::vector<double>& col) {
    const long n = static_cast<long>(col.size());
    auto mid = col.begin() + n / 2;
    std::nth_element(col.begin(), mid, col.end());
    double hi = *mid;
    if (n % 2 == 0) {
        double lo = *std::max_element(col.begin(), mid);
        return 0.5 * (lo + hi);
    }
    return hi;
}

// Unit directions of rows standardized by d and centered at theta; rows with
// norm <= guard become zero.  Also reports the residual norms.
Matrix standardized_signs(const Matrix& x, const Vector& theta, const Vector& d, double guard,
                          Vector* norms) {
    Matrix z = x;
    z.rowwise() -= theta.transpose();
    z.array().rowwise() *= d.array().rsqrt().transpose();
    if (norms) norms->resize(z.rows());
    for (long i = 0; i < z.rows(); ++i) {
        const double r = z.row(i).norm();
        if (norms) (*norms)(i) = r;
        if (r <= guard) {
            z.row(i).setZero();
        } else {
            z.row(i) /= r;
        }
    }
    return z;
}

}  // namespace

SstFit sst_fit(const SampleMatrix& sample, const SstOptions& opts) {
    const int n = sample.n();
    const int p = sample.p();

    SstFit fit;
    fit.theta.resize(p);
    fit.d.resize(p);
    std::vector<double> col(static_cast<size_t>(n));
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < n; ++i) col[static_cast<size_t>(i)] = sample.values(i, j);
        fit.theta(j) = column_median(col);
        for (int i = 0; i < n; ++i) {
            col[static_cast<size_t>(i)] = std::abs(sample.values(i, j) - fit.theta(j));
        }
        const double mad = column_median(col);
        if (mad == 0.0) {
            throw DegenerateFit("zero median absolute deviation in coordinate " +
                                std::to_string(j));
        }
        fit.d(j) = mad * mad;
    }

    // Guard scale fixed from the initial standardized residuals.
    double scale0 = 0.0;
    {
        Matrix z = sample.values;
        z.rowwise() -= fit.theta.transpose();
        z.array().rowwise() *= fit.d.array().rsqrt().transpose();
        for (int i = 0; i < n; ++i) scale0 = std::max(scale0, z.row(i).norm());
    }
    if (scale0 == 0.0) throw DegenerateFit("all observations coincide");
    const double guard = opts.zero_guard_rel * scale0;

    for (fit.iterations = 1; fit.iterations <= opts.max_iter; ++fit.iterations) {
        Vector norms;
        Matrix u = standardized_signs(sample.values, fit.theta, fit.d, guard, &norms);
        double inv_sum = 0.0;
        long kept = 0;
        for (int i = 0; i < n; ++i) {
            if (norms(i) > guard) {
                inv_sum += 1.0 / norms(i);
                ++kept;
            }
        }
        if (kept < n - n / 10) {
            throw DegenerateFit("more than 10% of residuals are zero-flagged");
        }
        Vector usum = u.colwise().sum().transpose();
        Vector theta_next = fit.theta + fit.d.array().sqrt().matrix().cwiseProduct(usum) / inv_sum;
        Vector v = u.cwiseProduct(u).colwise().sum().transpose() / static_cast<double>(kept);
        Vector d_next = static_cast<double>(p) * fit.d.cwiseProduct(v);
        if ((d_next.array() <= 0.0).any()) {
            throw DegenerateFit("diagonal update produced a non-positive scale");
        }

        const double rel_theta = (theta_next - fit.theta).norm() / (1.0 + theta_next.norm());
        const double rel_d = ((d_next - fit.d).cwiseQuotient(fit.d)).cwiseAbs().maxCoeff();
        fit.theta = std::move(theta_next);
        fit.d = std::move(d_next);
        if (std::max(rel_theta, rel_d) < opts.tol) {
            fit.converged = true;
            break;
        }
    }
    if (!fit.converged) {
        throw NotConverged("joint median/scale fit did not converge", fit.iterations - 1);
    }
    return fit;
}

double sst_concentration(const SampleMatrix& sample, const SstFit& fit) {
    Matrix z = sample.values;
    z.rowwise() -= fit.theta.transpose();
    z.array().rowwise() *= fit.d.array().rsqrt().transpose();
    double acc = 0.0;
    long kept = 0;
    for (long i = 0; i < z.rows(); ++i) {
        const double r = z.row(i).norm();
        if (r > 0.0) {
            acc += 1.0 / r;
            ++kept;
        }
    }
    if (kept == 0) throw DegenerateFit("all residual norms are zero");
    return acc / static_cast<double>(kept);
}

double sst_statistic(const SampleMatrix& x1, const SampleMatrix& x2, const SstFit& fit1,
                     const SstFit& fit2) {
    const int p = x1.p();
    if (x2.p() != p) throw InvalidDimension("sst_statistic: dimension mismatch");
    const double n1 = x1.n(), n2 = x2.n();

    Matrix u1 = standardized_signs(x1.values, fit2.theta, fit1.d, 0.0, nullptr);
    Matrix u2 = standardized_signs(x2.values, fit1.theta, fit2.d, 0.0, nullptr);
    Vector sum1 = u1.colwise().sum().transpose();
    Vector sum2 = u2.colwise().sum().transpose();
    const double cross = -sum1.dot(sum2) / (n1 * n2);

    const double c1 = sst_concentration(x1, fit1);
    const double c2 = sst_concentration(x2, fit2);
    const double tr12 = (fit1.d.array() / fit2.d.array()).sqrt().sum();  // tr(D1^{1/2} D2^{-1/2})
    const double tr21 = (fit2.d.array() / fit1.d.array()).sqrt().sum();
    return cross - c2 / (c1 * n1 * p) * tr12 - c1 / (c2 * n2 * p) * tr21;
}

SstTestResult sst_test(const SampleMatrix& x1, const SampleMatrix& x2, const SstFit& fit1,
                       const SstFit& fit2, double level) {
    if (!(level > 0.0 && level <= 1.0)) throw InvalidDimension("level must be in (0,1]");
    const double n1 = x1.n(), n2 = x2.n();

    SstTestResult out;
    out.t = sst_statistic(x1, x2, fit1, fit2);

    // Own-sample fitted signs; Gram forms of the trace functionals.
    Matrix u1 = standardized_signs(x1.values, fit1.theta, fit1.d, 0.0, nullptr);
    Matrix u2 = standardized_signs(x2.values, fit2.theta, fit2.d, 0.0, nullptr);
    const double tr11 = (u1 * u1.transpose()).squaredNorm() / (n1 * n1);
    const double tr22 = (u2 * u2.transpose()).squaredNorm() / (n2 * n2);
    const double tr12 = (u1 * u2.transpose()).squaredNorm() / (n1 * n2);
    out.sigma_hat =
        std::sqrt(2.0 * tr11 / (n1 * n1) + 2.0 * tr22 / (n2 * n2) + 4.0 * tr12 / (n1 * n2));
    out.z = out.t / out.sigma_hat;
    // level = 1 is the degenerate always-reject edge (threshold -infinity),
    // matching the bootstrap calibration convention.
    out.reject = (level == 1.0) || out.z > normal_quantile(1.0 - level);
    return out;
}

}  // namespace pdqsign

#include "pdqsign/elliptical.hpp"

#include <omp.h>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <vector>

#include "pdqsign/rng.hpp"
#include "pdqsign/stats_util.hpp"

namespace pdqsign {

namespace {

void validate_radial(const RadialSpec& r) {
    switch (r.kind) {
        case RadialKind::Normal:
            return;
        case RadialKind::StudentT:
            if (!(r.nu > 2.0)) throw InvalidDimension("StudentT radial requires nu > 2");
            return;
        case RadialKind::MixtureNormal:
            if (!(r.gamma >= 0.0 && r.gamma <= 1.0))
                throw InvalidDimension("MixtureNormal radial requires gamma in [0,1]");
            if (!(r.s > 0.0)) throw InvalidDimension("MixtureNormal radial requires s > 0");
            return;
    }
    throw InvalidDimension("unknown radial kind");
}

// Symmetric square root of a validated correlation matrix.
Matrix symmetric_root(const Matrix& r) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(r);
    if (es.info() != Eigen::Success) {
        throw NotPositiveDefinite("eigendecomposition of shape matrix failed");
    }
    Vector lam = es.eigenvalues().cwiseMax(0.0);  // clamp eigen-roundoff
    return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Matrix make_shape(const ShapeSpec& spec, int p) {
    if (p < 2) throw InvalidDimension("make_shape requires p >= 2");
    switch (spec.kind) {
        case ShapeKind::AR1: {
            if (!(std::abs(spec.rho) < 1.0)) {
                throw InvalidRho("AR1 shape requires |rho| < 1");
            }
            // Power table keeps R(i,j) = R(j,i) exact to the bit.
            std::vector<double> pw(static_cast<size_t>(p));
            pw[0] = 1.0;
            for (int k = 1; k < p; ++k) pw[static_cast<size_t>(k)] = pw[static_cast<size_t>(k - 1)] * spec.rho;
            Matrix r(p, p);
            for (int i = 0; i < p; ++i)
                for (int j = 0; j < p; ++j) r(i, j) = pw[static_cast<size_t>(std::abs(i - j))];
            return r;
        }
        case ShapeKind::CS: {
            if (!(spec.rho >= 0.0 && spec.rho < 1.0)) {
                throw InvalidRho("CS shape requires 0 <= rho < 1");
            }
            Matrix r = Matrix::Constant(p, p, spec.rho);
            r.diagonal().setOnes();
            return r;
        }
        case ShapeKind::Explicit: {
            const Matrix& m = spec.matrix;
            if (m.rows() != p || m.cols() != p) {
                throw InvalidDimension("Explicit shape matrix has wrong dimensions");
            }
            for (int i = 0; i < p; ++i) {
                if (std::abs(m(i, i) - 1.0) > 1e-12) {
                    throw NotPositiveDefinite("Explicit shape matrix must have unit diagonal");
                }
                for (int j = 0; j < i; ++j) {
                    if (m(i, j) != m(j, i)) {
                        throw NotPositiveDefinite("Explicit shape matrix must be exactly symmetric");
                    }
                }
            }
            Eigen::LLT<Matrix> llt(m);
            if (llt.info() != Eigen::Success) {
                throw NotPositiveDefinite("Explicit shape matrix is not positive definite");
            }
            return m;
        }
    }
    throw InvalidDimension("unknown shape kind");
}

PopulationSampler::PopulationSampler(PopulationSpec spec) : spec_(std::move(spec)) {
    if (spec_.p < 2) throw InvalidDimension("PopulationSpec requires p >= 2");
    if (spec_.theta.size() != spec_.p || spec_.diag_scale.size() != spec_.p) {
        throw InvalidDimension("theta and diag_scale must have length p");
    }
    if ((spec_.diag_scale.array() <= 0.0).any()) {
        throw InvalidDimension("diag_scale entries must be strictly positive");
    }
    validate_radial(spec_.radial);
    if (spec_.shape.kind == ShapeKind::CS) {
        Matrix unused = make_shape(spec_.shape, spec_.p);  // parameter validation
        (void)unused;
        const double rho = spec_.shape.rho;
        const int p = spec_.p;
        cs_fast_ = true;
        cs_a_ = std::sqrt(1.0 - rho);
        cs_b_ = (std::sqrt(1.0 + (p - 1) * rho) - cs_a_) / p;
    } else {
        dense_root_ = symmetric_root(make_shape(spec_.shape, spec_.p));
    }
}

SampleMatrix PopulationSampler::sample(int n, std::mt19937_64& eng) const {
    if (n < 2) throw InvalidDimension("sample requires n >= 2");
    const int p = spec_.p;
    Matrix z(n, p);
    std::normal_distribution<double> n01;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) z(i, j) = n01(eng);

    switch (spec_.radial.kind) {
        case RadialKind::Normal:
            break;
        case RadialKind::StudentT: {
            std::chi_squared_distribution<double> chi(spec_.radial.nu);
            for (int i = 0; i < n; ++i) {
                z.row(i) *= 1.0 / std::sqrt(chi(eng) / spec_.radial.nu);
            }
            break;
        }
        case RadialKind::MixtureNormal: {
            std::bernoulli_distribution contaminate(1.0 - spec_.radial.gamma);
            for (int i = 0; i < n; ++i) {
                if (contaminate(eng)) z.row(i) *= spec_.radial.s;
            }
            break;
        }
    }

    Matrix y;
    if (cs_fast_) {
        y = cs_a_ * z + cs_b_ * (z.rowwise().sum()) * Eigen::RowVectorXd::Ones(p);
    } else {
        y.noalias() = z * dense_root_;  // root is symmetric, so right-multiply works rowwise
    }
    y.array().rowwise() *= spec_.diag_scale.array().sqrt().transpose();
    y.array().rowwise() += spec_.theta.array().transpose();
    return SampleMatrix::checked(std::move(y));
}

SampleMatrix sample_population(const PopulationSpec& spec, int n, std::mt19937_64& eng) {
    return PopulationSampler(spec).sample(n, eng);
}

namespace {

// One draw of the first coordinate of the elliptical core xi * u.
template <class Engine>
double core_coordinate(const RadialSpec& radial, std::normal_distribution<double>& n01,
                       Engine& eng) {
    double z = n01(eng);
    switch (radial.kind) {
        case RadialKind::Normal:
            return z;
        case RadialKind::StudentT: {
            std::chi_squared_distribution<double> chi(radial.nu);
            return z / std::sqrt(chi(eng) / radial.nu);
        }
        case RadialKind::MixtureNormal: {
            std::bernoulli_distribution contaminate(1.0 - radial.gamma);
            return contaminate(eng) ? radial.s * z : z;
        }
    }
    throw InvalidDimension("unknown radial kind");
}

}  // namespace

McQuantile population_pdq_quantile(const RadialSpec& radial, double alpha, int p, long mc,
                                   std::uint64_t key) {
    validate_radial(radial);
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidDimension("alpha must be in (0,1)");
    if (p < 2) throw InvalidDimension("population_pdq_quantile requires p >= 2");
    if (mc < 100) throw InvalidDimension("population_pdq_quantile requires mc >= 100");

    auto eng = make_engine(key, {stream::kQuantile});
    std::normal_distribution<double> n01;
    std::vector<double> diffs(static_cast<size_t>(mc));
    for (long i = 0; i < mc; ++i) {
        double a = core_coordinate(radial, n01, eng);
        double b = core_coordinate(radial, n01, eng);
        diffs[static_cast<size_t>(i)] = std::abs(a - b);
    }
    const long k = quantile_rank(alpha, mc);
    std::nth_element(diffs.begin(), diffs.begin() + (k - 1), diffs.end());
    const double q = diffs[static_cast<size_t>(k - 1)];

    // +-1 sigma distribution-free bracket around the order statistic.
    const long w = std::max<long>(1, std::lround(std::sqrt(alpha * (1.0 - alpha) * mc)));
    const long lo = std::max<long>(1, k - w), hi = std::min<long>(mc, k + w);
    std::nth_element(diffs.begin(), diffs.begin() + (lo - 1), diffs.end());
    const double qlo = diffs[static_cast<size_t>(lo - 1)];
    std::nth_element(diffs.begin() + lo, diffs.begin() + (hi - 1), diffs.end());
    const double qhi = diffs[static_cast<size_t>(hi - 1)];
    return McQuantile{q, 0.5 * (qhi - qlo), mc};
}

SignMoments population_sign_moments(const ShapeSpec& shape, int p, const RadialSpec& radial,
                                    double alpha, long mc, std::uint64_t key) {
    validate_radial(radial);
    if (p < 2) throw InvalidDimension("population_sign_moments requires p >= 2");
    if (mc < 100) throw InvalidDimension("population_sign_moments requires mc >= 100");

    const Matrix root = symmetric_root(make_shape(shape, p));
    const McQuantile q = population_pdq_quantile(radial, alpha, p, mc, key);

    // Fixed-size blocks with per-block substreams: the combined sums are
    // identical for any thread count.
    const long block = 4096;
    const long nblocks = (mc + block - 1) / block;
    std::vector<Matrix> omega_blk(static_cast<size_t>(nblocks));
    std::vector<Matrix> gpart_blk(static_cast<size_t>(nblocks));
    std::vector<double> csum_blk(static_cast<size_t>(nblocks), 0.0);

#pragma omp parallel for schedule(dynamic)
    for (long b = 0; b < nblocks; ++b) {
        const long lo = b * block;
        const long hi = std::min(mc, lo + block);
        const long m = hi - lo;
        auto eng = make_engine(key, {stream::kMoments, static_cast<std::uint64_t>(b)});
        std::normal_distribution<double> n01;
        std::chi_squared_distribution<double> chi(radial.kind == RadialKind::StudentT ? radial.nu
                                                                                      : 1.0);
        std::bernoulli_distribution contaminate(
            radial.kind == RadialKind::MixtureNormal ? 1.0 - radial.gamma : 0.5);

        Matrix signs(m, p);       // rows: S = R^{1/2} u / ||R^{1/2} u||
        Vector coeff(m);          // 1 / (xi * ||R^{1/2} u||)
        Vector z(p);
        double csum = 0.0;
        for (long i = 0; i < m; ++i) {
            for (int j = 0; j < p; ++j) z(j) = n01(eng);
            double radial_factor = 1.0;
            if (radial.kind == RadialKind::StudentT) {
                radial_factor = 1.0 / std::sqrt(chi(eng) / radial.nu);
            } else if (radial.kind == RadialKind::MixtureNormal && contaminate(eng)) {
                radial_factor = radial.s;
            }
            const double nz = z.norm();
            Vector w = root * (z / nz);
            const double nw = w.norm();
            signs.row(i) = (w / nw).transpose();
            const double xi = radial_factor * nz;
            const double c = 1.0 / (xi * nw);
            coeff(i) = c;
            csum += c;
        }
        omega_blk[static_cast<size_t>(b)].noalias() = signs.transpose() * signs;
        Matrix weighted = coeff.cwiseSqrt().asDiagonal() * signs;
        gpart_blk[static_cast<size_t>(b)].noalias() = weighted.transpose() * weighted;
        csum_blk[static_cast<size_t>(b)] = csum;
    }

    Matrix omega = Matrix::Zero(p, p);
    Matrix gpart = Matrix::Zero(p, p);
    double csum = 0.0;
    for (long b = 0; b < nblocks; ++b) {
        omega += omega_blk[static_cast<size_t>(b)];
        gpart += gpart_blk[static_cast<size_t>(b)];
        csum += csum_blk[static_cast<size_t>(b)];
    }
    omega /= static_cast<double>(mc);
    omega = 0.5 * (omega + omega.transpose()).eval();
    // G = q * E[(xi ||R^{1/2}u||)^{-1} (I - S S^T)]
    Matrix g = q.value * ((csum / mc) * Matrix::Identity(p, p) - gpart / static_cast<double>(mc));
    g = 0.5 * (g + g.transpose()).eval();
    return SignMoments{std::move(omega), std::move(g), q.value};
}

}  // namespace pdqsign

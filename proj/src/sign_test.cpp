#include "pdqsign/sign_test.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace pdqsign {

namespace {

struct SymInverse {
    Matrix inverse;
    double cond = 0.0;
};

// Inverse of a symmetric positive (semi-)definite matrix via its
// eigendecomposition, flooring eigenvalues at eps * lambda_max.
SymInverse symmetric_inverse(const Matrix& a, const char* what) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    if (es.info() != Eigen::Success) {
        throw SingularG(std::string("eigendecomposition failed for ") + what);
    }
    const Vector& lam = es.eigenvalues();
    const double lmax = lam.maxCoeff();
    if (!(lmax > 0.0)) {
        throw SingularG(std::string(what) + " has no positive eigenvalues");
    }
    const double floor = 1e-10 * lmax;
    Vector inv_lam(lam.size());
    double lmin = lmax;
    for (long i = 0; i < lam.size(); ++i) {
        const double l = std::max(lam(i), floor);
        inv_lam(i) = 1.0 / l;
        lmin = std::min(lmin, l);
    }
    SymInverse out;
    out.inverse = es.eigenvectors() * inv_lam.asDiagonal() * es.eigenvectors().transpose();
    out.cond = lmax / lmin;
    return out;
}

// Symmetric PSD square root; tolerates eigen-roundoff but rejects genuinely
// indefinite inputs.
Matrix psd_sqrt(const Matrix& a, const char* what) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    if (es.info() != Eigen::Success) {
        throw SingularOmega(std::string("eigendecomposition failed for ") + what);
    }
    const Vector& lam = es.eigenvalues();
    const double lmax = lam.maxCoeff();
    if (!(lmax > 0.0) || lam.minCoeff() < -1e-8 * lmax) {
        throw SingularOmega(std::string(what) + " is not positive semi-definite");
    }
    return es.eigenvectors() * lam.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
}

// Operator norm (largest absolute eigenvalue) of a symmetric matrix.
double sym_op_norm(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Rows of x standardized by inv_sqrt_d, centered at `center` (standardized
// coordinates), mapped to unit directions; rows with norm <= guard become 0.
Matrix cross_signs(const Matrix& x, const Vector& inv_sqrt_d, const Vector& center,
                   double guard) {
    Matrix z = x;
    z.array().rowwise() *= inv_sqrt_d.transpose().array();
    z.rowwise() -= center.transpose();
    for (long i = 0; i < z.rows(); ++i) {
        const double d = z.row(i).norm();
        if (d <= guard) {
            z.row(i).setZero();
        } else {
            z.row(i) /= d;
        }
    }
    return z;
}

}  // namespace

KMatrices compute_k_matrices(const DiagonalScale& d1, const DiagonalScale& d2, const Matrix& g1,
                             const Matrix& g2) {
    const int p = d1.p();
    if (d2.p() != p || g1.rows() != p || g1.cols() != p || g2.rows() != p || g2.cols() != p) {
        throw InvalidDimension("compute_k_matrices: dimension mismatch");
    }
    if ((d1.d.array() <= 0.0).any() || (d2.d.array() <= 0.0).any()) {
        throw InvalidDimension("compute_k_matrices: scales must be strictly positive");
    }
    Vector a12 = (d2.d.array() / d1.d.array()).sqrt();  // diag of D1^{-1/2} D2^{1/2}
    Vector a21 = (d1.d.array() / d2.d.array()).sqrt();  // diag of D2^{-1/2} D1^{1/2}

    SymInverse g1inv = symmetric_inverse(g1, "G1");
    SymInverse g2inv = symmetric_inverse(g2, "G2");

    KMatrices k;
    k.cond_g1 = g1inv.cond;
    k.cond_g2 = g2inv.cond;

    Matrix m1 = g2 * a21.asDiagonal() * g1inv.inverse;
    k.k1 = 0.5 * (m1 + m1.transpose());
    Matrix m2 = g2inv.inverse * a12.asDiagonal() * g1;
    k.k2 = 0.5 * (m2 + m2.transpose());
    Matrix c12 = m2 * m1;  // = G2^{-1} A12 G1 G2 A21 G1^{-1}
    k.k3 = Matrix::Identity(p, p) + c12.transpose();
    return k;
}

TestStatistic compute_statistic(const SampleMatrix& x1, const SampleMatrix& x2,
                                const DiagonalScale& d1, const DiagonalScale& d2,
                                const SpatialFit& fit1, const SpatialFit& fit2,
                                const KMatrices& k) {
    const int p = x1.p();
    if (x2.p() != p || d1.p() != p || d2.p() != p) {
        throw InvalidDimension("compute_statistic: dimension mismatch");
    }
    const double n1 = x1.n(), n2 = x2.n();

    // Cross-centered directions: each sample on its own scale, centered at
    // the other sample's median (mapped to this sample's standardized
    // coordinates).
    Vector inv1 = d1.inv_sqrt(), inv2 = d2.inv_sqrt();
    Vector c1 = fit2.theta_hat.cwiseProduct(inv1);
    Vector c2 = fit1.theta_hat.cwiseProduct(inv2);
    Matrix a1 = cross_signs(x1.values, inv1, c1, fit1.zero_guard);
    Matrix a2 = cross_signs(x2.values, inv2, c2, fit2.zero_guard);

    TestStatistic out;
    Vector sum1 = a1.colwise().sum().transpose();
    Vector sum2 = a2.colwise().sum().transpose();
    out.r_hat = -sum1.dot(sum2) / (n1 * n2);

    // b = sum_k n_k^{-2} sum_i S_ki^T K_k S_ki with the own-sample signs.
    const double q1 = (fit1.signs * k.k1).cwiseProduct(fit1.signs).sum();
    const double q2 = (fit2.signs * k.k2).cwiseProduct(fit2.signs).sum();
    out.b_hat = q1 / (n1 * n1) + q2 / (n2 * n2);
    out.t = out.r_hat - out.b_hat;
    return out;
}

OracleNull oracle_null(const Matrix& omega1, const Matrix& omega2, const KMatrices& k, int n1,
                       int n2) {
    const long p = omega1.rows();
    if (omega1.cols() != p || omega2.rows() != p || omega2.cols() != p || k.k1.rows() != p) {
        throw InvalidDimension("oracle_null: dimension mismatch");
    }
    if (n1 < 2 || n2 < 2) throw InvalidDimension("oracle_null requires n1, n2 >= 2");

    Matrix w1 = psd_sqrt(omega1, "omega1");
    Matrix w2 = psd_sqrt(omega2, "omega2");

    OracleNull out;
    out.b.resize(2 * p, 2 * p);
    const double cross = -0.5 / std::sqrt(static_cast<double>(n1) * n2);
    out.b.topLeftCorner(p, p) = w1 * k.k1 * w1 / n1;
    out.b.bottomRightCorner(p, p) = w2 * k.k2 * w2 / n2;
    Matrix b12 = cross * (w1 * k.k3 * w2);
    out.b.topRightCorner(p, p) = b12;
    out.b.bottomLeftCorner(p, p) = b12.transpose();
    out.b = 0.5 * (out.b + out.b.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Matrix> es(out.b, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw SingularOmega("eigendecomposition of the oracle block matrix failed");
    }
    out.eigenvalues = es.eigenvalues();
    const double sum_sq = out.eigenvalues.squaredNorm();
    out.tau = std::sqrt(2.0 * sum_sq);

    const double nn1 = n1, nn2 = n2;
    double rows = sym_op_norm(k.k1 * omega1 * k.k1.transpose()) / (nn1 * nn1 * nn1);
    rows = std::max(rows, sym_op_norm(k.k2 * omega2 * k.k2.transpose()) / (nn2 * nn2 * nn2));
    rows = std::max(rows, sym_op_norm(k.k3 * omega2 * k.k3.transpose()) / (nn1 * nn1 * nn2));
    rows = std::max(rows, sym_op_norm(k.k3.transpose() * omega1 * k.k3) / (nn1 * nn2 * nn2));
    out.delta_row = rows / (2.0 * sum_sq);
    return out;
}

Vector sample_gamma(const OracleNull& oracle, long draws, std::mt19937_64& eng) {
    if (draws < 1) throw InvalidDimension("sample_gamma requires draws >= 1");
    Vector out(draws);
    std::normal_distribution<double> n01;
    const Vector& lam = oracle.eigenvalues;
    for (long d = 0; d < draws; ++d) {
        double acc = 0.0;
        for (long r = 0; r < lam.size(); ++r) {
            const double z = n01(eng);
            acc += lam(r) * (z * z - 1.0);
        }
        out(d) = acc;
    }
    return out;
}

double oracle_u_statistic(const Matrix& s1, const Matrix& s2, const KMatrices& k) {
    const double n1 = static_cast<double>(s1.rows());
    const double n2 = static_cast<double>(s2.rows());
    Vector sum1 = s1.colwise().sum().transpose();
    Vector sum2 = s2.colwise().sum().transpose();
    const double full1 = sum1.dot(k.k1 * sum1);
    const double diag1 = (s1 * k.k1).cwiseProduct(s1).sum();
    const double full2 = sum2.dot(k.k2 * sum2);
    const double diag2 = (s2 * k.k2).cwiseProduct(s2).sum();
    const double cross = sum1.dot(k.k3 * sum2);
    return (full1 - diag1) / (n1 * n1) + (full2 - diag2) / (n2 * n2) - cross / (n1 * n2);
}

}  // namespace pdqsign

#pragma once

#include "pdqsign/types.hpp"

namespace pdqsign {

// Joint spatial-median / diagonal-scale fit: alternates, from the current
// standardized residuals eps_i = D^{-1/2}(x_i - theta),
//   theta <- theta + D^{1/2} (sum_i U(eps_i)) / (sum_i ||eps_i||^{-1})
//   d_j   <- p * d_j * mean_i U(eps_i)_j^2
// (both updates from the same residuals) until the relative change of
// (theta, d) drops below tol.  Initialization: coordinatewise medians for
// theta and squared median absolute deviations for d.
struct SstOptions {
    double tol = 1e-7;
    int max_iter = 500;
    double zero_guard_rel = 1e-12;  // residual-norm guard, relative to initial scale
};

struct SstFit {
    Vector theta;  // length p
    Vector d;      // length p, strictly positive
    int iterations = 0;
    bool converged = false;
};

SstFit sst_fit(const SampleMatrix& sample, const SstOptions& opts = {});

// Inverse-norm concentration constant c = n^{-1} sum_i ||D^{-1/2}(x_i - theta)||^{-1}
// under a given fit.
double sst_concentration(const SampleMatrix& sample, const SstFit& fit);

// Cross-sign baseline statistic
//   T = -(n1 n2)^{-1} sum_ij U(D1^{-1/2}(x1i - theta2))^T U(D2^{-1/2}(x2j - theta1))
//       - c2/(c1 n1 p) tr(D1^{1/2} D2^{-1/2}) - c1/(c2 n2 p) tr(D2^{1/2} D1^{-1/2}).
double sst_statistic(const SampleMatrix& x1, const SampleMatrix& x2, const SstFit& fit1,
                     const SstFit& fit2);

// One-sided normal-reference test of the baseline statistic.  The variance
// plug-in uses the own-sample fitted sign covariances Omega_k:
//   sigma^2 = 2 tr(Omega1^2)/n1^2 + 2 tr(Omega2^2)/n2^2 + 4 tr(Omega1 Omega2)/(n1 n2)
// and the test rejects when T / sigma exceeds the 1-level normal quantile
// (level = 1 is the degenerate always-reject edge).
struct SstTestResult {
    double t = 0.0;
    double sigma_hat = 0.0;
    double z = 0.0;
    bool reject = false;
};

SstTestResult sst_test(const SampleMatrix& x1, const SampleMatrix& x2, const SstFit& fit1,
                       const SstFit& fit2, double level);

}  // namespace pdqsign

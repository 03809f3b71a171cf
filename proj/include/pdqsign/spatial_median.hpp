#pragma once

#include "pdqsign/types.hpp"

namespace pdqsign {

struct MedianOptions {
    double tol = 1e-8;           // relative step tolerance (step / data scale)
    int max_iter = 500;
    double zero_guard_rel = 1e-12;  // residual-norm guard, relative to data scale
};

struct GeometricMedianResult {
    Vector m;            // length p
    int iterations = 0;
    bool converged = false;
    double data_scale = 0.0;  // max_i ||x_i - m_0||, fixes the scale of tol and guard
    double zero_guard = 0.0;  // absolute guard = zero_guard_rel * data_scale
};

// One damped Weiszfeld update from `m`: observations within `guard` of `m`
// are treated as anchors (their gradient contribution is the subdifferential
// term), all others contribute the usual inverse-distance weights.  Returns
// `m` unchanged when the subgradient optimality condition already holds.
// Exposed separately so the objective-descent property can be tested
// directly.
Vector weiszfeld_step(const Matrix& x, const Vector& m, double guard);

// Sum of Euclidean distances objective.
double median_objective(const Matrix& x, const Vector& m);

// Geometric median of the rows of x, initialized at the coordinatewise
// median.  Convergence is declared when the relative step falls below
// opts.tol or the subgradient condition at an anchor point holds.
GeometricMedianResult geometric_median(const Matrix& x, const MedianOptions& opts = {});

// Standardized spatial fit of one sample: the geometric median of
// D^{-1/2}-standardized rows, fitted spatial signs, and the plug-in moment
// matrices
//   omega_hat = n^{-1} sum_i S_i S_i^T
//   g_hat     = n^{-1} sum_i ||Y_i||^{-1} (I - S_i S_i^T)
// where Y_i is the standardized residual and S_i its direction.  Residuals
// with norm below the zero guard contribute a zero sign row and are skipped
// in g_hat; their count is reported.  Throws NotConverged if the median
// iteration fails and DegenerateFit if more than 10% of residuals are
// zero-flagged.
struct SpatialFit {
    Vector theta_hat;     // median on the original coordinate scale
    Vector median_std;    // median of the standardized rows
    Matrix signs;         // n x p, zero rows where the residual was flagged
    Vector resid_norms;   // length n, standardized residual norms
    Matrix omega_hat;     // p x p
    Matrix g_hat;         // p x p
    int iterations = 0;
    bool converged = false;
    int zero_signs = 0;
    double data_scale = 0.0;
    double zero_guard = 0.0;  // absolute, on the standardized scale
};

SpatialFit fit_spatial(const SampleMatrix& sample, const DiagonalScale& scale,
                       const MedianOptions& opts = {});

}  // namespace pdqsign

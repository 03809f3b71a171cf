#pragma once

#include <cstdint>

#include "pdqsign/sign_test.hpp"
#include "pdqsign/types.hpp"

namespace pdqsign {

// Multiplier-bootstrap calibration of the two-sample sign statistic.  Each
// draw flips the fitted signs with independent Rademacher multipliers
// e_{ki} in {-1, +1} and evaluates
//   Q* = s1*^T K1 s1* + s2*^T K2 s2* - s1*^T K3 s2*,  sk* = n_k^{-1} sum_i e_ki S_ki
//   T* = Q* - b
// so that the multiplier mean of Q* is exactly b and the multiplier variance
// of T* is 2 tr(H0^2) for the off-diagonal block kernel H0.

// T* for explicitly supplied multiplier vectors (used by exhaustive
// enumeration tests).
double bootstrap_statistic(const Matrix& s1, const Matrix& s2, const KMatrices& k, double b_hat,
                           const Vector& e1, const Vector& e2);

// T* for draw index `b`: multipliers come from a dedicated splitmix64
// substream keyed by (key, bootstrap purpose, b), sample 1 first then sample
// 2, one top bit per multiplier.  Draws are therefore independent of how
// calibration work is scheduled over threads.
double bootstrap_draw(const Matrix& s1, const Matrix& s2, const KMatrices& k, double b_hat,
                      std::uint64_t key, int b);

// Multiplier standard deviation of T*:
//   tau*^2 = 2 n1^{-4} sum_{i != l} (S1i^T K1 S1l)^2
//          + 2 n2^{-4} sum_{j != l} (S2j^T K2 S2l)^2
//          + (n1 n2)^{-2} sum_{i,j} (S1i^T K3 S2j)^2
double tau_star(const Matrix& s1, const Matrix& s2, const KMatrices& k);

struct BootstrapResult {
    Vector draws;                // the B bootstrap statistics, draw order
    double critical_value = 0.0; // k-th order statistic, k = rank(1-level, B+1)
    double p_value = 0.0;        // (1 + #{T*_b >= T}) / (B+1)
    double tau_star_hat = 0.0;
    bool reject = false;         // T > critical_value
    int b = 0;
    double level = 0.0;
};

// Runs B bootstrap draws and calibrates the observed statistic t at the
// given level.  level = 1 is the documented degenerate edge: the critical
// value is -infinity and every finite statistic rejects.  The parallel
// version distributes draws over OpenMP threads; per-draw streams make the
// result bit-identical to the serial reference.
BootstrapResult calibrate(double t, const Matrix& s1, const Matrix& s2, const KMatrices& k,
                          double b_hat, int b, double level, std::uint64_t key);
BootstrapResult calibrate_serial(double t, const Matrix& s1, const Matrix& s2, const KMatrices& k,
                                 double b_hat, int b, double level, std::uint64_t key);

}  // namespace pdqsign

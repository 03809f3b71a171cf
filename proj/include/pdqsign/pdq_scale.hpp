#pragma once

#include <span>

#include "pdqsign/types.hpp"

namespace pdqsign {

// Empirical pairwise-difference quantile of one coordinate: the k-th smallest
// of the n(n-1)/2 absolute differences |v_i - v_j| (i < j), where k is the
// smallest integer with k >= alpha * n(n-1)/2 (exact rank arithmetic, see
// quantile_rank).  Equivalently inf{t >= 0 : Fhat(t) >= alpha} for the
// empirical CDF Fhat of the absolute differences.  Throws DegenerateScale if
// the quantile is exactly zero.
double pairwise_quantile(std::span<const double> v, double alpha);

// Coordinatewise squared pairwise-difference quantiles: d_j = q_j^2 with
// q_j = pairwise_quantile(column j, alpha).  Columns are independent, so the
// parallel version distributes them over OpenMP threads; per-column
// arithmetic is identical to the serial reference and results match bit for
// bit.
DiagonalScale estimate_diag(const SampleMatrix& sample, double alpha);
DiagonalScale estimate_diag_serial(const SampleMatrix& sample, double alpha);

}  // namespace pdqsign

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

#include "pdqsign/errors.hpp"

namespace pdqsign {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// One sample: n observations (rows) of dimension p (columns).
struct SampleMatrix {
    Matrix values;  // n x p

    int n() const { return static_cast<int>(values.rows()); }
    int p() const { return static_cast<int>(values.cols()); }

    // Validates the minimum-size and finiteness requirements shared by every
    // consumer of a sample.
    static SampleMatrix checked(Matrix m) {
        if (m.rows() < 2 || m.cols() < 2) {
            throw InvalidDimension("SampleMatrix requires n >= 2 and p >= 2, got " +
                                   std::to_string(m.rows()) + " x " + std::to_string(m.cols()));
        }
        if (!m.allFinite()) {
            throw InvalidDimension("SampleMatrix contains non-finite entries");
        }
        return SampleMatrix{std::move(m)};
    }
};

// Strictly positive per-coordinate squared scales (the diagonal of D-hat).
struct DiagonalScale {
    Vector d;  // length p, all entries > 0

    int p() const { return static_cast<int>(d.size()); }

    Vector sqrt() const { return d.array().sqrt(); }
    Vector inv_sqrt() const { return d.array().rsqrt(); }
};

}  // namespace pdqsign

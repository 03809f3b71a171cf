#pragma once

#include <stdexcept>
#include <string>

namespace pdqsign {

// Base class for all failures raised by this library.  Hard precondition
// violations and numerical degeneracies throw; ordinary statistical
// outcomes (non-convergence of an iterative fit, zero-norm observations
// that are skipped) are reported through result structs instead.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shape parameter outside its admissible range.
struct InvalidRho : Error {
    using Error::Error;
};

// An explicitly supplied shape matrix failed the correlation-matrix checks.
struct NotPositiveDefinite : Error {
    using Error::Error;
};

// Inputs whose dimensions are inconsistent or below the supported minimum.
struct InvalidDimension : Error {
    using Error::Error;
};

// A pairwise-difference quantile came out exactly zero, so the implied
// scale is unusable.  `coordinate` is the offending column (or -1 when the
// failure is not tied to a specific column).
struct DegenerateScale : Error {
    DegenerateScale(const std::string& what, int coordinate_)
        : Error(what), coordinate(coordinate_) {}
    int coordinate = -1;
};

// An iterative fit stopped at max_iter without meeting its tolerance.
struct NotConverged : Error {
    NotConverged(const std::string& what, int iterations_)
        : Error(what), iterations(iterations_) {}
    int iterations = 0;
};

// A fit produced too many zero residuals (or an otherwise unusable state)
// for the downstream moment estimates to make sense.
struct DegenerateFit : Error {
    using Error::Error;
};

// The fitted curvature matrix G is numerically singular.
struct SingularG : Error {
    using Error::Error;
};

// A sign covariance matrix is not positive semi-definite within tolerance.
struct SingularOmega : Error {
    using Error::Error;
};

// Malformed experiment configuration or unusable input file.
struct ConfigError : Error {
    using Error::Error;
};

// A simulation study exceeded the tolerated per-replication failure rate.
struct StudyError : Error {
    using Error::Error;
};

}  // namespace pdqsign

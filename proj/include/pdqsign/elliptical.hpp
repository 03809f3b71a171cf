#pragma once

#include <cstdint>
#include <random>

#include "pdqsign/types.hpp"

namespace pdqsign {

// Shape (correlation-structure) families for the elliptical population.
enum class ShapeKind { AR1, CS, Explicit };

struct ShapeSpec {
    ShapeKind kind = ShapeKind::AR1;
    double rho = 0.0;  // AR1: |rho| < 1;  CS: 0 <= rho < 1
    Matrix matrix;     // Explicit only: p x p correlation matrix

    static ShapeSpec ar1(double rho) { return ShapeSpec{ShapeKind::AR1, rho, {}}; }
    static ShapeSpec cs(double rho) { return ShapeSpec{ShapeKind::CS, rho, {}}; }
    static ShapeSpec explicit_matrix(Matrix m) {
        return ShapeSpec{ShapeKind::Explicit, 0.0, std::move(m)};
    }
};

// Law of the unnormalized radial factor xi (so that xi * u is the elliptical
// core; xi is not scaled to make coordinates unit-variance).
enum class RadialKind { Normal, StudentT, MixtureNormal };

struct RadialSpec {
    RadialKind kind = RadialKind::Normal;
    double nu = 0.0;     // StudentT: degrees of freedom, > 2
    double gamma = 1.0;  // MixtureNormal: weight of the unit-scale component
    double s = 1.0;      // MixtureNormal: scale of the contaminating component

    static RadialSpec normal() { return RadialSpec{RadialKind::Normal, 0.0, 1.0, 1.0}; }
    static RadialSpec student_t(double nu) { return RadialSpec{RadialKind::StudentT, nu, 1.0, 1.0}; }
    static RadialSpec mixture_normal(double gamma, double s) {
        return RadialSpec{RadialKind::MixtureNormal, 0.0, gamma, s};
    }
};

// Full population: X = theta + (D0)^{1/2} R^{1/2} xi u with u uniform on the
// unit sphere, xi ~ radial law independent of u, R = make_shape(shape, p),
// and D0 = diag(diag_scale).
struct PopulationSpec {
    int p = 0;
    Vector theta;       // length p
    Vector diag_scale;  // length p, strictly positive
    ShapeSpec shape;
    RadialSpec radial;
};

// Builds and validates the p x p correlation matrix R.  Output is exactly
// symmetric with unit diagonal; Explicit inputs must already satisfy that and
// be positive definite (Cholesky check).
Matrix make_shape(const ShapeSpec& spec, int p);

// Samples n observations.  Draw order per call: the n x p standard-normal
// block row by row, then one radial adjustment per observation in row order
// (chi-square for StudentT, component indicator for MixtureNormal).  The
// symmetric square root of R is cached at construction, so per-cell samplers
// should be built once and reused across replications.
class PopulationSampler {
  public:
    explicit PopulationSampler(PopulationSpec spec);

    SampleMatrix sample(int n, std::mt19937_64& eng) const;

    const PopulationSpec& spec() const { return spec_; }

  private:
    PopulationSpec spec_;
    bool cs_fast_ = false;  // CS roots apply in O(np) as a*Z + b*(Z*1)*1^T
    double cs_a_ = 0.0, cs_b_ = 0.0;
    Matrix dense_root_;  // symmetric square root for AR1 / Explicit
};

// One-shot convenience wrapper around PopulationSampler.
SampleMatrix sample_population(const PopulationSpec& spec, int n, std::mt19937_64& eng);

// Monte Carlo estimate of a population quantile with a distribution-free
// standard error (half-width of the +-1 sigma order-statistic bracket).
struct McQuantile {
    double value = 0.0;
    double se = 0.0;
    long mc = 0;
};

// Population pairwise-difference quantile q_alpha of |xi_1 U_{1,1} - xi_2 U_{2,1}|
// over independent pairs, where U_{.,1} is the first coordinate of a uniform
// unit vector.  By the norm/direction factorization of the construction,
// xi * U_1 has exactly the law of the first coordinate of the elliptical core
// (Normal -> N(0,1), StudentT -> t_nu, MixtureNormal -> scale mixture), so the
// draws are univariate and the result does not depend on p.
McQuantile population_pdq_quantile(const RadialSpec& radial, double alpha, int p, long mc,
                                   std::uint64_t key);

// Population sign moments under shape R (unit diagonal scales):
//   omega = E[S S^T],            S = R^{1/2} u / (u^T R u)^{1/2}
//   g     = E[ ||Y||^{-1} (I - S S^T) ],   Y = q_alpha^{-1} xi R^{1/2} u
// with q_alpha the population pairwise-difference quantile above.  Both are
// plain Monte Carlo averages over mc draws, accumulated in fixed-size blocks
// with per-block substreams so the result is independent of the OpenMP
// thread count.
struct SignMoments {
    Matrix omega;
    Matrix g;
    double q_alpha = 0.0;
};

SignMoments population_sign_moments(const ShapeSpec& shape, int p, const RadialSpec& radial,
                                    double alpha, long mc, std::uint64_t key);

}  // namespace pdqsign

// Micro-benchmark comparing the OpenMP kernels against their serial
// reference implementations (which must agree bit for bit; see the unit
// tests).  Reported times are the best of `kRounds` runs.

#include <omp.h>

#include <cstdio>
#include <string>

#include "pdqsign/elliptical.hpp"
#include "pdqsign/harness.hpp"
#include "pdqsign/pdq_scale.hpp"
#include "pdqsign/rng.hpp"
#include "pdqsign/wild_bootstrap.hpp"

namespace {

constexpr int kRounds = 5;

template <class F>
double best_of(F&& body) {
    double best = 1e300;
    for (int r = 0; r < kRounds; ++r) {
        const double t0 = omp_get_wtime();
        body();
        best = std::min(best, omp_get_wtime() - t0);
    }
    return best;
}

void report(const std::string& name, double serial, double parallel) {
    std::printf("%-28s serial %8.4f s   openmp %8.4f s   speedup %5.2fx\n", name.c_str(), serial,
                parallel, serial / parallel);
}

}  // namespace

int main() {
    using namespace pdqsign;
    std::printf("threads available: %d\n\n", omp_get_max_threads());

    // Data for the kernel benchmarks.
    PopulationSpec pop;
    pop.p = 200;
    pop.theta = Vector::Zero(pop.p);
    pop.diag_scale = Vector::Ones(pop.p);
    pop.shape = ShapeSpec::ar1(0.5);
    pop.radial = RadialSpec::normal();
    PopulationSampler sampler(pop);
    auto eng = make_engine(1234, {stream::kSample1});
    SampleMatrix x1 = sampler.sample(400, eng);
    SampleMatrix x2 = sampler.sample(400, eng);

    double sink = 0.0;

    {
        double serial = best_of([&] { sink += estimate_diag_serial(x1, 0.5).d.sum(); });
        double parallel = best_of([&] { sink += estimate_diag(x1, 0.5).d.sum(); });
        report("estimate_diag n=400 p=200", serial, parallel);
    }

    {
        DiagonalScale d1 = estimate_diag(x1, 0.5);
        DiagonalScale d2 = estimate_diag(x2, 0.5);
        SpatialFit f1 = fit_spatial(x1, d1);
        SpatialFit f2 = fit_spatial(x2, d2);
        KMatrices k = compute_k_matrices(d1, d2, f1.g_hat, f2.g_hat);
        TestStatistic stat = compute_statistic(x1, x2, d1, d2, f1, f2, k);
        double serial = best_of([&] {
            sink += calibrate_serial(stat.t, f1.signs, f2.signs, k, stat.b_hat, 2000, 0.05, 99)
                        .critical_value;
        });
        double parallel = best_of([&] {
            sink +=
                calibrate(stat.t, f1.signs, f2.signs, k, stat.b_hat, 2000, 0.05, 99).critical_value;
        });
        report("calibrate B=2000", serial, parallel);
    }

    {
        ExperimentConfig cfg;
        cfg.mode = StudyMode::Size;
        cfg.n1 = {50};
        cfg.n2 = {50};
        cfg.p = {100};
        cfg.model = "normal";
        cfg.shape = "ar1";
        cfg.rho = 0.5;
        cfg.reps = 40;
        cfg.seed = 7;
        cfg.methods = {Method::Pdq};
        double serial = best_of([&] { sink += run_size_study(cfg, 1).cells[0].by_method[0].rate; });
        double parallel = best_of(
            [&] { sink += run_size_study(cfg, omp_get_max_threads()).cells[0].by_method[0].rate; });
        report("size study 40 reps", serial, parallel);
    }

    std::printf("(checksum %g)\n", sink);
    return 0;
}

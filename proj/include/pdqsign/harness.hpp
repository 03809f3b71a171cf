#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdqsign/elliptical.hpp"
#include "pdqsign/sign_test.hpp"
#include "pdqsign/wild_bootstrap.hpp"

namespace pdqsign {

enum class Method { Pdq, Sst };
enum class StudyMode { Size, Power };

std::string method_name(Method m);

// Experiment configuration, loadable from `key = value` text (one pair per
// line, '#' comments).  n1/n2 are paired lists of equal length; p is a list
// crossed with the (n1, n2) pairs; in power mode all three must be single
// values and delta_grid supplies the alternatives theta2 = delta * 1/sqrt(p)
// (the "dense" signal, the only one supported).  model `t3` is StudentT with
// nu = 3 and `mixnormal` is the 0.8 N(0,I) + 0.2 N(0,9I) scale mixture.
struct ExperimentConfig {
    StudyMode mode = StudyMode::Size;
    std::vector<int> n1, n2;
    std::vector<int> p;
    std::string model = "normal";  // normal | t3 | mixnormal
    std::string shape = "ar1";     // ar1 | cs
    double rho = 0.0;
    double alpha = 0.5;
    int B = 200;
    double level = 0.05;
    long reps = 0;
    std::uint64_t seed = 0;
    std::vector<Method> methods = {Method::Pdq};
    std::vector<double> delta_grid;
    std::string signal = "dense";

    RadialSpec radial() const;
    ShapeSpec shape_spec() const;
};

ExperimentConfig parse_config(const std::string& text, const std::string& origin);
ExperimentConfig load_config(const std::string& path);

// Rejection-rate summary for one (grid cell, method).
struct MethodCell {
    double rate = 0.0;
    double se = 0.0;       // sqrt(rate (1-rate) / used)
    long used = 0;         // replications that completed
    long failures = 0;     // replications lost to numerical errors
};

struct CellResult {
    int n1 = 0, n2 = 0, p = 0;
    double delta = 0.0;                  // 0 in size mode
    std::vector<MethodCell> by_method;   // aligned with config.methods
};

struct StudyReport {
    StudyMode mode = StudyMode::Size;
    std::vector<Method> methods;
    std::vector<CellResult> cells;
    std::vector<double> are;  // size mode: sum over cells of |100 rate - 100 level|, per method
    double level = 0.0;
    long reps = 0;
    double wall_seconds = 0.0;  // excluded from the CSV so output is byte-stable
};

// Monte Carlo studies.  Replication r of cell c (delta index t in power
// mode) always consumes the streams derived from (seed, c, t, r) regardless
// of `workers`, so reports are byte-identical for any worker count.  A cell
// whose failure count exceeds 1% of reps for some method raises StudyError.
StudyReport run_size_study(const ExperimentConfig& config, int workers);
StudyReport run_power_study(const ExperimentConfig& config, int workers);

// Stable-column CSV rendering of a report and its inverse (round-trip).
//   n1,n2,p,delta,method,rate,se,reps_used,failures   (+ trailing `are` rows
// in size mode with only method and rate populated).
std::string report_csv(const StudyReport& report);
StudyReport parse_report_csv(const std::string& text);

// Full two-sample test on data: PDQ scales, spatial fits, K matrices,
// statistic, wild-bootstrap calibration.
struct TestOutcome {
    int n1 = 0, n2 = 0, p = 0;
    double alpha = 0.5;
    double level = 0.05;
    std::uint64_t seed = 0;
    TestStatistic statistic;
    BootstrapResult bootstrap;
    // diagnostics
    double cond_g1 = 0.0, cond_g2 = 0.0;
    int zero_signs_1 = 0, zero_signs_2 = 0;
    int median_iterations_1 = 0, median_iterations_2 = 0;
};

TestOutcome run_pdq_test(const SampleMatrix& x1, const SampleMatrix& x2, double alpha, int B,
                         double level, std::uint64_t key);

// File-level entry point used by the CLI `test` subcommand; writes the JSON
// outcome to out_path when non-empty.
TestOutcome run_test(const std::string& x1_path, const std::string& x2_path, double alpha, int B,
                     double level, std::uint64_t seed, const std::string& out_path);

// JSON renderings (field names match the struct members).
std::string to_json(const TestStatistic& s);
std::string to_json(const BootstrapResult& r);
std::string to_json(const OracleNull& o);
std::string to_json(const TestOutcome& o);
std::string to_json(const StudyReport& r);

}  // namespace pdqsign

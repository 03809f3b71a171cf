#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "pdqsign/csv.hpp"
#include "pdqsign/harness.hpp"
#include "pdqsign/pdq_scale.hpp"
#include "pdqsign/rng.hpp"
#include "pdqsign/sign_test.hpp"
#include "pdqsign/spatial_median.hpp"
#include "pdqsign/wild_bootstrap.hpp"

using namespace pdqsign;

namespace {

// Runs the parser on `text` and returns the ConfigError message ("" if none).
std::string config_error(const std::string& text) {
    try {
        parse_config(text, "cfg");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

bool mentions(const std::string& message, const std::string& needle) {
    return message.find(needle) != std::string::npos;
}

// Single-cell study shared by several cases; small enough to rerun freely.
constexpr const char* kCellConfig =
    "mode = size\n"
    "n1 = 20\n"
    "n2 = 25\n"
    "p = 4\n"
    "reps = 40\n"
    "shape = ar1\n"
    "rho = 0.3\n"
    "B = 39\n"
    "seed = 11\n"
    "methods = pdq\n";

// Two (n1, n2) pairs crossed with two dimensions, both methods.
constexpr const char* kGridConfig =
    "mode = size\n"
    "n1 = 20, 15\n"
    "n2 = 25, 15\n"
    "p = 4, 6\n"
    "reps = 40\n"
    "shape = ar1\n"
    "rho = 0.3\n"
    "B = 39\n"
    "seed = 11\n"
    "methods = pdq, sst\n";

const StudyReport& cell_report() {
    static StudyReport r = run_size_study(parse_config(kCellConfig, "cfg"), 1);
    return r;
}

const StudyReport& grid_report() {
    static StudyReport r = run_size_study(parse_config(kGridConfig, "cfg"), 1);
    return r;
}

SampleMatrix elliptical_sample(int n, int p, std::uint64_t seed, std::uint64_t purpose) {
    PopulationSpec pop;
    pop.p = p;
    pop.theta = Vector::Zero(p);
    pop.diag_scale = Vector::Ones(p);
    pop.shape = ShapeSpec::ar1(0.3);
    pop.radial = RadialSpec::normal();
    auto eng = make_engine(seed, {purpose});
    return sample_population(pop, n, eng);
}

}  // namespace

TEST_CASE("config text parses with comments, blank lines, and inline whitespace") {
    const std::string text =
        "# heading comment\n"
        "mode = power\n"
        "\n"
        "  n1 =  30 \n"
        "\tn2= 40\n"
        "p = 8\n"
        "model = t3\n"
        "shape = cs\n"
        "rho = 0.4\n"
        "alpha = 0.25\n"
        "B = 99\n"
        "level = 0.1\n"
        "reps = 7\n"
        "seed = 99   # master seed\n"
        "methods = sst, pdq\n"
        "delta_grid = 0, 0.5, 1.5\n"
        "signal = dense\n";
    ExperimentConfig cfg = parse_config(text, "cfg");
    CHECK(cfg.mode == StudyMode::Power);
    REQUIRE(cfg.n1.size() == 1);
    CHECK(cfg.n1[0] == 30);
    CHECK(cfg.n2[0] == 40);
    CHECK(cfg.p[0] == 8);
    CHECK(cfg.model == "t3");
    CHECK(cfg.shape == "cs");
    CHECK(cfg.rho == 0.4);
    CHECK(cfg.alpha == 0.25);
    CHECK(cfg.B == 99);
    CHECK(cfg.level == 0.1);
    CHECK(cfg.reps == 7);
    CHECK(cfg.seed == 99);
    REQUIRE(cfg.methods.size() == 2);
    CHECK(cfg.methods[0] == Method::Sst);
    CHECK(cfg.methods[1] == Method::Pdq);
    REQUIRE(cfg.delta_grid.size() == 3);
    CHECK(cfg.delta_grid[1] == 0.5);
    CHECK(cfg.signal == "dense");
}

TEST_CASE("omitted config keys keep their documented defaults") {
    ExperimentConfig cfg = parse_config("mode=size\nn1=20\nn2=25\np=4\nreps=5\n", "cfg");
    CHECK(cfg.mode == StudyMode::Size);
    CHECK(cfg.model == "normal");
    CHECK(cfg.shape == "ar1");
    CHECK(cfg.rho == 0.0);
    CHECK(cfg.alpha == 0.5);
    CHECK(cfg.B == 200);
    CHECK(cfg.level == 0.05);
    CHECK(cfg.seed == 0);
    REQUIRE(cfg.methods.size() == 1);
    CHECK(cfg.methods[0] == Method::Pdq);
    CHECK(cfg.delta_grid.empty());
    CHECK(cfg.signal == "dense");
    // level = 1 is the inclusive upper endpoint.
    CHECK(parse_config(std::string(kCellConfig) + "level = 1\n", "cfg").level == 1.0);
}

TEST_CASE("model and shape names map to the documented population families") {
    ExperimentConfig cfg = parse_config(kCellConfig, "cfg");
    CHECK(cfg.radial().kind == RadialKind::Normal);
    CHECK(cfg.shape_spec().kind == ShapeKind::AR1);
    CHECK(cfg.shape_spec().rho == 0.3);

    cfg.model = "t3";
    CHECK(cfg.radial().kind == RadialKind::StudentT);
    CHECK(cfg.radial().nu == 3.0);

    cfg.model = "mixnormal";
    CHECK(cfg.radial().kind == RadialKind::MixtureNormal);
    CHECK(cfg.radial().gamma == 0.8);
    CHECK(cfg.radial().s == 3.0);

    cfg.shape = "cs";
    CHECK(cfg.shape_spec().kind == ShapeKind::CS);

    cfg.model = "cauchy";
    CHECK_THROWS_AS(cfg.radial(), ConfigError);
    cfg.model = "normal";
    cfg.shape = "toeplitz";
    CHECK_THROWS_AS(cfg.shape_spec(), ConfigError);
}

TEST_CASE("config parser rejects malformed lines with file:line context") {
    CHECK(mentions(config_error("mode size\n"), "cfg:1"));
    CHECK(mentions(config_error("mode size\n"), "expected 'key = value'"));
    CHECK(mentions(config_error("mode =\n"), "cfg:1: empty value for 'mode'"));
    CHECK(mentions(config_error("mode = size # trailing comment only\nwhat = 1\n"),
                   "cfg:2: unknown key 'what'"));
    CHECK(mentions(config_error("n1 = twenty\n"), "expected integer, got 'twenty'"));
    CHECK(mentions(config_error("rho = abc\n"), "expected number, got 'abc'"));
    CHECK(mentions(config_error("n1 = ,\n"), "empty list"));
    CHECK(mentions(config_error("mode = size\nn1 = 20\n"),
                   "cfg: required keys: mode, n1, n2, p, reps"));
}

TEST_CASE("config validation rejects out-of-range and inconsistent settings") {
    auto bad = [](const std::string& overrides) {
        // Later assignments win, so appending a line overrides the base key.
        return config_error(std::string(kCellConfig) + overrides);
    };
    CHECK(mentions(config_error(std::string(kCellConfig) + "n1 = 20, 30\n"),
                   "n1 and n2 must list the same number of values"));
    CHECK(mentions(bad("n2 = 1\n"), "sample sizes must be >= 2"));
    CHECK(mentions(bad("p = 1\n"), "p must be >= 2"));
    CHECK(mentions(bad("model = cauchy\n"), "unknown model 'cauchy'"));
    CHECK(mentions(bad("shape = toeplitz\n"), "unknown shape 'toeplitz'"));
    CHECK(mentions(bad("rho = 1\n"), "ar1 requires |rho| < 1"));
    CHECK(mentions(bad("shape = cs\nrho = -0.2\n"), "cs requires 0 <= rho < 1"));
    CHECK(mentions(bad("alpha = 0\n"), "alpha must be in (0,1)"));
    CHECK(mentions(bad("alpha = 1\n"), "alpha must be in (0,1)"));
    CHECK(mentions(bad("B = 18\n"), "B must be >= 19"));
    CHECK(mentions(bad("level = 0\n"), "level must be in (0,1]"));
    CHECK(mentions(bad("level = 1.0001\n"), "level must be in (0,1]"));
    CHECK(mentions(bad("reps = 0\n"), "reps must be >= 1"));
    CHECK(mentions(bad("methods = pdq, pdq\n"), "duplicate method"));
    CHECK(mentions(bad("methods = hotelling\n"), "unknown method 'hotelling'"));
    CHECK(mentions(bad("signal = sparse\n"), "signal must be 'dense'"));
    CHECK(mentions(bad("delta_grid = 0, 1\n"), "delta_grid is only valid in power mode"));
    CHECK(mentions(bad("mode = power\n"), "power mode requires delta_grid"));
    CHECK(mentions(bad("mode = power\ndelta_grid = 0, -1\n"),
                   "delta_grid entries must be >= 0"));
    CHECK(mentions(bad("mode = power\ndelta_grid = 1\nn1 = 20, 30\nn2 = 25, 35\n"),
                   "power mode requires a single (n1, n2, p) cell"));
    CHECK(mentions(config_error("mode = heavy\n"), "mode must be size|power"));
}

TEST_CASE("load_config reads a file and reports open failures") {
    const std::string path = "test_harness_cfg.txt";
    {
        std::ofstream f(path, std::ios::binary);
        f << kGridConfig;
    }
    ExperimentConfig from_file = load_config(path);
    ExperimentConfig from_text = parse_config(kGridConfig, path);
    CHECK(from_file.n1 == from_text.n1);
    CHECK(from_file.n2 == from_text.n2);
    CHECK(from_file.p == from_text.p);
    CHECK(from_file.seed == from_text.seed);
    CHECK(from_file.methods == from_text.methods);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_config("no_such_config_file.txt"), ConfigError);
}

TEST_CASE("single-test pipeline is wired to the library stages and keyed deterministically") {
    SampleMatrix x1 = elliptical_sample(24, 5, 777, stream::kSample1);
    SampleMatrix x2 = elliptical_sample(30, 5, 777, stream::kSample2);

    TestOutcome out = run_pdq_test(x1, x2, 0.5, 99, 0.05, 123);
    CHECK(out.n1 == 24);
    CHECK(out.n2 == 30);
    CHECK(out.p == 5);
    CHECK(out.alpha == 0.5);
    CHECK(out.level == 0.05);
    CHECK(out.seed == 123);

    // Manual chain through the public stages with the same key.
    DiagonalScale d1 = estimate_diag(x1, 0.5);
    DiagonalScale d2 = estimate_diag(x2, 0.5);
    SpatialFit f1 = fit_spatial(x1, d1);
    SpatialFit f2 = fit_spatial(x2, d2);
    KMatrices k = compute_k_matrices(d1, d2, f1.g_hat, f2.g_hat);
    TestStatistic st = compute_statistic(x1, x2, d1, d2, f1, f2, k);
    BootstrapResult br = calibrate(st.t, f1.signs, f2.signs, k, st.b_hat, 99, 0.05, 123);

    CHECK(out.statistic.r_hat == st.r_hat);
    CHECK(out.statistic.b_hat == st.b_hat);
    CHECK(out.statistic.t == st.t);
    CHECK((out.bootstrap.draws == br.draws));
    CHECK(out.bootstrap.critical_value == br.critical_value);
    CHECK(out.bootstrap.p_value == br.p_value);
    CHECK(out.bootstrap.tau_star_hat == br.tau_star_hat);
    CHECK(out.bootstrap.reject == br.reject);
    CHECK(out.cond_g1 == k.cond_g1);
    CHECK(out.cond_g2 == k.cond_g2);
    CHECK(out.zero_signs_1 == f1.zero_signs);
    CHECK(out.zero_signs_2 == f2.zero_signs);
    CHECK(out.median_iterations_1 == f1.iterations);
    CHECK(out.median_iterations_2 == f2.iterations);

    // Same key twice: identical output; different key: different bootstrap draws.
    TestOutcome again = run_pdq_test(x1, x2, 0.5, 99, 0.05, 123);
    CHECK(again.statistic.t == out.statistic.t);
    CHECK((again.bootstrap.draws == out.bootstrap.draws));
    TestOutcome other = run_pdq_test(x1, x2, 0.5, 99, 0.05, 124);
    CHECK(other.statistic.t == out.statistic.t);  // data path has no randomness
    CHECK(!(other.bootstrap.draws == out.bootstrap.draws));

    SampleMatrix narrow = elliptical_sample(30, 4, 778, stream::kSample2);
    CHECK_THROWS_AS(run_pdq_test(x1, narrow, 0.5, 99, 0.05, 1), InvalidDimension);
}

TEST_CASE("size study crosses the grid and is byte-identical for any worker count") {
    ExperimentConfig cfg = parse_config(kGridConfig, "cfg");
    const StudyReport& serial = grid_report();
    StudyReport parallel = run_size_study(cfg, 4);
    CHECK(report_csv(serial) == report_csv(parallel));

    REQUIRE(serial.cells.size() == 4);  // 2 (n1, n2) pairs x 2 dimensions
    CHECK(serial.mode == StudyMode::Size);
    CHECK(serial.level == 0.05);
    CHECK(serial.reps == 40);
    const int want_n1[] = {20, 20, 15, 15};
    const int want_p[] = {4, 6, 4, 6};
    for (size_t c = 0; c < 4; ++c) {
        const CellResult& cell = serial.cells[c];
        CHECK(cell.n1 == want_n1[c]);
        CHECK(cell.p == want_p[c]);
        CHECK(cell.delta == 0.0);
        REQUIRE(cell.by_method.size() == 2);
        for (const MethodCell& mc : cell.by_method) {
            CHECK(mc.used + mc.failures == 40);
            CHECK(mc.rate >= 0.0);
            CHECK(mc.rate <= 1.0);
            CHECK(mc.se == std::sqrt(mc.rate * (1.0 - mc.rate) / static_cast<double>(mc.used)));
        }
    }
    REQUIRE(serial.are.size() == 2);
    for (size_t m = 0; m < 2; ++m) {
        double sum = 0.0;
        for (const CellResult& cell : serial.cells) {
            sum += std::abs(100.0 * cell.by_method[m].rate - 100.0 * cfg.level);
        }
        CHECK(serial.are[m] == sum);
    }

    CHECK_THROWS_AS(run_power_study(cfg, 1), ConfigError);
}

TEST_CASE("per-method rejection rates do not depend on which other methods run") {
    ExperimentConfig both = parse_config(std::string(kCellConfig) + "methods = pdq, sst\n", "cfg");
    ExperimentConfig swapped =
        parse_config(std::string(kCellConfig) + "methods = sst, pdq\n", "cfg");
    StudyReport r_both = run_size_study(both, 1);
    StudyReport r_swapped = run_size_study(swapped, 1);
    const StudyReport& r_pdq = cell_report();

    // pdq alone, pdq in slot 0, pdq in slot 1: identical replication streams.
    CHECK(r_pdq.cells[0].by_method[0].rate == r_both.cells[0].by_method[0].rate);
    CHECK(r_pdq.cells[0].by_method[0].rate == r_swapped.cells[0].by_method[1].rate);
    CHECK(r_both.cells[0].by_method[1].rate == r_swapped.cells[0].by_method[0].rate);
    CHECK(r_both.cells[0].by_method[0].used == 40);
}

TEST_CASE("power study reuses the size-study streams at delta zero and gains power") {
    ExperimentConfig cfg = parse_config(
        "mode = power\n"
        "n1 = 20\n"
        "n2 = 25\n"
        "p = 4\n"
        "reps = 40\n"
        "shape = ar1\n"
        "rho = 0.3\n"
        "B = 39\n"
        "seed = 11\n"
        "methods = pdq\n"
        "delta_grid = 0, 3\n",
        "cfg");
    StudyReport rp = run_power_study(cfg, 1);
    CHECK(rp.mode == StudyMode::Power);
    REQUIRE(rp.cells.size() == 2);
    CHECK(rp.cells[0].delta == 0.0);
    CHECK(rp.cells[1].delta == 3.0);
    CHECK(rp.are.empty());

    // delta = 0 replays exactly the size-study cell with the same seed.
    CHECK(rp.cells[0].by_method[0].rate == cell_report().cells[0].by_method[0].rate);
    // A 3/sqrt(p) per-coordinate shift at n ~ 20 is essentially always detected.
    CHECK(rp.cells[1].by_method[0].rate > 0.9);
    CHECK(rp.cells[1].by_method[0].rate > rp.cells[0].by_method[0].rate);

    CHECK_THROWS_AS(run_size_study(cfg, 1), ConfigError);
}

TEST_CASE("study reports round-trip through the CSV rendering byte for byte") {
    const StudyReport& real = grid_report();
    const std::string text = report_csv(real);
    StudyReport back = parse_report_csv(text);
    CHECK(report_csv(back) == text);
    CHECK(back.mode == StudyMode::Size);
    REQUIRE(back.methods.size() == 2);
    CHECK(method_name(back.methods[0]) == "pdq");
    CHECK(method_name(back.methods[1]) == "sst");
    CHECK(back.reps == real.reps);
    REQUIRE(back.cells.size() == real.cells.size());
    for (size_t c = 0; c < real.cells.size(); ++c) {
        CHECK(back.cells[c].n1 == real.cells[c].n1);
        CHECK(back.cells[c].n2 == real.cells[c].n2);
        CHECK(back.cells[c].p == real.cells[c].p);
        CHECK(back.cells[c].delta == real.cells[c].delta);
        for (size_t m = 0; m < 2; ++m) {
            CHECK(back.cells[c].by_method[m].rate == real.cells[c].by_method[m].rate);
            CHECK(back.cells[c].by_method[m].se == real.cells[c].by_method[m].se);
            CHECK(back.cells[c].by_method[m].used == real.cells[c].by_method[m].used);
            CHECK(back.cells[c].by_method[m].failures == real.cells[c].by_method[m].failures);
        }
    }
    REQUIRE(back.are.size() == 2);
    CHECK(back.are[0] == real.are[0]);
    CHECK(back.are[1] == real.are[1]);
}

TEST_CASE("CSV rendering round-trips awkward doubles and power mode") {
    StudyReport r;
    r.mode = StudyMode::Power;
    r.methods = {Method::Pdq, Method::Sst};
    r.level = 0.05;
    r.reps = 12346;
    CellResult a;
    a.n1 = 100;
    a.n2 = 150;
    a.p = 200;
    a.delta = 0.1;
    a.by_method = {MethodCell{1.0 / 3.0, std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / 12345.0), 12345, 1},
                   MethodCell{0.0, 0.0, 12346, 0}};
    CellResult b = a;
    b.delta = 2.5;
    b.by_method[0].rate = 0.9999999999999999;
    r.cells = {a, b};

    const std::string text = report_csv(r);
    StudyReport back = parse_report_csv(text);
    CHECK(report_csv(back) == text);
    CHECK(back.mode == StudyMode::Power);
    CHECK(back.reps == 12346);
    CHECK(back.cells[0].by_method[0].rate == 1.0 / 3.0);
    CHECK(back.cells[1].by_method[0].rate == 0.9999999999999999);
    CHECK(back.cells[1].delta == 2.5);
    CHECK(back.are.empty());

    r.mode = StudyMode::Size;
    r.are = {1.25, 0.0625};
    const std::string size_text = report_csv(r);
    StudyReport size_back = parse_report_csv(size_text);
    CHECK(report_csv(size_back) == size_text);
    CHECK(size_back.mode == StudyMode::Size);
    CHECK(size_back.are == r.are);

    CHECK_THROWS_AS(parse_report_csv(""), ConfigError);
    CHECK_THROWS_AS(parse_report_csv("nope\n"), ConfigError);
    CHECK_THROWS_AS(
        parse_report_csv("n1,n2,p,delta,method,rate,se,reps_used,failures\n"
                         "20,25,4,0,hotelling,0.1,0.01,40,0\n"),
        ConfigError);
}

TEST_CASE("file-level test entry point validates inputs and writes the JSON outcome") {
    SampleMatrix x1 = elliptical_sample(26, 4, 909, stream::kSample1);
    SampleMatrix x2 = elliptical_sample(22, 4, 909, stream::kSample2);
    const std::string p1 = "test_harness_x1.csv";
    const std::string p2 = "test_harness_x2.csv";
    const std::string out_path = "test_harness_outcome.json";
    write_sample_csv(p1, x1);
    write_sample_csv(p2, x2);

    TestOutcome out = run_test(p1, p2, 0.5, 99, 0.05, 42, out_path);
    CHECK(out.seed == 42);
    CHECK(out.n1 == 26);
    CHECK(out.n2 == 22);
    CHECK(out.p == 4);

    // The file path derives the bootstrap key from the user seed and replays
    // the in-memory pipeline exactly (CSV writing is round-trip safe).
    TestOutcome direct = run_pdq_test(x1, x2, 0.5, 99, 0.05, stream_key(42, {}));
    CHECK(out.statistic.t == direct.statistic.t);
    CHECK(out.bootstrap.p_value == direct.bootstrap.p_value);
    CHECK((out.bootstrap.draws == direct.bootstrap.draws));

    std::ifstream jf(out_path, std::ios::binary);
    REQUIRE(static_cast<bool>(jf));
    nlohmann::json j = nlohmann::json::parse(jf);
    CHECK(j["n1"].get<int>() == 26);
    CHECK(j["n2"].get<int>() == 22);
    CHECK(j["p"].get<int>() == 4);
    CHECK(j["seed"].get<std::uint64_t>() == 42);
    CHECK(j["statistic"]["t"].get<double>() == out.statistic.t);
    CHECK(j["bootstrap"]["p_value"].get<double>() == out.bootstrap.p_value);
    CHECK(j["bootstrap"]["reject"].get<bool>() == out.bootstrap.reject);
    CHECK(j["bootstrap"]["draws"].size() == 99);
    CHECK(j["bootstrap"]["draws"][0].get<double>() == out.bootstrap.draws(0));
    CHECK(j["diagnostics"]["cond_g1"].get<double>() == out.cond_g1);
    CHECK(j["diagnostics"]["median_iterations_1"].get<int>() == out.median_iterations_1);

    // Validation without touching the pipeline.
    CHECK_THROWS_AS(run_test(p1, p2, 0.0, 99, 0.05, 1, ""), ConfigError);
    CHECK_THROWS_AS(run_test(p1, p2, 0.5, 18, 0.05, 1, ""), ConfigError);
    CHECK_THROWS_AS(run_test(p1, p2, 0.5, 99, 0.0, 1, ""), ConfigError);
    CHECK_THROWS_AS(run_test("missing_sample.csv", p2, 0.5, 99, 0.05, 1, ""), ConfigError);
    SampleMatrix narrow = elliptical_sample(22, 3, 910, stream::kSample2);
    write_sample_csv(p2, narrow);
    CHECK_THROWS_AS(run_test(p1, p2, 0.5, 99, 0.05, 1, ""), ConfigError);

    std::remove(p1.c_str());
    std::remove(p2.c_str());
    std::remove(out_path.c_str());
}

#include "pdqsign/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pdqsign/baselines.hpp"
#include "pdqsign/csv.hpp"
#include "pdqsign/pdq_scale.hpp"
#include "pdqsign/rng.hpp"

namespace pdqsign {

std::string method_name(Method m) {
    return m == Method::Pdq ? "pdq" : "sst";
}

RadialSpec ExperimentConfig::radial() const {
    if (model == "normal") return RadialSpec::normal();
    if (model == "t3") return RadialSpec::student_t(3.0);
    if (model == "mixnormal") return RadialSpec::mixture_normal(0.8, 3.0);
    throw ConfigError("unknown model '" + model + "' (expected normal|t3|mixnormal)");
}

ShapeSpec ExperimentConfig::shape_spec() const {
    if (shape == "ar1") return ShapeSpec::ar1(rho);
    if (shape == "cs") return ShapeSpec::cs(rho);
    throw ConfigError("unknown shape '" + shape + "' (expected ar1|cs)");
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string field;
    while (std::getline(in, field, ',')) {
        field = trim(field);
        if (!field.empty()) out.push_back(field);
    }
    return out;
}

long parse_long(const std::string& s, const std::string& key) {
    try {
        size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected integer, got '" + s + "'");
    }
}

double parse_double(const std::string& s, const std::string& key) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected number, got '" + s + "'");
    }
}

std::vector<int> parse_int_list(const std::string& s, const std::string& key) {
    std::vector<int> out;
    for (const auto& f : split_list(s)) out.push_back(static_cast<int>(parse_long(f, key)));
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    bool saw_mode = false, saw_n1 = false, saw_n2 = false, saw_p = false, saw_reps = false;

    std::istringstream lines(text);
    std::string line;
    long lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (value.empty()) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty value for '" +
                              key + "'");
        }

        if (key == "mode") {
            if (value == "size") cfg.mode = StudyMode::Size;
            else if (value == "power") cfg.mode = StudyMode::Power;
            else throw ConfigError("mode must be size|power, got '" + value + "'");
            saw_mode = true;
        } else if (key == "n1") {
            cfg.n1 = parse_int_list(value, key);
            saw_n1 = true;
        } else if (key == "n2") {
            cfg.n2 = parse_int_list(value, key);
            saw_n2 = true;
        } else if (key == "p") {
            cfg.p = parse_int_list(value, key);
            saw_p = true;
        } else if (key == "model") {
            cfg.model = value;
        } else if (key == "shape") {
            cfg.shape = value;
        } else if (key == "rho") {
            cfg.rho = parse_double(value, key);
        } else if (key == "alpha") {
            cfg.alpha = parse_double(value, key);
        } else if (key == "B") {
            cfg.B = static_cast<int>(parse_long(value, key));
        } else if (key == "level") {
            cfg.level = parse_double(value, key);
        } else if (key == "reps") {
            cfg.reps = parse_long(value, key);
            saw_reps = true;
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_long(value, key));
        } else if (key == "methods") {
            cfg.methods.clear();
            for (const auto& f : split_list(value)) {
                if (f == "pdq") cfg.methods.push_back(Method::Pdq);
                else if (f == "sst") cfg.methods.push_back(Method::Sst);
                else throw ConfigError("unknown method '" + f + "' (expected pdq|sst)");
            }
        } else if (key == "delta_grid") {
            cfg.delta_grid.clear();
            for (const auto& f : split_list(value)) cfg.delta_grid.push_back(parse_double(f, key));
        } else if (key == "signal") {
            cfg.signal = value;
        } else {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key +
                              "'");
        }
    }

    if (!saw_mode || !saw_n1 || !saw_n2 || !saw_p || !saw_reps) {
        throw ConfigError(origin + ": required keys: mode, n1, n2, p, reps");
    }
    if (cfg.n1.size() != cfg.n2.size()) {
        throw ConfigError("n1 and n2 must list the same number of values");
    }
    for (size_t i = 0; i < cfg.n1.size(); ++i) {
        if (cfg.n1[i] < 2 || cfg.n2[i] < 2) throw ConfigError("sample sizes must be >= 2");
    }
    for (int pp : cfg.p) {
        if (pp < 2) throw ConfigError("p must be >= 2");
    }
    cfg.radial();      // validates model name
    cfg.shape_spec();  // validates shape name
    if (cfg.shape == "ar1" && !(std::abs(cfg.rho) < 1.0)) throw ConfigError("ar1 requires |rho| < 1");
    if (cfg.shape == "cs" && !(cfg.rho >= 0.0 && cfg.rho < 1.0)) {
        throw ConfigError("cs requires 0 <= rho < 1");
    }
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha must be in (0,1)");
    if (cfg.B < 19) throw ConfigError("B must be >= 19");
    if (!(cfg.level > 0.0 && cfg.level <= 1.0)) throw ConfigError("level must be in (0,1]");
    if (cfg.reps < 1) throw ConfigError("reps must be >= 1");
    if (cfg.methods.empty()) throw ConfigError("methods must not be empty");
    for (size_t i = 0; i < cfg.methods.size(); ++i) {
        for (size_t j = i + 1; j < cfg.methods.size(); ++j) {
            if (cfg.methods[i] == cfg.methods[j]) throw ConfigError("duplicate method in list");
        }
    }
    if (cfg.signal != "dense") throw ConfigError("signal must be 'dense'");
    if (cfg.mode == StudyMode::Power) {
        if (cfg.n1.size() != 1 || cfg.p.size() != 1) {
            throw ConfigError("power mode requires a single (n1, n2, p) cell");
        }
        if (cfg.delta_grid.empty()) throw ConfigError("power mode requires delta_grid");
        for (double d : cfg.delta_grid) {
            if (!(d >= 0.0)) throw ConfigError("delta_grid entries must be >= 0");
        }
    } else if (!cfg.delta_grid.empty()) {
        throw ConfigError("delta_grid is only valid in power mode");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

TestOutcome run_pdq_test(const SampleMatrix& x1, const SampleMatrix& x2, double alpha, int B,
                         double level, std::uint64_t key) {
    if (x1.p() != x2.p()) throw InvalidDimension("samples have different dimensions");

    DiagonalScale d1 = estimate_diag(x1, alpha);
    DiagonalScale d2 = estimate_diag(x2, alpha);
    SpatialFit fit1 = fit_spatial(x1, d1);
    SpatialFit fit2 = fit_spatial(x2, d2);
    KMatrices k = compute_k_matrices(d1, d2, fit1.g_hat, fit2.g_hat);
    TestStatistic stat = compute_statistic(x1, x2, d1, d2, fit1, fit2, k);
    BootstrapResult boot = calibrate(stat.t, fit1.signs, fit2.signs, k, stat.b_hat, B, level, key);

    TestOutcome out;
    out.n1 = x1.n();
    out.n2 = x2.n();
    out.p = x1.p();
    out.alpha = alpha;
    out.level = level;
    out.seed = key;
    out.statistic = stat;
    out.bootstrap = std::move(boot);
    out.cond_g1 = k.cond_g1;
    out.cond_g2 = k.cond_g2;
    out.zero_signs_1 = fit1.zero_signs;
    out.zero_signs_2 = fit2.zero_signs;
    out.median_iterations_1 = fit1.iterations;
    out.median_iterations_2 = fit2.iterations;
    return out;
}

TestOutcome run_test(const std::string& x1_path, const std::string& x2_path, double alpha, int B,
                     double level, std::uint64_t seed, const std::string& out_path) {
    SampleMatrix x1 = read_sample_csv(x1_path);
    SampleMatrix x2 = read_sample_csv(x2_path);
    if (x1.p() != x2.p()) {
        throw ConfigError("input samples have different dimensions: " + std::to_string(x1.p()) +
                          " vs " + std::to_string(x2.p()));
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0,1)");
    if (B < 19) throw ConfigError("B must be >= 19");
    if (!(level > 0.0 && level <= 1.0)) throw ConfigError("level must be in (0,1]");

    TestOutcome out = run_pdq_test(x1, x2, alpha, B, level, stream_key(seed, {}));
    out.seed = seed;
    if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw ConfigError("cannot write output file: " + out_path);
        f << to_json(out) << '\n';
    }
    return out;
}

namespace {

// Per-replication work shared by both study modes.  flags: 0 = completed,
// accept; 1 = completed, reject; 2 = failed.
void run_cell(const ExperimentConfig& cfg, int n1, int n2, int p, double delta,
              std::uint64_t cell_idx, std::uint64_t delta_idx, int workers,
              std::vector<std::vector<signed char>>& flags) {
    PopulationSpec pop1;
    pop1.p = p;
    pop1.theta = Vector::Zero(p);
    pop1.diag_scale = Vector::Ones(p);
    pop1.shape = cfg.shape_spec();
    pop1.radial = cfg.radial();
    PopulationSpec pop2 = pop1;
    pop2.theta = Vector::Constant(p, delta / std::sqrt(static_cast<double>(p)));

    const PopulationSampler sampler1(pop1);
    const PopulationSampler sampler2(pop2);

    const long reps = cfg.reps;
    for (auto& f : flags) f.assign(static_cast<size_t>(reps), 2);
    const bool want_pdq =
        std::find(cfg.methods.begin(), cfg.methods.end(), Method::Pdq) != cfg.methods.end();
    const bool want_sst =
        std::find(cfg.methods.begin(), cfg.methods.end(), Method::Sst) != cfg.methods.end();
    const size_t pdq_slot =
        static_cast<size_t>(std::find(cfg.methods.begin(), cfg.methods.end(), Method::Pdq) -
                            cfg.methods.begin());
    const size_t sst_slot =
        static_cast<size_t>(std::find(cfg.methods.begin(), cfg.methods.end(), Method::Sst) -
                            cfg.methods.begin());

#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
    for (long r = 0; r < reps; ++r) {
        const std::uint64_t rep_key =
            stream_key(cfg.seed, {cell_idx, delta_idx, static_cast<std::uint64_t>(r)});
        SampleMatrix x1{Matrix()}, x2{Matrix()};
        try {
            auto eng1 = make_engine(rep_key, {stream::kSample1});
            auto eng2 = make_engine(rep_key, {stream::kSample2});
            x1 = sampler1.sample(n1, eng1);
            x2 = sampler2.sample(n2, eng2);
        } catch (const Error&) {
            continue;  // all methods fail for this replication
        }
        if (want_pdq) {
            try {
                TestOutcome o = run_pdq_test(x1, x2, cfg.alpha, cfg.B, cfg.level, rep_key);
                flags[pdq_slot][static_cast<size_t>(r)] = o.bootstrap.reject ? 1 : 0;
            } catch (const Error&) {
            }
        }
        if (want_sst) {
            try {
                SstFit f1 = sst_fit(x1);
                SstFit f2 = sst_fit(x2);
                SstTestResult res = sst_test(x1, x2, f1, f2, cfg.level);
                flags[sst_slot][static_cast<size_t>(r)] = res.reject ? 1 : 0;
            } catch (const Error&) {
            }
        }
    }
}

CellResult summarize_cell(const ExperimentConfig& cfg, int n1, int n2, int p, double delta,
                          const std::vector<std::vector<signed char>>& flags) {
    CellResult cell;
    cell.n1 = n1;
    cell.n2 = n2;
    cell.p = p;
    cell.delta = delta;
    for (size_t m = 0; m < cfg.methods.size(); ++m) {
        MethodCell mc;
        long rejects = 0;
        for (signed char f : flags[m]) {
            if (f == 2) {
                ++mc.failures;
            } else {
                ++mc.used;
                rejects += f;
            }
        }
        if (mc.failures * 100 > cfg.reps) {
            throw StudyError("method " + method_name(cfg.methods[m]) + " failed " +
                             std::to_string(mc.failures) + " of " + std::to_string(cfg.reps) +
                             " replications (limit 1%)");
        }
        mc.rate = mc.used > 0 ? static_cast<double>(rejects) / static_cast<double>(mc.used) : 0.0;
        mc.se = mc.used > 0 ? std::sqrt(mc.rate * (1.0 - mc.rate) / static_cast<double>(mc.used))
                            : 0.0;
        cell.by_method.push_back(mc);
    }
    return cell;
}

}  // namespace

StudyReport run_size_study(const ExperimentConfig& cfg, int workers) {
    if (cfg.mode != StudyMode::Size) throw ConfigError("run_size_study requires mode = size");
    const double t0 = omp_get_wtime();

    StudyReport report;
    report.mode = StudyMode::Size;
    report.methods = cfg.methods;
    report.level = cfg.level;
    report.reps = cfg.reps;

    std::uint64_t cell_idx = 0;
    for (size_t s = 0; s < cfg.n1.size(); ++s) {
        for (int p : cfg.p) {
            std::vector<std::vector<signed char>> flags(cfg.methods.size());
            run_cell(cfg, cfg.n1[s], cfg.n2[s], p, 0.0, cell_idx, 0, workers, flags);
            report.cells.push_back(summarize_cell(cfg, cfg.n1[s], cfg.n2[s], p, 0.0, flags));
            ++cell_idx;
        }
    }
    report.are.assign(cfg.methods.size(), 0.0);
    for (const CellResult& cell : report.cells) {
        for (size_t m = 0; m < cfg.methods.size(); ++m) {
            report.are[m] += std::abs(100.0 * cell.by_method[m].rate - 100.0 * cfg.level);
        }
    }
    report.wall_seconds = omp_get_wtime() - t0;
    return report;
}

StudyReport run_power_study(const ExperimentConfig& cfg, int workers) {
    if (cfg.mode != StudyMode::Power) throw ConfigError("run_power_study requires mode = power");
    const double t0 = omp_get_wtime();

    StudyReport report;
    report.mode = StudyMode::Power;
    report.methods = cfg.methods;
    report.level = cfg.level;
    report.reps = cfg.reps;

    for (size_t t = 0; t < cfg.delta_grid.size(); ++t) {
        std::vector<std::vector<signed char>> flags(cfg.methods.size());
        run_cell(cfg, cfg.n1[0], cfg.n2[0], cfg.p[0], cfg.delta_grid[t], 0,
                 static_cast<std::uint64_t>(t), workers, flags);
        report.cells.push_back(
            summarize_cell(cfg, cfg.n1[0], cfg.n2[0], cfg.p[0], cfg.delta_grid[t], flags));
    }
    report.wall_seconds = omp_get_wtime() - t0;
    return report;
}

std::string report_csv(const StudyReport& report) {
    std::ostringstream out;
    out << "n1,n2,p,delta,method,rate,se,reps_used,failures\n";
    for (const CellResult& cell : report.cells) {
        for (size_t m = 0; m < report.methods.size(); ++m) {
            const MethodCell& mc = cell.by_method[m];
            out << cell.n1 << ',' << cell.n2 << ',' << cell.p << ',' << format_double(cell.delta)
                << ',' << method_name(report.methods[m]) << ',' << format_double(mc.rate) << ','
                << format_double(mc.se) << ',' << mc.used << ',' << mc.failures << '\n';
        }
    }
    if (report.mode == StudyMode::Size) {
        for (size_t m = 0; m < report.methods.size(); ++m) {
            out << "are,,,," << method_name(report.methods[m]) << ','
                << format_double(report.are[m]) << ",,,\n";
        }
    }
    return out.str();
}

StudyReport parse_report_csv(const std::string& text) {
    std::istringstream lines(text);
    std::string line;
    if (!std::getline(lines, line) ||
        trim(line) != "n1,n2,p,delta,method,rate,se,reps_used,failures") {
        throw ConfigError("report CSV: missing or unexpected header");
    }
    StudyReport report;
    report.mode = StudyMode::Power;  // switched to Size when ARE rows appear
    auto method_slot = [&](const std::string& name) -> size_t {
        Method m;
        if (name == "pdq") m = Method::Pdq;
        else if (name == "sst") m = Method::Sst;
        else throw ConfigError("report CSV: unknown method '" + name + "'");
        for (size_t i = 0; i < report.methods.size(); ++i) {
            if (report.methods[i] == m) return i;
        }
        report.methods.push_back(m);
        return report.methods.size() - 1;
    };
    while (std::getline(lines, line)) {
        line = trim(line);
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::istringstream fs(line);
        std::string field;
        while (std::getline(fs, field, ',')) f.push_back(field);
        f.resize(9);
        if (f[0] == "are") {
            report.mode = StudyMode::Size;
            const size_t m = method_slot(f[4]);
            report.are.resize(std::max(report.are.size(), m + 1), 0.0);
            report.are[m] = parse_double(f[5], "are");
            continue;
        }
        const int n1 = static_cast<int>(parse_long(f[0], "n1"));
        const int n2 = static_cast<int>(parse_long(f[1], "n2"));
        const int p = static_cast<int>(parse_long(f[2], "p"));
        const double delta = parse_double(f[3], "delta");
        const size_t m = method_slot(f[4]);
        CellResult* cell = nullptr;
        if (!report.cells.empty()) {
            CellResult& last = report.cells.back();
            if (last.n1 == n1 && last.n2 == n2 && last.p == p && last.delta == delta) {
                cell = &last;
            }
        }
        if (!cell) {
            report.cells.emplace_back();
            cell = &report.cells.back();
            cell->n1 = n1;
            cell->n2 = n2;
            cell->p = p;
            cell->delta = delta;
        }
        cell->by_method.resize(std::max(cell->by_method.size(), m + 1));
        MethodCell& mc = cell->by_method[m];
        mc.rate = parse_double(f[5], "rate");
        mc.se = parse_double(f[6], "se");
        mc.used = parse_long(f[7], "reps_used");
        mc.failures = parse_long(f[8], "failures");
        report.reps = std::max(report.reps, mc.used + mc.failures);
    }
    return report;
}

}  // namespace pdqsign

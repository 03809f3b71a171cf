#include <json.hpp>

#include "pdqsign/harness.hpp"

namespace pdqsign {

namespace {

using json = nlohmann::ordered_json;

json vector_json(const Vector& v) {
    json a = json::array();
    for (long i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (long i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json statistic_json(const TestStatistic& s) {
    return json{{"r_hat", s.r_hat}, {"b_hat", s.b_hat}, {"t", s.t}};
}

json bootstrap_json(const BootstrapResult& r) {
    return json{{"draws", vector_json(r.draws)},
                {"critical_value", r.critical_value},
                {"p_value", r.p_value},
                {"tau_star_hat", r.tau_star_hat},
                {"reject", r.reject},
                {"b", r.b},
                {"level", r.level}};
}

}  // namespace

std::string to_json(const TestStatistic& s) {
    return statistic_json(s).dump();
}

std::string to_json(const BootstrapResult& r) {
    return bootstrap_json(r).dump();
}

std::string to_json(const OracleNull& o) {
    json j{{"b", matrix_json(o.b)},
           {"eigenvalues", vector_json(o.eigenvalues)},
           {"tau", o.tau},
           {"delta_row", o.delta_row}};
    return j.dump();
}

std::string to_json(const TestOutcome& o) {
    json j{{"n1", o.n1},
           {"n2", o.n2},
           {"p", o.p},
           {"alpha", o.alpha},
           {"level", o.level},
           {"seed", o.seed},
           {"statistic", statistic_json(o.statistic)},
           {"bootstrap", bootstrap_json(o.bootstrap)},
           {"diagnostics",
            json{{"cond_g1", o.cond_g1},
                 {"cond_g2", o.cond_g2},
                 {"zero_signs_1", o.zero_signs_1},
                 {"zero_signs_2", o.zero_signs_2},
                 {"median_iterations_1", o.median_iterations_1},
                 {"median_iterations_2", o.median_iterations_2}}}};
    return j.dump(2);
}

std::string to_json(const StudyReport& r) {
    json cells = json::array();
    for (const CellResult& cell : r.cells) {
        json by_method = json::object();
        for (size_t m = 0; m < r.methods.size(); ++m) {
            const MethodCell& mc = cell.by_method[m];
            by_method[method_name(r.methods[m])] = json{{"rate", mc.rate},
                                                        {"se", mc.se},
                                                        {"reps_used", mc.used},
                                                        {"failures", mc.failures}};
        }
        cells.push_back(json{{"n1", cell.n1},
                             {"n2", cell.n2},
                             {"p", cell.p},
                             {"delta", cell.delta},
                             {"results", std::move(by_method)}});
    }
    json j{{"mode", r.mode == StudyMode::Size ? "size" : "power"},
           {"level", r.level},
           {"reps", r.reps},
           {"cells", std::move(cells)}};
    if (r.mode == StudyMode::Size) {
        json are = json::object();
        for (size_t m = 0; m < r.methods.size(); ++m) are[method_name(r.methods[m])] = r.are[m];
        j["are"] = std::move(are);
    }
    j["wall_seconds"] = r.wall_seconds;
    return j.dump(2);
}

}  // namespace pdqsign

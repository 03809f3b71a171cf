#include "pdqsign/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace pdqsign {

std::string format_double(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

SampleMatrix parse_sample_csv(const std::string& text, const std::string& origin) {
    std::vector<std::vector<double>> rows;
    std::istringstream lines(text);
    std::string line;
    long ncols = -1;
    long lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream fields(line);
        std::string field;
        while (std::getline(fields, field, ',')) {
            const char* begin = field.c_str();
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            while (end && *end == ' ') ++end;
            if (end == begin || (end && *end != '\0')) {
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": non-numeric field '" + field + "'");
            }
            row.push_back(v);
        }
        if (ncols < 0) {
            ncols = static_cast<long>(row.size());
        } else if (static_cast<long>(row.size()) != ncols) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(ncols) + " fields, got " +
                              std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2 || ncols < 2) {
        throw ConfigError(origin + ": sample requires at least 2 rows and 2 columns");
    }
    Matrix m(static_cast<long>(rows.size()), ncols);
    for (long i = 0; i < m.rows(); ++i)
        for (long j = 0; j < ncols; ++j) m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    try {
        return SampleMatrix::checked(std::move(m));
    } catch (const InvalidDimension& e) {
        throw ConfigError(origin + ": " + e.what());
    }
}

SampleMatrix read_sample_csv(const std::string& path) {
    return parse_sample_csv(read_file(path), path);
}

void write_sample_csv(const std::string& path, const SampleMatrix& sample) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    for (int i = 0; i < sample.n(); ++i) {
        for (int j = 0; j < sample.p(); ++j) {
            if (j) out << ',';
            out << format_double(sample.values(i, j));
        }
        out << '\n';
    }
}

}  // namespace pdqsign

#include "rfi/app/csv.hpp"

#include "rfi/app/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rfi::app {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_number(std::size_t v) { return std::to_string(v); }

namespace {

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && *first == ' ') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw ConfigError(where + ": not a number: \"" + s + "\"");
    return v;
}

} // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            out << quote(cells[i]);
        }
        out << "\r\n";
    };
    emit(header);
    for (const auto& r : rows) emit(r);
    if (!out) throw Error("write failed: " + path);
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open");
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            throw ConfigError(path + ": line " + std::to_string(lineno) + ": expected " +
                              std::to_string(t.header.size()) + " fields, got " + std::to_string(cells.size()));
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) throw ConfigError(path + ": missing header row");
    return t;
}

EmpiricalMeasure read_cloud_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    if (t.rows.empty()) throw ConfigError(path + ": no points");
    const bool weighted = t.header.back() == "weight";
    const Index dim = static_cast<Index>(t.header.size()) - (weighted ? 1 : 0);
    if (dim < 1) throw ConfigError(path + ": no coordinate columns");
    Matrix pts(dim, static_cast<Index>(t.rows.size()));
    Eigen::VectorXd w(static_cast<Index>(t.rows.size()));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::string where = path + ": row " + std::to_string(r + 1);
        for (Index d = 0; d < dim; ++d)
            pts(d, static_cast<Index>(r)) = parse_double(t.rows[r][static_cast<std::size_t>(d)], where);
        if (weighted) w[static_cast<Index>(r)] = parse_double(t.rows[r].back(), where);
    }
    if (!weighted) return EmpiricalMeasure::uniform(std::move(pts));
    try {
        return EmpiricalMeasure(std::move(pts), std::move(w));
    } catch (const DomainError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_cloud_csv(const std::string& path, const EmpiricalMeasure& mu) {
    std::vector<std::string> header;
    for (Index d = 0; d < mu.dim(); ++d) header.push_back("x" + std::to_string(d));
    header.push_back("weight");
    std::vector<std::vector<std::string>> rows;
    for (Index i = 0; i < mu.size(); ++i) {
        std::vector<std::string> r;
        for (Index d = 0; d < mu.dim(); ++d) r.push_back(format_number(mu.points()(d, i)));
        r.push_back(format_number(mu.weights()[i]));
        rows.push_back(std::move(r));
    }
    write_csv(path, header, rows);
}

} // namespace rfi::app

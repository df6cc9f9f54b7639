#include "capspin/series_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace capspin {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

void check_finite(const std::vector<double>& col, const std::string& name) {
    for (std::size_t i = 0; i < col.size(); ++i)
        if (!std::isfinite(col[i]))
            throw std::invalid_argument("refusing to serialize non-finite value in column '" +
                                        name + "' at row " + std::to_string(i));
}

}  // namespace

void write_series(const ResultSeries& series, const std::string& path) {
    if (series.time_s.size() != series.p_singlet.size())
        throw std::invalid_argument("series columns have different lengths");
    if (series.has_concurrence() && series.concurrence.size() != series.time_s.size())
        throw std::invalid_argument("concurrence column length differs from time column");
    check_finite(series.time_s, "time_s");
    check_finite(series.p_singlet, "p_singlet");
    if (series.has_concurrence()) check_finite(series.concurrence, "concurrence");
    for (const auto& [key, value] : series.metadata) {
        if (key.empty() || key.find(':') != std::string::npos ||
            key.find('\n') != std::string::npos || value.find('\n') != std::string::npos)
            throw std::invalid_argument("metadata key/value not representable: '" + key + "'");
    }

    std::ostringstream out;
    for (const auto& [key, value] : series.metadata) out << "# " << key << ": " << value << "\n";
    out << "time_s,p_singlet";
    if (series.has_concurrence()) out << ",concurrence";
    out << "\n";
    for (std::size_t i = 0; i < series.time_s.size(); ++i) {
        out << format_double(series.time_s[i]) << ',' << format_double(series.p_singlet[i]);
        if (series.has_concurrence()) out << ',' << format_double(series.concurrence[i]);
        out << "\n";
    }

    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open for writing: " + tmp);
        f << out.str();
        f.flush();
        if (!f) throw std::runtime_error("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot move " + tmp + " to " + path + ": " + ec.message());
    }
}

namespace {

double parse_number(const std::string& token, const std::string& path, std::size_t line_no) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0')
        throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                    ": not a number: '" + token + "'");
    return v;
}

}  // namespace

ResultSeries parse_series(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open series file: " + path);
    ResultSeries series;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    int n_cols = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string body = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
            const auto sep = body.find(": ");
            if (sep == std::string::npos)
                throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                            ": malformed metadata line");
            series.metadata.emplace_back(body.substr(0, sep), body.substr(sep + 2));
            continue;
        }
        if (!header_seen) {
            if (line == "time_s,p_singlet")
                n_cols = 2;
            else if (line == "time_s,p_singlet,concurrence")
                n_cols = 3;
            else
                throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                            ": unexpected column header '" + line + "'");
            header_seen = true;
            continue;
        }
        std::vector<std::string> tokens;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            tokens.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (static_cast<int>(tokens.size()) != n_cols)
            throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(n_cols) + " columns, found " +
                                        std::to_string(tokens.size()));
        series.time_s.push_back(parse_number(tokens[0], path, line_no));
        series.p_singlet.push_back(parse_number(tokens[1], path, line_no));
        if (n_cols == 3) series.concurrence.push_back(parse_number(tokens[2], path, line_no));
    }
    if (!header_seen)
        throw std::invalid_argument(path + ": missing column header line");
    return series;
}

}  // namespace capspin

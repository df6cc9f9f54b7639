#include "capspin/structure_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "capspin/series_io.hpp"

namespace capspin {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& msg) {
    throw std::invalid_argument(origin + ": " + msg);
}

double number_field(const json& v, const std::string& origin, const std::string& name) {
    if (!v.is_number()) fail(origin, name + " must be a number");
    return v.get<double>();
}

Eigen::MatrixXd parse_couplings(const json& j, int n, const std::string& origin) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    if (!j.is_array()) fail(origin, "j_couplings_hz must be a matrix or a pair list");
    if (j.empty()) return out;

    if (j.front().is_array()) {  // full symmetric matrix
        if (static_cast<int>(j.size()) != n)
            fail(origin, "j_couplings_hz matrix has " + std::to_string(j.size()) +
                             " rows, expected " + std::to_string(n));
        for (int r = 0; r < n; ++r) {
            const json& row = j.at(r);
            if (!row.is_array() || static_cast<int>(row.size()) != n)
                fail(origin, "j_couplings_hz row " + std::to_string(r) + " must have " +
                                 std::to_string(n) + " entries");
            for (int c = 0; c < n; ++c)
                out(r, c) = number_field(row.at(c), origin,
                                         "j_couplings_hz[" + std::to_string(r) + "][" +
                                             std::to_string(c) + "]");
        }
        for (int r = 0; r < n; ++r) {
            if (out(r, r) != 0.0)
                fail(origin, "j_couplings_hz diagonal entry (" + std::to_string(r) + "," +
                                 std::to_string(r) + ") must be zero");
            for (int c = r + 1; c < n; ++c)
                if (std::abs(out(r, c) - out(c, r)) > 1e-12)
                    fail(origin, "j_couplings_hz is not symmetric at pair (" + std::to_string(r) +
                                     "," + std::to_string(c) + "): " + format_double(out(r, c)) +
                                     " vs " + format_double(out(c, r)));
        }
        return out;
    }

    // upper-triangular pair list
    std::set<std::pair<int, int>> seen;
    for (std::size_t e = 0; e < j.size(); ++e) {
        const json& entry = j.at(e);
        const std::string where = "j_couplings_hz entry " + std::to_string(e);
        if (!entry.is_object()) fail(origin, where + " must be an object {i, j, value}");
        for (const auto& [key, _] : entry.items())
            if (key != "i" && key != "j" && key != "value")
                fail(origin, where + " has unknown key '" + key + "'");
        if (!entry.contains("i") || !entry.contains("j") || !entry.contains("value"))
            fail(origin, where + " needs keys i, j, value");
        if (!entry["i"].is_number_integer() || !entry["j"].is_number_integer())
            fail(origin, where + ": i and j must be integers");
        const int a = entry["i"].get<int>();
        const int b = entry["j"].get<int>();
        if (a < 0 || a >= n || b < 0 || b >= n)
            fail(origin, where + ": pair (" + std::to_string(a) + "," + std::to_string(b) +
                             ") outside 0.." + std::to_string(n - 1));
        if (a == b)
            fail(origin, where + ": self-coupling (" + std::to_string(a) + "," +
                             std::to_string(b) + ") is not allowed");
        const auto canon = std::minmax(a, b);
        if (!seen.insert(canon).second)
            fail(origin, where + ": duplicate pair (" + std::to_string(canon.first) + "," +
                             std::to_string(canon.second) + ")");
        const double v = number_field(entry["value"], origin, where + " value");
        out(a, b) = v;
        out(b, a) = v;
    }
    return out;
}

}  // namespace

SpinSystem parse_structure_text(const std::string& text, bool strict,
                                std::vector<std::string>* warnings,
                                const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(origin, std::string("not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) fail(origin, "top level must be an object");

    static const std::set<std::string> known = {
        "schema_version", "label",           "symmetry_label", "n_spins", "j_couplings_hz",
        "positions_angstrom", "shielding_tensors", "tau_c_ps",  "b_field_ut"};
    for (const auto& [key, _] : doc.items()) {
        if (known.count(key)) continue;
        if (strict) fail(origin, "unknown key '" + key + "' (strict mode)");
        if (warnings) warnings->push_back(origin + ": ignoring unknown key '" + key + "'");
    }

    if (doc.contains("schema_version")) {
        if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != 1)
            fail(origin, "unsupported schema_version (expected 1)");
    }
    if (!doc.contains("n_spins") || !doc["n_spins"].is_number_integer())
        fail(origin, "n_spins is required and must be an integer");
    const int n = doc["n_spins"].get<int>();
    if (n < 2) fail(origin, "n_spins must be at least 2");

    SpinSystem sys;
    sys.n_spins = n;
    if (doc.contains("label")) {
        if (!doc["label"].is_string()) fail(origin, "label must be a string");
        sys.label = doc["label"].get<std::string>();
    }
    if (doc.contains("symmetry_label")) {
        if (!doc["symmetry_label"].is_string()) fail(origin, "symmetry_label must be a string");
        sys.symmetry_label = doc["symmetry_label"].get<std::string>();
    }
    if (!doc.contains("j_couplings_hz")) fail(origin, "j_couplings_hz is required");
    sys.j_hz = parse_couplings(doc["j_couplings_hz"], n, origin);

    if (doc.contains("positions_angstrom")) {
        const json& pos = doc["positions_angstrom"];
        if (!pos.is_array() || static_cast<int>(pos.size()) != n)
            fail(origin, "positions_angstrom must list " + std::to_string(n) + " sites");
        for (int k = 0; k < n; ++k) {
            const json& row = pos.at(k);
            if (!row.is_array() || row.size() != 3)
                fail(origin, "positions_angstrom[" + std::to_string(k) + "] must have 3 entries");
            Eigen::Vector3d r;
            for (int a = 0; a < 3; ++a)
                r[a] = number_field(row.at(a), origin,
                                    "positions_angstrom[" + std::to_string(k) + "][" +
                                        std::to_string(a) + "]") *
                       constants::angstrom_m;
            sys.positions.push_back(r);
        }
    }
    if (doc.contains("shielding_tensors")) {
        const json& sh = doc["shielding_tensors"];
        if (!sh.is_array() || static_cast<int>(sh.size()) != n)
            fail(origin, "shielding_tensors must list " + std::to_string(n) + " sites");
        for (int k = 0; k < n; ++k) {
            const json& t = sh.at(k);
            if (!t.is_array() || t.size() != 3)
                fail(origin, "shielding_tensors[" + std::to_string(k) + "] must be 3x3");
            Eigen::Matrix3d m;
            for (int a = 0; a < 3; ++a) {
                const json& row = t.at(a);
                if (!row.is_array() || row.size() != 3)
                    fail(origin, "shielding_tensors[" + std::to_string(k) + "][" +
                                     std::to_string(a) + "] must have 3 entries");
                for (int b = 0; b < 3; ++b)
                    m(a, b) = number_field(row.at(b), origin,
                                           "shielding_tensors[" + std::to_string(k) + "][" +
                                               std::to_string(a) + "][" + std::to_string(b) + "]");
            }
            sys.shielding.push_back(m);
        }
    }
    if (doc.contains("tau_c_ps"))
        sys.tau_c_s = number_field(doc["tau_c_ps"], origin, "tau_c_ps") * 1e-12;
    if (doc.contains("b_field_ut"))
        sys.b_field_t = number_field(doc["b_field_ut"], origin, "b_field_ut") * 1e-6;

    try {
        sys.validate();
    } catch (const std::exception& e) {
        fail(origin, e.what());
    }
    return sys;
}

SpinSystem parse_structure(const std::string& path, bool strict,
                           std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open structure file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_structure_text(buf.str(), strict, warnings, path);
}

std::string structure_hash(const SpinSystem& sys) {
    std::ostringstream canon;
    canon << sys.label << '\n' << sys.symmetry_label << '\n' << sys.n_spins << '\n';
    for (int i = 0; i < sys.n_spins; ++i)
        for (int j = 0; j < sys.n_spins; ++j) canon << format_double(sys.j_hz(i, j)) << ' ';
    canon << '\n';
    for (const auto& r : sys.positions)
        canon << format_double(r[0]) << ' ' << format_double(r[1]) << ' ' << format_double(r[2])
              << '\n';
    for (const auto& m : sys.shielding) {
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) canon << format_double(m(a, b)) << ' ';
        canon << '\n';
    }
    canon << format_double(sys.tau_c_s) << ' ' << format_double(sys.b_field_t) << ' '
          << format_double(sys.gamma_rad_s_t) << '\n';

    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canon.str()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::ostringstream out;
    out << "fnv1a:" << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

}  // namespace capspin

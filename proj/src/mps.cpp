#include <cstdio>
#include <cstring>
#include <sstream>

#include "drmco/lp.hpp"

namespace drmco {

namespace {

// Shortest decimal string that parses back to exactly `v`. Values are the
// last field on their line, so exceeding the classic 12-character width is
// harmless and keeps the round trip exact.
std::string fmt_value(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Appends text starting at 1-indexed column `col` (two-space separated if
// already past it).
void put(std::string& line, std::size_t col, const std::string& text) {
    if (line.size() + 1 < col) line.append(col - 1 - line.size(), ' ');
    else if (!line.empty()) line.append(2, ' ');
    line += text;
}

std::string entry(const std::string& f2, const std::string& f3, const std::string& f4) {
    std::string line;
    put(line, 5, f2);
    put(line, 15, f3);
    put(line, 25, f4);
    return line;
}

}  // namespace

std::string export_mps(const LinearProgram& lp) {
    lp.check_well_formed();
    const std::size_t n = lp.num_vars();
    const std::size_t m = lp.num_rows();
    std::ostringstream out;

    std::string header = "NAME";
    put(header, 15, lp.name.empty() ? "LP" : lp.name.substr(0, 8));
    out << header << '\n';

    out << "ROWS\n";
    {
        std::string line;
        put(line, 2, "N");
        put(line, 5, "OBJ");
        out << line << '\n';
    }
    for (std::size_t i = 0; i < m; ++i) {
        std::string line;
        const char* tag = lp.rows[i].sense == Sense::Le ? "L"
                          : lp.rows[i].sense == Sense::Ge ? "G" : "E";
        put(line, 2, tag);
        put(line, 5, "R" + std::to_string(i));
        out << line << '\n';
    }

    out << "COLUMNS\n";
    for (std::size_t j = 0; j < n; ++j) {
        const std::string col = "X" + std::to_string(j);
        // Every column appears at least once (declares the variable).
        out << entry(col, "OBJ", fmt_value(lp.objective[j])) << '\n';
        for (std::size_t i = 0; i < m; ++i) {
            const double a = lp.rows[i].coeffs[j];
            if (a != 0.0)
                out << entry(col, "R" + std::to_string(i), fmt_value(a)) << '\n';
        }
    }

    out << "RHS\n";
    for (std::size_t i = 0; i < m; ++i) {
        if (lp.rows[i].rhs != 0.0)
            out << entry("RHS", "R" + std::to_string(i), fmt_value(lp.rows[i].rhs)) << '\n';
    }

    out << "BOUNDS\n";
    for (std::size_t j = 0; j < n; ++j) {
        const std::string col = "X" + std::to_string(j);
        const double lo = lp.lower[j], up = lp.upper[j];
        auto bound_line = [&](const char* type, bool with_value, double value) {
            std::string line;
            put(line, 2, type);
            put(line, 5, "BND");
            put(line, 15, col);
            if (with_value) put(line, 25, fmt_value(value));
            out << line << '\n';
        };
        if (lo == up) {
            bound_line("FX", true, lo);
        } else if (!std::isfinite(lo) && !std::isfinite(up)) {
            bound_line("FR", false, 0.0);
        } else {
            if (std::isfinite(lo)) {
                if (lo != 0.0) bound_line("LO", true, lo);
            } else {
                bound_line("MI", false, 0.0);
            }
            if (std::isfinite(up)) bound_line("UP", true, up);
        }
    }

    out << "ENDATA\n";
    return out.str();
}

}  // namespace drmco

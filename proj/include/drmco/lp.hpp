#pragma once

#include <string>
#include <utility>
#include <vector>

#include "drmco/common.hpp"

namespace drmco {

enum class Sense : char { Le = 'L', Eq = 'E', Ge = 'G' };

struct LpRow {
    Vec coeffs;  // one entry per variable
    Sense sense = Sense::Le;
    double rhs = 0.0;
};

/// Dense linear program, minimization. Bounds may be +-infinity.
struct LinearProgram {
    Vec objective;
    std::vector<LpRow> rows;
    Vec lower;
    Vec upper;
    std::vector<std::string> var_names;  // optional, diagnostics only
    std::vector<std::string> row_names;  // optional, diagnostics only
    std::string name = "LP";

    std::size_t num_vars() const { return objective.size(); }
    std::size_t num_rows() const { return rows.size(); }

    /// Appends a variable, returns its index.
    int add_var(double lo, double up, double obj, std::string name = {});

    /// Appends a row given sparse (var, coeff) terms, returns its index.
    int add_row(Sense sense, double rhs,
                const std::vector<std::pair<int, double>>& terms,
                std::string name = {});

    /// Throws MalformedProgram on dimension mismatches or crossed bounds.
    void check_well_formed() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    Vec primal;             // per variable (empty unless Optimal)
    Vec dual;               // per row (empty unless Optimal)
    double objective_value = 0.0;
};

/// Deterministic two-phase bounded-variable simplex. Dantzig pricing with a
/// Bland fallback after 500 degenerate pivots; tolerances: feasibility 1e-9,
/// optimality 1e-9, zero pivot 1e-11.
LpSolution solve_lp(const LinearProgram& lp);

/// Fixed-format MPS text for the given program (export only).
std::string export_mps(const LinearProgram& lp);

}  // namespace drmco

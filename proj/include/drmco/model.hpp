#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drmco/ambiguity.hpp"
#include "drmco/common.hpp"
#include "drmco/lp.hpp"

namespace drmco {

using Bound = std::pair<double, double>;

/// One node's polyhedral stage problem over (z copy of incoming state,
/// internal variables y, outgoing state x).
struct StageNodeProblem {
    Vec cost_z;
    Vec cost_y;
    Vec cost_x;
    double cost_const = 0.0;

    struct Row {
        Vec z, y, x;
        Sense sense = Sense::Le;
        double rhs = 0.0;
    };
    std::vector<Row> rows;
    std::vector<Bound> y_bounds;
    std::vector<Bound> x_bounds;  // finite: the node's contribution to the state space

    std::size_t state_dim_in() const { return cost_z.size(); }
    std::size_t state_dim_out() const { return cost_x.size(); }
    std::size_t internal_dim() const { return cost_y.size(); }
};

struct Instance {
    int T = 0;
    std::vector<std::vector<StageNodeProblem>> stages;  // stages[t-1], stage 1 is a singleton
    std::vector<AmbiguitySet> ambiguity;                // ambiguity[t-1] over stage t+1 nodes
    std::optional<Vec> reg_factors;                     // M_t per t in 1..T-1; nullopt marks unregularized
    Vec x0;
    Vec diameters;                                      // declared D_t per stage, 2-norm

    bool regularized() const { return reg_factors.has_value(); }
    double reg_factor(int t) const { return (*reg_factors)[t - 1]; }
    const std::vector<StageNodeProblem>& nodes(int t) const { return stages[t - 1]; }
    std::size_t state_dim(int t) const { return stages[t - 1].front().state_dim_out(); }

    /// Componentwise hull of stage-t node x bounds; stage 0 is {x0}.
    std::pair<Vec, Vec> state_box(int t) const;
};

struct Diagnostic {
    enum class Severity { Error, Warning };
    Severity severity = Severity::Error;
    std::string location;
    std::string message;
};

struct Diagnostics {
    std::vector<Diagnostic> items;

    bool has_error() const;
    void error(std::string location, std::string message);
    void warning(std::string location, std::string message);
    std::string to_string() const;
};

struct ValidationError : Error {
    explicit ValidationError(Diagnostics d)
        : Error(d.to_string()), diagnostics(std::move(d)) {}
    Diagnostics diagnostics;
};

/// Structural and semantic checks: dimension consistency, compact state
/// boxes, positive regularization factors, ambiguity support sizes, and a
/// per-node LP check that stage costs are nonnegative over the feasible set.
Diagnostics validate(const Instance& inst);

Instance instance_from_json(const std::string& text);
std::string instance_to_json(const Instance& inst);

/// Throws ParseError / SchemaError / ValidationError.
Instance load_instance(const std::string& path);
void save_instance(const Instance& inst, const std::string& path);

struct VertexReformulation {
    std::vector<StageNodeProblem> nodes;  // one per box vertex, lexicographic sign order
    AmbiguitySet ambiguity;               // full simplex
};

/// Finite-support reformulation of box uncertainty: one node per vertex of
/// [lo, hi], built by the supplied callback. Dimension is capped at 20.
VertexReformulation vertices_to_dr(
    const Vec& box_lo, const Vec& box_hi,
    const std::function<StageNodeProblem(const Vec& vertex)>& builder);

inline constexpr std::int64_t kDefaultSupportLimit = 100000;

/// Single LP over all stage-node paths whose optimum equals the
/// unregularized optimum of the instance. Verification oracle only; throws
/// TooLarge past the path or matrix-size guards.
LinearProgram extensive_form(const Instance& inst,
                             std::int64_t support_limit = kDefaultSupportLimit);

/// Exact (regularized or plain) cost-to-go at state x after stage t,
/// computed from the extensive subtree over stages t+1..T.
double extensive_cost_to_go(const Instance& inst, int t, const Vec& x, bool regularized,
                            std::int64_t support_limit = kDefaultSupportLimit);

/// Optimal value of extensive_form.
double extensive_optimum(const Instance& inst,
                         std::int64_t support_limit = kDefaultSupportLimit);

}  // namespace drmco

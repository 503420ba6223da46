#include "drmco/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "drmco/ambiguity.hpp"
#include "drmco/lp.hpp"

#ifdef DRMCO_HAVE_OPENMP
#include <omp.h>
#endif

namespace drmco {

namespace {

constexpr double kClampTol = 1e-7;

Vec clamp_to_stage_box(const Instance& inst, int t, const Vec& x_in) {
    const auto [lo, hi] = inst.state_box(t);
    if (x_in.size() != lo.size()) throw DimensionMismatch("incoming state dimension mismatch");
    Vec x = x_in;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k] < lo[k] - kClampTol || x[k] > hi[k] + kClampTol)
            throw InvalidParams("incoming state is outside the stage box by more than 1e-7");
        x[k] = std::min(std::max(x[k], lo[k]), hi[k]);
    }
    return x;
}

struct NodeSolve {
    double value = 0.0;   // objective including the node's constant term
    Vec x;                // outgoing state
    Vec y;
    Vec copy_duals;       // duals of the incoming-state copy rows
    bool infeasible = false;
};

// Assembles and solves one node LP. The incoming state enters either as a
// penalized copy (regularized: w = x_in rows, s >= |w - z| slacks) or pinned
// (z = x_in rows). The cost-to-go term is the cut epigraph (under pass) or
// the envelope epigraph (over pass); a terminal pool contributes nothing.
// Dropping the zero floor replays the plain cutting-plane recursion, whose
// duals at degenerate anchors are the steep ones.
NodeSolve solve_node_lp(const StageNodeProblem& node, const Vec& x_in, bool penalized,
                        double penalty_factor, const CutPool* cuts, const EnvelopePool* envelope,
                        bool theta_floor = true) {
    const std::size_t dz = node.state_dim_in();
    const std::size_t dy = node.internal_dim();
    const std::size_t dx = node.state_dim_out();

    LinearProgram lp;
    std::vector<int> z(dz), y(dy), x(dx);
    std::vector<int> copy_rows(dz);
    for (std::size_t k = 0; k < dz; ++k) z[k] = lp.add_var(-kInf, kInf, node.cost_z[k]);
    for (std::size_t k = 0; k < dy; ++k)
        y[k] = lp.add_var(node.y_bounds[k].first, node.y_bounds[k].second, node.cost_y[k]);
    for (std::size_t k = 0; k < dx; ++k)
        x[k] = lp.add_var(node.x_bounds[k].first, node.x_bounds[k].second, node.cost_x[k]);

    if (penalized) {
        for (std::size_t k = 0; k < dz; ++k) {
            const int w = lp.add_var(-kInf, kInf, 0.0);
            const int s = lp.add_var(0.0, kInf, penalty_factor);
            copy_rows[k] = lp.add_row(Sense::Eq, x_in[k], {{w, 1.0}});
            lp.add_row(Sense::Ge, 0.0, {{s, 1.0}, {w, -1.0}, {z[k], 1.0}});
            lp.add_row(Sense::Ge, 0.0, {{s, 1.0}, {w, 1.0}, {z[k], -1.0}});
        }
    } else {
        for (std::size_t k = 0; k < dz; ++k)
            copy_rows[k] = lp.add_row(Sense::Eq, x_in[k], {{z[k], 1.0}});
    }

    for (const auto& row : node.rows) {
        std::vector<std::pair<int, double>> terms;
        for (std::size_t k = 0; k < dz; ++k)
            if (row.z[k] != 0.0) terms.emplace_back(z[k], row.z[k]);
        for (std::size_t k = 0; k < dy; ++k)
            if (row.y[k] != 0.0) terms.emplace_back(y[k], row.y[k]);
        for (std::size_t k = 0; k < dx; ++k)
            if (row.x[k] != 0.0) terms.emplace_back(x[k], row.x[k]);
        lp.add_row(row.sense, row.rhs, terms);
    }

    if (cuts != nullptr && (theta_floor || !cuts->cuts().empty())) {
        const int theta = lp.add_var(theta_floor ? 0.0 : -kInf, kInf, 1.0);
        for (const Cut& cut : cuts->cuts()) {
            std::vector<std::pair<int, double>> terms{{theta, 1.0}};
            double rhs = cut.value_at_anchor;
            for (std::size_t k = 0; k < dx; ++k) {
                if (cut.gradient[k] != 0.0) terms.emplace_back(x[k], -cut.gradient[k]);
                rhs -= cut.gradient[k] * cut.anchor[k];
            }
            lp.add_row(Sense::Ge, rhs, terms);
        }
    }

    if (envelope != nullptr && !envelope->is_terminal()) {
        // Collapsed hull-of-cones form: interpolate the anchors and pay the
        // Lipschitz factor for one aggregate 1-norm deviation from x.
        const auto& pts = envelope->points();
        const bool hull_only = !std::isfinite(envelope->lipschitz());
        std::vector<int> mu(pts.size());
        for (std::size_t j = 0; j < pts.size(); ++j) mu[j] = lp.add_var(0.0, 1.0, pts[j].value);
        for (std::size_t k = 0; k < dx; ++k) {
            if (hull_only) {
                std::vector<std::pair<int, double>> terms{{x[k], -1.0}};
                for (std::size_t j = 0; j < pts.size(); ++j)
                    if (pts[j].anchor[k] != 0.0) terms.emplace_back(mu[j], pts[j].anchor[k]);
                lp.add_row(Sense::Eq, 0.0, terms);
            } else {
                const int s = lp.add_var(0.0, kInf, envelope->lipschitz());
                std::vector<std::pair<int, double>> pos{{s, 1.0}, {x[k], -1.0}};
                std::vector<std::pair<int, double>> neg{{s, 1.0}, {x[k], 1.0}};
                for (std::size_t j = 0; j < pts.size(); ++j) {
                    if (pts[j].anchor[k] == 0.0) continue;
                    pos.emplace_back(mu[j], pts[j].anchor[k]);
                    neg.emplace_back(mu[j], -pts[j].anchor[k]);
                }
                lp.add_row(Sense::Ge, 0.0, pos);  // s >= x - sum mu anchor
                lp.add_row(Sense::Ge, 0.0, neg);  // s >= sum mu anchor - x
            }
        }
        std::vector<std::pair<int, double>> simplex_terms;
        for (std::size_t j = 0; j < pts.size(); ++j) simplex_terms.emplace_back(mu[j], 1.0);
        lp.add_row(Sense::Eq, 1.0, simplex_terms);
    }

    const LpSolution sol = solve_lp(lp);
    NodeSolve out;
    if (sol.status == LpStatus::Infeasible) {
        out.infeasible = true;
        return out;
    }
    if (sol.status == LpStatus::Unbounded)
        throw UnboundedStage("node subproblem is unbounded (check cost nonnegativity)");
    out.value = sol.objective_value + node.cost_const;
    out.x.resize(dx);
    for (std::size_t k = 0; k < dx; ++k) out.x[k] = sol.primal[x[k]];
    out.y.resize(dy);
    for (std::size_t k = 0; k < dy; ++k) out.y[k] = sol.primal[y[k]];
    out.copy_duals.resize(dz);
    for (std::size_t k = 0; k < dz; ++k) out.copy_duals[k] = sol.dual[copy_rows[k]];
    return out;
}

// sup_{p in set} p.v extended to +infinity entries: a node with infinite
// value contributes +infinity whenever the set can place mass on it.
double worst_case_allowing_inf(const AmbiguitySet& set, const Vec& v) {
    bool any_inf = false;
    for (double val : v) any_inf = any_inf || !std::isfinite(val);
    if (!any_inf) return worst_case_distribution(set, v).value;
    switch (set.kind) {
        case AmbiguityKind::FullSimplex:
            return kInf;
        case AmbiguityKind::Singleton: {
            double total = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (set.p_hat[i] <= 0.0) continue;
                if (!std::isfinite(v[i])) return kInf;
                total += set.p_hat[i] * v[i];
            }
            return total;
        }
        case AmbiguityKind::WassersteinBall: {
            if (set.sigma > 0.0) return kInf;  // any node can receive mass
            double total = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (set.p_hat[i] <= 0.0) continue;
                if (!std::isfinite(v[i])) return kInf;
                total += set.p_hat[i] * v[i];
            }
            return total;
        }
    }
    return kInf;
}

}  // namespace

InitialResult initial_oracle(const Instance& inst, const CutPool& under,
                             const EnvelopePool& over) {
    const StageNodeProblem& node = inst.nodes(1).front();
    const std::size_t dy = node.internal_dim();
    const std::size_t dx = node.state_dim_out();

    LinearProgram lp;
    std::vector<int> y(dy), x(dx);
    for (std::size_t k = 0; k < dy; ++k)
        y[k] = lp.add_var(node.y_bounds[k].first, node.y_bounds[k].second, node.cost_y[k]);
    for (std::size_t k = 0; k < dx; ++k)
        x[k] = lp.add_var(node.x_bounds[k].first, node.x_bounds[k].second, node.cost_x[k]);
    for (const auto& row : node.rows) {
        std::vector<std::pair<int, double>> terms;
        double rhs = row.rhs;
        for (std::size_t k = 0; k < inst.x0.size(); ++k) rhs -= row.z[k] * inst.x0[k];
        for (std::size_t k = 0; k < dy; ++k)
            if (row.y[k] != 0.0) terms.emplace_back(y[k], row.y[k]);
        for (std::size_t k = 0; k < dx; ++k)
            if (row.x[k] != 0.0) terms.emplace_back(x[k], row.x[k]);
        lp.add_row(row.sense, rhs, terms);
    }
    const int theta = lp.add_var(0.0, kInf, 1.0);
    for (const Cut& cut : under.cuts()) {
        std::vector<std::pair<int, double>> terms{{theta, 1.0}};
        double rhs = cut.value_at_anchor;
        for (std::size_t k = 0; k < dx; ++k) {
            if (cut.gradient[k] != 0.0) terms.emplace_back(x[k], -cut.gradient[k]);
            rhs -= cut.gradient[k] * cut.anchor[k];
        }
        lp.add_row(Sense::Ge, rhs, terms);
    }

    const LpSolution sol = solve_lp(lp);
    if (sol.status == LpStatus::Infeasible) throw InfeasibleStage("first stage is infeasible");
    if (sol.status == LpStatus::Unbounded)
        throw UnboundedStage("first stage is unbounded (validation should have caught this)");

    InitialResult out;
    out.x1.resize(dx);
    for (std::size_t k = 0; k < dx; ++k) out.x1[k] = sol.primal[x[k]];
    out.y1.resize(dy);
    for (std::size_t k = 0; k < dy; ++k) out.y1[k] = sol.primal[y[k]];
    out.stage_cost = node.cost_const + dot(node.cost_z, inst.x0);
    for (std::size_t k = 0; k < dy; ++k) out.stage_cost += node.cost_y[k] * out.y1[k];
    for (std::size_t k = 0; k < dx; ++k) out.stage_cost += node.cost_x[k] * out.x1[k];
    out.lower_bound = out.stage_cost + under.eval_under(out.x1);
    out.gamma = over.eval_over(out.x1) - under.eval_under(out.x1);
    return out;
}

OracleResult noninitial_oracle(const Instance& inst, int t, const Vec& x_in,
                               const CutPool& under, const EnvelopePool& over, int threads) {
    if (t < 2 || t > inst.T) throw InvalidParams("noninitial oracle needs a stage in 2..T");
    const Vec x_anchor = clamp_to_stage_box(inst, t - 1, x_in);
    const bool penalized = inst.regularized();
    const double penalty = penalized ? inst.reg_factor(t - 1) : 0.0;
    const auto& nodes = inst.nodes(t);
    const int n_nodes = static_cast<int>(nodes.size());

    std::vector<OracleNodeDiag> diags(n_nodes);
    std::vector<std::exception_ptr> errors(n_nodes);

    // Per-node subproblems touch only immutable data; the loop is safe to
    // run in parallel and results are combined in index order below.
    auto run_node = [&](int n) {
        try {
            const StageNodeProblem& node = nodes[n];
            NodeSolve under_pass =
                solve_node_lp(node, x_anchor, penalized, penalty, &under, nullptr);
            if (under_pass.infeasible)
                throw InfeasibleStage("stage " + std::to_string(t) + " node " + std::to_string(n) +
                                      " infeasible at the incoming state (no relatively complete "
                                      "recourse)");
            OracleNodeDiag& diag = diags[n];
            diag.under_value = under_pass.value;
            diag.next_state = under_pass.x;
            diag.cut_gradient = under_pass.copy_duals;
            if (penalized && norm_inf(diag.cut_gradient) > penalty + 1e-9)
                throw ContractViolation("node cut gradient exceeds the regularization factor");
            diag.gap = over.eval_over(under_pass.x) - under.eval_under(under_pass.x);

            if (over.is_terminal() && under.size() == 0) {
                diag.over_value = under_pass.value;  // identical LPs, reuse
            } else if (!over.is_terminal() && over.empty()) {
                diag.over_value = kInf;
            } else {
                NodeSolve over_pass =
                    solve_node_lp(node, x_anchor, penalized, penalty, nullptr, &over);
                diag.over_value = over_pass.infeasible ? kInf : over_pass.value;
            }
        } catch (...) {
            errors[n] = std::current_exception();
        }
    };

#ifdef DRMCO_HAVE_OPENMP
    if (threads > 1) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
        for (int n = 0; n < n_nodes; ++n) run_node(n);
    } else {
        for (int n = 0; n < n_nodes; ++n) run_node(n);
    }
#else
    (void)threads;
    for (int n = 0; n < n_nodes; ++n) run_node(n);
#endif
    for (int n = 0; n < n_nodes; ++n)
        if (errors[n]) std::rethrow_exception(errors[n]);

    OracleResult out;
    out.per_node = std::move(diags);

    Vec under_values(n_nodes), over_values(n_nodes);
    for (int n = 0; n < n_nodes; ++n) {
        under_values[n] = out.per_node[n].under_value;
        over_values[n] = out.per_node[n].over_value;
    }
    const AmbiguitySet& set = inst.ambiguity[t - 2];
    const WorstCase wc = worst_case_distribution(set, under_values);
    out.worst_case_p = wc.p_star;
    out.cut.anchor = x_anchor;
    out.cut.value_at_anchor = wc.value;
    out.cut.gradient.assign(x_anchor.size(), 0.0);
    for (int n = 0; n < n_nodes; ++n) {
        if (wc.p_star[n] == 0.0) continue;
        for (std::size_t k = 0; k < x_anchor.size(); ++k)
            out.cut.gradient[k] += wc.p_star[n] * out.per_node[n].cut_gradient[k];
    }
    out.over_estimate = worst_case_allowing_inf(set, over_values);

    int star = 0;
    for (int n = 1; n < n_nodes; ++n)
        if (out.per_node[n].gap > out.per_node[star].gap) star = n;
    out.next_state = out.per_node[star].next_state;
    out.gap = out.per_node[star].gap;

    // Gap control, checked on every call.
    if (std::isfinite(out.over_estimate) && std::isfinite(out.gap)) {
        if (out.over_estimate - out.cut.value_at_anchor > out.gap + 1e-7)
            throw ContractViolation(
                "oracle gap control violated: over-estimate exceeds cut value plus gap");
    }
    return out;
}

Cut unregularized_cut(const Instance& inst, int t, const Vec& x_in, const CutPool& under) {
    if (t < 2 || t > inst.T) throw InvalidParams("stage must be in 2..T");
    const Vec x_anchor = clamp_to_stage_box(inst, t - 1, x_in);
    const auto& nodes = inst.nodes(t);
    Vec values(nodes.size());
    std::vector<Vec> gradients(nodes.size());
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        NodeSolve pass = solve_node_lp(nodes[n], x_anchor, /*penalized=*/false, 0.0, &under, nullptr,
                                       /*theta_floor=*/false);
        if (pass.infeasible)
            throw InfeasibleStage("stage " + std::to_string(t) + " node " + std::to_string(n) +
                                  " infeasible at the incoming state");
        values[n] = pass.value;
        gradients[n] = pass.copy_duals;
    }
    const WorstCase wc = worst_case_distribution(inst.ambiguity[t - 2], values);
    Cut cut;
    cut.anchor = x_anchor;
    cut.value_at_anchor = wc.value;
    cut.gradient.assign(x_anchor.size(), 0.0);
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        if (wc.p_star[n] == 0.0) continue;
        for (std::size_t k = 0; k < x_anchor.size(); ++k)
            cut.gradient[k] += wc.p_star[n] * gradients[n][k];
    }
    return cut;
}

}  // namespace drmco

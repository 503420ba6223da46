#include <cmath>

#include "drmco/model.hpp"

namespace drmco {

namespace {

// Guard on the dense LP size (entries), separate from the path-count guard.
constexpr double kMatrixGuard = 4e7;

struct Builder {
    const Instance& inst;
    bool regularized;
    LinearProgram lp;
    int one = -1;  // fixed variable carrying constant objective terms

    explicit Builder(const Instance& inst_, bool reg) : inst(inst_), regularized(reg) {
        one = lp.add_var(1.0, 1.0, 0.0);
    }

    // State of a path node: variable indices, or constants for a fixed root.
    struct StateRef {
        std::vector<int> vars;
        Vec constants;
        bool is_const() const { return vars.empty(); }
    };

    // Adds terms coeff * state[k] to `terms`, or folds constants into *rhs.
    void add_state_terms(const StateRef& state, const Vec& coeffs,
                         std::vector<std::pair<int, double>>& terms, double* rhs) const {
        for (std::size_t k = 0; k < coeffs.size(); ++k) {
            if (coeffs[k] == 0.0) continue;
            if (state.is_const()) *rhs -= coeffs[k] * state.constants[k];
            else terms.emplace_back(state.vars[k], coeffs[k]);
        }
    }

    // Builds the cost-to-go of stages s+1..T seen from a stage-s path node
    // with the given state; returns the c-variable index, or -1 when s == T.
    int build_cost_to_go(int s, const StateRef& state) {
        if (s >= inst.T) return -1;
        const auto& children = inst.nodes(s + 1);
        std::vector<int> q(children.size());
        for (std::size_t m = 0; m < children.size(); ++m)
            q[m] = build_child(s, state, children[m]);

        const int c = lp.add_var(0.0, kInf, 0.0);
        const AmbiguitySet& set = inst.ambiguity[s - 1];
        switch (set.kind) {
            case AmbiguityKind::Singleton: {
                std::vector<std::pair<int, double>> terms{{c, 1.0}};
                for (std::size_t m = 0; m < q.size(); ++m)
                    terms.emplace_back(q[m], -set.p_hat[m]);
                lp.add_row(Sense::Ge, 0.0, terms);
                break;
            }
            case AmbiguityKind::FullSimplex: {
                for (std::size_t m = 0; m < q.size(); ++m)
                    lp.add_row(Sense::Ge, 0.0, {{c, 1.0}, {q[m], -1.0}});
                break;
            }
            case AmbiguityKind::WassersteinBall: {
                // Dual of the worst-case expectation over the transport ball:
                // c >= sum_n p_hat_n b_n + sigma t,  b_n + t d(m,n) >= q_m.
                const std::size_t n = set.support;
                std::vector<int> bvar(n);
                for (std::size_t k = 0; k < n; ++k) bvar[k] = lp.add_var(-kInf, kInf, 0.0);
                const int tvar = lp.add_var(0.0, kInf, 0.0);
                std::vector<std::pair<int, double>> terms{{c, 1.0}, {tvar, -set.sigma}};
                for (std::size_t k = 0; k < n; ++k) terms.emplace_back(bvar[k], -set.p_hat[k]);
                lp.add_row(Sense::Ge, 0.0, terms);
                for (std::size_t m = 0; m < n; ++m)
                    for (std::size_t k = 0; k < n; ++k)
                        lp.add_row(Sense::Ge, 0.0,
                                   {{bvar[k], 1.0}, {tvar, set.dist[m][k]}, {q[m], -1.0}});
                break;
            }
        }
        return c;
    }

    // Child subproblem at stage s+1: decision variables, linking rows, its
    // epigraph variable q, and the recursive tail.
    int build_child(int s, const StateRef& parent, const StageNodeProblem& node) {
        const std::size_t dz = node.state_dim_in();
        StateRef zref;
        std::vector<int> svars;
        if (regularized) {
            // Fresh copy z with 1-norm penalty slacks toward the parent state.
            zref.vars.resize(dz);
            svars.resize(dz);
            for (std::size_t k = 0; k < dz; ++k) zref.vars[k] = lp.add_var(-kInf, kInf, 0.0);
            for (std::size_t k = 0; k < dz; ++k) svars[k] = lp.add_var(0.0, kInf, 0.0);
            for (std::size_t k = 0; k < dz; ++k) {
                std::vector<std::pair<int, double>> t1{{svars[k], 1.0}, {zref.vars[k], 1.0}};
                double rhs1 = 0.0;
                std::vector<std::pair<int, double>> t2{{svars[k], 1.0}, {zref.vars[k], -1.0}};
                double rhs2 = 0.0;
                if (parent.is_const()) {
                    rhs1 = parent.constants[k];
                    rhs2 = -parent.constants[k];
                } else {
                    t1.emplace_back(parent.vars[k], -1.0);
                    t2.emplace_back(parent.vars[k], 1.0);
                }
                lp.add_row(Sense::Ge, rhs1, t1);  // s >= x_parent - z
                lp.add_row(Sense::Ge, rhs2, t2);  // s >= z - x_parent
            }
        } else {
            zref = parent;  // hard linkage: z is the parent state itself
        }

        std::vector<int> y(node.internal_dim()), x(node.state_dim_out());
        for (std::size_t k = 0; k < y.size(); ++k)
            y[k] = lp.add_var(node.y_bounds[k].first, node.y_bounds[k].second, 0.0);
        for (std::size_t k = 0; k < x.size(); ++k)
            x[k] = lp.add_var(node.x_bounds[k].first, node.x_bounds[k].second, 0.0);

        for (const auto& row : node.rows) {
            std::vector<std::pair<int, double>> terms;
            double rhs = row.rhs;
            add_state_terms(zref, row.z, terms, &rhs);
            for (std::size_t k = 0; k < y.size(); ++k)
                if (row.y[k] != 0.0) terms.emplace_back(y[k], row.y[k]);
            for (std::size_t k = 0; k < x.size(); ++k)
                if (row.x[k] != 0.0) terms.emplace_back(x[k], row.x[k]);
            lp.add_row(row.sense, rhs, terms);
        }

        StateRef child_state;
        child_state.vars = x;
        const int c_child = build_cost_to_go(s + 1, child_state);

        // q >= f(z, y, x) + c_child + M * sum(s)
        const int q = lp.add_var(0.0, kInf, 0.0);
        std::vector<std::pair<int, double>> terms{{q, 1.0}};
        double rhs = node.cost_const;
        Vec neg_cost_z(node.cost_z.size());
        for (std::size_t k = 0; k < neg_cost_z.size(); ++k) neg_cost_z[k] = -node.cost_z[k];
        add_state_terms(zref, neg_cost_z, terms, &rhs);
        for (std::size_t k = 0; k < y.size(); ++k)
            if (node.cost_y[k] != 0.0) terms.emplace_back(y[k], -node.cost_y[k]);
        for (std::size_t k = 0; k < x.size(); ++k)
            if (node.cost_x[k] != 0.0) terms.emplace_back(x[k], -node.cost_x[k]);
        if (c_child >= 0) terms.emplace_back(c_child, -1.0);
        if (regularized) {
            const double m_factor = inst.reg_factor(s);
            for (int sv : svars) terms.emplace_back(sv, -m_factor);
        }
        lp.add_row(Sense::Ge, rhs, terms);
        return q;
    }
};

double count_paths(const Instance& inst, int from_stage) {
    double paths = 1.0;
    for (int s = from_stage; s <= inst.T; ++s) paths *= static_cast<double>(inst.nodes(s).size());
    return paths;
}

void guard_size(const Instance& inst, int from_stage, std::int64_t support_limit) {
    const double paths = count_paths(inst, from_stage);
    if (paths > static_cast<double>(support_limit))
        throw TooLarge("extensive formulation would enumerate " + std::to_string(paths) +
                       " paths, past the limit of " + std::to_string(support_limit));
    // Rough dense-entry estimate: path nodes times per-node variables squared.
    double nodes_total = 0.0, running = 1.0;
    double per_node = 4.0;
    for (int s = from_stage; s <= inst.T; ++s) {
        running *= static_cast<double>(inst.nodes(s).size());
        nodes_total += running;
        for (const auto& node : inst.nodes(s))
            per_node = std::max(per_node, 3.0 + 3.0 * node.state_dim_in() +
                                              node.internal_dim() + node.state_dim_out() +
                                              node.rows.size() + inst.nodes(s).size());
    }
    const double entries = nodes_total * per_node * nodes_total * per_node;
    if (entries > kMatrixGuard)
        throw TooLarge("extensive formulation matrix would be too large for the dense solver");
}

}  // namespace

LinearProgram extensive_form(const Instance& inst, std::int64_t support_limit) {
    guard_size(inst, 2, support_limit);
    Builder builder(inst, /*regularized=*/false);
    const StageNodeProblem& first = inst.nodes(1).front();

    Builder::StateRef root;
    root.constants = inst.x0;
    std::vector<int> y(first.internal_dim()), x(first.state_dim_out());
    for (std::size_t k = 0; k < y.size(); ++k)
        y[k] = builder.lp.add_var(first.y_bounds[k].first, first.y_bounds[k].second,
                                  first.cost_y[k]);
    for (std::size_t k = 0; k < x.size(); ++k)
        x[k] = builder.lp.add_var(first.x_bounds[k].first, first.x_bounds[k].second,
                                  first.cost_x[k]);
    for (const auto& row : first.rows) {
        std::vector<std::pair<int, double>> terms;
        double rhs = row.rhs;
        builder.add_state_terms(root, row.z, terms, &rhs);
        for (std::size_t k = 0; k < y.size(); ++k)
            if (row.y[k] != 0.0) terms.emplace_back(y[k], row.y[k]);
        for (std::size_t k = 0; k < x.size(); ++k)
            if (row.x[k] != 0.0) terms.emplace_back(x[k], row.x[k]);
        builder.lp.add_row(row.sense, rhs, terms);
    }
    double const_obj = first.cost_const;
    for (std::size_t k = 0; k < inst.x0.size(); ++k) const_obj += first.cost_z[k] * inst.x0[k];
    builder.lp.objective[builder.one] = const_obj;

    Builder::StateRef state1;
    state1.vars = x;
    const int c1 = builder.build_cost_to_go(1, state1);
    if (c1 >= 0) builder.lp.objective[c1] = 1.0;
    builder.lp.name = "EXT";
    return std::move(builder.lp);
}

double extensive_cost_to_go(const Instance& inst, int t, const Vec& x, bool regularized,
                            std::int64_t support_limit) {
    if (t < 1 || t > inst.T) throw InvalidParams("stage out of range");
    if (x.size() != inst.state_dim(t)) throw DimensionMismatch("state dimension mismatch");
    if (t == inst.T) return 0.0;
    guard_size(inst, t + 1, support_limit);
    if (regularized && !inst.regularized())
        throw InvalidParams("instance carries no regularization factors");

    Builder builder(inst, regularized);
    Builder::StateRef root;
    root.constants = x;
    const int c = builder.build_cost_to_go(t, root);
    builder.lp.objective[c] = 1.0;
    const LpSolution sol = solve_lp(builder.lp);
    if (sol.status == LpStatus::Infeasible) return kInf;
    if (sol.status != LpStatus::Optimal)
        throw NumericalBreakdown("extensive cost-to-go LP unbounded");
    return sol.objective_value;
}

double extensive_optimum(const Instance& inst, std::int64_t support_limit) {
    const LpSolution sol = solve_lp(extensive_form(inst, support_limit));
    if (sol.status == LpStatus::Infeasible)
        throw InfeasibleStage("extensive formulation is infeasible");
    if (sol.status != LpStatus::Optimal)
        throw NumericalBreakdown("extensive formulation unbounded");
    return sol.objective_value;
}

}  // namespace drmco

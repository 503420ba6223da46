#include "drmco/instances.hpp"

#include <algorithm>
#include <cmath>

namespace drmco {

namespace {

constexpr double kPi = 3.14159265358979323846;

Bound fin(double lo, double hi) { return {lo, hi}; }

}  // namespace

Instance gen_tiny2(Tiny2Ambiguity kind, double reg_factor) {
    Instance inst;
    inst.T = 2;
    inst.x0 = {0.0};
    inst.diameters = {1.0, 1.0};
    inst.reg_factors = Vec{reg_factor};

    StageNodeProblem first;
    first.cost_z = {0.0};
    first.cost_x = {1.0};
    first.x_bounds = {fin(0.0, 1.0)};
    inst.stages.push_back({first});

    StageNodeProblem node_a;  // value max(0, 1 - 2z)
    node_a.cost_z = {0.0};
    node_a.cost_y = {1.0};
    node_a.cost_x = {0.0};
    node_a.y_bounds = {fin(0.0, 10.0)};
    node_a.x_bounds = {fin(0.0, 1.0)};
    node_a.rows.push_back({{2.0}, {1.0}, {0.0}, Sense::Ge, 1.0});

    StageNodeProblem node_b;  // value z
    node_b.cost_z = {0.0};
    node_b.cost_y = {1.0};
    node_b.cost_x = {0.0};
    node_b.y_bounds = {fin(0.0, 10.0)};
    node_b.x_bounds = {fin(0.0, 1.0)};
    node_b.rows.push_back({{-1.0}, {1.0}, {0.0}, Sense::Ge, 0.0});
    inst.stages.push_back({node_a, node_b});

    switch (kind) {
        case Tiny2Ambiguity::Simplex:
            inst.ambiguity.push_back(AmbiguitySet::full_simplex(2));
            break;
        case Tiny2Ambiguity::HalfHalf:
            inst.ambiguity.push_back(AmbiguitySet::singleton({0.5, 0.5}));
            break;
        case Tiny2Ambiguity::Wasserstein:
            inst.ambiguity.push_back(
                AmbiguitySet::wasserstein({0.5, 0.5}, {{0.0, 1.0}, {1.0, 0.0}}, 0.25));
            break;
    }
    return inst;
}

Instance gen_pathological_chain(int stages, double reg_factor) {
    if (stages < 2) throw InvalidParams("chain needs at least 2 stages");
    StageNodeProblem node;
    node.cost_z = {0.0};
    node.cost_y = {1.0};
    node.cost_x = {0.0};
    node.y_bounds = {fin(0.0, 10.0)};
    node.x_bounds = {fin(0.0, 1.0)};
    node.rows.push_back({{2.0}, {1.0}, {0.0}, Sense::Ge, 1.0});    // y >= 1 - 2z
    node.rows.push_back({{-1.0}, {0.0}, {1.0}, Sense::Le, 0.5});   // x <= z + 1/2

    Instance inst;
    inst.T = stages;
    inst.x0 = {0.0};
    inst.diameters.assign(stages, 1.0);
    inst.reg_factors = Vec(stages - 1, reg_factor);
    for (int t = 0; t < stages; ++t) inst.stages.push_back({node});
    for (int t = 1; t < stages; ++t) inst.ambiguity.push_back(AmbiguitySet::singleton({1.0}));
    return inst;
}

Instance gen_inventory(const InventoryParams& params, bool with_recourse) {
    const int K = params.products;
    const int E = params.factors;
    const int T = params.stages;
    if (K < 1 || E < 1 || E > 20 || T < 2) throw InvalidParams("inventory parameters out of range");

    const double bound_express = with_recourse ? params.bound_express : 0.0;
    const double bound_level = with_recourse ? params.bound_level : 4.0;
    const double bound_standard = params.bound_standard;
    const double cumulative =
        params.cumulative_express >= 0.0 ? params.cumulative_express : 0.3 * K;

    Rng rng(params.seed);
    Vec express_cost(K), holding_cost(K), backlog_cost(K), standard_cost(K);
    for (int k = 0; k < K; ++k) {
        express_cost[k] = rng.uniform(params.express_cost_lo, params.express_cost_hi);
        holding_cost[k] = rng.uniform(params.holding_cost_lo, params.holding_cost_hi);
        backlog_cost[k] = rng.uniform(params.backlog_cost_lo, params.backlog_cost_hi);
        standard_cost[k] = rng.uniform(params.standard_cost_lo, params.standard_cost_hi);
    }
    // Factor loadings, one E-vector per stage and product.
    std::vector<std::vector<Vec>> phi(T, std::vector<Vec>(K, Vec(E)));
    for (int t = 0; t < T; ++t)
        for (int k = 0; k < K; ++k)
            for (int e = 0; e < E; ++e) phi[t][k][e] = rng.uniform(-1.0 / E, 1.0 / E);

    auto base_demand = [&](int t, int k) {
        const double arg = (t - 1) * kPi / 5.0;
        return 2 * (k + 1) <= K ? 2.0 + std::sin(arg) : 2.0 + std::cos(arg);
    };

    // State layout: (l_1..l_K, b_1..b_K); internal: (a_k, lplus_k, lminus_k).
    auto build_node = [&](int t, const Vec& xi) {
        StageNodeProblem node;
        node.cost_z.assign(2 * K, 0.0);
        node.cost_y.assign(3 * K, 0.0);
        node.cost_x.assign(2 * K, 0.0);
        node.cost_const = K * params.fixed_cost;
        node.y_bounds.resize(3 * K);
        node.x_bounds.resize(2 * K);
        for (int k = 0; k < K; ++k) {
            node.cost_y[k] = express_cost[k];
            node.cost_y[K + k] = holding_cost[k];
            node.cost_y[2 * K + k] = backlog_cost[k];
            node.cost_x[K + k] = standard_cost[k];
            node.y_bounds[k] = fin(0.0, bound_express);
            node.y_bounds[K + k] = fin(0.0, bound_level);
            node.y_bounds[2 * K + k] = fin(0.0, bound_level);
            node.x_bounds[k] = fin(-bound_level, bound_level);
            node.x_bounds[K + k] = fin(0.0, bound_standard);
        }
        for (int k = 0; k < K; ++k) {
            double demand = base_demand(t, k);
            for (int e = 0; e < E; ++e) demand += phi[t - 1][k][e] * xi[e];
            // l_k - a_k - b_prev_k - l_prev_k = -demand
            StageNodeProblem::Row balance;
            balance.z.assign(2 * K, 0.0);
            balance.y.assign(3 * K, 0.0);
            balance.x.assign(2 * K, 0.0);
            balance.z[k] = -1.0;
            balance.z[K + k] = -1.0;
            balance.y[k] = -1.0;
            balance.x[k] = 1.0;
            balance.sense = Sense::Eq;
            balance.rhs = -demand;
            node.rows.push_back(std::move(balance));
            // lplus_k - lminus_k - l_k = 0
            StageNodeProblem::Row split;
            split.z.assign(2 * K, 0.0);
            split.y.assign(3 * K, 0.0);
            split.x.assign(2 * K, 0.0);
            split.y[K + k] = 1.0;
            split.y[2 * K + k] = -1.0;
            split.x[k] = -1.0;
            split.sense = Sense::Eq;
            node.rows.push_back(std::move(split));
        }
        StageNodeProblem::Row cap;
        cap.z.assign(2 * K, 0.0);
        cap.y.assign(3 * K, 0.0);
        cap.x.assign(2 * K, 0.0);
        for (int k = 0; k < K; ++k) cap.y[k] = 1.0;
        cap.sense = Sense::Le;
        cap.rhs = cumulative;
        node.rows.push_back(std::move(cap));
        return node;
    };

    Instance inst;
    inst.T = T;
    inst.x0.assign(2 * K, 0.0);
    inst.diameters.assign(
        T, std::sqrt(K * (2.0 * bound_level) * (2.0 * bound_level) +
                     K * bound_standard * bound_standard));
    inst.reg_factors = Vec(T - 1, params.reg_factor);
    inst.stages.push_back({build_node(1, Vec(E, 0.0))});
    for (int t = 2; t <= T; ++t) {
        auto reform = vertices_to_dr(Vec(E, -1.0), Vec(E, 1.0),
                                     [&](const Vec& xi) { return build_node(t, xi); });
        inst.stages.push_back(std::move(reform.nodes));
        inst.ambiguity.push_back(std::move(reform.ambiguity));
    }
    return inst;
}

Instance gen_hydrothermal(const HydroParams& params) {
    const int K = params.regions;
    const int P = params.plants_per_region;
    const int T = params.stages;
    const int N = params.samples;
    if (K < 1 || P < 1 || T < 2 || N < 1 || params.beta < 0.0)
        throw InvalidParams("hydro parameters out of range");

    Rng rng(params.seed);
    std::vector<Vec> thermal_cost(K, Vec(P)), thermal_bound(K, Vec(P));
    for (int k = 0; k < K; ++k) {
        for (int p = 0; p < P; ++p) {
            thermal_cost[k][p] = rng.uniform(params.thermal_cost_lo, params.thermal_cost_hi);
            thermal_bound[k][p] = rng.uniform(params.thermal_bound_lo, params.thermal_bound_hi);
        }
    }
    const double sigma_log = params.inflow_log_std;
    const double scale = 0.5 * params.demand / std::exp(0.5 * sigma_log * sigma_log);
    // inflows[t-2][n][k] for stages 2..T; stage 1 uses the deterministic mean.
    std::vector<std::vector<Vec>> inflows(T - 1, std::vector<Vec>(N, Vec(K)));
    for (int t = 0; t < T - 1; ++t)
        for (int n = 0; n < N; ++n)
            for (int k = 0; k < K; ++k)
                inflows[t][n][k] = scale * std::exp(sigma_log * rng.normal());
    const Vec first_inflow(K, 0.5 * params.demand);

    const double spill_bound = params.storage_bound + 5.0 * params.demand;
    const int n_exchange = K * (K - 1);
    const int n_deficit = K * K;
    const int y_dim = K /*h*/ + K /*s*/ + K * P /*g*/ + n_exchange + n_deficit;
    auto h_at = [&](int k) { return k; };
    auto s_at = [&](int k) { return K + k; };
    auto g_at = [&](int k, int p) { return 2 * K + k * P + p; };
    // exchange e_{k,k'} for k' != k, packed row-major skipping the diagonal
    auto e_at = [&](int k, int kp) { return 2 * K + K * P + k * (K - 1) + (kp < k ? kp : kp - 1); };
    auto a_at = [&](int k, int kp) { return 2 * K + K * P + n_exchange + k * K + kp; };

    auto build_node = [&](const Vec& inflow) {
        StageNodeProblem node;
        node.cost_z.assign(K, 0.0);
        node.cost_y.assign(y_dim, 0.0);
        node.cost_x.assign(K, 0.0);
        node.y_bounds.resize(y_dim);
        node.x_bounds.assign(K, fin(0.0, params.storage_bound));
        for (int k = 0; k < K; ++k) {
            node.cost_y[h_at(k)] = 0.0;
            node.y_bounds[h_at(k)] = fin(0.0, params.hydro_bound);
            node.cost_y[s_at(k)] = params.spill_penalty;
            node.y_bounds[s_at(k)] = fin(0.0, spill_bound);
            for (int p = 0; p < P; ++p) {
                node.cost_y[g_at(k, p)] = thermal_cost[k][p];
                node.y_bounds[g_at(k, p)] = fin(0.0, thermal_bound[k][p]);
            }
            for (int kp = 0; kp < K; ++kp) {
                if (kp != k) {
                    node.cost_y[e_at(k, kp)] = params.exchange_cost;
                    node.y_bounds[e_at(k, kp)] = fin(0.0, params.exchange_bound);
                }
                node.cost_y[a_at(k, kp)] = params.deficit_cost;
                node.y_bounds[a_at(k, kp)] = fin(0.0, params.deficit_bound);
            }
        }
        for (int k = 0; k < K; ++k) {
            // l_k + h_k + s_k - l_prev_k = inflow_k
            StageNodeProblem::Row storage;
            storage.z.assign(K, 0.0);
            storage.y.assign(y_dim, 0.0);
            storage.x.assign(K, 0.0);
            storage.z[k] = -1.0;
            storage.y[h_at(k)] = 1.0;
            storage.y[s_at(k)] = 1.0;
            storage.x[k] = 1.0;
            storage.sense = Sense::Eq;
            storage.rhs = inflow[k];
            node.rows.push_back(std::move(storage));
            // h_k + sum_p g_kp + sum_k' (a_kk' - e_kk' + e_k'k) = demand
            StageNodeProblem::Row balance;
            balance.z.assign(K, 0.0);
            balance.y.assign(y_dim, 0.0);
            balance.x.assign(K, 0.0);
            balance.y[h_at(k)] = 1.0;
            for (int p = 0; p < P; ++p) balance.y[g_at(k, p)] = 1.0;
            for (int kp = 0; kp < K; ++kp) {
                balance.y[a_at(k, kp)] += 1.0;
                if (kp != k) {
                    balance.y[e_at(k, kp)] -= 1.0;
                    balance.y[e_at(kp, k)] += 1.0;
                }
            }
            balance.sense = Sense::Eq;
            balance.rhs = params.demand;
            node.rows.push_back(std::move(balance));
        }
        return node;
    };

    Instance inst;
    inst.T = T;
    inst.x0.assign(K, params.initial_fill * params.storage_bound);
    inst.diameters.assign(T, params.storage_bound * std::sqrt(static_cast<double>(K)));
    inst.reg_factors = Vec(T - 1, params.reg_factor);
    inst.stages.push_back({build_node(first_inflow)});
    for (int t = 2; t <= T; ++t) {
        std::vector<StageNodeProblem> nodes;
        for (int n = 0; n < N; ++n) nodes.push_back(build_node(inflows[t - 2][n]));
        inst.stages.push_back(std::move(nodes));

        std::vector<Vec> dist(N, Vec(N, 0.0));
        double total = 0.0;
        for (int m = 0; m < N; ++m) {
            for (int n = 0; n < N; ++n) {
                Vec diff(K);
                for (int k = 0; k < K; ++k) diff[k] = inflows[t - 2][m][k] - inflows[t - 2][n][k];
                dist[m][n] = norm_2(diff);
                total += dist[m][n];
            }
        }
        inst.ambiguity.push_back(
            AmbiguitySet::wasserstein(Vec(N, 1.0 / N), std::move(dist), params.beta * total));
    }
    return inst;
}

double cap_packing_lower_bound(int d, double r, double theta) {
    const double dd = static_cast<double>(d);
    return (dd * dd - 1.0) * std::sqrt(kPi) / dd * std::tgamma(dd / 2.0 + 1.0) /
           std::tgamma(dd / 2.0 + 1.5) * std::pow(r / (2.0 * theta), (dd - 1.0) / 2.0);
}

std::vector<Vec> sphere_cap_points(int d, double r, double theta, long budget,
                                   std::uint64_t seed) {
    if (d < 2) throw InvalidParams("cap packing needs sphere dimension >= 2");
    if (!(r > 0.0)) throw InvalidParams("sphere radius must be positive");
    if (!(theta > 0.0) || theta >= (1.0 - std::sqrt(2.0) / 2.0) * r)
        throw InvalidDepth("cap depth must lie in (0, (1 - sqrt(2)/2) r)");
    if (budget <= 0)
        budget = static_cast<long>(10.0 * cap_packing_lower_bound(d, r, theta)) + 50;

    Rng rng(seed);
    std::vector<Vec> points;
    long rejections_in_a_row = 0;
    while (rejections_in_a_row < budget) {
        Vec w(d + 1);
        double norm = 0.0;
        do {
            for (int i = 0; i <= d; ++i) w[i] = rng.normal();
            norm = norm_2(w);
        } while (norm < 1e-12);
        for (int i = 0; i <= d; ++i) w[i] *= r / norm;
        bool excluded = true;
        for (const Vec& other : points) {
            if (dot(w, other) - r * r >= -theta * r) {
                excluded = false;
                break;
            }
        }
        if (excluded) {
            points.push_back(std::move(w));
            rejections_in_a_row = 0;
        } else {
            ++rejections_in_a_row;
        }
    }
    return points;
}

WorstCaseInstance gen_worstcase(const WorstCaseParams& params) {
    const int T = params.stages;
    const int d = params.dim;
    if (T < 3) throw InvalidParams("worst-case family needs T >= 3");
    if (d < 3) throw InvalidParams("worst-case family needs state dimension >= 3");
    const double L = params.lipschitz;
    const double r = params.diameter / 2.0;
    if (!(L > 0.0) || !(r > 0.0) || !(params.epsilon > 0.0))
        throw InvalidParams("worst-case scales must be positive");

    WorstCaseInstance out;
    out.slopes.resize(T);
    for (int t = 1; t <= T; ++t)
        out.slopes[t - 1] = L * (1.0 - 0.5 * (t - 1) / (T - 1));  // L down to L/2
    const double eps_t = 2.0 * params.epsilon / (T - 2);
    out.gaps.assign(T, eps_t);
    out.depths.assign(T, 0.0);
    out.points.resize(T);
    out.values.resize(T);

    Rng value_rng(params.seed ^ 0x9e3779b97f4a7c15ULL);
    for (int t = 2; t <= T; ++t) {
        const double theta = eps_t / out.slopes[t - 1];
        out.depths[t - 1] = theta;
        out.points[t - 1] = sphere_cap_points(d - 1, r, theta, params.budget,
                                              params.seed + 1000003ULL * t);
        if (t < T) {
            Vec v(out.points[t - 1].size());
            for (double& val : v) val = value_rng.uniform(eps_t / 2.0, eps_t);
            out.values[t - 1] = std::move(v);
        }
    }

    // F never exceeds eps_t + (l/r) |w| |x - w| <= eps + L r (sqrt(d) + 1) on the box
    const double u_max = params.epsilon + L * r * (std::sqrt(static_cast<double>(d)) + 1.0) + 1.0;
    auto build_node = [&](int s, const Vec& target) {
        // Stage-s node for uncertainty point `target`: cost is the previous
        // stage's max-of-affine function of the incoming state plus a 1-norm
        // transport penalty pulling the outgoing state to the target.
        const bool has_f = s >= 3;
        const double slope = out.slopes[s - 2];  // l_{s-1}
        StageNodeProblem node;
        node.cost_z.assign(d, 0.0);
        node.cost_x.assign(d, 0.0);
        const int y_dim = (has_f ? 1 : 0) + d;
        node.cost_y.assign(y_dim, 0.0);
        node.y_bounds.resize(y_dim);
        node.x_bounds.assign(d, fin(-r, r));
        const int u = has_f ? 0 : -1;
        const int pen0 = has_f ? 1 : 0;
        if (has_f) {
            node.cost_y[u] = 1.0;
            node.y_bounds[u] = fin(0.0, u_max);
            const auto& anchors = out.points[s - 2];
            const Vec& vals = out.values[s - 2];
            for (std::size_t k = 0; k < anchors.size(); ++k) {
                StageNodeProblem::Row row;  // u - (l/r) <w_k, z> >= v_k - l r
                row.z.assign(d, 0.0);
                row.y.assign(y_dim, 0.0);
                row.x.assign(d, 0.0);
                for (int j = 0; j < d; ++j) row.z[j] = -slope / r * anchors[k][j];
                row.y[u] = 1.0;
                row.sense = Sense::Ge;
                row.rhs = vals[k] - slope * r;
                node.rows.push_back(std::move(row));
            }
        }
        for (int j = 0; j < d; ++j) {
            node.cost_y[pen0 + j] = slope;
            node.y_bounds[pen0 + j] = fin(0.0, params.diameter + 1.0);
            StageNodeProblem::Row lo;  // pen_j + x_j >= target_j
            lo.z.assign(d, 0.0);
            lo.y.assign(y_dim, 0.0);
            lo.x.assign(d, 0.0);
            lo.y[pen0 + j] = 1.0;
            lo.x[j] = 1.0;
            lo.sense = Sense::Ge;
            lo.rhs = target[j];
            node.rows.push_back(std::move(lo));
            StageNodeProblem::Row hi;  // pen_j - x_j >= -target_j
            hi.z.assign(d, 0.0);
            hi.y.assign(y_dim, 0.0);
            hi.x.assign(d, 0.0);
            hi.y[pen0 + j] = 1.0;
            hi.x[j] = -1.0;
            hi.sense = Sense::Ge;
            hi.rhs = -target[j];
            node.rows.push_back(std::move(hi));
        }
        return node;
    };

    Instance& inst = out.instance;
    inst.T = T;
    inst.x0.assign(d, 0.0);
    inst.diameters.assign(T, 2.0 * r * std::sqrt(static_cast<double>(d)));
    inst.reg_factors = Vec(T - 1, L);

    StageNodeProblem first;  // x_1 pinned to the origin, zero cost
    first.cost_z.assign(d, 0.0);
    first.cost_x.assign(d, 0.0);
    first.x_bounds.assign(d, fin(0.0, 0.0));
    inst.stages.push_back({first});
    for (int s = 2; s <= T; ++s) {
        std::vector<StageNodeProblem> nodes;
        for (const Vec& target : out.points[s - 1]) nodes.push_back(build_node(s, target));
        inst.stages.push_back(std::move(nodes));
        inst.ambiguity.push_back(AmbiguitySet::full_simplex(out.points[s - 1].size()));
    }
    return out;
}

}  // namespace drmco

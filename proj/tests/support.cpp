#include "support.hpp"

#include <cmath>

#include "drmco/ambiguity.hpp"

namespace drmco::testing {

Instance make_random_small(std::uint64_t seed) {
    Rng rng(seed);
    const int T = 3;
    std::vector<int> dims(T + 1);
    dims[0] = 1;  // matches x0
    for (int t = 1; t <= T; ++t) dims[t] = 1 + static_cast<int>(rng.uniform_int(0, 1));
    std::vector<int> node_counts(T + 1);
    node_counts[1] = 1;
    for (int t = 2; t <= T; ++t) node_counts[t] = 2 + static_cast<int>(rng.uniform_int(0, 1));

    auto build_node = [&](int t) {
        const int dz = dims[t - 1];
        const int dx = dims[t];
        StageNodeProblem node;
        node.cost_z.assign(dz, 0.0);
        node.cost_y = {1.0};
        node.cost_x.assign(dx, 0.0);
        for (int k = 0; k < dx; ++k) node.cost_x[k] = rng.uniform(0.0, 0.5);
        node.cost_const = 0.1;
        node.y_bounds = {{0.0, 50.0}};
        node.x_bounds.assign(dx, {0.0, 1.0});
        StageNodeProblem::Row row;  // y + h.z >= g, so y* = max(0, g - h.z)
        row.z.assign(dz, 0.0);
        row.y = {1.0};
        row.x.assign(dx, 0.0);
        for (int k = 0; k < dz; ++k) row.z[k] = rng.uniform(-2.0, 2.0);
        row.sense = Sense::Ge;
        row.rhs = rng.uniform(0.0, 2.0);
        node.rows.push_back(std::move(row));
        return node;
    };

    Instance inst;
    inst.T = T;
    inst.x0 = {0.0};
    inst.diameters.resize(T);
    for (int t = 1; t <= T; ++t) inst.diameters[t - 1] = std::sqrt(static_cast<double>(dims[t]));
    inst.reg_factors = Vec(T - 1, 10.0);
    for (int t = 1; t <= T; ++t) {
        std::vector<StageNodeProblem> nodes;
        for (int n = 0; n < node_counts[t]; ++n) nodes.push_back(build_node(t));
        inst.stages.push_back(std::move(nodes));
    }
    for (int t = 1; t < T; ++t) {
        const int n = node_counts[t + 1];
        switch (static_cast<int>(rng.uniform_int(0, 2))) {
            case 0: {
                Vec p(n);
                double total = 0.0;
                for (double& v : p) {
                    v = rng.uniform(0.1, 1.0);
                    total += v;
                }
                for (double& v : p) v /= total;
                inst.ambiguity.push_back(AmbiguitySet::singleton(p));
                break;
            }
            case 1:
                inst.ambiguity.push_back(AmbiguitySet::full_simplex(n));
                break;
            default: {
                std::vector<Vec> dist(n, Vec(n, 0.0));
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) dist[i][j] = std::abs(i - j) * 1.5;
                const double beta = rng.uniform(0.01, 0.2);
                double total = 0.0;
                for (const auto& row : dist)
                    for (double v : row) total += v;
                inst.ambiguity.push_back(
                    AmbiguitySet::wasserstein(Vec(n, 1.0 / n), std::move(dist), beta * total));
                break;
            }
        }
    }
    return inst;
}

}  // namespace drmco::testing

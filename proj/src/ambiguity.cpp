#include "drmco/ambiguity.hpp"

#include <cmath>

#include "drmco/lp.hpp"

namespace drmco {

namespace {

constexpr double kSimplexTol = 1e-12;
constexpr double kMembershipTol = 1e-8;

void check_probability(const Vec& p) {
    double sum = 0.0;
    for (double v : p) {
        if (v < -kSimplexTol) throw InvalidParams("probability entry is negative");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTol)
        throw InvalidParams("probability vector does not sum to one");
}

}  // namespace

AmbiguitySet AmbiguitySet::singleton(Vec p) {
    AmbiguitySet set;
    set.kind = AmbiguityKind::Singleton;
    set.support = p.size();
    set.p_hat = std::move(p);
    set.check();
    return set;
}

AmbiguitySet AmbiguitySet::full_simplex(std::size_t n) {
    AmbiguitySet set;
    set.kind = AmbiguityKind::FullSimplex;
    set.support = n;
    set.check();
    return set;
}

AmbiguitySet AmbiguitySet::wasserstein(Vec p, std::vector<Vec> dist, double sigma) {
    AmbiguitySet set;
    set.kind = AmbiguityKind::WassersteinBall;
    set.support = p.size();
    set.p_hat = std::move(p);
    set.dist = std::move(dist);
    set.sigma = sigma;
    set.check();
    return set;
}

void AmbiguitySet::check() const {
    if (support == 0) throw InvalidParams("ambiguity set needs at least one node");
    switch (kind) {
        case AmbiguityKind::FullSimplex:
            return;
        case AmbiguityKind::Singleton:
            if (p_hat.size() != support) throw InvalidParams("center length mismatch");
            check_probability(p_hat);
            return;
        case AmbiguityKind::WassersteinBall:
            if (p_hat.size() != support) throw InvalidParams("center length mismatch");
            check_probability(p_hat);
            if (sigma < 0.0) throw InvalidParams("Wasserstein radius is negative");
            if (dist.size() != support) throw InvalidParams("distance matrix shape mismatch");
            for (std::size_t i = 0; i < support; ++i) {
                if (dist[i].size() != support) throw InvalidParams("distance matrix shape mismatch");
                if (dist[i][i] != 0.0) throw InvalidParams("distance matrix diagonal must be zero");
                for (std::size_t j = 0; j < support; ++j) {
                    if (dist[i][j] < 0.0) throw InvalidParams("negative distance entry");
                    if (std::abs(dist[i][j] - dist[j][i]) > 1e-12)
                        throw InvalidParams("distance matrix must be symmetric");
                }
            }
            return;
    }
}

WorstCase worst_case_distribution(const AmbiguitySet& set, const Vec& v) {
    if (v.size() != set.support) throw DimensionMismatch("value vector length mismatch");
    for (double val : v)
        if (!std::isfinite(val)) throw InvalidParams("value vector must be finite");
    const std::size_t n = set.support;

    if (set.kind == AmbiguityKind::Singleton) {
        return WorstCase{set.p_hat, dot(set.p_hat, v)};
    }

    // LP over the feasible distributions; maximization via negated costs so
    // the fixed pivot rule settles ties.
    LinearProgram lp;
    for (std::size_t i = 0; i < n; ++i) lp.add_var(0.0, 1.0, -v[i]);
    {
        std::vector<std::pair<int, double>> terms;
        for (std::size_t i = 0; i < n; ++i) terms.emplace_back(static_cast<int>(i), 1.0);
        lp.add_row(Sense::Eq, 1.0, terms);
    }
    if (set.kind == AmbiguityKind::WassersteinBall) {
        // Transport plan u[m][n]: row sums give p, column sums match p_hat,
        // total cost bounded by sigma.
        std::vector<std::vector<int>> u(n, std::vector<int>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) u[i][j] = lp.add_var(0.0, 1.0, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<std::pair<int, double>> terms{{static_cast<int>(i), -1.0}};
            for (std::size_t j = 0; j < n; ++j) terms.emplace_back(u[i][j], 1.0);
            lp.add_row(Sense::Eq, 0.0, terms);
        }
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<std::pair<int, double>> terms;
            for (std::size_t i = 0; i < n; ++i) terms.emplace_back(u[i][j], 1.0);
            lp.add_row(Sense::Eq, set.p_hat[j], terms);
        }
        std::vector<std::pair<int, double>> cost_terms;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (set.dist[i][j] != 0.0) cost_terms.emplace_back(u[i][j], set.dist[i][j]);
        lp.add_row(Sense::Le, set.sigma, cost_terms);
    }

    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal)
        throw NumericalBreakdown("worst-case distribution LP did not solve");
    WorstCase out;
    out.p_star.assign(sol.primal.begin(), sol.primal.begin() + n);
    out.value = -sol.objective_value;
    return out;
}

double wasserstein_distance(const Vec& p, const Vec& q, const std::vector<Vec>& dist) {
    const std::size_t n = p.size();
    if (q.size() != n || dist.size() != n) throw DimensionMismatch("transport dimensions mismatch");
    check_probability(p);
    check_probability(q);
    LinearProgram lp;
    std::vector<std::vector<int>> u(n, std::vector<int>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (dist[i].size() != n) throw DimensionMismatch("distance matrix shape mismatch");
        for (std::size_t j = 0; j < n; ++j) u[i][j] = lp.add_var(0.0, 1.0, dist[i][j]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<int, double>> terms;
        for (std::size_t j = 0; j < n; ++j) terms.emplace_back(u[i][j], 1.0);
        lp.add_row(Sense::Eq, p[i], terms);
    }
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<std::pair<int, double>> terms;
        for (std::size_t i = 0; i < n; ++i) terms.emplace_back(u[i][j], 1.0);
        lp.add_row(Sense::Eq, q[j], terms);
    }
    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal)
        throw NumericalBreakdown("transport LP did not solve");
    return sol.objective_value;
}

bool membership(const AmbiguitySet& set, const Vec& p) {
    if (p.size() != set.support) return false;
    double sum = 0.0;
    for (double v : p) {
        if (v < -kMembershipTol) return false;
        sum += v;
    }
    if (std::abs(sum - 1.0) > kMembershipTol) return false;
    switch (set.kind) {
        case AmbiguityKind::FullSimplex:
            return true;
        case AmbiguityKind::Singleton: {
            for (std::size_t i = 0; i < p.size(); ++i)
                if (std::abs(p[i] - set.p_hat[i]) > kMembershipTol) return false;
            return true;
        }
        case AmbiguityKind::WassersteinBall: {
            // Project tiny negatives and renormalize before the transport LP.
            Vec clipped = p;
            double total = 0.0;
            for (double& v : clipped) {
                v = std::max(v, 0.0);
                total += v;
            }
            for (double& v : clipped) v /= total;
            return wasserstein_distance(clipped, set.p_hat, set.dist) <= set.sigma + kMembershipTol;
        }
    }
    return false;
}

}  // namespace drmco

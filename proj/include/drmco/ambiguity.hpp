#pragma once

#include <vector>

#include "drmco/common.hpp"

namespace drmco {

enum class AmbiguityKind { Singleton, FullSimplex, WassersteinBall };

/// Distribution family over one stage's nodes: a closed convex subset of the
/// probability simplex.
struct AmbiguitySet {
    AmbiguityKind kind = AmbiguityKind::FullSimplex;
    std::size_t support = 0;            // number of nodes
    Vec p_hat;                          // Singleton / WassersteinBall center
    std::vector<Vec> dist;              // WassersteinBall: symmetric, zero diagonal
    double sigma = 0.0;                 // WassersteinBall radius

    static AmbiguitySet singleton(Vec p);
    static AmbiguitySet full_simplex(std::size_t n);
    static AmbiguitySet wasserstein(Vec p, std::vector<Vec> dist, double sigma);

    /// Throws InvalidParams on malformed data (center off the simplex,
    /// asymmetric distances, negative radius).
    void check() const;
};

struct WorstCase {
    Vec p_star;
    double value = 0.0;
};

/// max_{p in set} p.v, LP-exact; ties resolved by the deterministic simplex
/// pivot order.
WorstCase worst_case_distribution(const AmbiguitySet& set, const Vec& v);

/// Optimal-transport distance between finitely supported p and q under the
/// given cost matrix.
double wasserstein_distance(const Vec& p, const Vec& q, const std::vector<Vec>& dist);

/// True iff p lies on the simplex and, for a Wasserstein ball, within
/// sigma + 1e-8 of the center.
bool membership(const AmbiguitySet& set, const Vec& p);

}  // namespace drmco

#pragma once

#include <cstdint>
#include <vector>

#include "drmco/common.hpp"
#include "drmco/model.hpp"

namespace drmco {

/// Multi-commodity inventory control with box demand uncertainty turned into
/// finite support by vertex enumeration.
struct InventoryParams {
    int products = 5;        // K
    int factors = 4;         // E
    int stages = 10;         // T
    double bound_express = 10.0;    // B^a per product
    double bound_standard = 10.0;   // B^b per product
    double bound_level = 10.0;      // B^l per product
    double cumulative_express = -1.0;  // B^c; negative means 0.3 * K
    double fixed_cost = 1.0;        // c^F
    double express_cost_lo = 1.0, express_cost_hi = 3.0;  // c^a range
    double holding_cost_lo = 0.0, holding_cost_hi = 2.0;  // c^H range
    double backlog_cost_lo = 0.0, backlog_cost_hi = 2.0;  // c^B range
    double standard_cost_lo = 1.0, standard_cost_hi = 1.0;  // c^b range
    double reg_factor = 100.0;
    std::uint64_t seed = 0;
};

/// with_recourse=false drops the express channel and shrinks the inventory
/// band so that high-demand vertices are infeasible from reachable states.
Instance gen_inventory(const InventoryParams& params, bool with_recourse);

/// Hydro-thermal planning over interconnected regions with sampled lognormal
/// inflows and a Wasserstein ambiguity ball per stage.
struct HydroParams {
    int regions = 4;            // K
    int plants_per_region = 3;  // |L_k|
    int stages = 6;             // T
    int samples = 3;            // N per stage
    double demand = 5.0;        // flat per region and stage
    double storage_bound = 10.0;
    double hydro_bound = 3.0;
    double thermal_cost_lo = 1.0, thermal_cost_hi = 3.0;
    double thermal_bound_lo = 0.5, thermal_bound_hi = 1.5;
    double spill_penalty = 0.1;
    double exchange_cost = 0.5;
    double deficit_cost = 10.0;
    double exchange_bound = 2.0;
    double deficit_bound = 10.0;
    double inflow_log_std = 0.5;  // log-mean 0, scaled to half the demand in expectation
    double initial_fill = 0.5;    // x0 as a fraction of the storage bound
    double beta = 0.0;            // Wasserstein radius relative to total distances
    double reg_factor = 50.0;
    std::uint64_t seed = 0;
};

Instance gen_hydrothermal(const HydroParams& params);

/// Deterministic chain whose first-pass cut slopes grow linearly with the
/// stage count unless regularized.
Instance gen_pathological_chain(int stages, double reg_factor = 3.0);

/// Two-stage didactic instance: one state in [0,1], a node with value
/// max(0, 1-2x) and a node with value x.
enum class Tiny2Ambiguity { Simplex, HalfHalf, Wasserstein };
Instance gen_tiny2(Tiny2Ambiguity kind, double reg_factor = 5.0);

/// Greedy maximal packing of depth-theta caps on the d-sphere of radius r in
/// R^{d+1}: no accepted point lies in another's cap. Sampling stops after
/// `budget` consecutive rejections (budget <= 0 picks a default).
std::vector<Vec> sphere_cap_points(int d, double r, double theta, long budget,
                                   std::uint64_t seed);

/// Volume lower bound on the size of a maximal cap packing.
double cap_packing_lower_bound(int d, double r, double theta);

/// Worst-case family: stages indexed by cap packings on the state sphere,
/// max-of-affine stage costs plus a shrinking-Lipschitz transport penalty.
struct WorstCaseParams {
    int stages = 4;   // T >= 3
    int dim = 3;      // d >= 3
    double lipschitz = 1.0;  // L
    double diameter = 2.0;   // D = 2r
    double epsilon = 0.05;   // target optimality gap
    long budget = 0;
    std::uint64_t seed = 0;
};

struct WorstCaseInstance {
    Instance instance;
    std::vector<std::vector<Vec>> points;  // points[t-1]: cap packing for stage t (t >= 2)
    std::vector<Vec> values;               // values[t-1]: v_{t,k} for stages 2..T-1
    Vec slopes;                            // l_t per stage 1..T
    Vec gaps;                              // eps_t per stage
    Vec depths;                            // theta_t per stage
};

WorstCaseInstance gen_worstcase(const WorstCaseParams& params);

}  // namespace drmco

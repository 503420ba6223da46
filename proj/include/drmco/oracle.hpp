#pragma once

#include <vector>

#include "drmco/approx.hpp"
#include "drmco/common.hpp"
#include "drmco/model.hpp"

namespace drmco {

/// Per-node diagnostics from one noninitial oracle call.
struct OracleNodeDiag {
    double under_value = 0.0;   // node value against the under-approximation
    double over_value = kInf;   // node value against the over-approximation
    double gap = kInf;          // over minus under at the node's optimal state
    Vec next_state;             // the node's optimal outgoing state
    Vec cut_gradient;           // duals of the incoming-state copy rows
};

struct OracleResult {
    Cut cut;                    // valid under-cut for the previous stage, anchored at x_in
    double over_estimate = kInf;
    Vec next_state;
    double gap = kInf;
    std::vector<OracleNodeDiag> per_node;
    Vec worst_case_p;           // maximizer over the node under-values
};

struct InitialResult {
    Vec x1;
    Vec y1;
    double gamma = kInf;        // over minus under at x1
    double lower_bound = 0.0;   // stage cost plus under-approximation at x1
    double stage_cost = 0.0;    // f_1(x0, y1, x1)
};

/// Solves the first-stage problem against the stage-1 cut pool and reports
/// the approximation gap at the minimizer.
InitialResult initial_oracle(const Instance& inst, const CutPool& under,
                             const EnvelopePool& over);

/// One noninitial-stage oracle call at incoming state x_in: per node an
/// under pass (penalized copy of the incoming state, duals give the cut),
/// a gap evaluation, and an over pass against the envelope; the node results
/// combine through the stage's ambiguity set. The per-node loop runs on up
/// to `threads` OpenMP threads; results do not depend on the thread count.
OracleResult noninitial_oracle(const Instance& inst, int t, const Vec& x_in,
                               const CutPool& under, const EnvelopePool& over,
                               int threads = 1);

/// Diagnostic mode without the regularization penalty: the incoming-state
/// copy is pinned to x_in, so the cut gradient is not capped and stages
/// without relatively complete recourse raise InfeasibleStage.
Cut unregularized_cut(const Instance& inst, int t, const Vec& x_in, const CutPool& under);

}  // namespace drmco

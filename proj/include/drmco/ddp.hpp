#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "drmco/approx.hpp"
#include "drmco/common.hpp"
#include "drmco/model.hpp"

namespace drmco {

enum class SolveMode { SeqDDP, NDDP };
enum class SolveStatus { Converged, IterLimit, TimeLimit, Infeasible };

struct GapSchedule {
    enum class Kind { None, Static, DynamicRelative };
    Kind kind = Kind::None;
    Vec deltas;          // Static: one value per stage, strictly decreasing to 0
    double alpha = 0.0;  // DynamicRelative: delta_t = LB * alpha * (T-t)/(T-1)

    static GapSchedule none() { return {}; }
    static GapSchedule fixed(Vec deltas);
    static GapSchedule dynamic_relative(double alpha);
};

struct SolveConfig {
    SolveMode mode = SolveMode::SeqDDP;
    std::optional<double> epsilon;   // absolute optimality gap
    std::optional<double> rel_gap;   // relative optimality gap (alpha)
    GapSchedule schedule;            // NDDP only
    long max_iterations = 100000;
    double max_wall_seconds = kInf;
    std::uint64_t rng_seed = 0;
    int threads = 1;
    bool adaptive_m = false;         // grow M and reset envelopes when cut slopes saturate
};

struct IterationRecord {
    long iteration = 0;
    std::vector<int> stage_path;     // stages whose oracle ran since the last record
    double lower_bound = 0.0;
    double upper_bound = kInf;
    Vec stage_gaps;                  // latest gamma_t per stage
    long n_eval = 0;
    double wall_ms = 0.0;
};

struct SolveLog {
    std::vector<IterationRecord> records;
    SolveStatus status = SolveStatus::IterLimit;
    std::string message;
};

struct Solution {
    Vec x1;
    Vec y1;
    double lower_bound = 0.0;
    double upper_bound = kInf;
    long n_eval = 0;
};

struct WarmStart {
    std::vector<CutPool> under;        // one per stage 1..T
    std::vector<EnvelopePool> over;
};

/// Observer invoked after each bound update; receives the live pools.
using IterationCallback = std::function<void(const IterationRecord&, const std::vector<CutPool>&,
                                             const std::vector<EnvelopePool>&)>;

std::pair<Solution, SolveLog> solve_seq_ddp(const Instance& inst, const SolveConfig& cfg,
                                            const IterationCallback& callback = nullptr,
                                            const WarmStart* warm = nullptr);

std::pair<Solution, SolveLog> solve_nddp(const Instance& inst, const SolveConfig& cfg,
                                         const IterationCallback& callback = nullptr,
                                         const WarmStart* warm = nullptr);

/// Dispatches on cfg.mode.
std::pair<Solution, SolveLog> solve(const Instance& inst, const SolveConfig& cfg,
                                    const IterationCallback& callback = nullptr,
                                    const WarmStart* warm = nullptr);

struct BoundParams {
    int T = 0;
    Vec dims;       // d_t, one per stage 1..T-1
    Vec diameters;  // D_t
    Vec lipschitz;  // M_t
    std::optional<Vec> delta;      // analysis gap vector, one per stage 1..T
    std::optional<double> epsilon; // default schedule delta_t = eps (T-t)/(T-1)
    std::optional<double> alpha;   // together with C: delta_t = (T-t) alpha C
    std::optional<double> C;
};

/// Closed-form oracle-evaluation bounds: 1 + T * sum_t (1 + 2 M_t D_t /
/// (delta_t - delta_{t+1}))^{d_t} for the sequential driver and 1 + 2 * the
/// same sum for the nonsequential one.
double eval_upper_bound(const BoundParams& params, SolveMode mode);

}  // namespace drmco

#include "drmco/ddp.hpp"

#include <chrono>
#include <cmath>

#include "drmco/oracle.hpp"

namespace drmco {

GapSchedule GapSchedule::fixed(Vec deltas) {
    GapSchedule s;
    s.kind = Kind::Static;
    s.deltas = std::move(deltas);
    return s;
}

GapSchedule GapSchedule::dynamic_relative(double alpha) {
    GapSchedule s;
    s.kind = Kind::DynamicRelative;
    s.alpha = alpha;
    return s;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct Driver {
    Instance work;  // local copy: adaptive-M escalation rewrites reg_factors
    const SolveConfig& cfg;
    const IterationCallback& callback;
    std::vector<CutPool> under;      // index t-1
    std::vector<EnvelopePool> over;  // index t-1
    SolveLog log;
    Solution best;
    double lb = 0.0;
    double ub = kInf;
    long n_eval = 0;
    long records_emitted = 0;
    Vec stage_gaps;
    std::vector<int> path_since_record;
    Clock::time_point start = Clock::now();
    int escalations = 0;

    Driver(const Instance& inst, const SolveConfig& cfg_, const IterationCallback& cb,
           const WarmStart* warm)
        : work(inst), cfg(cfg_), callback(cb) {
        if (cfg.epsilon.has_value() == cfg.rel_gap.has_value())
            throw InvalidParams("configure exactly one of epsilon or rel_gap");
        if (cfg.epsilon && !(*cfg.epsilon > 0.0)) throw InvalidParams("epsilon must be positive");
        if (cfg.rel_gap && !(*cfg.rel_gap > 0.0)) throw InvalidParams("rel_gap must be positive");
        make_pools();
        if (warm != nullptr) adopt_warm_start(*warm);
        stage_gaps.assign(work.T, kInf);
        if (work.T >= 1) stage_gaps[work.T - 1] = 0.0;  // gamma_T convention
    }

    void make_pools() {
        under.clear();
        over.clear();
        for (int t = 1; t <= work.T; ++t) {
            if (t == work.T) {
                under.emplace_back(t, std::nullopt);
                over.push_back(EnvelopePool::terminal(t));
            } else {
                std::optional<double> cap;
                if (work.regularized()) cap = work.reg_factor(t);
                under.emplace_back(t, cap);
                over.emplace_back(t, work.regularized() ? work.reg_factor(t) : kInf);
            }
        }
    }

    void adopt_warm_start(const WarmStart& warm) {
        for (const CutPool& pool : warm.under) {
            const int t = pool.stage();
            if (t < 1 || t >= work.T) continue;
            for (const Cut& cut : pool.cuts()) under[t - 1].add_cut(cut);
        }
        for (const EnvelopePool& pool : warm.over) {
            const int t = pool.stage();
            if (t < 1 || t >= work.T) continue;
            for (const EnvelopePoint& pt : pool.points()) over[t - 1].add_point(pt);
        }
    }

    bool tolerance_met() const {
        const double gap = ub - lb;
        if (cfg.epsilon) return gap <= *cfg.epsilon;
        return lb > 0.0 && gap <= *cfg.rel_gap * lb;
    }

    double nddp_delta(int t, double lower_bound) const {
        if (t >= work.T) return 0.0;
        switch (cfg.schedule.kind) {
            case GapSchedule::Kind::Static:
                return cfg.schedule.deltas[t - 1];
            case GapSchedule::Kind::DynamicRelative:
                return lower_bound * cfg.schedule.alpha * (work.T - t) /
                       std::max(work.T - 1, 1);
            case GapSchedule::Kind::None:
                break;
        }
        throw ScheduleError("nonsequential driver needs a gap schedule");
    }

    void emit_record(std::vector<int> path) {
        IterationRecord rec;
        rec.iteration = records_emitted++;
        rec.stage_path = std::move(path);
        rec.lower_bound = lb;
        rec.upper_bound = ub;
        rec.stage_gaps = stage_gaps;
        rec.n_eval = n_eval;
        rec.wall_ms = elapsed_ms(start);
        log.records.push_back(rec);
        if (callback) callback(rec, under, over);
    }

    // Once the relative gap is under 5%, grow M when the cuts active at the
    // visited states touch the cap, and restart the envelopes (cuts stay
    // valid for the larger factor).
    bool maybe_escalate(const std::vector<Vec>& visited_states) {
        if (!cfg.adaptive_m || !work.regularized()) return false;
        if (!(lb > 0.0) || !std::isfinite(ub) || (ub - lb) > 0.05 * lb) return false;
        bool saturated = false;
        for (int t = 1; t < work.T && !saturated; ++t) {
            if (visited_states[t].empty()) continue;
            const CutPool& pool = under[t - 1];
            double best_val = 0.0;
            const Cut* active = nullptr;
            for (const Cut& cut : pool.cuts()) {
                const double v = cut.eval(visited_states[t]);
                if (active == nullptr || v > best_val) {
                    best_val = v;
                    active = &cut;
                }
            }
            if (active != nullptr &&
                norm_inf(active->gradient) >= work.reg_factor(t) - 1e-6)
                saturated = true;
        }
        if (!saturated) return false;
        if (++escalations > 12) return false;
        Vec factors = *work.reg_factors;
        for (double& m : factors) m *= std::sqrt(10.0);
        work.reg_factors = factors;
        std::vector<CutPool> old = under;
        make_pools();
        for (int t = 1; t < work.T; ++t)
            for (const Cut& cut : old[t - 1].cuts()) under[t - 1].add_cut(cut);
        ub = kInf;  // envelope certificates are gone
        log_line(LogLevel::Info, "adaptive-M escalation to M_1=" + std::to_string(factors[0]));
        return true;
    }

    std::pair<Solution, SolveLog> finish(SolveStatus status, std::string message = {}) {
        log.status = status;
        log.message = std::move(message);
        best.lower_bound = lb;
        best.upper_bound = ub;
        best.n_eval = n_eval;
        return {best, log};
    }

    // Shared first-stage step: evaluate, update bounds and the incumbent.
    InitialResult initial_step() {
        InitialResult init = initial_oracle(work, under[0], over[0]);
        ++n_eval;
        path_since_record.push_back(1);
        lb = init.lower_bound;
        stage_gaps[0] = init.gamma;
        const double ub_candidate = init.stage_cost + over[0].eval_over(init.x1);
        if (ub_candidate < ub) {
            ub = ub_candidate;
            best.x1 = init.x1;
            best.y1 = init.y1;
        }
        if (best.x1.empty()) {  // keep a solution even before any finite bound
            best.x1 = init.x1;
            best.y1 = init.y1;
        }
        return init;
    }

    std::pair<Solution, SolveLog> run_seq() {
        std::vector<Vec> states(work.T + 1);
        InitialResult init = initial_step();
        emit_record({1});
        if (tolerance_met()) return finish(SolveStatus::Converged);
        for (long iter = 1; iter <= cfg.max_iterations; ++iter) {
            if (elapsed_ms(start) > cfg.max_wall_seconds * 1000.0)
                return finish(SolveStatus::TimeLimit);
            states[1] = init.x1;
            std::vector<OracleResult> results(work.T + 1);
            std::vector<int> path{};
            for (int t = 2; t <= work.T; ++t) {
                results[t] =
                    noninitial_oracle(work, t, states[t - 1], under[t - 1], over[t - 1], cfg.threads);
                ++n_eval;
                states[t] = results[t].next_state;
                stage_gaps[t - 1] = results[t].gap;
                path.push_back(t);
            }
            for (int t = work.T; t >= 2; --t) {
                under[t - 2].add_cut(results[t].cut);
                over[t - 2].add_point({results[t].cut.anchor, results[t].over_estimate});
            }
            init = initial_step();
            path.push_back(1);
            path_since_record.clear();
            emit_record(std::move(path));
            if (maybe_escalate(states)) continue;
            if (tolerance_met()) return finish(SolveStatus::Converged);
        }
        return finish(SolveStatus::IterLimit);
    }

    std::pair<Solution, SolveLog> run_nddp() {
        if (cfg.schedule.kind == GapSchedule::Kind::None)
            throw ScheduleError("nonsequential driver needs a gap schedule");
        if (cfg.schedule.kind == GapSchedule::Kind::Static) {
            const Vec& d = cfg.schedule.deltas;
            if (d.size() != static_cast<std::size_t>(work.T))
                throw ScheduleError("static schedule needs one gap per stage");
            if (cfg.epsilon && d.front() != *cfg.epsilon)
                throw ScheduleError("static schedule must start at epsilon");
            if (d.back() != 0.0) throw ScheduleError("static schedule must end at zero");
            for (std::size_t i = 0; i + 1 < d.size(); ++i)
                if (!(d[i] > d[i + 1])) throw ScheduleError("static schedule must strictly decrease");
        }
        std::vector<Vec> states(work.T + 1);
        int t = 1;
        long initial_visits = 0;
        while (true) {
            if (elapsed_ms(start) > cfg.max_wall_seconds * 1000.0)
                return finish(SolveStatus::TimeLimit);
            if (t == 1) {
                if (++initial_visits > cfg.max_iterations) return finish(SolveStatus::IterLimit);
                InitialResult init = initial_step();
                std::vector<int> path = path_since_record;
                path_since_record.clear();
                emit_record(std::move(path));
                if (!maybe_escalate(states) && tolerance_met())
                    return finish(SolveStatus::Converged);
                states[1] = init.x1;
                t = 2;
            } else {
                OracleResult res =
                    noninitial_oracle(work, t, states[t - 1], under[t - 1], over[t - 1], cfg.threads);
                ++n_eval;
                path_since_record.push_back(t);
                stage_gaps[t - 1] = res.gap;
                if (log_level() == LogLevel::Debug)
                    log_line(LogLevel::Debug,
                             "stage " + std::to_string(t) + " gap " + std::to_string(res.gap) +
                                 " n_eval " + std::to_string(n_eval));
                if (t < work.T && res.gap > nddp_delta(t, lb)) {
                    states[t] = res.next_state;
                    ++t;
                } else {
                    under[t - 2].add_cut(res.cut);
                    over[t - 2].add_point({res.cut.anchor, res.over_estimate});
                    --t;
                }
            }
        }
    }
};

}  // namespace

std::pair<Solution, SolveLog> solve_seq_ddp(const Instance& inst, const SolveConfig& cfg,
                                            const IterationCallback& callback,
                                            const WarmStart* warm) {
    if (cfg.mode != SolveMode::SeqDDP) throw InvalidParams("config mode is not SeqDDP");
    Driver driver(inst, cfg, callback, warm);
    try {
        return driver.run_seq();
    } catch (const InfeasibleStage& e) {
        return driver.finish(SolveStatus::Infeasible, e.what());
    }
}

std::pair<Solution, SolveLog> solve_nddp(const Instance& inst, const SolveConfig& cfg,
                                         const IterationCallback& callback,
                                         const WarmStart* warm) {
    if (cfg.mode != SolveMode::NDDP) throw InvalidParams("config mode is not NDDP");
    Driver driver(inst, cfg, callback, warm);
    try {
        return driver.run_nddp();
    } catch (const InfeasibleStage& e) {
        return driver.finish(SolveStatus::Infeasible, e.what());
    }
}

std::pair<Solution, SolveLog> solve(const Instance& inst, const SolveConfig& cfg,
                                    const IterationCallback& callback, const WarmStart* warm) {
    return cfg.mode == SolveMode::SeqDDP ? solve_seq_ddp(inst, cfg, callback, warm)
                                         : solve_nddp(inst, cfg, callback, warm);
}

double eval_upper_bound(const BoundParams& params, SolveMode mode) {
    const int T = params.T;
    if (T < 1) throw InvalidParams("stage count must be positive");
    const std::size_t stages = static_cast<std::size_t>(T - 1);
    if (params.dims.size() != stages || params.diameters.size() != stages ||
        params.lipschitz.size() != stages)
        throw InvalidParams("need d, D, M for each stage 1..T-1");
    if (T == 1) return 1.0;

    Vec delta;
    if (params.delta) {
        delta = *params.delta;
        if (delta.size() != static_cast<std::size_t>(T))
            throw InvalidParams("delta vector needs one entry per stage");
    } else if (params.alpha && params.C) {
        delta.resize(T);
        for (int t = 1; t <= T; ++t) delta[t - 1] = (T - t) * (*params.alpha) * (*params.C);
    } else if (params.epsilon) {
        delta.resize(T);
        for (int t = 1; t <= T; ++t) delta[t - 1] = *params.epsilon * (static_cast<double>(T - t) / (T - 1));
    } else {
        throw InvalidParams("need a delta vector, epsilon, or alpha with C");
    }
    double sum = 0.0;
    for (int t = 1; t < T; ++t) {
        const double gap = delta[t - 1] - delta[t];
        if (!(gap > 0.0)) throw InvalidParams("analysis gaps must be strictly decreasing");
        sum += std::pow(1.0 + 2.0 * params.lipschitz[t - 1] * params.diameters[t - 1] / gap,
                        params.dims[t - 1]);
    }
    return mode == SolveMode::SeqDDP ? 1.0 + T * sum : 1.0 + 2.0 * sum;
}

}  // namespace drmco

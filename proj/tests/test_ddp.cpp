#include <doctest.h>

#include "drmco/ddp.hpp"
#include "drmco/instances.hpp"
#include "drmco/oracle.hpp"
#include "support.hpp"

using namespace drmco;
using drmco::testing::make_random_small;

namespace {

SolveConfig seq_eps(double eps) {
    SolveConfig cfg;
    cfg.mode = SolveMode::SeqDDP;
    cfg.epsilon = eps;
    return cfg;
}

SolveConfig nddp_static(double eps, Vec deltas) {
    SolveConfig cfg;
    cfg.mode = SolveMode::NDDP;
    cfg.epsilon = eps;
    cfg.schedule = GapSchedule::fixed(std::move(deltas));
    return cfg;
}

void check_log_invariants(const SolveLog& log) {
    double lb = -kInf, ub = kInf;
    long n_eval = 0;
    for (const auto& rec : log.records) {
        CHECK(rec.lower_bound >= lb - 1e-9);
        lb = std::max(lb, rec.lower_bound);
        CHECK(rec.upper_bound <= ub + 1e-9);
        if (std::isfinite(rec.upper_bound)) ub = rec.upper_bound;
        CHECK(rec.n_eval > n_eval);
        n_eval = rec.n_eval;
    }
}

}  // namespace

TEST_SUITE("ddp") {

TEST_CASE("sequential driver solves the tiny instance, simplex ambiguity") {
    const Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex, 5.0);
    const auto [sol, log] = solve_seq_ddp(inst, seq_eps(1e-6));
    REQUIRE(log.status == SolveStatus::Converged);
    CHECK(sol.upper_bound - sol.lower_bound <= 1e-6);
    CHECK(sol.lower_bound == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    CHECK(sol.x1[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
    check_log_invariants(log);
}

TEST_CASE("sequential driver solves the tiny instance, fixed weights") {
    const Instance inst = gen_tiny2(Tiny2Ambiguity::HalfHalf, 5.0);
    const auto [sol, log] = solve_seq_ddp(inst, seq_eps(1e-6));
    REQUIRE(log.status == SolveStatus::Converged);
    CHECK(sol.lower_bound == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(sol.x1[0] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("single-stage instance converges in one oracle evaluation") {
    Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex);
    inst.T = 1;
    inst.stages.resize(1);
    inst.ambiguity.clear();
    inst.reg_factors = Vec{};
    inst.diameters = {1.0};
    const auto [sol, log] = solve_seq_ddp(inst, seq_eps(1e-6));
    REQUIRE(log.status == SolveStatus::Converged);
    CHECK(sol.n_eval == 1);
    CHECK(sol.upper_bound - sol.lower_bound == doctest::Approx(0.0));
}

TEST_CASE("nonsequential driver matches the sequential value") {
    const Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex, 5.0);
    const auto [sol, log] = solve_nddp(inst, nddp_static(1e-6, {1e-6, 0.0}));
    REQUIRE(log.status == SolveStatus::Converged);
    CHECK(sol.lower_bound == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    check_log_invariants(log);
}

TEST_CASE("static schedule must strictly decrease") {
    const Instance inst = make_random_small(4);
    SolveConfig cfg = nddp_static(1e-6, {1e-6, 1e-6, 0.0});
    CHECK_THROWS_AS(solve_nddp(inst, cfg), ScheduleError);
    SolveConfig cfg2 = nddp_static(1e-6, {1e-6, 0.0});
    CHECK_THROWS_AS(solve_nddp(inst, cfg2), ScheduleError);  // wrong length
    SolveConfig cfg3;
    cfg3.mode = SolveMode::NDDP;
    cfg3.epsilon = 1e-6;
    CHECK_THROWS_AS(solve_nddp(inst, cfg3), ScheduleError);  // no schedule at all
}

TEST_CASE("exactly one gap criterion must be set") {
    const Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex);
    SolveConfig cfg;
    cfg.mode = SolveMode::SeqDDP;
    CHECK_THROWS_AS(solve_seq_ddp(inst, cfg), InvalidParams);
    cfg.epsilon = 1e-6;
    cfg.rel_gap = 0.01;
    CHECK_THROWS_AS(solve_seq_ddp(inst, cfg), InvalidParams);
}

TEST_CASE("identical configuration gives identical logs") {
    const Instance inst = make_random_small(11);
    const auto [sol_a, log_a] = solve_seq_ddp(inst, seq_eps(1e-6));
    const auto [sol_b, log_b] = solve_seq_ddp(inst, seq_eps(1e-6));
    REQUIRE(log_a.records.size() == log_b.records.size());
    for (std::size_t i = 0; i < log_a.records.size(); ++i) {
        CHECK(log_a.records[i].lower_bound == log_b.records[i].lower_bound);
        CHECK(log_a.records[i].upper_bound == log_b.records[i].upper_bound);
        CHECK(log_a.records[i].n_eval == log_b.records[i].n_eval);
        CHECK(log_a.records[i].stage_path == log_b.records[i].stage_path);
    }
    CHECK(sol_a.x1 == sol_b.x1);
    CHECK(sol_a.lower_bound == sol_b.lower_bound);
}

TEST_CASE("both drivers bracket the extensive optimum on random instances") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 5ULL, 8ULL}) {
        const Instance inst = make_random_small(seed);
        REQUIRE(!validate(inst).has_error());
        const double exact = extensive_optimum(inst);
        const auto [seq_sol, seq_log] = solve_seq_ddp(inst, seq_eps(1e-6));
        REQUIRE(seq_log.status == SolveStatus::Converged);
        CHECK(seq_sol.lower_bound <= exact + 1e-6);
        CHECK(seq_sol.upper_bound >= exact - 1e-6);
        CHECK(std::abs(seq_sol.lower_bound - exact) <= 1e-6);

        const auto [nddp_sol, nddp_log] =
            solve_nddp(inst, nddp_static(1e-6, {1e-6, 0.5e-6, 0.0}));
        REQUIRE(nddp_log.status == SolveStatus::Converged);
        CHECK(nddp_sol.lower_bound <= exact + 1e-6);
        CHECK(nddp_sol.upper_bound >= exact - 1e-6);
        check_log_invariants(nddp_log);
    }
}

TEST_CASE("unregularized diagnostic mode still solves instances with recourse") {
    Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex);
    inst.reg_factors.reset();
    const auto [sol, log] = solve_seq_ddp(inst, seq_eps(1e-6));
    REQUIRE(log.status == SolveStatus::Converged);
    CHECK(sol.lower_bound == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("relative gap termination") {
    const Instance inst = make_random_small(21);
    SolveConfig cfg;
    cfg.mode = SolveMode::NDDP;
    cfg.rel_gap = 0.01;
    cfg.schedule = GapSchedule::dynamic_relative(0.01);
    const auto [sol, log] = solve_nddp(inst, cfg);
    REQUIRE(log.status == SolveStatus::Converged);
    CHECK(sol.upper_bound - sol.lower_bound <= 0.01 * sol.lower_bound + 1e-12);
}

TEST_CASE("iteration limit reports honestly") {
    const Instance inst = make_random_small(33);
    SolveConfig cfg = seq_eps(1e-12);
    cfg.max_iterations = 1;
    const auto [sol, log] = solve_seq_ddp(inst, cfg);
    CHECK(log.status == SolveStatus::IterLimit);
    CHECK(sol.n_eval >= 1);
}

TEST_CASE("wall-clock limit reports honestly") {
    const Instance inst = gen_inventory({.products = 2, .factors = 3, .stages = 8, .seed = 5}, true);
    SolveConfig cfg = seq_eps(1e-10);
    cfg.max_wall_seconds = 0.02;
    const auto [sol, log] = solve_seq_ddp(inst, cfg);
    CHECK(log.status == SolveStatus::TimeLimit);
    CHECK(sol.n_eval >= 1);
}

TEST_CASE("warm-started solve reuses the pools and converges faster") {
    const Instance inst = make_random_small(13);
    WarmStart warm;
    IterationCallback capture = [&](const IterationRecord&, const std::vector<CutPool>& under,
                                    const std::vector<EnvelopePool>& over) {
        warm.under = under;
        warm.over = over;
    };
    const auto [cold_sol, cold_log] = solve_seq_ddp(inst, seq_eps(1e-6), capture);
    REQUIRE(cold_log.status == SolveStatus::Converged);

    const auto [warm_sol, warm_log] = solve_seq_ddp(inst, seq_eps(1e-6), nullptr, &warm);
    REQUIRE(warm_log.status == SolveStatus::Converged);
    CHECK(warm_sol.lower_bound == doctest::Approx(cold_sol.lower_bound).epsilon(1e-9));
    CHECK(warm_sol.n_eval <= cold_sol.n_eval);
}

TEST_CASE("adaptive regularization escalates past a low factor") {
    // with M=1 the regularized optimum flattens to 1/2; escalation restores
    // the true value 2/3 once the active cut slopes hit the cap
    const Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex, 1.0);
    const auto [plain_sol, plain_log] = solve_seq_ddp(inst, seq_eps(1e-6));
    REQUIRE(plain_log.status == SolveStatus::Converged);
    CHECK(plain_sol.lower_bound == doctest::Approx(0.5).epsilon(1e-6));

    SolveConfig cfg = seq_eps(1e-6);
    cfg.adaptive_m = true;
    const auto [sol, log] = solve_seq_ddp(inst, cfg);
    REQUIRE(log.status == SolveStatus::Converged);
    CHECK(sol.lower_bound == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("closed-form evaluation bounds") {
    BoundParams params;
    params.T = 2;
    params.dims = {1.0};
    params.diameters = {1.0};
    params.lipschitz = {1.0};
    params.delta = Vec{1.0, 0.0};
    CHECK(eval_upper_bound(params, SolveMode::SeqDDP) == doctest::Approx(7.0));
    CHECK(eval_upper_bound(params, SolveMode::NDDP) == doctest::Approx(7.0));

    BoundParams relative;
    relative.T = 3;
    relative.dims = {1.0, 1.0};
    relative.diameters = {1.0, 1.0};
    relative.lipschitz = {1.0, 1.0};
    relative.alpha = 1.0;
    relative.C = 1.0;
    CHECK(eval_upper_bound(relative, SolveMode::SeqDDP) == doctest::Approx(19.0));

    BoundParams bad = params;
    bad.delta = Vec{1.0, 2.0};
    CHECK_THROWS_AS(eval_upper_bound(bad, SolveMode::SeqDDP), InvalidParams);
}

TEST_CASE("observed evaluations respect the closed-form bound") {
    for (std::uint64_t seed : {1ULL, 7ULL}) {
        const Instance inst = make_random_small(seed);
        const double eps = 1e-4;
        Vec deltas(inst.T);
        for (int t = 1; t <= inst.T; ++t) deltas[t - 1] = eps * (static_cast<double>(inst.T - t) / (inst.T - 1));
        const auto [sol, log] = solve_nddp(inst, nddp_static(eps, deltas));
        REQUIRE(log.status == SolveStatus::Converged);
        BoundParams params;
        params.T = inst.T;
        for (int t = 1; t < inst.T; ++t) {
            params.dims.push_back(static_cast<double>(inst.state_dim(t)));
            params.diameters.push_back(inst.diameters[t - 1]);
            params.lipschitz.push_back(inst.reg_factor(t));
        }
        params.delta = deltas;
        CHECK(static_cast<double>(sol.n_eval) <= eval_upper_bound(params, SolveMode::NDDP));
    }
}

}  // TEST_SUITE

#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "drmco/instances.hpp"
#include "drmco/model.hpp"

using namespace drmco;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("tiny two-stage instance validates cleanly") {
    const Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex);
    const Diagnostics diags = validate(inst);
    CHECK(!diags.has_error());
    CHECK(diags.items.empty());
}

TEST_CASE("extensive optimum of the tiny instance, simplex ambiguity") {
    // min_{x in [0,1]} x + max(max(0, 1-2x), x) has its minimum 2/3 at 1/3
    const Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex);
    const LinearProgram lp = extensive_form(inst);
    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective_value == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("extensive optimum of the tiny instance, fixed half-half weights") {
    const Instance inst = gen_tiny2(Tiny2Ambiguity::HalfHalf);
    CHECK(extensive_optimum(inst) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("single-stage instance reduces to the first-stage program") {
    Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex);
    inst.T = 1;
    inst.stages.resize(1);
    inst.ambiguity.clear();
    inst.reg_factors = Vec{};
    inst.diameters = {1.0};
    REQUIRE(!validate(inst).has_error());
    CHECK(extensive_optimum(inst) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("extensive optimum is nonnegative and permutation invariant") {
    const Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex);
    const double v = extensive_optimum(inst);
    CHECK(v >= -1e-12);
    Instance swapped = inst;
    std::swap(swapped.stages[1][0], swapped.stages[1][1]);
    CHECK(extensive_optimum(swapped) == doctest::Approx(v).epsilon(1e-9));
}

TEST_CASE("path-count guard") {
    const Instance inst = gen_inventory({.products = 2, .factors = 2, .stages = 10}, true);
    CHECK_THROWS_AS(extensive_form(inst, 1000), TooLarge);
}

TEST_CASE("regularized cost-to-go matches the plain one when M is large") {
    const Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex, 5.0);
    for (double x : {0.0, 0.2, 0.5, 1.0}) {
        const double plain = extensive_cost_to_go(inst, 1, {x}, false);
        const double reg = extensive_cost_to_go(inst, 1, {x}, true);
        CHECK(plain == doctest::Approx(std::max(std::max(0.0, 1.0 - 2.0 * x), x)).epsilon(1e-9));
        CHECK(reg == doctest::Approx(plain).epsilon(1e-9));
    }
    CHECK(extensive_cost_to_go(inst, 2, {0.5}, true) == 0.0);
}

TEST_CASE("regularization below the true slope flattens the cost-to-go") {
    const Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex, 1.0);
    const double reg = extensive_cost_to_go(inst, 1, {0.0}, true);
    const double plain = extensive_cost_to_go(inst, 1, {0.0}, false);
    CHECK(plain == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(reg < plain - 0.2);  // M=1 < slope 2: the envelope cuts the peak
}

TEST_CASE("save and load round trip preserves every numeric field") {
    const Instance inst = gen_inventory({.products = 2, .factors = 2, .stages = 3, .seed = 42}, true);
    const std::string path = temp_path("drmco_roundtrip.json");
    save_instance(inst, path);
    const Instance back = load_instance(path);
    REQUIRE(back.T == inst.T);
    REQUIRE(back.stages.size() == inst.stages.size());
    for (std::size_t t = 0; t < inst.stages.size(); ++t) {
        REQUIRE(back.stages[t].size() == inst.stages[t].size());
        for (std::size_t n = 0; n < inst.stages[t].size(); ++n) {
            const auto& a = inst.stages[t][n];
            const auto& b = back.stages[t][n];
            CHECK(a.cost_z == b.cost_z);
            CHECK(a.cost_y == b.cost_y);
            CHECK(a.cost_x == b.cost_x);
            CHECK(a.cost_const == b.cost_const);
            REQUIRE(a.rows.size() == b.rows.size());
            for (std::size_t r = 0; r < a.rows.size(); ++r) {
                CHECK(a.rows[r].z == b.rows[r].z);
                CHECK(a.rows[r].y == b.rows[r].y);
                CHECK(a.rows[r].x == b.rows[r].x);
                CHECK(a.rows[r].rhs == b.rows[r].rhs);
            }
            CHECK(a.y_bounds == b.y_bounds);
            CHECK(a.x_bounds == b.x_bounds);
        }
    }
    CHECK(back.x0 == inst.x0);
    CHECK(back.diameters == inst.diameters);
    CHECK(*back.reg_factors == *inst.reg_factors);
    std::remove(path.c_str());
}

TEST_CASE("tiny instance file round trip keeps its shape") {
    const std::string path = temp_path("drmco_tiny2.json");
    save_instance(gen_tiny2(Tiny2Ambiguity::Simplex), path);
    const Instance inst = load_instance(path);
    CHECK(inst.T == 2);
    CHECK(inst.stages[1].size() == 2);
    CHECK(inst.state_dim(1) == 1);
    CHECK(!validate(inst).has_error());
    std::remove(path.c_str());
}

TEST_CASE("validation rejects a nonpositive regularization factor") {
    Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex);
    (*inst.reg_factors)[0] = 0.0;
    const Diagnostics diags = validate(inst);
    REQUIRE(diags.has_error());
    bool found = false;
    for (const auto& item : diags.items)
        found = found || item.message.find("regularization factor must be positive") !=
                             std::string::npos;
    CHECK(found);
}

TEST_CASE("validation rejects an ambiguity support mismatch") {
    Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex);
    inst.ambiguity[0] = AmbiguitySet::full_simplex(3);
    CHECK(validate(inst).has_error());
}

TEST_CASE("validation rejects negative stage costs") {
    Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex);
    inst.stages[1][0].cost_const = -10.0;
    const Diagnostics diags = validate(inst);
    REQUIRE(diags.has_error());
    bool found = false;
    for (const auto& item : diags.items)
        found = found || item.message.find("negative") != std::string::npos;
    CHECK(found);
}

TEST_CASE("validation rejects an unbounded state box") {
    Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex);
    inst.stages[1][0].x_bounds[0].second = kInf;
    const Diagnostics diags = validate(inst);
    REQUIRE(diags.has_error());
    bool found = false;
    for (const auto& item : diags.items)
        found = found || item.message.find("finite") != std::string::npos;
    CHECK(found);
}

TEST_CASE("validation warns when the declared diameter is too small") {
    Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex);
    inst.diameters[1] = 0.1;
    const Diagnostics diags = validate(inst);
    CHECK(!diags.has_error());
    REQUIRE(diags.items.size() == 1);
    CHECK(diags.items[0].severity == Diagnostic::Severity::Warning);
}

TEST_CASE("schema errors name the offending field") {
    CHECK_THROWS_AS(instance_from_json("{\"T\": 2}"), SchemaError);
    CHECK_THROWS_AS(instance_from_json("not json at all"), ParseError);
    const Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex);
    std::string text = instance_to_json(inst);
    text.insert(text.rfind('}'), ",\"extra_field\": 1");
    CHECK_THROWS_AS(instance_from_json(text), SchemaError);
}

TEST_CASE("load of a malformed file reports a validation error") {
    Instance inst = gen_tiny2(Tiny2Ambiguity::Simplex);
    (*inst.reg_factors)[0] = 0.0;
    const std::string path = temp_path("drmco_invalid.json");
    save_instance(inst, path);
    CHECK_THROWS_AS(load_instance(path), ValidationError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_instance(temp_path("drmco_does_not_exist.json")), IoError);
}

TEST_CASE("vertex reformulation enumerates sign patterns lexicographically") {
    std::vector<Vec> seen;
    auto reform = vertices_to_dr({-1.0, -2.0}, {1.0, 2.0}, [&](const Vec& v) {
        seen.push_back(v);
        StageNodeProblem node;
        node.cost_x = {0.0};
        node.x_bounds = {{0.0, 1.0}};
        return node;
    });
    REQUIRE(reform.nodes.size() == 4);
    CHECK(seen[0] == Vec{-1.0, -2.0});
    CHECK(seen[1] == Vec{-1.0, 2.0});
    CHECK(seen[2] == Vec{1.0, -2.0});
    CHECK(seen[3] == Vec{1.0, 2.0});
    CHECK(reform.ambiguity.kind == AmbiguityKind::FullSimplex);
    CHECK(reform.ambiguity.support == 4);
}

TEST_CASE("vertex reformulation guards the dimension") {
    auto builder = [](const Vec&) { return StageNodeProblem{}; };
    CHECK_THROWS_AS(vertices_to_dr(Vec(21, -1.0), Vec(21, 1.0), builder), DimensionTooLarge);
}

TEST_CASE("interval endpoints for one factor") {
    auto reform = vertices_to_dr({-1.0}, {1.0}, [](const Vec& v) {
        StageNodeProblem node;
        node.cost_x = {v[0]};
        node.x_bounds = {{0.0, 1.0}};
        return node;
    });
    REQUIRE(reform.nodes.size() == 2);
    CHECK(reform.nodes[0].cost_x[0] == -1.0);
    CHECK(reform.nodes[1].cost_x[0] == 1.0);
}

}  // TEST_SUITE

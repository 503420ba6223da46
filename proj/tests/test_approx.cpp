#include <doctest.h>

#include "drmco/approx.hpp"

using namespace drmco;

TEST_SUITE("approx") {

TEST_CASE("empty pool evaluates to the zero floor") {
    CutPool pool(1, 5.0);
    CHECK(pool.eval_under({0.0}) == 0.0);
    CHECK(pool.eval_under({0.7}) == 0.0);
}

TEST_CASE("single-cut pool is affine with a floor") {
    CutPool pool(1, 5.0);
    pool.add_cut({{0.0}, 1.0, {-2.0}});
    CHECK(pool.eval_under({0.25}) == doctest::Approx(0.5));
    CHECK(pool.eval_under({0.75}) == 0.0);
    CHECK(pool.eval_under({0.0}) == doctest::Approx(1.0));
}

TEST_CASE("cut gradient cap is enforced") {
    CutPool pool(2, 3.0);
    CHECK_THROWS_AS(pool.add_cut({{0.0}, 1.0, {4.0}}), LipschitzViolation);
    pool.add_cut({{0.0}, 1.0, {3.0 + 5e-10}});  // within the 1e-9 slack
    CHECK(pool.size() == 1);
    CutPool uncapped(2, std::nullopt);
    uncapped.add_cut({{0.0}, 1.0, {40.0}});
    CHECK(uncapped.size() == 1);
}

TEST_CASE("dominated cut leaves the evaluation unchanged at samples") {
    CutPool pool(1, 10.0);
    pool.add_cut({{0.0}, 2.0, {-1.0}});
    Rng rng(11);
    Vec samples(100);
    for (double& s : samples) s = rng.uniform(0.0, 1.0);
    Vec before(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) before[i] = pool.eval_under({samples[i]});
    pool.add_cut({{0.0}, 1.0, {-1.0}});  // parallel, strictly below
    for (std::size_t i = 0; i < samples.size(); ++i)
        CHECK(pool.eval_under({samples[i]}) == before[i]);
}

TEST_CASE("monotone refinement: adding cuts never lowers the evaluation") {
    Rng rng(23);
    CutPool pool(1, 10.0);
    Vec samples(50);
    for (double& s : samples) s = rng.uniform(-1.0, 1.0);
    Vec best(samples.size(), 0.0);
    for (int i = 0; i < 20; ++i) {
        const double anchor = rng.uniform(-1.0, 1.0);
        pool.add_cut({{anchor}, rng.uniform(0.0, 2.0), {rng.uniform(-5.0, 5.0)}});
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const double v = pool.eval_under({samples[k]});
            CHECK(v >= best[k] - 1e-12);
            best[k] = v;
        }
    }
}

TEST_CASE("empty envelope is infinite, terminal envelope is zero") {
    EnvelopePool pool(1, 2.0);
    CHECK(pool.eval_over({0.3}) == kInf);
    const EnvelopePool zero = EnvelopePool::terminal(3);
    CHECK(zero.eval_over({0.3}) == 0.0);
    CHECK(zero.is_terminal());
}

TEST_CASE("one-point envelope is a cone") {
    EnvelopePool pool(1, 2.0);
    pool.add_point({{0.0}, 1.0});
    CHECK(pool.eval_over({0.5}) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(pool.eval_over({0.0}) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(pool.eval_over({-1.0}) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("two-point envelope interpolates without transport cost") {
    EnvelopePool pool(1, 2.0);
    pool.add_point({{0.0}, 1.0});
    pool.add_point({{1.0}, 1.0});
    CHECK(pool.eval_over({0.5}) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(pool.eval_over({0.25}) == doctest::Approx(1.0).epsilon(1e-9));
    // outside the hull the cone term pays
    CHECK(pool.eval_over({1.5}) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("envelope at an anchor never exceeds the anchor value") {
    Rng rng(5);
    EnvelopePool pool(1, 3.0);
    for (int i = 0; i < 8; ++i) {
        Vec anchor{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        const double value = rng.uniform(0.5, 4.0);
        pool.add_point({anchor, value});
        CHECK(pool.eval_over(anchor) <= value + 1e-9);
    }
}

TEST_CASE("dominated envelope point leaves the evaluation unchanged at samples") {
    EnvelopePool pool(1, 2.0);
    pool.add_point({{0.0}, 1.0});
    pool.add_point({{1.0}, 2.0});
    Rng rng(31);
    Vec samples(100);
    for (double& s : samples) s = rng.uniform(-0.5, 1.5);
    Vec before(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) before[i] = pool.eval_over({samples[i]});
    const double dominated = pool.eval_over({0.5}) + 0.7;
    pool.add_point({{0.5}, dominated});
    for (std::size_t i = 0; i < samples.size(); ++i)
        CHECK(pool.eval_over({samples[i]}) == doctest::Approx(before[i]).epsilon(1e-9));
}

TEST_CASE("envelope refinement is pointwise nonincreasing") {
    Rng rng(7);
    EnvelopePool pool(1, 4.0);
    Vec samples(40);
    for (double& s : samples) s = rng.uniform(-1.0, 1.0);
    Vec best(samples.size(), kInf);
    for (int i = 0; i < 12; ++i) {
        pool.add_point({{rng.uniform(-1.0, 1.0)}, rng.uniform(0.0, 3.0)});
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const double v = pool.eval_over({samples[k]});
            CHECK(v <= best[k] + 1e-9);
            best[k] = v;
        }
    }
}

TEST_CASE("envelope is Lipschitz in the 1-norm") {
    Rng rng(13);
    EnvelopePool pool(1, 2.5);
    for (int i = 0; i < 6; ++i)
        pool.add_point({{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}, rng.uniform(0.0, 2.0)});
    for (int i = 0; i < 25; ++i) {
        const Vec a{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
        const Vec b{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
        const double da = pool.eval_over(a), db = pool.eval_over(b);
        const double dist1 = std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]);
        CHECK(std::abs(da - db) <= 2.5 * dist1 + 1e-7);
    }
}

TEST_CASE("hull-only envelope is infinite outside the points' hull") {
    EnvelopePool pool(1, kInf);
    pool.add_point({{0.0}, 1.0});
    pool.add_point({{1.0}, 3.0});
    CHECK(pool.eval_over({0.5}) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(pool.eval_over({1.5}) == kInf);
    CHECK(pool.eval_over({-0.5}) == kInf);
}

TEST_CASE("warm-start serialization round trip") {
    std::vector<CutPool> under;
    under.emplace_back(1, 5.0);
    under[0].add_cut({{0.25}, 1.5, {-2.0}});
    std::vector<EnvelopePool> over;
    over.emplace_back(1, 5.0);
    over[0].add_point({{0.5}, 2.25});
    over.push_back(EnvelopePool::terminal(2));

    const std::string text = pools_to_json(under, over);
    std::vector<CutPool> under2;
    std::vector<EnvelopePool> over2;
    pools_from_json(text, under2, over2);
    REQUIRE(under2.size() == 1);
    REQUIRE(over2.size() == 2);
    CHECK(under2[0].cuts()[0].anchor == under[0].cuts()[0].anchor);
    CHECK(under2[0].cuts()[0].value_at_anchor == under[0].cuts()[0].value_at_anchor);
    CHECK(under2[0].cuts()[0].gradient == under[0].cuts()[0].gradient);
    CHECK(over2[0].points()[0].value == over[0].points()[0].value);
    CHECK(over2[1].is_terminal());
    CHECK_THROWS_AS(
        [] {
            std::vector<CutPool> u;
            std::vector<EnvelopePool> o;
            pools_from_json("{not json", u, o);
        }(),
        ParseError);
}

}  // TEST_SUITE

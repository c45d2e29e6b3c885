// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "grnlab/numerics/linalg.hpp"
#include "grnlab/theory/theory.hpp"
#include "grnlab/verify/oracles.hpp"
#include "support/random.hpp"

using namespace grnlab;
using namespace grnlab::theory;
using grnlab::testing::Sampler;

namespace {

Tensor diag_target(std::vector<double> e) {
    Tensor a = Tensor::diag(e);
    for (std::size_t i = 0; i < e.size(); ++i) a(i, i) += 1.0;
    return a;
}

}  // namespace

TEST_CASE("spectrum spec validation") {
    CHECK_NOTHROW(SpectrumSpec{10, 1.0, 2.0, 3, 2}.validate());
    CHECK_THROWS_AS((SpectrumSpec{10, 3.0, 2.0, 3, 1}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((SpectrumSpec{10, 1.0, 2.0, 10, 1}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((SpectrumSpec{10, 1.0, 2.0, 3, 4}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((SpectrumSpec{10, 0.0, 2.0, 3, 1}.validate()), std::invalid_argument);
    CHECK(SpectrumSpec{10, 1.0, 4.0, 3, 1}.kappa() == 0.25);
}

TEST_CASE("excess risk") {
    Sampler rng(1);
    const Tensor a = rng.normal_tensor({5, 5});
    CHECK(excess_risk(a, a) == 0.0);
    CHECK(excess_risk(grnlab::add(a, Tensor::identity(5)), a) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK_THROWS_AS(excess_risk(a, Tensor({4, 4})), ShapeError);

    const Tensor b = rng.normal_tensor({5, 5});
    const verify::Estimate mc = verify::excess_risk_mc(a, b, 1000000, 77);
    CHECK(mc.within(excess_risk(a, b)));
}

TEST_CASE("bounds") {
    SUBCASE("identity target") {
        const BoundReport r = bounds(Tensor::identity(6), 2);
        CHECK(r.er_res == 0.0);
        CHECK(r.er_v1 == 0.0);
        CHECK(r.er_v2 == 0.0);
        CHECK(r.er_v3 == 0.0);
    }
    SUBCASE("diagonal example") {
        const Tensor a = diag_target({3, 2, 1, 0});
        const BoundReport r = bounds(a, 2);
        CHECK(r.er_res == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(r.er_v1 == doctest::Approx(0.5).epsilon(1e-13));
        CHECK(excess_risk(a, construct_v1(a, 2).est) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(r.achieved_v1);
        CHECK(r.achieved_v2);
        CHECK_FALSE(r.achieved_v3);
    }
    SUBCASE("r_star must be below d") { CHECK_THROWS(bounds(Tensor::identity(3), 3)); }
    SUBCASE("ordering and achievability on random targets") {
        for (std::uint64_t s = 0; s < 50; ++s) {
            Rng rng(derive_seed(42, s));
            const std::size_t d = 3 + rng.below(10), r = 1 + rng.below(d - 1);
            const Tensor a = random_psd_target(d, 0.5, 4.0, rng);
            const BoundReport b = bounds(a, r);
            CHECK(b.er_v2 <= b.er_v1 + 1e-9);
            CHECK(b.er_v1 <= b.er_res + 1e-9);
            CHECK(b.er_v3 <= b.er_v2 + 1e-9);
            CHECK(b.er_v3 >= -1e-9);
            CHECK(std::abs(excess_risk(a, construct_v1(a, r).est) - b.er_v1) <= 1e-9);
            CHECK(std::abs(excess_risk(a, construct_v2(a, r).est) - (b.delta_fro_sq - b.diag_sq)) <= 1e-9);
            CHECK(std::abs(b.er_res - verify::tail_energy(sub(a, Tensor::identity(d)), r)) <= 1e-10);
        }
    }
    SUBCASE("pi offset defaults to one") {
        Rng rng(3);
        const Tensor a = random_psd_target(8, 1.0, 2.0, rng);
        const BoundReport p = bounds(a, 3), q = bounds(a, 3, {2.0});
        CHECK(p.er_v1 == q.er_v1);
        CHECK(q.er_v3 >= p.er_v3);
    }
}

TEST_CASE("constructions") {
    const V1Construction c1 = construct_v1(Tensor::identity(4), 1);
    CHECK(c1.alpha == 1.0);
    CHECK(max_abs_diff(c1.est, Tensor::identity(4)) <= 1e-15);
    const V2Construction c2 = construct_v2(Tensor::identity(4), 1);
    CHECK(c2.D == Tensor::identity(4));
    CHECK(max_abs(c2.M) == 0.0);
    const Tensor diag = diag_target({0.5, 2.0, 1.5});
    CHECK(excess_risk(diag, construct_v2(diag, 0).est) <= 1e-24);
}

TEST_CASE("random PSD targets") {
    Rng rng(4);
    const Tensor a = random_psd_target(7, 2.0, 3.0, rng);
    CHECK(a == transpose(a));
    const EigResult e = eigh(sub(a, Tensor::identity(7)));
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(e.values[i] >= 2.0 - 1e-12);
        CHECK(e.values[i] <= 3.0 + 1e-12);
    }
}

TEST_CASE("thresholds") {
    CHECK(threshold_v1(1.0) == 1.0);
    CHECK(threshold_v1(0.0) == 0.0);
    CHECK_THROWS_AS(xi0(1), std::invalid_argument);
    CHECK_THROWS_AS(threshold_v1(1.5), std::invalid_argument);
    CHECK(std::abs(threshold_v2(0.5, 100) - verify::bisect_threshold_v2(0.5, 100.0)) <= 1e-9 * threshold_v2(0.5, 100));
    CHECK(std::abs(threshold_v1(0.5) - verify::bisect_threshold_v1(0.5, 100.0)) <= 1e-12);
    const double t3 = threshold_v3(0.5, 100);
    CHECK(t3 <= verify::bisect_threshold_v3(0.5, 100.0));
    CHECK(verify::raw_condition_v3(0.5, 100.0, t3));

    const Thresholds t = thresholds({100, 5.0, 10.0, 30, 1});
    CHECK(t.thr_v1 == threshold_v1(0.5));
    CHECK(t.v1 == (0.3 <= t.thr_v1));
    CHECK(t.eta == eta(0.5, 100));
}

TEST_CASE("gains") {
    const Gains g = gains({50, 3.0, 3.0, 20, 1});
    CHECK(g.G1_lb == doctest::Approx(30 * 9.0).epsilon(1e-15));
    CHECK(g.G2_lb == doctest::Approx(30 * 9.0).epsilon(1e-15));
    // Right-hand regime: lambda_max = 10, r_star = 50, kappa swept.
    double prev1 = -INFINITY, prev2 = -INFINITY;
    for (int i = 1; i <= 10; ++i) {
        const double k = 0.1 * i;
        const Gains gi = gains({100, 10.0 * k, 10.0, 50, 1});
        CHECK(gi.G1_lb > prev1);
        CHECK(gi.G2_lb > prev2);
        prev1 = gi.G1_lb;
        prev2 = gi.G2_lb;
    }
}

TEST_CASE("rank reduction") {
    const RankReduction r = rank_reduction({100, 5.0, 10.0, 50, 1});
    CHECK(r.r_prime == doctest::Approx(100.0 / 3.0).epsilon(1e-14));
    CHECK(rank_reduction({100, 1e-9, 10.0, 50, 1}).r_prime == doctest::Approx(50.0).epsilon(1e-12));
    CHECK_THROWS_AS(rank_reduction({100, 10.0, 10.0, 50, 1}), std::invalid_argument);
    for (int i = 1; i < 10; ++i) {
        const double k = 0.1 * i;
        for (std::size_t rs : {10u, 40u, 90u}) {
            if (100.0 * k * k >= double(rs)) continue;
            CHECK(rank_reduction({100, 10.0 * k, 10.0, rs, 1}).r_prime < double(rs));
        }
    }
}

TEST_CASE("equal-parameter collective rank") {
    using grn::Variant;
    SUBCASE("one layer keeps the full rank") {
        for (Variant v : {Variant::V1, Variant::V2}) CHECK(*equal_param_rank_at(100, 30, v, 1) == 30.0);
        CHECK(*equal_param_rank_at(100, 30, Variant::V3, 1) == 29.5);
    }
    SUBCASE("d = 100, r_star = 30") {
        const EqualParamRank e = equal_param_rank(100, 30, Variant::V1);
        const double bound = equal_param_rank_lower_bound(100, 30, Variant::V1);
        CHECK(bound == doctest::Approx(30.0 - std::pow(std::sqrt(130.0) - 10.0, 2)).epsilon(1e-15));
        CHECK(e.r_prime_real >= bound);
        CHECK(e.T_prime == 28);
        CHECK(e.r_prime == 28);
        CHECK(e.r_prime_real == doctest::Approx(28.11).epsilon(1e-13));
    }
    SUBCASE("exhaustive search matches a scan over every T'") {
        for (Variant v : {Variant::V1, Variant::V2, Variant::V3}) {
            for (std::size_t d : {5u, 40u, 200u})
                for (std::size_t r : {2u, 4u, 17u}) {
                    if (r >= d) continue;
                    const EqualParamRank e = equal_param_rank(d, r, v);
                    double worst = INFINITY;
                    for (std::size_t t = 1; t <= e.max_T; ++t) worst = std::min(worst, std::floor(*equal_param_rank_at(d, r, v, t)));
                    CHECK(double(e.r_prime) == worst);
                    CHECK_FALSE(equal_param_rank_at(d, r, v, e.max_T + 1).has_value());
                    CHECK(equal_param_rank_lower_bound(d, r, v) <= e.r_prime_real + 1e-12);
                }
        }
    }
    SUBCASE("infeasible budgets") {
        CHECK_THROWS_AS(equal_param_rank(100, 0, Variant::V1), std::invalid_argument);
        CHECK_THROWS_AS(equal_param_rank(100, 1, Variant::V3), std::invalid_argument);
    }
}

TEST_CASE("sweep") {
    SUBCASE("single point") {
        const auto rows = gain_sweep({{100}, {10}, {0.5}, 10.0});
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].G1_lb == gains({100, 5.0, 10.0, 10, 1}).G1_lb);
    }
    SUBCASE("order and CSV round trip") {
        const SweepGrid g{{100, 500}, {10, 20, 30, 40, 50, 60, 70, 80, 90}, {0.25, 0.5, 1.0}, 10.0};
        const auto rows = gain_sweep(g);
        REQUIRE(rows.size() == 54);
        CHECK(rows[0].d == 100);
        CHECK(rows[1].kappa == 0.5);
        CHECK(rows[3].r_star == 20);
        const std::string csv = sweep_csv(rows);
        CHECK(csv.rfind(kSweepHeader, 0) == 0);
        const auto back = parse_sweep_csv(csv);
        REQUIRE(back.size() == rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(back[i].G1_lb == rows[i].G1_lb);
            CHECK(back[i].thr_v3 == rows[i].thr_v3);
        }
        CHECK(sweep_csv(back) == csv);
    }
    SUBCASE("left-hand regime trends") {
        const auto rows = gain_sweep({{100, 500}, {10, 20, 30, 40, 50, 60, 70, 80, 90}, {0.5}, 10.0});
        for (std::size_t j = 0; j < 9; ++j) {
            if (j > 0) {
                CHECK(rows[j].G1_lb < rows[j - 1].G1_lb);
                CHECK(rows[9 + j].G2_lb < rows[9 + j - 1].G2_lb);
            }
            CHECK(rows[9 + j].G1_lb > rows[j].G1_lb);
            CHECK(rows[9 + j].G2_lb > rows[j].G2_lb);
        }
    }
    SUBCASE("bad CSV") { CHECK_THROWS(parse_sweep_csv("d,r\n1,2\n")); }
}

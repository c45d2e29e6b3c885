// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "grnlab/autodiff/ops.hpp"
#include "grnlab/autodiff/optim.hpp"
#include "grnlab/grn/combine.hpp"
#include "grnlab/grn/linear_model.hpp"
#include "grnlab/grn/stack.hpp"
#include "grnlab/numerics/linalg.hpp"
#include "support/random.hpp"

using namespace grnlab;
using namespace grnlab::grn;
using grnlab::testing::Sampler;

namespace {

std::vector<Tensor> random_columns(Sampler& rng, std::size_t n, Shape shape) {
    std::vector<Tensor> cols;
    for (std::size_t j = 0; j < n; ++j) cols.push_back(rng.normal_tensor(shape));
    return cols;
}

Tensor plain_sum(const std::vector<Tensor>& cols) {
    Tensor s(cols.front().shape());
    for (const Tensor& c : cols) s = grnlab::add(s, c);
    return s;
}

void set_all(LinearModel& m, const char* suffix, double v) {
    for (ad::Parameter* p : m.parameters()) {
        const std::string& n = p->name();
        if (n.size() >= 2 && n.compare(n.size() - 2, 2, suffix) == 0 && n.rfind("grn", 0) == 0) p->value().fill(v);
    }
}

// Full-batch Adam on ||M(I) - target||^2 / d^2 with a linearly decaying rate;
// returns the final loss.
double fit(LinearModel& m, const Tensor& target, std::size_t steps, double lr) {
    const std::size_t d = target.rows();
    ad::AdamW opt({lr, 0.9, 0.98, 1e-12, 0.0});
    const auto params = m.parameters();
    double loss = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
        ad::Tape tape;
        const ad::Var diff = ad::sub(m.forward(tape, tape.constant(Tensor::identity(d))), tape.constant(target));
        const ad::Var l = ad::scale(ad::sum(ad::hadamard(diff, diff)), 1.0 / double(d * d));
        loss = l.value().item();
        opt.set_lr(lr * (1.0 - double(s) / double(steps)));
        opt.step(params, tape.backward(l));
    }
    return loss;
}

}  // namespace

TEST_CASE("layer stack") {
    SUBCASE("first push") {
        LayerStack<Tensor> s;
        s.push(Tensor::vector({1, 2}));
        REQUIRE(s.width() == 1);
        CHECK(s[0] == Tensor::vector({1, 2}));
    }
    SUBCASE("first-and-last-1 folds the evicted column") {
        LayerStack<Tensor> s(StackPolicy::first_last(1));
        const Tensor x = Tensor::vector({1}), f1 = Tensor::vector({10}), f2 = Tensor::vector({100}),
                     f3 = Tensor::vector({1000});
        for (const Tensor* c : {&x, &f1, &f2, &f3}) s.push(*c);
        REQUIRE(s.width() == 3);
        CHECK(s[0] == x);
        CHECK(s[1] == Tensor::vector({110}));
        CHECK(s[2] == f3);
    }
    SUBCASE("k at least the depth keeps every column") {
        Sampler rng(1);
        const auto cols = random_columns(rng, 6, {3});
        LayerStack<Tensor> full, trunc(StackPolicy::first_last(5));
        for (const Tensor& c : cols) {
            full.push(c);
            trunc.push(c);
        }
        REQUIRE(trunc.width() == full.width());
        for (std::size_t j = 0; j < full.width(); ++j) CHECK(trunc[j] == full[j]);
    }
    SUBCASE("represented content equals the full column sum") {
        Sampler rng(2);
        for (std::size_t k = 0; k <= 6; ++k) {
            const auto cols = random_columns(rng, 7, {4});
            std::vector<Tensor> ints;
            for (std::size_t j = 0; j < 7; ++j) ints.push_back(rng.integer_tensor({4}, -9, 9));
            LayerStack<Tensor> s(StackPolicy::first_last(k));
            for (const Tensor& c : ints) s.push(c);
            CHECK(s.width() <= k + 2);
            std::vector<Tensor> held(s.columns().begin(), s.columns().end());
            CHECK(plain_sum(held) == plain_sum(ints));
        }
    }
    SUBCASE("shape mismatch") {
        LayerStack<Tensor> s;
        s.push(Tensor({3}));
        CHECK_THROWS_AS(s.push(Tensor({4})), ShapeError);
    }
}

TEST_CASE("combine v1") {
    Sampler rng(3);
    const auto cols = random_columns(rng, 4, {5});
    CHECK(combine_v1(cols, Tensor::ones({4})) == plain_sum(cols));
    Tensor e({4});
    e[2] = 1.0;
    CHECK(combine_v1(cols, e) == cols[2]);
    // Dense matrix-vector oracle: G [d x t] times b.
    const Tensor b = rng.normal_tensor({4});
    Tensor G({5, 4});
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 4; ++j) G(i, j) = cols[j][i];
    const Tensor ref = matmul(G, b.reshaped({4, 1})).reshaped({5});
    CHECK(max_abs_diff(combine_v1(cols, b), ref) <= 1e-14);
    CHECK_THROWS_AS(combine_v1(cols, Tensor::ones({3})), ShapeError);
}

TEST_CASE("combine v2") {
    Sampler rng(4);
    const auto cols = random_columns(rng, 3, {6, 5});
    CHECK(combine_v2(cols, Tensor::ones({5, 3})) == plain_sum(cols));
    Tensor b = rng.normal_tensor({5, 3});
    for (std::size_t j = 0; j < 3; ++j) b(2, j) = 0.0;
    const Tensor out = combine_v2(cols, b);
    for (std::size_t n = 0; n < 6; ++n) CHECK(out(n, 2) == 0.0);
    // A v1 vector repeated down the rows.
    const Tensor v = rng.normal_tensor({3});
    Tensor rep({5, 3});
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 3; ++j) rep(i, j) = v[j];
    CHECK(max_abs_diff(combine_v2(cols, rep), combine_v1(cols, v)) <= 1e-14);
    CHECK_THROWS_AS(combine_v2(cols, Tensor::ones({5, 2})), ShapeError);
}

TEST_CASE("combine v3") {
    Sampler rng(5);
    const std::size_t d = 5, t = 4, n = 3;
    const auto cols = random_columns(rng, t, {n, d});
    const Tensor b = rng.normal_tensor({d, t});
    CHECK(combine_v3(cols, b, Tensor({d})) == combine_v2(cols, b));
    CHECK(combine_v3(cols, Tensor::ones({d, t}), Tensor({d})) == plain_sum(cols));

    // Unfused reference: gate_j = relu(w . G_j) per token, then Hadamard and sum.
    const Tensor w = rng.normal_tensor({d});
    Tensor ref({n, d});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < t; ++j) {
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) dot += w[i] * cols[j](r, i);
            const double gate = std::max(0.0, dot);
            for (std::size_t i = 0; i < d; ++i) ref(r, i) += cols[j](r, i) * (b(i, j) + gate);
        }
    CHECK(max_abs_diff(combine_v3(cols, b, w), ref) <= 1e-14);
    CHECK_THROWS_AS(combine_v3(cols, b, Tensor({d + 1})), ShapeError);
}

TEST_CASE("fused combine matches the tensor path") {
    Sampler rng(6);
    const auto cols = random_columns(rng, 3, {2, 4});
    for (Variant v : {Variant::V1, Variant::V2, Variant::V3}) {
        GrnParams p = GrnParams::init(v, 4, 3);
        for (double& x : p.b.values()) x += 0.3 * rng.normal();
        if (v == Variant::V3) p.w = rng.normal_tensor({4});
        ad::Tape tape;
        std::vector<ad::Var> vs;
        for (const Tensor& c : cols) vs.push_back(tape.constant(c));
        const ad::Var out = combine(vs, v, tape.constant(p.b), v == Variant::V3 ? tape.constant(p.w) : ad::Var{});
        CHECK(out.value() == combine(cols, p));
    }
}

TEST_CASE("grn params start at the residual sum") {
    for (Variant v : {Variant::V1, Variant::V2, Variant::V3}) {
        const GrnParams p = GrnParams::init(v, 6, 4);
        CHECK(p.width() == 4);
        for (double x : p.b.values()) CHECK(x == 1.0);
        if (v == Variant::V3) {
            CHECK(p.w.size() == 6);
            for (double x : p.w.values()) CHECK(x == 0.0);
        }
    }
}

TEST_CASE("linear model parameter counts") {
    Rng init(1);
    LinearModelConfig c{Arch::ResNet, 100, std::vector<std::size_t>(10, 3)};
    const LinearModel res(c, init);
    CHECK(res.layer_parameter_count() == 6000);
    CHECK(res.grn_parameter_count() == 0);
    c.arch = Arch::V1;
    const LinearModel v1(c, init);
    CHECK(v1.layer_parameter_count() == 6000);
    // b_1 .. b_10 have widths 1 .. 10 and the output combine has 11.
    CHECK(v1.grn_parameter_count() == 66);
    c.ranks = {3, 0};
    CHECK_THROWS_AS(LinearModel(c, init), std::invalid_argument);
}

TEST_CASE("every variant equals ResNet at init") {
    Sampler rng(7);
    const Tensor x = rng.normal_tensor({4, 9});
    for (Activation act : {Activation::None, Activation::Relu}) {
        Rng a(11);
        const LinearModel res({Arch::ResNet, 9, {2, 3, 1}, act}, a);
        const Tensor ref = res.forward(x);
        for (Arch arch : {Arch::V1, Arch::V2, Arch::V3}) {
            Rng b(11);
            const LinearModel m({arch, 9, {2, 3, 1}, act}, b);
            CHECK(m.forward(x) == ref);
        }
    }
}

TEST_CASE("first-and-last-k with unit weights equals the full stack") {
    Sampler rng(8);
    const std::size_t d = 6, T = 5;
    const Tensor x = rng.integer_tensor({3, d}, -3, 3);
    for (Arch arch : {Arch::V1, Arch::V2, Arch::V3}) {
        const auto build = [&](StackPolicy p) {
            Rng init(0);
            auto m = std::make_unique<LinearModel>(LinearModelConfig{arch, d, std::vector<std::size_t>(T, 2),
                                                                     Activation::None, p},
                                                   init);
            Sampler ints(9);
            for (ad::Parameter* q : m->parameters())
                if (q->name().rfind("layer", 0) == 0) q->value() = ints.integer_tensor(q->value().shape(), -1, 1);
            return m;
        };
        const Tensor ref = build(StackPolicy::full())->forward(x);
        for (std::size_t k = 0; k <= T + 1; ++k) CHECK(build(StackPolicy::first_last(k))->forward(x) == ref);
    }
}

TEST_CASE("grn weights receive gradient") {
    Sampler rng(10);
    Rng init(3);
    LinearModel m({Arch::V3, 6, {2, 2, 2}, Activation::None}, init);
    // Open the ReLU gates so w has a path to the loss.
    set_all(m, ".w", 0.1);
    ad::Tape tape;
    const ad::Var y = m.forward(tape, tape.constant(rng.uniform_tensor({5, 6}, 0.1, 1.0)));
    const ad::GradientMap g = tape.backward(ad::sum(ad::hadamard(y, y)));
    for (const ad::Parameter* p : std::as_const(m).parameters()) {
        if (p->name().rfind("grn", 0) != 0) continue;
        REQUIRE(g.find(*p) != nullptr);
        CHECK_MESSAGE(max_abs(*g.find(*p)) > 0.0, p->name());
    }
}

TEST_CASE("expressivity") {
    SUBCASE("ResNet model matrix minus identity has rank at most the collective rank") {
        for (std::uint64_t s = 0; s < 20; ++s) {
            Rng init(100 + s);
            const LinearModel m({Arch::ResNet, 10, {2, 2}, Activation::None, StackPolicy::full(), InitScheme::FanIn, 1.0},
                                init);
            const Tensor M = m.forward(Tensor::identity(10));
            CHECK(numeric_rank(sub(M, Tensor::identity(10))) <= 4);
        }
    }
    SUBCASE("GRN-v1 fits alpha I + rank 4; a plain stack of rank 2 cannot") {
        Sampler rng(12);
        const std::size_t d = 10;
        const Tensor M = matmul(rng.normal_tensor({d, 4}), rng.normal_tensor({4, d}));
        const Tensor target = grnlab::add(scale(Tensor::identity(d), 0.5), scale(M, 0.3));

        Rng a(5);
        LinearModel v1({Arch::V1, d, {2, 2}, Activation::None, StackPolicy::full(), InitScheme::FanIn, 1.0}, a);
        CHECK(fit(v1, target, 15000, 0.02) <= 1e-6);

        Rng b(5);
        LinearModel base({Arch::Baseline, d, {2, 2}, Activation::None, StackPolicy::full(), InitScheme::FanIn, 1.0}, b);
        const double oracle = frobenius_norm_sq(sub(target, best_rank_r(target, 2))) / double(d * d);
        CHECK(fit(base, target, 2000, 0.02) >= oracle - 1e-6);
    }
}

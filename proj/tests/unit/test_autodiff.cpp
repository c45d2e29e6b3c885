// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <thread>
#include <vector>

#include "grnlab/autodiff/jacobian.hpp"
#include "grnlab/autodiff/ops.hpp"
#include "grnlab/autodiff/optim.hpp"
#include "grnlab/autodiff/tape.hpp"
#include "grnlab/numerics/linalg.hpp"
#include "support/random.hpp"

using namespace grnlab;
using grnlab::testing::Sampler;

TEST_CASE("forward values of simple ops") {
    ad::Tape tape;
    const ad::Var r = ad::relu(tape.constant(Tensor::vector({-1.0, 0.0, 2.0})));
    CHECK(r.value() == Tensor::vector({0.0, 0.0, 2.0}));

    const ad::Var s = ad::softmax(tape.constant(Tensor::vector({0.0, 0.0})), 0);
    CHECK(s.value() == Tensor::vector({0.5, 0.5}));

    for (std::size_t v : {2u, 7u, 256u}) {
        const std::size_t targets[] = {0, v - 1, v / 2};
        const ad::Var ce = ad::cross_entropy(tape.constant(Tensor({3, v})), targets);
        CHECK(ce.value().item() == doctest::Approx(std::log(double(v))).epsilon(1e-14));
    }
}

TEST_CASE("op argument errors") {
    ad::Tape tape;
    const ad::Var a = tape.input(Tensor({2, 3}, 1.0));
    const ad::Var b = tape.input(Tensor({2, 2}, 1.0));
    const std::size_t before = tape.size();
    CHECK_THROWS_AS(ad::matmul(a, b), ShapeError);
    CHECK_THROWS_AS(ad::add(a, b), ShapeError);
    CHECK(tape.size() == before);
    CHECK_THROWS_AS(ad::softmax(tape.input(Tensor({0})), 0), ShapeError);
    const std::size_t bad[] = {3};
    CHECK_THROWS(ad::cross_entropy(a, bad));
    const std::size_t out_of_range[] = {0, 5};
    CHECK_THROWS(ad::gather(a, out_of_range));
    ad::Tape other;
    CHECK_THROWS(ad::add(a, other.input(Tensor({2, 3}))));
}

TEST_CASE("backward on analytic losses") {
    SUBCASE("sum gives ones") {
        ad::Tape tape;
        const ad::Var x = tape.input(Tensor({2, 3}, 0.7));
        tape.backward(ad::sum(x));
        CHECK(tape.grad(x) == Tensor({2, 3}, 1.0));
    }
    SUBCASE("half squared norm of W x") {
        Sampler rng(3);
        const Tensor w = rng.normal_tensor({4, 3});
        const Tensor x = rng.normal_tensor({3, 1});
        ad::Parameter W("W", w);
        ad::Tape tape;
        const ad::Var y = ad::matmul(tape.param(W), tape.constant(x));
        const ad::GradientMap g = tape.backward(ad::scale(ad::sum(ad::hadamard(y, y)), 0.5));
        const Tensor expect = matmul(matmul(w, x), transpose(x));
        CHECK(max_abs_diff(*g.find(W), expect) <= 1e-14);
    }
    SUBCASE("non-scalar loss is rejected") {
        ad::Tape tape;
        CHECK_THROWS(tape.backward(tape.input(Tensor({2}))));
    }
}

TEST_CASE("backward is bit-identical across fresh tapes") {
    Sampler rng(4);
    ad::Parameter W("W", rng.normal_tensor({5, 5})), b("b", rng.normal_tensor({5}));
    const Tensor x = rng.normal_tensor({6, 5});
    const auto run = [&] {
        ad::Tape tape;
        ad::Var h = ad::relu(ad::add_row(ad::matmul(tape.constant(x), tape.param(W)), tape.param(b)));
        h = ad::layernorm(h, 1);
        const std::size_t t[] = {0, 1, 2, 3, 4, 0};
        const ad::GradientMap g = tape.backward(ad::cross_entropy(h, t));
        return std::make_pair(*g.find(W), *g.find(b));
    };
    const auto a = run(), c = run();
    CHECK(a.first == c.first);
    CHECK(a.second == c.second);
}

TEST_CASE("gradient map keeps first-appearance order and accumulates reuse") {
    ad::Parameter p("p", Tensor::vector({2.0})), q("q", Tensor::vector({3.0}));
    ad::Tape tape;
    const ad::Var vq = tape.param(q);
    const ad::Var vp = tape.param(p);
    CHECK(tape.param(p).id() == vp.id());
    // p*q + p
    const ad::GradientMap g = tape.backward(ad::sum(ad::add(ad::hadamard(vp, vq), vp)));
    REQUIRE(g.size() == 2);
    CHECK(g.entries()[0].first == &q);
    CHECK(g.entries()[1].first == &p);
    CHECK(g.find(p)->item() == 4.0);
    CHECK(g.find(q)->item() == 2.0);
}

TEST_CASE("separate tapes on separate threads do not interact") {
    Sampler rng(5);
    ad::Parameter W("W", rng.normal_tensor({4, 4}));
    const Tensor x1 = rng.normal_tensor({3, 4}), x2 = rng.normal_tensor({3, 4});
    const auto grad = [&](const Tensor& x) {
        ad::Tape tape;
        const ad::Var y = ad::matmul(tape.constant(x), tape.param(W));
        return *tape.backward(ad::sum(ad::hadamard(y, y))).find(W);
    };
    const Tensor ref1 = grad(x1), ref2 = grad(x2);
    Tensor got1, got2;
    {
        std::jthread a([&] { for (int i = 0; i < 50; ++i) got1 = grad(x1); });
        std::jthread b([&] { for (int i = 0; i < 50; ++i) got2 = grad(x2); });
    }
    CHECK(got1 == ref1);
    CHECK(got2 == ref2);
}

TEST_CASE("jacobian") {
    SUBCASE("identity") {
        const Tensor j = ad::jacobian([](ad::Var x) { return x; }, Tensor::vector({1.0, 2.0, 3.0}));
        CHECK(j == Tensor::identity(3));
    }
    SUBCASE("fixed linear map") {
        Sampler rng(6);
        const Tensor m = rng.normal_tensor({5, 5});
        const Tensor mt = transpose(m);
        // Row convention: y = x M^T, so dy_i / dx_j = M[i, j].
        const Tensor j = ad::jacobian([&](ad::Var x) { return ad::matmul(x, x.tape().constant(mt)); },
                                      rng.normal_tensor({5}));
        CHECK(max_abs_diff(j, m) <= 1e-10);
    }
    SUBCASE("residual MLP of ranks (2, 2)") {
        Sampler rng(7);
        const std::size_t d = 8;
        const Tensor d1 = rng.normal_tensor({d, 2}), u1 = rng.normal_tensor({2, d});
        const Tensor d2 = rng.normal_tensor({d, 2}), u2 = rng.normal_tensor({2, d});
        const auto f = [&](ad::Var x) {
            ad::Tape& t = x.tape();
            ad::Var h = ad::add(x, ad::matmul(ad::relu(ad::matmul(x, t.constant(d1))), t.constant(u1)));
            return ad::add(h, ad::matmul(ad::relu(ad::matmul(h, t.constant(d2))), t.constant(u2)));
        };
        for (int p = 0; p < 10; ++p) {
            const Tensor j = ad::jacobian(f, rng.normal_tensor({d}));
            CHECK(numeric_rank(sub(j, Tensor::identity(d)), 1e-6) <= 4);
        }
    }
    SUBCASE("non-square map is rejected") {
        CHECK_THROWS_AS(ad::jacobian([](ad::Var x) { return ad::slice_cols(x, 0, 2); }, Tensor::vector({1, 2, 3})),
                        ShapeError);
    }
}

TEST_CASE("sgd") {
    ad::Parameter p("p", Tensor::vector({0.0}));
    ad::GradientMap g;
    g.add(&p, Tensor::vector({1.0}));
    ad::Parameter* ps[] = {&p};
    ad::Sgd(0.1).step(ps, g);
    CHECK(p.value()[0] == -0.1);

    ad::GradientMap bad;
    bad.add(&p, Tensor::vector({std::nan("")}));
    CHECK_THROWS_AS(ad::Sgd(0.1).step(ps, bad), NumericError);
    CHECK(p.value()[0] == -0.1);
}

TEST_CASE("adamw") {
    SUBCASE("zero gradient without decay leaves the parameter alone") {
        ad::Parameter p("p", Tensor::vector({1.5, -2.0}));
        ad::GradientMap g;
        g.add(&p, Tensor::vector({0.0, 0.0}));
        ad::Parameter* ps[] = {&p};
        ad::AdamW opt({0.1, 0.9, 0.98, 1e-8, 0.0});
        for (int i = 0; i < 3; ++i) opt.step(ps, g);
        CHECK(p.value() == Tensor::vector({1.5, -2.0}));
    }
    SUBCASE("three steps on a scalar quadratic match the unrolled update") {
        // loss = (p - 3)^2, grad = 2 (p - 3)
        const double lr = 0.05, b1 = 0.9, b2 = 0.98, eps = 1e-8, wd = 0.1;
        ad::Parameter p("p", Tensor::vector({1.0}));
        ad::AdamW opt({lr, b1, b2, eps, wd});
        ad::Parameter* ps[] = {&p};
        double x = 1.0, m = 0.0, v = 0.0;
        for (int t = 1; t <= 3; ++t) {
            const double g = 2.0 * (x - 3.0);
            ad::GradientMap gm;
            gm.add(&p, Tensor::vector({2.0 * (p.value()[0] - 3.0)}));
            opt.step(ps, gm);
            m = b1 * m + (1 - b1) * g;
            v = b2 * v + (1 - b2) * g * g;
            const double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
            x = x - lr * wd * x;
            x = x - lr * mh / (std::sqrt(vh) + eps);
            CHECK(std::abs(p.value()[0] - x) <= 1e-12);
        }
    }
    SUBCASE("decay applies only to flagged parameters") {
        ad::Parameter a("a", Tensor::vector({1.0}), true), b("b", Tensor::vector({1.0}), false);
        ad::GradientMap g;
        g.add(&a, Tensor::vector({0.0}));
        g.add(&b, Tensor::vector({0.0}));
        ad::Parameter* ps[] = {&a, &b};
        ad::AdamW({0.1, 0.9, 0.98, 1e-8, 0.5}).step(ps, g);
        CHECK(a.value()[0] == doctest::Approx(0.95).epsilon(1e-15));
        CHECK(b.value()[0] == 1.0);
    }
    SUBCASE("non-finite gradients abort the step") {
        ad::Parameter p("p", Tensor::vector({1.0}));
        ad::GradientMap g;
        g.add(&p, Tensor::vector({INFINITY}));
        ad::Parameter* ps[] = {&p};
        ad::AdamW opt({});
        CHECK_THROWS_AS(opt.step(ps, g), NumericError);
        CHECK(p.value()[0] == 1.0);
    }
}

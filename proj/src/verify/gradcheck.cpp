// SPDX-License-Identifier: Apache-2.0
#include "grnlab/verify/gradcheck.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "grnlab/autodiff/ops.hpp"
#include "grnlab/dca/attention.hpp"
#include "grnlab/grn/combine.hpp"

namespace grnlab::verify {
namespace {

double evaluate(const GradCase& c, const std::vector<Tensor>& values) {
    ad::Tape tape;
    std::vector<ad::Var> in;
    in.reserve(values.size());
    for (const Tensor& v : values) in.push_back(tape.input(v));
    const ad::Var loss = c.loss(tape, in);
    return loss.value().item();
}

// Keeps |x| >= margin so a finite-difference step never crosses a ReLU kink.
void off_kink(Tensor& t, double margin = 0.1) {
    for (double& v : t.values()) v = v < 0.0 ? std::min(v, -margin) : std::max(v, margin);
}

void positive(Tensor& t, double shift = 0.1) {
    for (double& v : t.values()) v = std::abs(v) + shift;
}

GradCase unary(std::string name, Shape s, std::function<ad::Var(ad::Var)> f, std::uint64_t salt) {
    return {std::move(name), {std::move(s)},
            [f, salt](ad::Tape&, std::span<const ad::Var> in) { return weighted_sum(f(in[0]), salt); }, {}};
}

GradCase binary(std::string name, Shape a, Shape b, std::function<ad::Var(ad::Var, ad::Var)> f, std::uint64_t salt) {
    return {std::move(name), {std::move(a), std::move(b)},
            [f, salt](ad::Tape&, std::span<const ad::Var> in) { return weighted_sum(f(in[0], in[1]), salt); }, {}};
}

GradCase grn_case(grn::Variant v) {
    const std::size_t tokens = 3, d = 4, width = 3;
    GradCase c;
    c.name = "grn_combine_" + grn::to_string(v);
    for (std::size_t j = 0; j < width; ++j) c.inputs.push_back({tokens, d});
    c.inputs.push_back(v == grn::Variant::V1 ? Shape{width} : Shape{d, width});
    if (v == grn::Variant::V3) c.inputs.push_back({d});
    c.loss = [v, width](ad::Tape&, std::span<const ad::Var> in) {
        const ad::Var w = v == grn::Variant::V3 ? in[width + 1] : ad::Var{};
        return weighted_sum(grn::combine(in.first(width), v, in[width], w), 31);
    };
    if (v == grn::Variant::V3) {
        // Column 1 points against w and stays gated off; columns 0 and 2 are
        // gated on with a clear margin.
        c.prepare = [](std::vector<Tensor>& in) {
            positive(in[0]);
            positive(in[1]);
            for (double& x : in[1].values()) x = -x;
            positive(in[2]);
            positive(in[4]);
        };
    }
    return c;
}

}  // namespace

ad::Var weighted_sum(ad::Var out, std::uint64_t salt) {
    Rng rng(derive_seed(0x5EEDC0DE, salt));
    const Tensor w = rng.uniform_tensor(out.shape(), -1.0, 1.0);
    return ad::sum(ad::hadamard(out, out.tape().constant(w)));
}

GradCheckResult check_gradients(const GradCase& c, std::uint64_t seed, double h, double tol) {
    Rng rng(seed);
    std::vector<Tensor> values;
    for (const Shape& s : c.inputs) values.push_back(rng.uniform_tensor(s, -1.0, 1.0));
    if (c.prepare) c.prepare(values);

    ad::Tape tape;
    std::vector<ad::Var> in;
    for (const Tensor& v : values) in.push_back(tape.input(v));
    const ad::Var loss = c.loss(tape, in);
    tape.backward(loss);

    GradCheckResult r{c.name, seed, 0.0, false};
    for (std::size_t k = 0; k < values.size(); ++k) {
        const Tensor analytic = tape.has_grad(in[k]) ? tape.grad(in[k]) : Tensor(values[k].shape());
        Tensor numeric(values[k].shape());
        for (std::size_t i = 0; i < values[k].size(); ++i) {
            const double x0 = values[k][i];
            values[k][i] = x0 + h;
            const double fp = evaluate(c, values);
            values[k][i] = x0 - h;
            const double fm = evaluate(c, values);
            values[k][i] = x0;
            numeric[i] = (fp - fm) / (2.0 * h);
        }
        const double scale = std::max({max_abs(analytic), max_abs(numeric), 1e-8});
        const double err = max_abs_diff(analytic, numeric) / scale;
        if (std::isnan(err)) {
            r.max_rel_error = err;
            return r;
        }
        r.max_rel_error = std::max(r.max_rel_error, err);
    }
    r.passed = r.max_rel_error <= tol;
    return r;
}

std::vector<GradCase> standard_grad_cases() {
    using ad::Var;
    std::vector<GradCase> cs;
    cs.push_back(binary("matmul", {3, 4}, {4, 2}, [](Var a, Var b) { return ad::matmul(a, b); }, 1));
    cs.push_back(binary("add", {3, 4}, {3, 4}, [](Var a, Var b) { return ad::add(a, b); }, 2));
    cs.push_back(binary("sub", {3, 4}, {3, 4}, [](Var a, Var b) { return ad::sub(a, b); }, 3));
    cs.push_back(binary("hadamard", {3, 4}, {3, 4}, [](Var a, Var b) { return ad::hadamard(a, b); }, 4));
    cs.push_back(binary("add_row", {3, 4}, {4}, [](Var a, Var b) { return ad::add_row(a, b); }, 5));
    cs.push_back(binary("mul_row", {3, 4}, {4}, [](Var a, Var b) { return ad::mul_row(a, b); }, 6));
    cs.push_back(unary("scale", {3, 4}, [](Var a) { return ad::scale(a, -1.75); }, 7));
    {
        GradCase c = unary("relu", {4, 5}, [](Var a) { return ad::relu(a); }, 8);
        c.prepare = [](std::vector<Tensor>& in) { off_kink(in[0]); };
        cs.push_back(std::move(c));
    }
    cs.push_back(unary("transpose", {3, 4}, [](Var a) { return ad::transpose(a); }, 9));
    cs.push_back(unary("softmax_axis0", {3, 4}, [](Var a) { return ad::softmax(a, 0); }, 10));
    cs.push_back(unary("softmax_axis1", {3, 4}, [](Var a) { return ad::softmax(a, 1); }, 11));
    cs.push_back(unary("softmax_rank3_axis1", {2, 3, 4}, [](Var a) { return ad::softmax(a, 1); }, 12));
    cs.push_back(unary("layernorm_axis0", {4, 3}, [](Var a) { return ad::layernorm(a, 0); }, 13));
    cs.push_back(unary("layernorm_axis1", {3, 5}, [](Var a) { return ad::layernorm(a, 1); }, 14));
    cs.push_back(unary("layernorm_rank3_axis1", {2, 4, 3}, [](Var a) { return ad::layernorm(a, 1); }, 15));
    cs.push_back(unary("gather", {5, 3},
                       [](Var a) {
                           static constexpr std::array<std::size_t, 4> ids{0, 2, 2, 4};
                           return ad::gather(a, ids);
                       },
                       16));
    cs.push_back({"sum", {{3, 4}}, [](ad::Tape&, std::span<const Var> in) { return ad::sum(in[0]); }, {}});
    cs.push_back({"mean", {{3, 4}}, [](ad::Tape&, std::span<const Var> in) { return ad::mean(in[0]); }, {}});
    cs.push_back({"cross_entropy",
                  {{4, 5}},
                  [](ad::Tape&, std::span<const Var> in) {
                      static constexpr std::array<std::size_t, 4> targets{1, 0, 4, 4};
                      return ad::cross_entropy(ad::scale(in[0], 3.0), targets);
                  },
                  {}});
    cs.push_back(unary("slice_cols", {3, 5}, [](Var a) { return ad::slice_cols(a, 1, 4); }, 17));
    cs.push_back(unary("slice_rows", {5, 3}, [](Var a) { return ad::slice_rows(a, 2, 5); }, 18));
    cs.push_back(binary("concat_cols", {3, 2}, {3, 4},
                        [](Var a, Var b) {
                            const std::array<Var, 3> parts{a, b, a};
                            return ad::concat_cols(parts);
                        },
                        19));
    cs.push_back(binary("concat_rows", {2, 3}, {4, 3},
                        [](Var a, Var b) {
                            const std::array<Var, 2> parts{b, a};
                            return ad::concat_rows(parts);
                        },
                        20));
    cs.push_back(unary("causal_mask_softmax", {4, 4}, [](Var a) { return ad::softmax(ad::causal_mask(a), 1); }, 21));
    cs.push_back(grn_case(grn::Variant::V1));
    cs.push_back(grn_case(grn::Variant::V2));
    cs.push_back(grn_case(grn::Variant::V3));
    cs.push_back({"causal_attention_2heads",
                  {{3, 4}, {3, 4}, {3, 4}},
                  [](ad::Tape&, std::span<const Var> in) {
                      return weighted_sum(dca::causal_attention(in[0], in[1], in[2], 2), 22);
                  },
                  {}});
    return cs;
}

}  // namespace grnlab::verify

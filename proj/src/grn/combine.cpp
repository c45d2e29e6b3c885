// SPDX-License-Identifier: Apache-2.0
#include "grnlab/grn/combine.hpp"

#include <stdexcept>
#include <vector>

namespace grnlab::grn {
namespace {

struct Layout {
    std::size_t tokens = 0;
    std::size_t d = 0;
};

Layout column_layout(std::span<const Tensor* const> cols, const char* op) {
    if (cols.empty()) throw ShapeError(std::string(op) + ": empty stack");
    const Shape& s = cols[0]->shape();
    if (s.empty() || s.size() > 2) throw ShapeError(std::string(op) + ": column must be [d] or [N x d], got " + shape_string(s));
    for (const Tensor* c : cols) {
        if (c->shape() != s) {
            throw ShapeError(std::string(op) + ": column shapes differ, " + shape_string(s) + " vs " +
                             shape_string(c->shape()));
        }
    }
    Layout l;
    l.d = s.back();
    l.tokens = s.size() == 2 ? s[0] : 1;
    return l;
}

void check_weights(Variant v, const Tensor& b, const Tensor* w, std::size_t d, std::size_t width, const char* op) {
    const Shape expect_b = v == Variant::V1 ? Shape{width} : Shape{d, width};
    if (b.shape() != expect_b) {
        throw ShapeError(std::string(op) + ": weights " + shape_string(b.shape()) + " do not match stack of " +
                         std::to_string(width) + " columns of size " + std::to_string(d) + ", expected " +
                         shape_string(expect_b));
    }
    if (v == Variant::V3) {
        if (!w || w->shape() != Shape{d}) {
            throw ShapeError(std::string(op) + ": gate vector must have shape " + shape_string({d}));
        }
    }
}

// Shared forward. gates (V3 only) receives relu inputs s_j[n] laid out [width x tokens].
Tensor forward(std::span<const Tensor* const> cols, Variant v, const Tensor& b, const Tensor* w, Layout l,
               std::vector<double>* pre_gate) {
    const std::size_t width = cols.size();
    Tensor out(cols[0]->shape());
    if (pre_gate) pre_gate->assign(width * l.tokens, 0.0);
    for (std::size_t j = 0; j < width; ++j) {
        const Tensor& g = *cols[j];
        for (std::size_t n = 0; n < l.tokens; ++n) {
            const double* gr = g.data() + n * l.d;
            double* orow = out.data() + n * l.d;
            double gate = 0.0;
            if (v == Variant::V3) {
                double s = 0.0;
                for (std::size_t i = 0; i < l.d; ++i) s += (*w)[i] * gr[i];
                if (pre_gate) (*pre_gate)[j * l.tokens + n] = s;
                gate = s > 0.0 ? s : 0.0;
            }
            if (v == Variant::V1) {
                const double bj = b[j];
                for (std::size_t i = 0; i < l.d; ++i) orow[i] += gr[i] * bj;
            } else {
                for (std::size_t i = 0; i < l.d; ++i) orow[i] += gr[i] * (b[i * width + j] + gate);
            }
        }
    }
    return out;
}

std::vector<const Tensor*> pointers(std::span<const Tensor> cols) {
    std::vector<const Tensor*> p;
    p.reserve(cols.size());
    for (const Tensor& c : cols) p.push_back(&c);
    return p;
}

}  // namespace

std::string to_string(Variant v) {
    switch (v) {
        case Variant::V1: return "v1";
        case Variant::V2: return "v2";
        case Variant::V3: return "v3";
    }
    return "?";
}

Variant parse_variant(const std::string& s) {
    if (s == "v1") return Variant::V1;
    if (s == "v2") return Variant::V2;
    if (s == "v3") return Variant::V3;
    throw std::invalid_argument("unknown GRN variant '" + s + "'");
}

GrnParams GrnParams::init(Variant v, std::size_t d, std::size_t width) {
    GrnParams p;
    p.variant = v;
    p.b = v == Variant::V1 ? Tensor::ones({width}) : Tensor::ones({d, width});
    if (v == Variant::V3) p.w = Tensor::zeros({d});
    return p;
}

std::size_t GrnParams::width() const { return b.shape().back(); }

std::size_t GrnParams::dim() const {
    if (variant == Variant::V1) throw std::logic_error("grn params: v1 weights carry no feature dimension");
    return b.shape()[0];
}

Tensor combine_v1(std::span<const Tensor> cols, const Tensor& b) {
    const auto ptr = pointers(cols);
    const Layout l = column_layout(ptr, "combine_v1");
    check_weights(Variant::V1, b, nullptr, l.d, cols.size(), "combine_v1");
    return forward(ptr, Variant::V1, b, nullptr, l, nullptr);
}

Tensor combine_v2(std::span<const Tensor> cols, const Tensor& b) {
    const auto ptr = pointers(cols);
    const Layout l = column_layout(ptr, "combine_v2");
    check_weights(Variant::V2, b, nullptr, l.d, cols.size(), "combine_v2");
    return forward(ptr, Variant::V2, b, nullptr, l, nullptr);
}

Tensor combine_v3(std::span<const Tensor> cols, const Tensor& b, const Tensor& w) {
    const auto ptr = pointers(cols);
    const Layout l = column_layout(ptr, "combine_v3");
    check_weights(Variant::V3, b, &w, l.d, cols.size(), "combine_v3");
    return forward(ptr, Variant::V3, b, &w, l, nullptr);
}

Tensor combine(std::span<const Tensor> cols, const GrnParams& p) {
    switch (p.variant) {
        case Variant::V1: return combine_v1(cols, p.b);
        case Variant::V2: return combine_v2(cols, p.b);
        case Variant::V3: return combine_v3(cols, p.b, p.w);
    }
    throw std::logic_error("combine: bad variant");
}

ad::Var combine(std::span<const ad::Var> cols, Variant variant, ad::Var b, ad::Var w) {
    if (cols.empty()) throw ShapeError("combine: empty stack");
    ad::Tape& tape = cols[0].tape();
    std::vector<const Tensor*> ptr;
    std::vector<std::size_t> parents;
    for (const ad::Var& c : cols) {
        if (&c.tape() != &tape) throw std::logic_error("combine: columns live on different tapes");
        ptr.push_back(&c.value());
        parents.push_back(c.id());
    }
    const Layout l = column_layout(ptr, "combine");
    const bool v3 = variant == Variant::V3;
    if (&b.tape() != &tape || (v3 && &w.tape() != &tape)) throw std::logic_error("combine: weights on another tape");
    check_weights(variant, b.value(), v3 ? &w.value() : nullptr, l.d, cols.size(), "combine");

    std::vector<double> pre_gate;
    Tensor out = forward(ptr, variant, b.value(), v3 ? &w.value() : nullptr, l, v3 ? &pre_gate : nullptr);

    const std::size_t width = cols.size();
    parents.push_back(b.id());
    if (v3) parents.push_back(w.id());
    std::vector<std::size_t> col_ids(parents.begin(), parents.begin() + static_cast<std::ptrdiff_t>(width));
    const std::size_t b_id = b.id();
    const std::size_t w_id = v3 ? w.id() : 0;

    auto backward = [&tape, col_ids = std::move(col_ids), pre_gate = std::move(pre_gate), variant, l, width, b_id,
                     w_id](const Tensor& g, ad::GradSink& sink) {
        const Tensor& bv = tape.value(b_id);
        const Tensor* wv = variant == Variant::V3 ? &tape.value(w_id) : nullptr;
        Tensor& db = sink.parent(width);
        Tensor* dw = wv ? &sink.parent(width + 1) : nullptr;
        for (std::size_t j = 0; j < width; ++j) {
            const Tensor& gj = tape.value(col_ids[j]);
            Tensor& dgj = sink.parent(j);
            for (std::size_t n = 0; n < l.tokens; ++n) {
                const double* up = g.data() + n * l.d;
                const double* col = gj.data() + n * l.d;
                double* dcol = dgj.data() + n * l.d;
                double gate = 0.0;
                bool open = false;
                if (wv) {
                    const double s = pre_gate[j * l.tokens + n];
                    open = s > 0.0;
                    gate = open ? s : 0.0;
                }
                if (variant == Variant::V1) {
                    const double bj = bv[j];
                    double acc = 0.0;
                    for (std::size_t i = 0; i < l.d; ++i) {
                        dcol[i] += up[i] * bj;
                        acc += up[i] * col[i];
                    }
                    db[j] += acc;
                    continue;
                }
                double dot = 0.0;
                for (std::size_t i = 0; i < l.d; ++i) {
                    dcol[i] += up[i] * (bv[i * width + j] + gate);
                    db[i * width + j] += up[i] * col[i];
                    dot += up[i] * col[i];
                }
                if (open) {
                    for (std::size_t i = 0; i < l.d; ++i) {
                        dcol[i] += dot * (*wv)[i];
                        (*dw)[i] += dot * col[i];
                    }
                }
            }
        }
    };
    return tape.record(std::move(out), std::move(parents), std::move(backward), "grn_combine");
}

}  // namespace grnlab::grn

// SPDX-License-Identifier: Apache-2.0
#include "grnlab/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace grnlab::ad {
namespace {

Tape& same_tape(Var a, Var b, const char* op) {
    if (!a.valid() || !b.valid()) throw std::logic_error(std::string(op) + ": unbound variable");
    if (&a.tape() != &b.tape()) throw std::logic_error(std::string(op) + ": operands live on different tapes");
    return a.tape();
}

// c += a * b^T  (a: m x k, b: n x k)
void gemm_nt_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a.data() + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b.data() + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
            c(i, j) += s;
        }
    }
}

// c += a^T * b  (a: k x m, b: k x n)
void gemm_tn_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
    for (std::size_t p = 0; p < k; ++p) {
        const double* ap = a.data() + p * m;
        const double* bp = b.data() + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double api = ap[i];
            double* ci = c.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
        }
    }
}

struct AxisLayout {
    std::size_t outer = 1, n = 1, inner = 1;
    std::size_t at(std::size_t o, std::size_t i, std::size_t in) const { return (o * n + i) * inner + in; }
};

AxisLayout axis_layout(const Shape& s, std::size_t axis, const char* op) {
    if (axis >= s.size()) {
        throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " + shape_string(s));
    }
    AxisLayout l;
    for (std::size_t i = 0; i < axis; ++i) l.outer *= s[i];
    l.n = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) l.inner *= s[i];
    if (l.n == 0) throw ShapeError(std::string(op) + ": empty axis in " + shape_string(s));
    return l;
}

void require_row(const Tensor& a, const Tensor& row, const char* op) {
    require_matrix(a, op);
    if (row.rank() != 1 || row.size() != a.cols()) {
        throw ShapeError(std::string(op) + ": row " + shape_string(row.shape()) + " does not broadcast over " +
                         shape_string(a.shape()));
    }
}

}  // namespace

Var matmul(Var a, Var b) {
    Tape& t = same_tape(a, b, "matmul");
    Tensor out = grnlab::matmul(a.value(), b.value());
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), {ia, ib},
                    [&t, ia, ib](const Tensor& g, GradSink& sink) {
                        gemm_nt_acc(g, t.value(ib), sink.parent(0));
                        gemm_tn_acc(t.value(ia), g, sink.parent(1));
                    },
                    "matmul");
}

Var add(Var a, Var b) {
    Tape& t = same_tape(a, b, "add");
    Tensor out = grnlab::add(a.value(), b.value());
    return t.record(std::move(out), {a.id(), b.id()},
                    [](const Tensor& g, GradSink& sink) {
                        add_inplace(sink.parent(0), g);
                        add_inplace(sink.parent(1), g);
                    },
                    "add");
}

Var sub(Var a, Var b) {
    Tape& t = same_tape(a, b, "sub");
    Tensor out = grnlab::sub(a.value(), b.value());
    return t.record(std::move(out), {a.id(), b.id()},
                    [](const Tensor& g, GradSink& sink) {
                        add_inplace(sink.parent(0), g);
                        axpy_inplace(sink.parent(1), -1.0, g);
                    },
                    "sub");
}

Var hadamard(Var a, Var b) {
    Tape& t = same_tape(a, b, "hadamard");
    Tensor out = grnlab::hadamard(a.value(), b.value());
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(std::move(out), {ia, ib},
                    [&t, ia, ib](const Tensor& g, GradSink& sink) {
                        const Tensor& va = t.value(ia);
                        const Tensor& vb = t.value(ib);
                        Tensor& da = sink.parent(0);
                        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * vb[i];
                        Tensor& db = sink.parent(1);
                        for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * va[i];
                    },
                    "hadamard");
}

Var add_row(Var a, Var row) {
    Tape& t = same_tape(a, row, "add_row");
    require_row(a.value(), row.value(), "add_row");
    Tensor out = a.value();
    const std::size_t m = out.rows(), n = out.cols();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) += row.value()[j];
    return t.record(std::move(out), {a.id(), row.id()},
                    [m, n](const Tensor& g, GradSink& sink) {
                        add_inplace(sink.parent(0), g);
                        Tensor& dr = sink.parent(1);
                        for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < n; ++j) dr[j] += g(i, j);
                    },
                    "add_row");
}

Var mul_row(Var a, Var row) {
    Tape& t = same_tape(a, row, "mul_row");
    require_row(a.value(), row.value(), "mul_row");
    Tensor out = a.value();
    const std::size_t m = out.rows(), n = out.cols();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) *= row.value()[j];
    const std::size_t ia = a.id(), ir = row.id();
    return t.record(std::move(out), {ia, ir},
                    [&t, ia, ir, m, n](const Tensor& g, GradSink& sink) {
                        const Tensor& va = t.value(ia);
                        const Tensor& vr = t.value(ir);
                        Tensor& da = sink.parent(0);
                        for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < n; ++j) da(i, j) += g(i, j) * vr[j];
                        Tensor& dr = sink.parent(1);
                        for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < n; ++j) dr[j] += g(i, j) * va(i, j);
                    },
                    "mul_row");
}

Var scale(Var a, double s) {
    Tape& t = a.tape();
    return t.record(grnlab::scale(a.value(), s), {a.id()},
                    [s](const Tensor& g, GradSink& sink) { axpy_inplace(sink.parent(0), s, g); }, "scale");
}

Var relu(Var a) {
    Tape& t = a.tape();
    Tensor out = a.value();
    for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
    const std::size_t ia = a.id();
    return t.record(std::move(out), {ia},
                    [&t, ia](const Tensor& g, GradSink& sink) {
                        const Tensor& x = t.value(ia);
                        Tensor& dx = sink.parent(0);
                        for (std::size_t i = 0; i < g.size(); ++i)
                            if (x[i] > 0.0) dx[i] += g[i];
                    },
                    "relu");
}

Var transpose(Var a) {
    Tape& t = a.tape();
    return t.record(grnlab::transpose(a.value()), {a.id()},
                    [](const Tensor& g, GradSink& sink) { add_inplace(sink.parent(0), grnlab::transpose(g)); },
                    "transpose");
}

Var softmax(Var a, std::size_t axis) {
    Tape& t = a.tape();
    const AxisLayout l = axis_layout(a.shape(), axis, "softmax");
    Tensor out(a.shape());
    const Tensor& x = a.value();
    for (std::size_t o = 0; o < l.outer; ++o) {
        for (std::size_t in = 0; in < l.inner; ++in) {
            double peak = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < l.n; ++i) peak = std::max(peak, x[l.at(o, i, in)]);
            if (!(peak > -std::numeric_limits<double>::infinity())) {
                throw NumericError("softmax: slice has no finite entry");
            }
            double z = 0.0;
            for (std::size_t i = 0; i < l.n; ++i) {
                const double e = std::exp(x[l.at(o, i, in)] - peak);
                out[l.at(o, i, in)] = e;
                z += e;
            }
            for (std::size_t i = 0; i < l.n; ++i) out[l.at(o, i, in)] /= z;
        }
    }
    const std::size_t self = t.size();
    return t.record(std::move(out), {a.id()},
                    [&t, self, l](const Tensor& g, GradSink& sink) {
                        const Tensor& y = t.value(self);
                        Tensor& dx = sink.parent(0);
                        for (std::size_t o = 0; o < l.outer; ++o) {
                            for (std::size_t in = 0; in < l.inner; ++in) {
                                double dot = 0.0;
                                for (std::size_t i = 0; i < l.n; ++i) dot += g[l.at(o, i, in)] * y[l.at(o, i, in)];
                                for (std::size_t i = 0; i < l.n; ++i) {
                                    const std::size_t k = l.at(o, i, in);
                                    dx[k] += y[k] * (g[k] - dot);
                                }
                            }
                        }
                    },
                    "softmax");
}

Var layernorm(Var a, std::size_t axis, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("layernorm: eps must be positive");
    Tape& t = a.tape();
    const AxisLayout l = axis_layout(a.shape(), axis, "layernorm");
    const Tensor& x = a.value();
    Tensor out(a.shape());
    std::vector<double> inv_std(l.outer * l.inner);
    const double inv_n = 1.0 / static_cast<double>(l.n);
    for (std::size_t o = 0; o < l.outer; ++o) {
        for (std::size_t in = 0; in < l.inner; ++in) {
            double mu = 0.0;
            for (std::size_t i = 0; i < l.n; ++i) mu += x[l.at(o, i, in)];
            mu *= inv_n;
            double var = 0.0;
            for (std::size_t i = 0; i < l.n; ++i) {
                const double c = x[l.at(o, i, in)] - mu;
                var += c * c;
            }
            var *= inv_n;
            const double r = 1.0 / std::sqrt(var + eps);
            inv_std[o * l.inner + in] = r;
            for (std::size_t i = 0; i < l.n; ++i) out[l.at(o, i, in)] = (x[l.at(o, i, in)] - mu) * r;
        }
    }
    const std::size_t self = t.size();
    return t.record(std::move(out), {a.id()},
                    [&t, self, l, inv_n, inv_std = std::move(inv_std)](const Tensor& g, GradSink& sink) {
                        const Tensor& y = t.value(self);
                        Tensor& dx = sink.parent(0);
                        for (std::size_t o = 0; o < l.outer; ++o) {
                            for (std::size_t in = 0; in < l.inner; ++in) {
                                double gm = 0.0, gy = 0.0;
                                for (std::size_t i = 0; i < l.n; ++i) {
                                    const std::size_t k = l.at(o, i, in);
                                    gm += g[k];
                                    gy += g[k] * y[k];
                                }
                                gm *= inv_n;
                                gy *= inv_n;
                                const double r = inv_std[o * l.inner + in];
                                for (std::size_t i = 0; i < l.n; ++i) {
                                    const std::size_t k = l.at(o, i, in);
                                    dx[k] += r * (g[k] - gm - y[k] * gy);
                                }
                            }
                        }
                    },
                    "layernorm");
}

Var gather(Var table, std::span<const std::size_t> ids) {
    Tape& t = table.tape();
    const Tensor& tv = table.value();
    require_matrix(tv, "gather");
    const std::size_t v = tv.rows(), d = tv.cols();
    Tensor out({ids.size(), d});
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (ids[r] >= v) {
            throw std::out_of_range("gather: id " + std::to_string(ids[r]) + " outside table of " +
                                    std::to_string(v) + " rows");
        }
        std::copy_n(tv.data() + ids[r] * d, d, out.data() + r * d);
    }
    std::vector<std::size_t> rows(ids.begin(), ids.end());
    return t.record(std::move(out), {table.id()},
                    [rows = std::move(rows), d](const Tensor& g, GradSink& sink) {
                        Tensor& dt = sink.parent(0);
                        for (std::size_t r = 0; r < rows.size(); ++r)
                            for (std::size_t j = 0; j < d; ++j) dt(rows[r], j) += g(r, j);
                    },
                    "gather");
}

Var sum(Var a) {
    Tape& t = a.tape();
    double s = 0.0;
    for (double v : a.value().values()) s += v;
    return t.record(Tensor::scalar(s), {a.id()},
                    [](const Tensor& g, GradSink& sink) {
                        const double gv = g.item();
                        for (double& v : sink.parent(0).values()) v += gv;
                    },
                    "sum");
}

Var mean(Var a) {
    Tape& t = a.tape();
    const std::size_t n = a.value().size();
    if (n == 0) throw ShapeError("mean: empty tensor");
    double s = 0.0;
    for (double v : a.value().values()) s += v;
    const double inv = 1.0 / static_cast<double>(n);
    return t.record(Tensor::scalar(s * inv), {a.id()},
                    [inv](const Tensor& g, GradSink& sink) {
                        const double gv = g.item() * inv;
                        for (double& v : sink.parent(0).values()) v += gv;
                    },
                    "mean");
}

Var cross_entropy(Var logits, std::span<const std::size_t> targets) {
    Tape& t = logits.tape();
    const Tensor& z = logits.value();
    require_matrix(z, "cross_entropy");
    const std::size_t n = z.rows(), v = z.cols();
    if (n == 0 || v == 0) throw ShapeError("cross_entropy: empty logits " + shape_string(z.shape()));
    if (targets.size() != n) {
        throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " + std::to_string(n) +
                         " rows");
    }
    Tensor probs({n, v});
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        if (targets[r] >= v) {
            throw std::out_of_range("cross_entropy: target " + std::to_string(targets[r]) + " outside " +
                                    std::to_string(v) + " classes");
        }
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < v; ++c) peak = std::max(peak, z(r, c));
        double s = 0.0;
        for (std::size_t c = 0; c < v; ++c) {
            const double e = std::exp(z(r, c) - peak);
            probs(r, c) = e;
            s += e;
        }
        for (std::size_t c = 0; c < v; ++c) probs(r, c) /= s;
        total += peak + std::log(s) - z(r, targets[r]);
    }
    const double inv = 1.0 / static_cast<double>(n);
    std::vector<std::size_t> tg(targets.begin(), targets.end());
    return t.record(Tensor::scalar(total * inv), {logits.id()},
                    [probs = std::move(probs), tg = std::move(tg), inv, n, v](const Tensor& g, GradSink& sink) {
                        const double gv = g.item() * inv;
                        Tensor& dz = sink.parent(0);
                        for (std::size_t r = 0; r < n; ++r) {
                            for (std::size_t c = 0; c < v; ++c) dz(r, c) += gv * probs(r, c);
                            dz(r, tg[r]) -= gv;
                        }
                    },
                    "cross_entropy");
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
    Tape& t = a.tape();
    const Tensor& x = a.value();
    require_matrix(x, "slice_cols");
    if (begin > end || end > x.cols()) {
        throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") invalid for " + shape_string(x.shape()));
    }
    const std::size_t m = x.rows(), w = end - begin;
    Tensor out({m, w});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) out(i, j) = x(i, begin + j);
    return t.record(std::move(out), {a.id()},
                    [m, w, begin](const Tensor& g, GradSink& sink) {
                        Tensor& dx = sink.parent(0);
                        for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < w; ++j) dx(i, begin + j) += g(i, j);
                    },
                    "slice_cols");
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no operands");
    Tape& t = parts[0].tape();
    const std::size_t m = parts[0].value().rows();
    std::size_t total = 0;
    std::vector<std::size_t> ids, widths;
    for (const Var& p : parts) {
        same_tape(parts[0], p, "concat_cols");
        require_matrix(p.value(), "concat_cols");
        if (p.value().rows() != m) {
            throw ShapeError("concat_cols: row count mismatch " + shape_string(parts[0].shape()) + " vs " +
                             shape_string(p.shape()));
        }
        ids.push_back(p.id());
        widths.push_back(p.value().cols());
        total += p.value().cols();
    }
    Tensor out({m, total});
    std::size_t off = 0;
    for (const Var& p : parts) {
        const Tensor& x = p.value();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < x.cols(); ++j) out(i, off + j) = x(i, j);
        off += x.cols();
    }
    return t.record(std::move(out), std::move(ids),
                    [widths = std::move(widths), m](const Tensor& g, GradSink& sink) {
                        std::size_t o = 0;
                        for (std::size_t k = 0; k < widths.size(); ++k) {
                            Tensor& d = sink.parent(k);
                            for (std::size_t i = 0; i < m; ++i)
                                for (std::size_t j = 0; j < widths[k]; ++j) d(i, j) += g(i, o + j);
                            o += widths[k];
                        }
                    },
                    "concat_cols");
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
    Tape& t = a.tape();
    const Tensor& x = a.value();
    require_matrix(x, "slice_rows");
    if (begin > end || end > x.rows()) {
        throw ShapeError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") invalid for " + shape_string(x.shape()));
    }
    const std::size_t n = x.cols();
    Tensor out({end - begin, n});
    std::copy(x.data() + begin * n, x.data() + end * n, out.data());
    return t.record(std::move(out), {a.id()},
                    [begin, n](const Tensor& g, GradSink& sink) {
                        Tensor& dx = sink.parent(0);
                        for (std::size_t k = 0; k < g.size(); ++k) dx[begin * n + k] += g[k];
                    },
                    "slice_rows");
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no operands");
    Tape& t = parts[0].tape();
    const std::size_t n = parts[0].value().cols();
    std::size_t total = 0;
    std::vector<std::size_t> ids, sizes;
    for (const Var& p : parts) {
        same_tape(parts[0], p, "concat_rows");
        require_matrix(p.value(), "concat_rows");
        if (p.value().cols() != n) {
            throw ShapeError("concat_rows: column count mismatch " + shape_string(parts[0].shape()) + " vs " +
                             shape_string(p.shape()));
        }
        ids.push_back(p.id());
        sizes.push_back(p.value().size());
        total += p.value().rows();
    }
    Tensor out({total, n});
    std::size_t off = 0;
    for (const Var& p : parts) {
        std::copy(p.value().data(), p.value().data() + p.value().size(), out.data() + off);
        off += p.value().size();
    }
    return t.record(std::move(out), std::move(ids),
                    [sizes = std::move(sizes)](const Tensor& g, GradSink& sink) {
                        std::size_t o = 0;
                        for (std::size_t k = 0; k < sizes.size(); ++k) {
                            Tensor& d = sink.parent(k);
                            for (std::size_t i = 0; i < sizes[k]; ++i) d[i] += g[o + i];
                            o += sizes[k];
                        }
                    },
                    "concat_rows");
}

Var causal_mask(Var scores) {
    Tape& t = scores.tape();
    require_square(scores.value(), "causal_mask");
    Tensor out = scores.value();
    const std::size_t n = out.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) out(i, j) = -std::numeric_limits<double>::infinity();
    return t.record(std::move(out), {scores.id()},
                    [n](const Tensor& g, GradSink& sink) {
                        Tensor& dx = sink.parent(0);
                        for (std::size_t i = 0; i < n; ++i)
                            for (std::size_t j = 0; j <= i; ++j) dx(i, j) += g(i, j);
                    },
                    "causal_mask");
}

}  // namespace grnlab::ad

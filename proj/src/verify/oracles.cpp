// SPDX-License-Identifier: Apache-2.0
#include "grnlab/verify/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "grnlab/numerics/linalg.hpp"
#include "grnlab/numerics/parallel.hpp"
#include "grnlab/numerics/rng.hpp"

namespace grnlab::verify {
namespace {

constexpr std::size_t kChunk = 1 << 14;

// Running sums for a mean and its standard error.
struct Acc {
    double s = 0.0;
    double s2 = 0.0;
    void add(double v) {
        s += v;
        s2 += v * v;
    }
    void merge(const Acc& o) {
        s += o.s;
        s2 += o.s2;
    }
    Estimate finish(double n) const {
        const double m = s / n;
        const double var = std::max(0.0, (s2 / n - m * m) * n / (n - 1.0));
        return {m, std::sqrt(var / n)};
    }
};

double sq(double x) { return x * x; }

// Penalty terms (the gap between r and the equal-parameter rank bound).
double pen_v1(double d, double r) { return sq(std::sqrt(d + r) - std::sqrt(d)); }
double pen_v2(double, double r) { return sq(std::sqrt(1.0 + r) - 1.0); }
double pen_v3(double, double r) { return sq(std::sqrt(1.6 + r) - 1.0); }

double eta_oracle(double kappa, double d) {
    const double x0 = 1.0 / (std::numbers::pi * (d * d - 1.0));
    return std::sqrt((sq(kappa * (1.0 + x0) - x0) + x0) / (1.0 + x0));
}

bool raw(double k, double d, double r, double (*pen)(double, double)) {
    return r <= d * k * k + (1.0 - k * k) * (r - pen(d, r));
}

}  // namespace

double Estimate::z(double value) const {
    const double gap = std::abs(mean - value);
    if (se == 0.0) return gap == 0.0 ? 0.0 : INFINITY;
    return gap / se;
}

SteinMoments stein_moments_mc(std::span<const double> w, std::size_t n, std::uint64_t seed) {
    if (n < kMinSteinSamples) {
        throw std::invalid_argument("stein_moments_mc: need at least " + std::to_string(kMinSteinSamples) +
                                    " samples, got " + std::to_string(n));
    }
    const std::size_t d = w.size();
    if (d == 0) throw std::invalid_argument("stein_moments_mc: empty w");
    double wn = 0.0;
    for (double v : w) wn += v * v;
    wn = std::sqrt(wn);
    std::vector<double> w_hat(d, 0.0), u(d, 0.0);
    bool has_perp = false;
    if (wn > 0.0) {
        for (std::size_t i = 0; i < d; ++i) w_hat[i] = w[i] / wn;
        // First standard basis vector not parallel to w, orthogonalised.
        for (std::size_t e = 0; e < d && d > 1; ++e) {
            for (std::size_t i = 0; i < d; ++i) u[i] = (i == e ? 1.0 : 0.0) - w_hat[e] * w_hat[i];
            double un = 0.0;
            for (double v : u) un += v * v;
            if (un > 1e-6) {
                un = std::sqrt(un);
                for (double& v : u) v /= un;
                has_perp = true;
                break;
            }
        }
    }

    struct Part {
        Acc scalar, tr, along, perp;
        std::vector<Acc> m;
    };
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<Part> parts(chunks);
    parallel_for(chunks, [&](std::size_t c) {
        Part& p = parts[c];
        p.m.assign(d * d, Acc{});
        Rng rng = Rng::stream(seed, c);
        const std::size_t count = std::min(kChunk, n - c * kChunk);
        std::vector<double> x(d);
        for (std::size_t s = 0; s < count; ++s) {
            double dot = 0.0, norm2 = 0.0, a = 0.0, b = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                x[i] = rng.normal();
                dot += w[i] * x[i];
                norm2 += x[i] * x[i];
                a += w_hat[i] * x[i];
                b += u[i] * x[i];
            }
            const double sig = dot > 0.0 ? dot : 0.0;
            p.scalar.add(sig * sig * norm2);
            p.tr.add(sig * norm2);
            p.along.add(sig * a * a);
            p.perp.add(sig * b * b);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) p.m[i * d + j].add(sig * x[i] * x[j]);
        }
    });
    Part total;
    total.m.assign(d * d, Acc{});
    for (const Part& p : parts) {
        total.scalar.merge(p.scalar);
        total.tr.merge(p.tr);
        total.along.merge(p.along);
        total.perp.merge(p.perp);
        for (std::size_t i = 0; i < d * d; ++i) total.m[i].merge(p.m[i]);
    }
    const double nn = static_cast<double>(n);
    SteinMoments out;
    out.scalar = total.scalar.finish(nn);
    out.trace = total.tr.finish(nn);
    out.along = total.along.finish(nn);
    out.perp = total.perp.finish(nn);
    out.has_perp = has_perp;
    out.matrix = Tensor({d, d});
    out.matrix_se = Tensor({d, d});
    for (std::size_t i = 0; i < d * d; ++i) {
        const Estimate e = total.m[i].finish(nn);
        out.matrix[i] = e.mean;
        out.matrix_se[i] = e.se;
    }
    return out;
}

Estimate excess_risk_mc(const Tensor& target, const Tensor& est, std::size_t n, std::uint64_t seed) {
    require_same_shape(target, est, "excess_risk_mc");
    require_square(target, "excess_risk_mc");
    if (n < 2) throw std::invalid_argument("excess_risk_mc: need at least two samples");
    const Tensor e = sub(target, est);
    const std::size_t d = e.rows();
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<Acc> parts(chunks);
    parallel_for(chunks, [&](std::size_t c) {
        Rng rng = Rng::stream(seed, c);
        const std::size_t count = std::min(kChunk, n - c * kChunk);
        std::vector<double> x(d);
        for (std::size_t s = 0; s < count; ++s) {
            for (double& v : x) v = rng.normal();
            double q = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                double y = 0.0;
                for (std::size_t j = 0; j < d; ++j) y += e(i, j) * x[j];
                q += y * y;
            }
            parts[c].add(q);
        }
    });
    Acc total;
    for (const Acc& p : parts) total.merge(p);
    return total.finish(static_cast<double>(n));
}

double tail_energy(const Tensor& e, std::size_t r) {
    require_square(e, "tail_energy");
    if (r > e.rows()) throw std::invalid_argument("tail_energy: r exceeds d");
    Tensor g = matmul(transpose(e), e);
    // Exact symmetry for the eigensolver's input check.
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = i + 1; j < g.rows(); ++j) g(j, i) = g(i, j);
    const EigResult eig = eigh(g);
    double s = 0.0;
    for (std::size_t i = r; i < e.rows(); ++i) s += std::max(0.0, eig.values[i]);
    return s;
}

double bisect_last_true(const std::function<bool(double)>& pred, double lo, double hi, int iters) {
    if (!pred(lo)) return lo;
    if (pred(hi)) return hi;
    for (int i = 0; i < iters && hi - lo > 0.0; ++i) {
        const double mid = lo + (hi - lo) / 2.0;
        if (mid == lo || mid == hi) break;
        (pred(mid) ? lo : hi) = mid;
    }
    return lo;
}

bool raw_condition_v1(double kappa, double d, double r) { return raw(kappa, d, r, pen_v1); }
bool raw_condition_v2(double kappa, double d, double r) { return raw(kappa, d, r, pen_v2); }
bool raw_condition_v3(double kappa, double d, double r) { return raw(eta_oracle(kappa, d), d, r, pen_v3); }

double bisect_threshold_v1(double kappa, double d) {
    return bisect_last_true([&](double r) { return raw_condition_v1(kappa, d, r); }, 0.0, d) / d;
}
double bisect_threshold_v2(double kappa, double d) {
    return bisect_last_true([&](double r) { return raw_condition_v2(kappa, d, r); }, 0.0, d);
}
double bisect_threshold_v3(double kappa, double d) {
    return bisect_last_true([&](double r) { return raw_condition_v3(kappa, d, r); }, 0.0, d);
}

double percentile_select(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile_select: no values");
    if (!(q >= 0.0 && q <= 100.0)) throw std::invalid_argument("percentile_select: q outside [0, 100]");
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
    const double a = values[lo];
    if (lo + 1 >= values.size()) return a;
    const double b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
    const double frac = pos - static_cast<double>(lo);
    return frac == 0.0 ? a : a + frac * (b - a);
}

}  // namespace grnlab::verify

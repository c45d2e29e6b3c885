// SPDX-License-Identifier: Apache-2.0
#include "grnlab/theory/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "grnlab/numerics/linalg.hpp"

namespace grnlab::theory {
namespace {

constexpr double kAchieveTol = 1e-9;

void require_rank_below(const Tensor& target, std::size_t r_star, const char* op) {
    require_square(target, op);
    if (r_star >= target.rows()) {
        throw std::invalid_argument(std::string(op) + ": r_star = " + std::to_string(r_star) +
                                    " must be below d = " + std::to_string(target.rows()));
    }
}

Tensor minus_identity(const Tensor& a) { return sub(a, Tensor::identity(a.rows())); }

// (1 + k (sqrt(k^2 + c) - k))^2 - 1, expanded so the plug-ins k = 0 and k = 1
// come out exact: 2k^4 + k^2 (c - 2) + 2k (1 - k^2) sqrt(k^2 + c).
double g(double k, double c) {
    const double k2 = k * k;
    return 2.0 * k2 * k2 + k2 * (c - 2.0) + 2.0 * k * (1.0 - k2) * std::sqrt(k2 + c);
}

void check_kappa(double kappa) {
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in [0, 1]");
}

// Columns [r, d) of u as a projector U_perp U_perp^T.
Tensor tail_projector(const Tensor& u, std::size_t r) {
    const std::size_t d = u.rows();
    Tensor p({d, d});
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t c = r; c < d; ++c) s += u(i, c) * u(j, c);
            p(i, j) = s;
        }
    return p;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void SpectrumSpec::validate() const {
    if (!(lambda_min > 0.0 && lambda_min <= lambda_max)) {
        throw std::invalid_argument("spectrum: need 0 < lambda_min <= lambda_max");
    }
    if (T < 1 || r_star < T) throw std::invalid_argument("spectrum: need 1 <= T <= r_star");
    if (r_star >= d) throw std::invalid_argument("spectrum: need r_star < d");
}

double excess_risk(const Tensor& target, const Tensor& est) {
    require_same_shape(target, est, "excess_risk");
    return frobenius_norm_sq(sub(target, est));
}

Tensor residual_delta(const Tensor& target, std::size_t r_star) {
    require_rank_below(target, r_star, "residual_delta");
    const Tensor e = minus_identity(target);
    return sub(e, best_rank_r(e, r_star));
}

V1Construction construct_v1(const Tensor& target, std::size_t r_star) {
    require_rank_below(target, r_star, "construct_v1");
    const std::size_t d = target.rows();
    const Tensor e = minus_identity(target);
    const SvdResult f = svd(e);
    const Tensor delta = sub(e, best_rank_r(f, r_star));
    V1Construction c;
    c.alpha = 1.0 + trace(delta) / static_cast<double>(d - r_star);
    // U_r [S_r V_r^T + (1 - alpha) U_r^T]
    Tensor est = scale(Tensor::identity(d), c.alpha);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < r_star; ++k) s += f.u(i, k) * (f.s[k] * f.vt(k, j) + (1.0 - c.alpha) * f.u(j, k));
            est(i, j) += s;
        }
    c.est = std::move(est);
    return c;
}

V2Construction construct_v2(const Tensor& target, std::size_t r_star) {
    require_rank_below(target, r_star, "construct_v2");
    const std::size_t d = target.rows();
    const Tensor e = minus_identity(target);
    V2Construction c;
    c.M = best_rank_r(e, r_star);
    const Tensor delta = sub(e, c.M);
    c.D = Tensor({d, d});
    for (std::size_t i = 0; i < d; ++i) c.D(i, i) = 1.0 + delta(i, i);
    c.est = add(c.D, c.M);
    return c;
}

BoundReport bounds(const Tensor& target, std::size_t r_star, BoundOptions opt) {
    require_rank_below(target, r_star, "bounds");
    const std::size_t d = target.rows();
    const double tail = static_cast<double>(d - r_star);
    const Tensor e = minus_identity(target);
    const SvdResult f = svd(e);
    const Tensor delta = sub(e, best_rank_r(f, r_star));

    BoundReport r;
    r.delta_fro_sq = frobenius_norm_sq(delta);
    r.trace_delta = trace(delta);
    for (std::size_t i = 0; i < d; ++i) r.diag_sq += delta(i, i) * delta(i, i);
    const double tr_term = r.trace_delta * r.trace_delta / tail;

    const Tensor sym = symmetric_part(delta);
    r.nu_max = eigh(sub(sym, scale(tail_projector(f.u, r_star), r.trace_delta / tail))).values[0];
    r.nu_tilde_max = eigh(sub(sym, diagonal_part(delta))).values[0];
    const double denom = std::numbers::pi * (static_cast<double>(d) + opt.pi_offset);
    const double t1 = tr_term + r.nu_max * r.nu_max / denom;
    const double t2 = r.diag_sq + r.nu_tilde_max * r.nu_tilde_max / denom;

    r.er_res = r.delta_fro_sq;
    r.er_v1 = r.delta_fro_sq - tr_term;
    r.er_v2 = r.delta_fro_sq - std::max(r.diag_sq, tr_term);
    r.er_v3 = r.delta_fro_sq - std::max(t1, t2);

    const double risk_v1 = excess_risk(target, construct_v1(target, r_star).est);
    const double risk_v2 = excess_risk(target, construct_v2(target, r_star).est);
    r.achieved_v1 = std::abs(risk_v1 - r.er_v1) <= kAchieveTol;
    r.achieved_v2 = std::abs(std::min(risk_v1, risk_v2) - r.er_v2) <= kAchieveTol;
    return r;
}

double threshold_v1(double kappa) {
    check_kappa(kappa);
    return g(kappa, 1.0);
}

double threshold_v2(double kappa, std::size_t d) {
    check_kappa(kappa);
    return g(kappa, static_cast<double>(d));
}

double xi0(std::size_t d) {
    if (d <= 1) throw std::invalid_argument("xi0: needs d > 1");
    const double dd = static_cast<double>(d);
    return 1.0 / (std::numbers::pi * (dd * dd - 1.0));
}

double eta(double kappa, std::size_t d) {
    check_kappa(kappa);
    const double x = xi0(d);
    const double a = kappa * (1.0 + x) - x;
    return std::sqrt((a * a + x) / (1.0 + x));
}

double threshold_v3(double kappa, std::size_t d) {
    // (1 + eta (sqrt(eta^2 + d) - eta))^2 - 1.6 = g(eta, d) + 1 - 1.6
    return g(eta(kappa, d), static_cast<double>(d)) - 0.6;
}

Thresholds thresholds(const SpectrumSpec& spec) {
    spec.validate();
    const double k = spec.kappa();
    Thresholds t;
    t.thr_v1 = threshold_v1(k);
    t.thr_v2 = threshold_v2(k, spec.d);
    t.thr_v3 = threshold_v3(k, spec.d);
    t.eta = eta(k, spec.d);
    const double r = static_cast<double>(spec.r_star);
    t.v1 = r / static_cast<double>(spec.d) <= t.thr_v1;
    t.v2 = r <= t.thr_v2;
    t.v3 = r <= t.thr_v3;
    return t;
}

Gains gains(const SpectrumSpec& spec) {
    spec.validate();
    const double d = static_cast<double>(spec.d), r = static_cast<double>(spec.r_star);
    const double lo2 = spec.lambda_min * spec.lambda_min, hi2 = spec.lambda_max * spec.lambda_max;
    const double gap = hi2 - lo2;
    const auto sq = [](double x) { return x * x; };
    const double pd = std::numbers::pi * (d + 1.0);
    Gains out;
    out.G1_lb = (d - r) * lo2 - sq(std::sqrt(d + r) - std::sqrt(d)) * gap;
    out.G2_lb = (d - r) * lo2 - sq(std::sqrt(1.0 + r) - 1.0) * gap;
    out.G3_lb = (d - 1.0 / pd - r) * lo2 + hi2 / (2.0 * pd) - sq(std::sqrt(1.6 + r) - 1.0) * gap;
    return out;
}

RankReduction rank_reduction(const SpectrumSpec& spec) {
    spec.validate();
    const double k = spec.kappa();
    if (k >= 1.0) {
        throw std::invalid_argument("rank_reduction: kappa = 1 makes (r - d k^2) / (1 - k^2) singular; "
                                    "every rank already satisfies the trade-off condition");
    }
    const double d = static_cast<double>(spec.d), r = static_cast<double>(spec.r_star);
    const double e = eta(k, spec.d);
    return {(r - d * k * k) / (1.0 - k * k), (r - d * e * e) / (1.0 - e * e)};
}

std::optional<double> equal_param_rank_at(std::size_t d, std::size_t r_star, grn::Variant v, std::size_t T_prime) {
    if (d == 0) throw std::invalid_argument("equal_param_rank: d must be positive");
    if (T_prime == 0) throw std::invalid_argument("equal_param_rank: T' must be positive");
    // Budget and per-rank cost in units where ResNet costs 2 d r_star (v1) or 2 r_star (v2, v3).
    const double unit = v == grn::Variant::V1 ? 2.0 * static_cast<double>(d) : 2.0;
    const double budget = unit * static_cast<double>(r_star);
    const double t = static_cast<double>(T_prime);
    const double extra = v == grn::Variant::V3 ? t * (t + 1.0) / 2.0 : t * (t - 1.0) / 2.0;
    const double room = budget - extra;
    if (room < unit * t) return std::nullopt;  // r' >= T' does not fit
    return room / unit;
}

EqualParamRank equal_param_rank(std::size_t d, std::size_t r_star, grn::Variant v) {
    EqualParamRank best;
    bool found = false;
    for (std::size_t t = 1;; ++t) {
        const auto real = equal_param_rank_at(d, r_star, v, t);
        if (!real) break;
        const auto r = static_cast<std::size_t>(std::floor(*real));
        if (!found || r <= best.r_prime) {
            best.r_prime = r;
            best.r_prime_real = *real;
            best.T_prime = t;
        }
        best.max_T = t;
        found = true;
    }
    if (!found) {
        throw std::invalid_argument("equal_param_rank: the budget of a rank-" + std::to_string(r_star) + " ResNet gives the " +
                                    grn::to_string(v) + " model no layer of rank >= 1");
    }
    return best;
}

double equal_param_rank_lower_bound(std::size_t d, std::size_t r_star, grn::Variant v) {
    const double r = static_cast<double>(r_star);
    const auto sq = [](double x) { return x * x; };
    switch (v) {
        case grn::Variant::V1: return r - sq(std::sqrt(static_cast<double>(d) + r) - std::sqrt(static_cast<double>(d)));
        case grn::Variant::V2: return r - sq(std::sqrt(1.0 + r) - 1.0);
        case grn::Variant::V3: return r - sq(std::sqrt(1.6 + r) - 1.0);
    }
    throw std::invalid_argument("equal_param_rank_lower_bound: unknown variant");
}

std::vector<SweepRow> gain_sweep(const SweepGrid& grid) {
    std::vector<SweepRow> rows;
    for (std::size_t d : grid.d)
        for (std::size_t r : grid.r_star)
            for (double k : grid.kappa) {
                SpectrumSpec s{d, k * grid.lambda_max, grid.lambda_max, r, 1};
                const Gains gn = gains(s);
                rows.push_back({d, r, k, threshold_v1(k), threshold_v2(k, d), threshold_v3(k, d), gn.G1_lb, gn.G2_lb,
                                gn.G3_lb});
            }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = std::string(kSweepHeader) + "\n";
    for (const SweepRow& r : rows) {
        out += std::to_string(r.d) + "," + std::to_string(r.r_star);
        for (double v : {r.kappa, r.thr_v1, r.thr_v2, r.thr_v3, r.G1_lb, r.G2_lb, r.G3_lb}) out += "," + fmt17(v);
        out += "\n";
    }
    return out;
}

std::vector<SweepRow> parse_sweep_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != kSweepHeader) throw std::invalid_argument("sweep csv: unexpected header");
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() != 9) throw std::invalid_argument("sweep csv: expected 9 fields in '" + line + "'");
        SweepRow r;
        r.d = std::stoull(f[0]);
        r.r_star = std::stoull(f[1]);
        double* dst[] = {&r.kappa, &r.thr_v1, &r.thr_v2, &r.thr_v3, &r.G1_lb, &r.G2_lb, &r.G3_lb};
        for (std::size_t i = 0; i < 7; ++i) *dst[i] = std::stod(f[i + 2]);
        rows.push_back(r);
    }
    return rows;
}

Tensor random_psd_target(std::size_t d, double lambda_min, double lambda_max, Rng& rng) {
    if (!(lambda_min >= 0.0 && lambda_min <= lambda_max)) {
        throw std::invalid_argument("random_psd_target: need 0 <= lambda_min <= lambda_max");
    }
    const Tensor q = qr_q(rng.normal_tensor({d, d}));
    std::vector<double> lam(d);
    for (double& l : lam) l = rng.uniform(lambda_min, lambda_max);
    Tensor a = Tensor::identity(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += q(i, k) * lam[k] * q(j, k);
            a(i, j) += s;
        }
    // Exact symmetry keeps eigh's symmetry check meaningful.
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) a(j, i) = a(i, j);
    return a;
}

}  // namespace grnlab::theory

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "grnlab/grn/combine.hpp"
#include "grnlab/numerics/rng.hpp"
#include "grnlab/numerics/tensor.hpp"

/// Closed-form excess-risk results for linear residual models under isotropic
/// features. Every function here is a pure formula; the numerical oracles that
/// check them live in grnlab::verify.
namespace grnlab::theory {

/// Target class: d x d matrices A with A - I PSD and spectrum in [lambda_min, lambda_max].
struct SpectrumSpec {
    std::size_t d = 0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    std::size_t r_star = 0;
    std::size_t T = 1;

    double kappa() const { return lambda_min / lambda_max; }
    /// Throws std::invalid_argument unless 0 < lambda_min <= lambda_max,
    /// 1 <= T <= r_star < d.
    void validate() const;
};

/// ||target - est||_F^2, the excess risk under E[x x^T] = I.
double excess_risk(const Tensor& target, const Tensor& est);

/// Offset in the pi * (d + offset) denominators of the GRN-v3 terms. The
/// default keeps the conventional d + 1; the Gaussian moment behind these
/// terms evaluates to (d + 2) / 2, so 2 is available for comparison.
struct BoundOptions {
    double pi_offset = 1.0;
};

struct BoundReport {
    double er_res = 0.0;
    double er_v1 = 0.0;
    double er_v2 = 0.0;
    double er_v3 = 0.0;
    double delta_fro_sq = 0.0;
    double trace_delta = 0.0;
    double diag_sq = 0.0;
    double nu_max = 0.0;
    double nu_tilde_max = 0.0;
    /// Whether the explicit constructions attain er_v1 / er_v2 within 1e-9.
    /// GRN-v3 has no construction here, so its flag stays false.
    bool achieved_v1 = false;
    bool achieved_v2 = false;
    bool achieved_v3 = false;
};

/// Delta = (A - I) - best_rank_r(A - I, r).
Tensor residual_delta(const Tensor& target, std::size_t r_star);
BoundReport bounds(const Tensor& target, std::size_t r_star, BoundOptions opt = {});

struct V1Construction {
    double alpha = 1.0;
    Tensor est;
};
/// alpha I + U_r [S_r V_r^T + (1 - alpha) U_r^T] with alpha = 1 + tr(Delta) / (d - r).
V1Construction construct_v1(const Tensor& target, std::size_t r_star);

struct V2Construction {
    Tensor D;  // diag(I + Delta)
    Tensor M;  // U_r S_r V_r^T
    Tensor est;
};
V2Construction construct_v2(const Tensor& target, std::size_t r_star);

// Right-hand sides of the trade-off conditions. thr_v1 bounds r_star / d,
// thr_v2 and thr_v3 bound r_star.
double threshold_v1(double kappa);
double threshold_v2(double kappa, std::size_t d);
double threshold_v3(double kappa, std::size_t d);
double xi0(std::size_t d);
double eta(double kappa, std::size_t d);

struct Thresholds {
    double thr_v1 = 0.0;
    double thr_v2 = 0.0;
    double thr_v3 = 0.0;
    double eta = 0.0;
    bool v1 = false;
    bool v2 = false;
    bool v3 = false;
};
Thresholds thresholds(const SpectrumSpec& spec);

/// Lower bounds on the excess-risk reduction over ResNet at equal parameter count.
struct Gains {
    double G1_lb = 0.0;
    double G2_lb = 0.0;
    double G3_lb = 0.0;
};
Gains gains(const SpectrumSpec& spec);

/// Collective ranks at which GRN-v1/v2 (r_prime) and GRN-v3 (r_tilde) match
/// the ResNet test error. Rejects kappa = 1, where the formula is singular.
struct RankReduction {
    double r_prime = 0.0;
    double r_tilde = 0.0;
};
RankReduction rank_reduction(const SpectrumSpec& spec);

/// Collective rank of a GRN with T' layers that fits the parameter budget of a
/// ResNet with collective rank r_star:
///   v1: 2 d r' + T'(T'-1)/2 <= 2 d r_star
///   v2: 2 r'   + T'(T'-1)/2 <= 2 r_star     (counts divided by d)
///   v3: 2 r'   + T'(T'+1)/2 <= 2 r_star
/// with r' >= T'. `r_prime` is the largest integer rank for the layer count
/// that leaves the least rank (the worst feasible T'); `r_prime_real` is the
/// continuous rank that spends the budget exactly at that T'.
struct EqualParamRank {
    std::size_t r_prime = 0;
    double r_prime_real = 0.0;
    std::size_t T_prime = 0;
    /// Number of feasible layer counts T' (1..max_T).
    std::size_t max_T = 0;
};
EqualParamRank equal_param_rank(std::size_t d, std::size_t r_star, grn::Variant v);
/// Continuous rank that spends the budget exactly with T' layers, or nothing
/// when r' >= T' cannot be met.
std::optional<double> equal_param_rank_at(std::size_t d, std::size_t r_star, grn::Variant v, std::size_t T_prime);

/// Closed-form lower bound on the equal-parameter collective rank.
double equal_param_rank_lower_bound(std::size_t d, std::size_t r_star, grn::Variant v);

/// Grid for the gain/threshold sweep; lambda_min = kappa * lambda_max.
struct SweepGrid {
    std::vector<std::size_t> d;
    std::vector<std::size_t> r_star;
    std::vector<double> kappa;
    double lambda_max = 10.0;
};

struct SweepRow {
    std::size_t d = 0;
    std::size_t r_star = 0;
    double kappa = 0.0;
    double thr_v1 = 0.0;
    double thr_v2 = 0.0;
    double thr_v3 = 0.0;
    double G1_lb = 0.0;
    double G2_lb = 0.0;
    double G3_lb = 0.0;
};

/// Rows in d-major, then r_star, then kappa order.
std::vector<SweepRow> gain_sweep(const SweepGrid& grid);
inline constexpr const char* kSweepHeader = "d,r_star,kappa,thr_v1,thr_v2,thr_v3,G1_lb,G2_lb,G3_lb";
/// Header line plus one line per row; floats carry 17 significant digits.
std::string sweep_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(const std::string& csv);

/// A = I + Q diag(lambda) Q^T with Q from the QR factor of a Gaussian matrix
/// and lambda uniform in [lambda_min, lambda_max].
Tensor random_psd_target(std::size_t d, double lambda_min, double lambda_max, Rng& rng);

}  // namespace grnlab::theory

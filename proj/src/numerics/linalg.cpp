// SPDX-License-Identifier: Apache-2.0
#include "grnlab/numerics/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace grnlab {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_finite(const Tensor& m, const char* op) {
    if (!m.all_finite()) throw NumericError(std::string(op) + ": input has non-finite entries");
}

// Index of the first entry whose magnitude is significant relative to the
// column maximum; noise-level entries would make the sign flip unstable.
std::size_t first_significant(const Tensor& m, std::size_t col) {
    const std::size_t n = m.rows();
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, std::abs(m(i, col)));
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(m(i, col)) > 1e-10 * peak) return i;
    }
    return 0;
}

// Permutation sorting `keys` descending; ties keep their original order.
std::vector<std::size_t> descending_order(const std::vector<double>& keys) {
    std::vector<std::size_t> idx(keys.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return keys[a] > keys[b]; });
    return idx;
}

Tensor permute_columns(const Tensor& m, const std::vector<std::size_t>& order) {
    Tensor out(m.shape());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < order.size(); ++j) out(i, j) = m(i, order[j]);
    return out;
}

double column_dot(const Tensor& a, std::size_t ca, const Tensor& b, std::size_t cb) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, ca) * b(i, cb);
    return s;
}

// Replaces column `col` of q by a unit vector orthogonal to every column in
// `accepted`, chosen from the standard basis by largest residual.
void complete_column(Tensor& q, std::size_t col, const std::vector<std::size_t>& accepted) {
    const std::size_t n = q.rows();
    std::vector<double> best;
    double best_norm = -1.0;
    for (std::size_t e = 0; e < n; ++e) {
        std::vector<double> v(n, 0.0);
        v[e] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t a : accepted) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += q(i, a) * v[i];
                for (std::size_t i = 0; i < n; ++i) v[i] -= dot * q(i, a);
            }
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > best_norm + 1e-12) {
            best_norm = norm;
            best = std::move(v);
        }
    }
    for (std::size_t i = 0; i < n; ++i) q(i, col) = best[i] / best_norm;
}

}  // namespace

SvdResult svd(const Tensor& m) {
    require_square(m, "svd");
    require_finite(m, "svd");
    const std::size_t n = m.rows();

    Tensor w = m;
    Tensor v = Tensor::identity(n);
    const double tol = std::max<double>(static_cast<double>(n), 1.0) * kEps;
    // Columns this small are rounding residue of a rank deficiency; rotating
    // them against each other never settles and they carry no information.
    const double negligible = std::pow(tol * frobenius_norm(m), 2);

    bool converged = n <= 1;
    for (int sweep = 0; sweep < kMaxJacobiSweeps && !converged; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = column_dot(w, p, w, p);
                const double beta = column_dot(w, q, w, q);
                const double gamma = column_dot(w, p, w, q);
                if (alpha <= negligible || beta <= negligible) continue;
                if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        converged = !rotated;
    }
    if (!converged) {
        throw NumericError("svd: one-sided Jacobi did not converge within " + std::to_string(kMaxJacobiSweeps) +
                           " sweeps");
    }

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(column_dot(w, j, w, j));
    const auto order = descending_order(sigma);
    w = permute_columns(w, order);
    v = permute_columns(v, order);
    std::vector<double> sorted(n);
    for (std::size_t j = 0; j < n; ++j) sorted[j] = sigma[order[j]];

    const double smax = n ? sorted[0] : 0.0;
    Tensor u({n, n});
    std::vector<std::size_t> accepted;
    std::vector<std::size_t> deficient;
    for (std::size_t j = 0; j < n; ++j) {
        if (sorted[j] > tol * smax && sorted[j] > 0.0) {
            for (std::size_t i = 0; i < n; ++i) u(i, j) = w(i, j) / sorted[j];
            accepted.push_back(j);
        } else {
            deficient.push_back(j);
        }
    }
    for (std::size_t j : deficient) {
        complete_column(u, j, accepted);
        accepted.push_back(j);
    }

    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t lead = first_significant(u, j);
        if (u(lead, j) < 0.0) {
            for (std::size_t i = 0; i < n; ++i) {
                u(i, j) = -u(i, j);
                v(i, j) = -v(i, j);
            }
        }
    }
    return SvdResult{std::move(u), Tensor::vector(std::move(sorted)), transpose(v)};
}

EigResult eigh(const Tensor& m) {
    require_square(m, "eigh");
    require_finite(m, "eigh");
    const std::size_t n = m.rows();
    const double scale_ref = std::max(1.0, max_abs(m));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale_ref) {
                throw NumericError("eigh: input is not symmetric at (" + std::to_string(i) + ", " +
                                   std::to_string(j) + ")");
            }
        }
    }

    Tensor a = symmetric_part(m);
    Tensor v = Tensor::identity(n);
    const double norm = frobenius_norm(a);
    auto off_mass = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    bool converged = off_mass() <= 1e-14 * norm;
    for (int sweep = 0; sweep < kMaxJacobiSweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
        converged = off_mass() <= 1e-14 * norm;
    }
    if (!converged) {
        throw NumericError("eigh: cyclic Jacobi did not converge within " + std::to_string(kMaxJacobiSweeps) +
                           " sweeps");
    }

    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = a(i, i);
    const auto order = descending_order(vals);
    Tensor vecs = permute_columns(v, order);
    std::vector<double> sorted(n);
    for (std::size_t j = 0; j < n; ++j) sorted[j] = vals[order[j]];
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t lead = first_significant(vecs, j);
        if (vecs(lead, j) < 0.0) {
            for (std::size_t i = 0; i < n; ++i) vecs(i, j) = -vecs(i, j);
        }
    }
    return EigResult{Tensor::vector(std::move(sorted)), std::move(vecs)};
}

Tensor best_rank_r(const SvdResult& f, std::size_t r) {
    const std::size_t n = f.u.rows();
    if (r > n) {
        throw ShapeError("best_rank_r: rank " + std::to_string(r) + " exceeds dimension " + std::to_string(n));
    }
    Tensor out({n, n});
    for (std::size_t k = 0; k < r; ++k) {
        const double sk = f.s[k];
        for (std::size_t i = 0; i < n; ++i) {
            const double uik = f.u(i, k) * sk;
            for (std::size_t j = 0; j < n; ++j) out(i, j) += uik * f.vt(k, j);
        }
    }
    return out;
}

Tensor best_rank_r(const Tensor& m, std::size_t r) {
    require_square(m, "best_rank_r");
    if (r > m.rows()) {
        throw ShapeError("best_rank_r: rank " + std::to_string(r) + " exceeds dimension " +
                         std::to_string(m.rows()));
    }
    return best_rank_r(svd(m), r);
}

std::size_t numeric_rank(const Tensor& m, double rel_tol) {
    require_matrix(m, "numeric_rank");
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw std::invalid_argument("numeric_rank: rel_tol must lie in (0, 1)");
    const std::size_t r = m.rows(), c = m.cols();
    const std::size_t n = std::max(r, c);
    Tensor sq({n, n});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) sq(i, j) = m(i, j);
    const SvdResult f = svd(sq);
    if (n == 0 || f.s[0] == 0.0) return 0;
    const double cut = rel_tol * f.s[0];
    std::size_t rank = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (f.s[i] > cut) ++rank;
    return rank;
}

Tensor qr_q(const Tensor& m) {
    require_square(m, "qr_q");
    require_finite(m, "qr_q");
    const std::size_t n = m.rows();
    Tensor q = m;
    for (std::size_t j = 0; j < n; ++j) {
        // Two Gram-Schmidt passes keep orthogonality at working precision.
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < j; ++k) {
                const double dot = column_dot(q, k, q, j);
                for (std::size_t i = 0; i < n; ++i) q(i, j) -= dot * q(i, k);
            }
        }
        const double norm = std::sqrt(column_dot(q, j, q, j));
        if (norm <= kEps * std::max(1.0, frobenius_norm(m))) throw NumericError("qr_q: matrix is rank deficient");
        for (std::size_t i = 0; i < n; ++i) q(i, j) /= norm;
    }
    return q;
}

Tensor symmetric_part(const Tensor& m) {
    require_square(m, "symmetric_part");
    const std::size_t n = m.rows();
    Tensor out({n, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) = 0.5 * (m(i, j) + m(j, i));
    return out;
}

}  // namespace grnlab

#pragma once

// Rate distortion: Blahut-Arimoto solvers (dense and O(k) exponential-kernel
// for uniform scalar alphabets), exact factorized solving for product sources,
// convex-duality lower bounds, and dimension-slope estimation.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "meandim/common.hpp"
#include "meandim/information.hpp"
#include "meandim/metric_space.hpp"
#include "meandim/systems.hpp"

namespace meandim {

struct BaResult {
    double rate_bits = 0.0;       // I(X;Y) of the returned channel
    double distortion = 0.0;      // E rho(X,Y)
    double slope = 0.0;           // Lagrange multiplier used
    bool converged = false;
    int iterations = 0;
    std::vector<std::vector<double>> channel;  // nu(y|x)
};

namespace detail {

// Exact fixed-slope solve by active-set Newton on the output support.
// Minimizes F(q) = -sum_x mu(x) ln( sum_y q(y) K(x,y) ) over the simplex;
// at the optimum c(y) := sum_x mu(x) K(x,y)/Z(x) equals 1 on the support and
// is <= 1 elsewhere, which the exit check certifies against every letter.
struct FixedSlopeSolution {
    std::vector<double> q;
    bool converged = false;
    int iterations = 0;
};

inline FixedSlopeSolution rd_fixed_slope_activeset(const std::vector<double>& mu,
                                                   const std::vector<std::vector<double>>& K,
                                                   std::vector<double> q0 = {}) {
    const std::size_t n = mu.size(), m = K[0].size();
    FixedSlopeSolution sol;
    std::vector<std::size_t> active;
    std::vector<double> q(m, 0.0);
    if (q0.size() == m) {
        // seed with the heaviest letters only; missing support re-enters via
        // the violation check, while a bloated start stalls the Newton system
        std::vector<std::pair<double, std::size_t>> order;
        for (std::size_t y = 0; y < m; ++y)
            if (q0[y] > 1e-12) order.push_back({q0[y], y});
        std::sort(order.begin(), order.end(), std::greater<>());
        const std::size_t cap = 48;
        for (std::size_t i = 0; i < order.size() && i < cap; ++i) active.push_back(order[i].second);
        std::sort(active.begin(), active.end());
    }
    if (active.empty()) {
        // single best atom: the one a zero-rate code would use
        std::size_t best = 0;
        double bv = -std::numeric_limits<double>::infinity();
        for (std::size_t y = 0; y < m; ++y) {
            double v = 0.0;
            for (std::size_t x = 0; x < n; ++x) v += mu[x] * std::log(std::max(K[x][y], 1e-300));
            if (v > bv) {
                bv = v;
                best = y;
            }
        }
        active.push_back(best);
        q[best] = 1.0;
    } else {
        double tot = 0.0;
        for (auto y : active) tot += q0[y];
        for (auto y : active) q[y] = q0[y] / tot;
    }

    std::vector<double> Z(n), call(m);
    auto computeZ = [&]() {
        for (std::size_t x = 0; x < n; ++x) {
            double z = 0.0;
            for (auto y : active) z += q[y] * K[x][y];
            Z[x] = std::max(z, 1e-300);
        }
    };
    auto computeCAll = [&]() {
        for (std::size_t y = 0; y < m; ++y) call[y] = 0.0;
        for (std::size_t x = 0; x < n; ++x) {
            const double u = mu[x] / Z[x];
            for (std::size_t y = 0; y < m; ++y) call[y] += u * K[x][y];
        }
    };
    auto objective = [&]() {
        double F = 0.0;
        for (std::size_t x = 0; x < n; ++x) F -= mu[x] * std::log(Z[x]);
        return F;
    };

    int iters_ba_ = 0;
    auto restricted_ba = [&](int steps) {
        for (int s2 = 0; s2 < steps; ++s2) {
            ++iters_ba_;
            computeZ();
            double tot = 0.0;
            for (auto y : active) {
                double cy = 0.0;
                for (std::size_t x = 0; x < n; ++x) cy += mu[x] * K[x][y] / Z[x];
                q[y] *= cy;
                tot += q[y];
            }
            for (auto y : active) q[y] /= tot;
        }
    };

    const double kkt_tol = 1e-11;
    int iters = 0;
    for (int outer = 0; outer < 300; ++outer) {
        // Newton on the current active set, Levenberg damping on failure
        for (int inner = 0; inner < 80; ++inner) {
            ++iters;
            computeZ();
            const std::size_t A = active.size();
            std::vector<double> c(A, 0.0);
            for (std::size_t x = 0; x < n; ++x) {
                const double u = mu[x] / Z[x];
                for (std::size_t i = 0; i < A; ++i) c[i] += u * K[x][active[i]];
            }
            double resid = 0.0;
            for (std::size_t i = 0; i < A; ++i) resid = std::max(resid, std::abs(c[i] - 1.0));
            if (resid < kkt_tol) break;
            std::vector<double> hbase((A * (A + 1)) / 2, 0.0);
            for (std::size_t x = 0; x < n; ++x) {
                const double u = mu[x] / (Z[x] * Z[x]);
                std::size_t slot = 0;
                for (std::size_t i = 0; i < A; ++i) {
                    const double kxi = u * K[x][active[i]];
                    for (std::size_t j = i; j < A; ++j, ++slot) hbase[slot] += kxi * K[x][active[j]];
                }
            }
            bool moved = false;
            for (double reg : {1e-12, 1e-8, 1e-4}) {
                // bordered system [H + reg I, 1; 1', 0] [delta; lam] = [c-1; 0]
                const std::size_t dim = A + 1;
                std::vector<std::vector<double>> M(dim, std::vector<double>(dim + 1, 0.0));
                std::size_t slot = 0;
                for (std::size_t i = 0; i < A; ++i) {
                    for (std::size_t j = i; j < A; ++j, ++slot) {
                        M[i][j] = hbase[slot];
                        M[j][i] = hbase[slot];
                    }
                    M[i][i] += reg;
                    M[i][A] = 1.0;
                    M[A][i] = 1.0;
                    M[i][dim] = c[i] - 1.0;
                }
                bool singular = false;
                for (std::size_t col = 0; col < dim && !singular; ++col) {
                    std::size_t piv = col;
                    for (std::size_t i2 = col + 1; i2 < dim; ++i2)
                        if (std::abs(M[i2][col]) > std::abs(M[piv][col])) piv = i2;
                    if (std::abs(M[piv][col]) < 1e-300) {
                        singular = true;
                        break;
                    }
                    std::swap(M[piv], M[col]);
                    for (std::size_t i2 = 0; i2 < dim; ++i2) {
                        if (i2 == col) continue;
                        const double f = M[i2][col] / M[col][col];
                        if (f == 0.0) continue;
                        for (std::size_t j2 = col; j2 <= dim; ++j2) M[i2][j2] -= f * M[col][j2];
                    }
                }
                if (singular) continue;
                std::vector<double> delta(A);
                for (std::size_t i = 0; i < A; ++i) delta[i] = M[i][dim] / M[i][i];
                double tmax = 1.0;
                for (std::size_t i = 0; i < A; ++i)
                    if (delta[i] < 0) tmax = std::min(tmax, -q[active[i]] / delta[i]);
                const double F0 = objective();
                double t = tmax;
                for (int ls = 0; ls < 40 && t > 1e-16; ++ls, t /= 2) {
                    std::vector<double> saved;
                    saved.reserve(A);
                    for (std::size_t i = 0; i < A; ++i) {
                        saved.push_back(q[active[i]]);
                        q[active[i]] = std::max(0.0, q[active[i]] + t * delta[i]);
                    }
                    computeZ();
                    if (objective() <= F0 - 1e-16) {
                        moved = true;
                        break;
                    }
                    for (std::size_t i = 0; i < A; ++i) q[active[i]] = saved[i];
                }
                if (moved) break;
            }
            if (!moved) {
                restricted_ba(60);
                continue;
            }
            std::vector<std::size_t> kept;
            for (auto y : active)
                if (q[y] > 1e-15) kept.push_back(y);
            if (kept.size() != active.size()) active = std::move(kept);
            if (active.empty()) {
                active.push_back(0);
                q[0] = 1.0;
            }
        }
        computeZ();
        computeCAll();
        double worst = 0.0;
        for (std::size_t y = 0; y < m; ++y) worst = std::max(worst, call[y]);
        if (worst <= 1.0 + kkt_tol) {
            sol.converged = true;
            break;
        }
        std::vector<std::pair<double, std::size_t>> viol;
        for (std::size_t y = 0; y < m; ++y)
            if (call[y] > 1.0 + kkt_tol && q[y] <= 0.0) viol.push_back({call[y], y});
        if (viol.empty()) {
            // unsettled letters inside the active set; grind them down and retry
            restricted_ba(200);
            continue;
        }
        std::sort(viol.begin(), viol.end(), std::greater<>());
        const std::size_t add = std::min<std::size_t>(viol.size(), std::max<std::size_t>(4, active.size()));
        for (std::size_t i = 0; i < add; ++i) {
            active.push_back(viol[i].second);
            q[viol[i].second] = 1e-8;
        }
        std::sort(active.begin(), active.end());
        double tot = 0.0;
        for (auto y : active) tot += q[y];
        for (auto y : active) q[y] /= tot;
    }
    sol.q = q;
    sol.iterations = iters + iters_ba_;
    return sol;
}

// One alternating-minimization step with the Csiszar gap; generic over the
// kernel application (dense matrix or O(k) exponential scans).
template <typename Apply>
int squarem_minimize(const std::vector<double>& mu, const Apply& applyK, std::size_t m,
                     std::vector<double>& q, double tol_bits, int max_evals, bool* converged) {
    const std::size_t n = mu.size();
    std::vector<double> Z(n), u(n), c(m);
    auto ba_step = [&](const std::vector<double>& in, std::vector<double>& out, double* gap) {
        applyK(in, Z, /*transpose=*/false);
        for (std::size_t x = 0; x < n; ++x) u[x] = mu[x] / std::max(Z[x], 1e-300);
        applyK(u, c, /*transpose=*/true);
        if (gap) {
            double cmax = 0.0;
            for (std::size_t y = 0; y < m; ++y) cmax = std::max(cmax, c[y]);
            *gap = std::log2(std::max(cmax, 1e-300));
        }
        double tot = 0.0;
        for (std::size_t y = 0; y < m; ++y) {
            out[y] = in[y] * c[y];
            tot += out[y];
        }
        for (std::size_t y = 0; y < m; ++y) out[y] /= tot;
    };
    auto objective = [&](const std::vector<double>& qq) {
        applyK(qq, Z, false);
        double F = 0.0;
        for (std::size_t x = 0; x < n; ++x) F -= mu[x] * std::log(std::max(Z[x], 1e-300));
        return F;
    };
    std::vector<double> q1(m), q2(m), qp(m), q3(m);
    int evals = 0;
    *converged = false;
    while (evals < max_evals) {
        double gap = 0.0;
        ba_step(q, q1, &gap);
        ++evals;
        if (gap < tol_bits) {
            *converged = true;
            break;
        }
        ba_step(q1, q2, nullptr);
        ++evals;
        double rn = 0.0, vn = 0.0;
        for (std::size_t y = 0; y < m; ++y) {
            const double ri = q1[y] - q[y];
            const double vi = q2[y] - 2 * q1[y] + q[y];
            rn += ri * ri;
            vn += vi * vi;
        }
        if (vn <= 0) {
            q = q2;
            continue;
        }
        const double alpha = std::min(-1.0, -std::sqrt(rn / vn));
        double tot = 0.0;
        for (std::size_t y = 0; y < m; ++y) {
            const double ri = q1[y] - q[y];
            const double vi = q2[y] - 2 * q1[y] + q[y];
            qp[y] = std::max(0.0, q[y] - 2 * alpha * ri + alpha * alpha * vi);
            tot += qp[y];
        }
        for (std::size_t y = 0; y < m; ++y) qp[y] /= tot;
        ba_step(qp, q3, nullptr);
        ++evals;
        q = (objective(q3) <= objective(q2)) ? q3 : q2;  // monotone safeguard
        evals += 2;
    }
    return evals;
}

inline BaResult ba_fixed_slope(const std::vector<double>& mu,
                               const std::vector<std::vector<double>>& rho, double a,
                               int max_evals = 10000, double gap_tol = 1e-8) {
    const std::size_t n = mu.size(), m = rho[0].size();
    std::vector<double> q(m, 1.0 / static_cast<double>(m));
    std::vector<std::vector<double>> ex(n, std::vector<double>(m));
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < m; ++y) ex[x][y] = std::exp2(-a * rho[x][y]);
    BaResult res;
    res.slope = a;
    auto applyK = [&](const std::vector<double>& v, std::vector<double>& dst, bool transpose) {
        if (!transpose) {
            for (std::size_t x = 0; x < n; ++x) {
                double z = 0.0;
                for (std::size_t y = 0; y < m; ++y) z += v[y] * ex[x][y];
                dst[x] = z;
            }
        } else {
            std::fill(dst.begin(), dst.end(), 0.0);
            for (std::size_t x = 0; x < n; ++x) {
                const double vx = v[x];
                if (vx == 0.0) continue;
                for (std::size_t y = 0; y < m; ++y) dst[y] += vx * ex[x][y];
            }
        }
    };
    res.iterations = squarem_minimize(mu, applyK, m, q, gap_tol, max_evals, &res.converged);
    if (!res.converged) {
        const FixedSlopeSolution sol = rd_fixed_slope_activeset(mu, ex, q);
        q = sol.q;
        res.converged = sol.converged;
        res.iterations += sol.iterations;
    }
    res.channel.assign(n, std::vector<double>(m, 0.0));
    for (std::size_t x = 0; x < n; ++x) {
        double z = 0.0;
        for (std::size_t y = 0; y < m; ++y) z += q[y] * ex[x][y];
        z = std::max(z, 1e-300);
        for (std::size_t y = 0; y < m; ++y) res.channel[x][y] = q[y] * ex[x][y] / z;
    }
    // evaluate I and D against the channel's own output marginal
    std::vector<double> out(m, 0.0);
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < m; ++y) out[y] += mu[x] * res.channel[x][y];
    double I = 0.0, D = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t y = 0; y < m; ++y) {
            const double p = mu[x] * res.channel[x][y];
            if (p > 0.0) I += p * std::log2(res.channel[x][y] / out[y]);
            D += p * rho[x][y];
        }
    }
    res.rate_bits = std::max(0.0, I);
    res.distortion = D;
    return res;
}

inline BaResult ba_hard_assignment(const std::vector<double>& mu,
                                   const std::vector<std::vector<double>>& rho) {
    const std::size_t n = mu.size(), m = rho[0].size();
    BaResult res;
    res.channel.assign(n, std::vector<double>(m, 0.0));
    std::vector<double> out(m, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        std::size_t best = 0;
        for (std::size_t y = 1; y < m; ++y)
            if (rho[x][y] < rho[x][best] - kDiamTol) best = y;
        res.channel[x][best] = 1.0;
        out[best] += mu[x];
        res.distortion += mu[x] * rho[x][best];
    }
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < m; ++y)
            if (res.channel[x][y] > 0 && mu[x] > 0)
                res.rate_bits += mu[x] * std::log2(1.0 / out[y]);
    res.converged = true;
    res.slope = std::numeric_limits<double>::infinity();
    return res;
}

}  // namespace detail

// Rate-distortion solve at a fixed Lagrange slope a >= 0.
inline BaResult blahut_arimoto_slope(const DiscreteDistribution& mu,
                                     const std::vector<std::vector<double>>& rho, double a) {
    mu.validate();
    if (rho.size() != mu.size() || rho.empty()) throw validation_error("ba: distortion shape mismatch");
    for (const auto& r : rho)
        for (double v : r)
            if (v < 0) throw validation_error("ba: negative distortion entry");
    if (a < 0) throw validation_error("ba: slope must be >= 0");
    return detail::ba_fixed_slope(mu.mass, rho, a);
}

// Rate-distortion solve at a target distortion eps (bisection over the slope).
inline BaResult blahut_arimoto(const DiscreteDistribution& mu,
                               const std::vector<std::vector<double>>& rho, double eps) {
    mu.validate();
    if (rho.size() != mu.size() || rho.empty()) throw validation_error("ba: distortion shape mismatch");
    const std::size_t n = mu.size(), m = rho[0].size();
    double dmin = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        double b = rho[x][0];
        for (std::size_t y = 1; y < m; ++y) b = std::min(b, rho[x][y]);
        dmin += mu.mass[x] * b;
    }
    double dmax = std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < m; ++y) {
        double v = 0.0;
        for (std::size_t x = 0; x < n; ++x) v += mu.mass[x] * rho[x][y];
        dmax = std::min(dmax, v);
    }
    if (eps < dmin - 1e-12)
        throw validation_error("ba: target distortion " + std::to_string(eps) +
                               " below minimum achievable " + std::to_string(dmin));
    if (eps >= dmax) {  // constant reproduction reaches the target
        BaResult res;
        std::size_t ybest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t y = 0; y < m; ++y) {
            double v = 0.0;
            for (std::size_t x = 0; x < n; ++x) v += mu.mass[x] * rho[x][y];
            if (v < best) {
                best = v;
                ybest = y;
            }
        }
        res.channel.assign(n, std::vector<double>(m, 0.0));
        for (std::size_t x = 0; x < n; ++x) res.channel[x][ybest] = 1.0;
        res.distortion = best;
        res.converged = true;
        return res;
    }
    if (eps <= dmin + 1e-12) return detail::ba_hard_assignment(mu.mass, rho);

    double lo = 0.0, hi = 1.0;
    BaResult at_hi = detail::ba_fixed_slope(mu.mass, rho, hi);
    int guard = 0;
    while (at_hi.distortion > eps && guard++ < 60) {
        hi *= 2;
        at_hi = detail::ba_fixed_slope(mu.mass, rho, hi);
    }
    if (at_hi.distortion > eps) return detail::ba_hard_assignment(mu.mass, rho);
    BaResult best = at_hi;
    // the a -> 0 limit is the constant reproduction at (dmax, 0)
    BaResult infeasible;
    infeasible.distortion = dmax;
    infeasible.rate_bits = 0.0;
    infeasible.converged = true;
    {
        std::size_t ybest = 0;
        double bv = std::numeric_limits<double>::infinity();
        for (std::size_t y = 0; y < m; ++y) {
            double v = 0.0;
            for (std::size_t x = 0; x < n; ++x) v += mu.mass[x] * rho[x][y];
            if (v < bv) {
                bv = v;
                ybest = y;
            }
        }
        infeasible.channel.assign(n, std::vector<double>(m, 0.0));
        for (std::size_t x = 0; x < n; ++x) infeasible.channel[x][ybest] = 1.0;
    }
    for (int it = 0; it < 50; ++it) {
        const double mid = (lo + hi) / 2;
        BaResult r = detail::ba_fixed_slope(mu.mass, rho, mid);
        if (r.distortion <= eps) {
            best = r;
            hi = mid;
        } else {
            infeasible = r;
            lo = mid;
        }
    }
    // Discrete curves have linear segments; when the bisection straddles one,
    // time-share the two endpoint channels to land on the chord at eps.
    if (best.distortion < eps - 1e-9 && infeasible.distortion > eps) {
        const double t = (eps - best.distortion) / (infeasible.distortion - best.distortion);
        BaResult mixed;
        mixed.slope = best.slope;
        mixed.converged = best.converged && infeasible.converged;
        mixed.iterations = best.iterations + infeasible.iterations;
        mixed.channel.assign(n, std::vector<double>(m, 0.0));
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = 0; y < m; ++y)
                mixed.channel[x][y] = (1 - t) * best.channel[x][y] + t * infeasible.channel[x][y];
        std::vector<double> out(m, 0.0);
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = 0; y < m; ++y) out[y] += mu.mass[x] * mixed.channel[x][y];
        double I = 0.0, D = 0.0;
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = 0; y < m; ++y) {
                const double p = mu.mass[x] * mixed.channel[x][y];
                if (p > 0) I += p * std::log2(mixed.channel[x][y] / out[y]);
                D += p * rho[x][y];
            }
        mixed.rate_bits = std::max(0.0, I);
        mixed.distortion = D;
        if (mixed.distortion <= eps + 1e-9) return mixed;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Fast scalar solver for uniform alphabets (line [0,1] with k levels, or the
// quantized circle) and distortion w * distance. The kernel 2^{-a w d(u,v)} is
// geometric in the level index, so one BA iteration runs in O(k).

struct ScalarSlot {
    int k = 2;
    bool circle = false;
    double weight = 1.0;
};

namespace detail {

struct ScalarRD {
    double rate_bits = 0.0;
    double distortion = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Uniform circular source with rotation-invariant distortion: the optimal
// output distribution is uniform, so the slope-a point is closed-form.
inline ScalarRD scalar_rd_circle_exact(const ScalarSlot& s, double a) {
    const int k = s.k;
    const double h = s.weight / k;
    ScalarRD out;
    out.converged = true;
    double S = 0.0;
    std::vector<double> f(k);
    for (int d = 0; d < k; ++d) {
        const int dist = std::min(d, k - d);
        f[d] = std::exp2(-a * h * dist);
        S += f[d];
    }
    for (int d = 0; d < k; ++d) {
        const double nu = f[d] / S;
        if (nu > 0) out.rate_bits += nu * std::log2(nu * k);
        out.distortion += nu * h * std::min(d, k - d);
    }
    out.rate_bits = std::max(0.0, out.rate_bits);
    return out;
}

// Exact solve attempt for the line kernel assuming a symmetric contiguous
// output support [l, k-1-l]: the KKT equalities reduce to two applications of
// the kernel's closed-form tridiagonal inverse. Returns an empty vector when
// no contiguous support passes the optimality certificate.
inline std::vector<double> scalar_line_contiguous(int k, double r) {
    if (r >= 1.0 - 1e-13 || r <= 0.0) return {};
    const double inv = 1.0 / (1.0 - r * r);
    auto kms_inverse_apply = [&](const std::vector<double>& v) {
        const std::size_t m = v.size();
        std::vector<double> out(m);
        if (m == 1) {
            out[0] = v[0];
            return out;
        }
        out[0] = (v[0] - r * v[1]) * inv;
        out[m - 1] = (v[m - 1] - r * v[m - 2]) * inv;
        for (std::size_t i = 1; i + 1 < m; ++i)
            out[i] = (-r * v[i - 1] + (1.0 + r * r) * v[i] - r * v[i + 1]) * inv;
        return out;
    };
    const double mu = 1.0 / k;
    for (int l = 0; l <= (k - 1) / 2; ++l) {
        const int u = k - 1 - l;
        const int m = u - l + 1;
        // K_sub wt = 1 ; unfold the out-of-support source terms at the ends
        const std::vector<double> wt = kms_inverse_apply(std::vector<double>(m, 1.0));
        std::vector<double> w = wt;
        w.front() /= (1.0 + l);
        w.back() /= (1.0 + (k - 1 - u));
        bool ok = true;
        std::vector<double> Zs(m);
        for (int i = 0; i < m && ok; ++i) {
            if (w[i] <= 0) ok = false;
            else Zs[i] = mu / w[i];
        }
        if (!ok) continue;
        std::vector<double> q = kms_inverse_apply(Zs);
        double tot = 0.0;
        for (double v : q) {
            if (v < -1e-12) {
                ok = false;
                break;
            }
            tot += std::max(v, 0.0);
        }
        if (!ok || std::abs(tot - 1.0) > 1e-6) continue;
        // certificate: c(y) <= 1 strictly outside the support
        std::vector<double> qfull(k, 0.0);
        for (int i = 0; i < m; ++i) qfull[l + i] = std::max(q[i], 0.0) / tot;
        std::vector<double> Z(k, 0.0), c(k, 0.0);
        {
            double L = 0.0;
            for (int i = 0; i < k; ++i) {
                L = qfull[i] + r * L;
                Z[i] = L;
            }
            double R = 0.0;
            for (int i = k - 1; i >= 0; --i) {
                Z[i] += R;
                R = r * (qfull[i] + R);
            }
            std::vector<double> uvec(k);
            for (int i = 0; i < k; ++i) uvec[i] = mu / std::max(Z[i], 1e-300);
            L = 0.0;
            for (int i = 0; i < k; ++i) {
                L = uvec[i] + r * L;
                c[i] = L;
            }
            R = 0.0;
            for (int i = k - 1; i >= 0; --i) {
                c[i] += R;
                R = r * (uvec[i] + R);
            }
        }
        double worst = 0.0;
        for (int i = 0; i < k; ++i) worst = std::max(worst, c[i]);
        if (worst <= 1.0 + 1e-10) return qfull;
    }
    return {};
}

// Uniform k-level line source, distortion weight*|u-v|. The exponential kernel
// makes one update O(k) via prefix scans. The certified optimality gap (bits)
// declares convergence; 2e-5 bits is far below what the slope fits resolve.
inline ScalarRD scalar_rd_slope(const ScalarSlot& s, double a, int max_evals = 30000,
                                double gap_tol = 2e-5, std::vector<double>* warm = nullptr) {
    const int k = s.k;
    ScalarRD out;
    if (k == 1) {
        out.converged = true;
        return out;
    }
    if (s.circle) return scalar_rd_circle_exact(s, a);
    const double h = s.weight / (k - 1);
    const double r = std::exp2(-a * h);
    std::vector<double> q(k, 1.0 / k), Z(k);
    if (warm && warm->size() == static_cast<std::size_t>(k)) q = *warm;
    auto convolve = [&](const std::vector<double>& v, std::vector<double>& dst) {
        double L = 0.0;
        for (int i = 0; i < k; ++i) {
            L = v[i] + r * L;
            dst[i] = L;
        }
        double R = 0.0;
        for (int i = k - 1; i >= 0; --i) {
            dst[i] += R;
            R = r * (v[i] + R);
        }
    };
    auto applyK = [&](const std::vector<double>& v, std::vector<double>& dst, bool) {
        convolve(v, dst);  // symmetric kernel
    };
    const std::vector<double> mu(k, 1.0 / k);
    {
        std::vector<double> direct = scalar_line_contiguous(k, r);
        if (!direct.empty()) {
            q = std::move(direct);
            out.converged = true;
            out.iterations = 0;
        }
    }
    if (!out.converged)
        out.iterations =
            squarem_minimize(mu, applyK, k, q, gap_tol, std::min(max_evals, 6000), &out.converged);
    if (!out.converged) {
        // the iteration has localized the mass into lumps; hand the active-set
        // solver their peaks (adjacent bins of one lump are redundant atoms)
        std::vector<std::vector<double>> K(k, std::vector<double>(k));
        for (int x = 0; x < k; ++x)
            for (int y = 0; y < k; ++y) K[x][y] = std::pow(r, std::abs(x - y));
        double qmax = 0.0;
        for (int y = 0; y < k; ++y) qmax = std::max(qmax, q[y]);
        std::vector<double> seed(k, 0.0);
        for (int y = 0; y < k; ++y) {
            const bool up = (y == 0) || q[y] >= q[y - 1];
            const bool down = (y == k - 1) || q[y] >= q[y + 1];
            if (up && down && q[y] > 1e-9 * qmax) seed[y] = q[y];
        }
        const FixedSlopeSolution sol = rd_fixed_slope_activeset(mu, K, seed);
        q = sol.q;
        out.converged = sol.converged;
        out.iterations += sol.iterations;
    }
    if (warm) *warm = q;
    convolve(q, Z);
    // I and D in O(k^2); once per solve
    double I = 0.0, D = 0.0;
    std::vector<double> marg(k, 0.0);
    std::vector<std::vector<double>> nu(k, std::vector<double>(k));
    for (int x = 0; x < k; ++x) {
        const double zx = std::max(Z[x], 1e-300);
        for (int y = 0; y < k; ++y) {
            const int d0 = std::abs(x - y);
            const int d = s.circle ? std::min(d0, k - d0) : d0;
            nu[x][y] = q[y] * std::pow(r, d) / zx;
            marg[y] += nu[x][y] / k;
        }
    }
    for (int x = 0; x < k; ++x) {
        for (int y = 0; y < k; ++y) {
            const double p = nu[x][y] / k;
            if (p > 0 && marg[y] > 0) I += p * std::log2(nu[x][y] / marg[y]);
            const int d0 = std::abs(x - y);
            const int d = s.circle ? std::min(d0, k - d0) : d0;
            D += p * h * d;
        }
    }
    out.rate_bits = std::max(0.0, I);
    out.distortion = D;
    return out;
}

}  // namespace detail

struct ProductRdPoint {
    double eps = 0.0;
    double total_rate_bits = 0.0;  // block mutual information (not per step)
    double distortion = 0.0;
    double slope = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Exact RD of an independent product of uniform scalar sources under the
// summed weighted distortion: common Lagrange slope across coordinates,
// bisected to meet the total budget.
// Solver with per-group warm starts; reusing it across a descending epsilon
// sweep keeps both the slope bracket and the output distributions hot.
class ProductRdSolver {
  public:
    explicit ProductRdSolver(const std::vector<ScalarSlot>& slots) {
        if (slots.empty()) throw validation_error("product_rd: no slots");
        for (const auto& s : slots) {
            bool found = false;
            for (auto& g : groups_) {
                if (g.slot.k == s.k && g.slot.circle == s.circle &&
                    std::abs(g.slot.weight - s.weight) <= 1e-12 * std::max(1.0, std::abs(s.weight))) {
                    ++g.multiplicity;
                    found = true;
                    break;
                }
            }
            if (!found) groups_.push_back({s, 1, {}});
        }
    }

    ProductRdPoint at_slope(double a) {
        ProductRdPoint p;
        p.slope = a;
        p.converged = true;
        for (auto& g : groups_) {
            auto r = detail::scalar_rd_slope(g.slot, a, 30000, 2e-5, &g.warm);
            p.total_rate_bits += g.multiplicity * r.rate_bits;
            p.distortion += g.multiplicity * r.distortion;
            p.converged = p.converged && r.converged;
            p.iterations += r.iterations;
        }
        return p;
    }

    ProductRdPoint at_eps(double eps) {
        if (eps <= 0) throw validation_error("product_rd: eps must be positive");
        double lo = lo_hint_, hi = std::max(2.0 * lo_hint_, 1.0);
        ProductRdPoint at_hi = at_slope(hi);
        int guard = 0;
        while (at_hi.distortion >= eps && guard++ < 70) {
            lo = hi;
            hi *= 2;
            at_hi = at_slope(hi);
        }
        for (int it = 0; it < 30 && (hi - lo) > 1e-4 * hi; ++it) {
            const double mid = (lo + hi) / 2;
            ProductRdPoint p = at_slope(mid);
            if (p.distortion >= eps) {
                lo = mid;
            } else {
                hi = mid;
                at_hi = p;
            }
        }
        lo_hint_ = lo;  // monotone in a descending-eps sweep
        at_hi.eps = eps;
        return at_hi;
    }

  private:
    struct Group {
        ScalarSlot slot;
        int multiplicity = 0;
        std::vector<double> warm;
    };
    std::vector<Group> groups_;
    double lo_hint_ = 0.0;
};

inline ProductRdPoint product_rd(const std::vector<ScalarSlot>& slots, double eps) {
    ProductRdSolver solver(slots);
    return solver.at_eps(eps);
}

// Per-position dbar_N weights of a windowed shift: w_c = sum_j 2^{-|c-j|} / N
// restricted to the window. `taps` adds extra positions per term (the linked
// torus coupling); multiplicity per tap.
inline std::vector<ScalarSlot> shift_rd_slots(const SystemSpec& sys, int N, int taps_back = 0) {
    const int W = sys.window;
    std::vector<ScalarSlot> slots;
    const int extra = taps_back;
    for (int c = -W; c <= W + N - 1 + extra; ++c) {
        double w = 0.0;
        for (int j = 0; j < N; ++j) {
            for (int t = 0; t <= taps_back; ++t) {
                const int n = c - j - t;
                if (-W <= n && n <= W) w += std::pow(2.0, -std::abs(n));
            }
        }
        w /= N;
        if (w <= 0) continue;
        ScalarSlot s;
        s.k = sys.alphabet.levels_per_slot();
        s.circle = sys.alphabet.circular();
        s.weight = w;
        for (int i = 0; i < sys.alphabet.slots_per_position(); ++i) slots.push_back(s);
    }
    return slots;
}

// ---------------------------------------------------------------------------

struct RDPoint {
    double eps = 0.0;
    int N = 1;
    double rate_bits = 0.0;  // per step
    bool converged = false;
    int iterations = 0;
};

struct RDCurve {
    std::string source;
    std::vector<RDPoint> points;
};

// Block rate distortion on the system's enumerated/sampled point set:
// block source (x, Tx, ..., T^{N-1}x), reproduction codebook = the support,
// distortion dbar_N, solved with Blahut-Arimoto and divided by N.
struct DynamicalRdResult {
    RDPoint point;
    BaResult ba;
};

inline DynamicalRdResult dynamical_rd(const SystemSpec& sys, const DiscreteDistribution& measure,
                                      int N, double eps) {
    if (N < 1) throw validation_error("dynamical_rd: N must be >= 1");
    const FiniteMetricSpace m = orbit_metric(sys, N, OrbitKind::Avg);
    if (measure.size() != m.size())
        throw validation_error("dynamical_rd: measure size " + std::to_string(measure.size()) +
                               " does not match the system's " + std::to_string(m.size()) +
                               " points at depth " + std::to_string(N));
    std::vector<std::vector<double>> rho(m.size(), std::vector<double>(m.size()));
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) rho[i][j] = m.d(i, j);
    DynamicalRdResult out;
    out.ba = blahut_arimoto(measure, rho, eps);
    out.point.eps = eps;
    out.point.N = N;
    out.point.rate_bits = out.ba.rate_bits / N;
    out.point.converged = out.ba.converged;
    out.point.iterations = out.ba.iterations;
    return out;
}

// ---------------------------------------------------------------------------

struct DimensionEstimate {
    double slope = 0.0;       // headline estimate
    double intercept = 0.0;
    double max_residual = 0.0;
    std::string method;
    std::map<int, double> per_n_slopes;
    std::size_t points_used = 0;
};

// Slope of R against log2(1/eps). Points at the two largest N are combined
// into per-step increments (N2 R2 - N1 R1)/(N2 - N1), which cancels the
// window boundary term; single-N curves fall back to the direct fit.
// Weighted least squares with weights 1/log2(1/eps).
inline DimensionEstimate rdim_estimate(const RDCurve& curve) {
    std::map<int, std::vector<std::pair<double, double>>> by_n;  // N -> (eps, R)
    for (const auto& p : curve.points) {
        if (!p.converged) continue;
        by_n[p.N].push_back({p.eps, p.rate_bits});
    }
    if (by_n.empty()) throw validation_error("rdim_estimate: no converged points");
    // span check on the epsilon values in use
    double emin = std::numeric_limits<double>::infinity(), emax = 0.0;
    std::size_t total = 0;
    for (auto& [n, v] : by_n) {
        for (auto& [e, r] : v) {
            emin = std::min(emin, e);
            emax = std::max(emax, e);
        }
        total += v.size();
    }
    if (total < 3 || emax / emin < 10.0 - 1e-9)
        throw validation_error("rdim_estimate: need >= 3 converged points spanning >= 1 decade of eps");

    DimensionEstimate est;
    // weighted toward fine resolutions; the limit of interest sits at eps -> 0
    auto wls = [](const std::vector<std::pair<double, double>>& pts) {
        std::vector<double> xs, ys, ws;
        for (auto& [e, r] : pts) {
            const double x = std::log2(1.0 / e);
            xs.push_back(x);
            ys.push_back(r);
            ws.push_back(std::max(x, 1e-6));
        }
        return fit_line(xs, ys, ws);
    };
    for (auto& [n, v] : by_n)
        if (v.size() >= 2) est.per_n_slopes[n] = wls(v).slope;

    if (by_n.size() >= 2) {
        auto it2 = by_n.rbegin();
        const int n2 = it2->first;
        auto& v2 = it2->second;
        ++it2;
        const int n1 = it2->first;
        auto& v1 = it2->second;
        std::vector<std::pair<double, double>> inc;
        for (auto& [e2, r2] : v2) {
            for (auto& [e1, r1] : v1) {
                if (std::abs(e1 - e2) < 1e-12 * std::max(e1, e2) + 1e-300) {
                    inc.push_back({e2, (n2 * r2 - n1 * r1) / static_cast<double>(n2 - n1)});
                    break;
                }
            }
        }
        if (inc.size() >= 3) {
            const LineFit f = wls(inc);
            est.slope = f.slope;
            est.intercept = f.intercept;
            est.max_residual = f.max_residual;
            est.method = "per-step increment, N=" + std::to_string(n1) + ".." + std::to_string(n2);
            est.points_used = inc.size();
            return est;
        }
    }
    const int nmax = by_n.rbegin()->first;
    const LineFit f = wls(by_n[nmax]);
    est.slope = f.slope;
    est.intercept = f.intercept;
    est.max_residual = f.max_residual;
    est.method = "direct fit at N=" + std::to_string(nmax);
    est.points_used = by_n[nmax].size();
    return est;
}

// ---------------------------------------------------------------------------

struct DualityBound {
    bool feasible = false;
    double bound_bits = 0.0;
    std::size_t violating_y = 0;
    double margin = 0.0;  // max_y (sum_x lambda 2^{-a rho} mu) - 1
};

// I(X;Y) >= -a eps + sum mu(x) log2 lambda(x), valid whenever
// sum_x lambda(x) 2^{-a rho(x,y)} mu(x) <= 1 for every y. The feasibility
// condition is checked, never assumed.
inline DualityBound duality_lower_bound(const DiscreteDistribution& mu,
                                        const std::vector<std::vector<double>>& rho,
                                        const std::vector<double>& lambda, double a, double eps) {
    mu.validate();
    if (a < 0 || eps <= 0) throw validation_error("duality bound: need a >= 0 and eps > 0");
    if (lambda.size() != mu.size()) throw validation_error("duality bound: lambda size mismatch");
    const std::size_t n = mu.size(), m = rho[0].size();
    DualityBound out;
    out.margin = -std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < m; ++y) {
        double v = 0.0;
        for (std::size_t x = 0; x < n; ++x) v += lambda[x] * std::exp2(-a * rho[x][y]) * mu.mass[x];
        if (v - 1.0 > out.margin) {
            out.margin = v - 1.0;
            out.violating_y = y;
        }
    }
    if (out.margin > kLpFeasTol) {
        out.feasible = false;
        return out;
    }
    out.feasible = true;
    double b = -a * eps;
    for (std::size_t x = 0; x < n; ++x) {
        if (mu.mass[x] > 0) {
            if (lambda[x] <= 0)
                throw validation_error("duality bound: lambda must be positive on the support");
            b += mu.mass[x] * std::log2(lambda[x]);
        }
    }
    out.bound_bits = b;
    return out;
}

struct GmtBound {
    double bound_bits = 0.0;       // exact pre-Stirling form, may be negative
    double rate_bound_bits = 0.0;  // floored at 0
    double stirling_constant = 0.0;
    double lambda_constant = 0.0;  // the feasible constant lambda
    double slope = 0.0;            // a = s / eps
};

// Lower bound s log2(1/eps) - s - log2{2 + (3 log2 e)^s s^-s Gamma(s+1)} for a
// measure obeying the scaling law mu(E) <= (tau + diam E)^s below scale delta.
inline GmtBound gmt_lower_bound(double s, double eps, double delta, double tau) {
    if (s < 0) throw validation_error("gmt bound: s must be >= 0");
    if (!(2 * eps * std::log2(1.0 / eps) <= delta + 1e-15))
        throw validation_error("gmt bound: precondition 2 eps log2(1/eps) <= delta fails");
    if (!(tau <= std::min(eps / 3.0, delta / 2.0) + 1e-15))
        throw validation_error("gmt bound: precondition tau <= min(eps/3, delta/2) fails");
    const double log2e = 1.4426950408889634;
    const double pow_term = (s == 0.0) ? 1.0 : std::pow(3.0 * log2e, s) * std::pow(s, -s) * std::tgamma(s + 1.0);
    const double bracket = 2.0 + pow_term;
    GmtBound g;
    g.bound_bits = s * std::log2(1.0 / eps) - s - std::log2(bracket);
    g.rate_bound_bits = std::max(0.0, g.bound_bits);
    g.stirling_constant = (s + std::log2(bracket)) / (s + 1.0);
    g.lambda_constant = std::pow(eps, -s) / bracket;
    g.slope = (eps > 0) ? s / eps : 0.0;
    return g;
}

}  // namespace meandim

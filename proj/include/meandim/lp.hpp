#pragma once

// Dense two-phase simplex with dual extraction. Used for the fractional-cover
// programs and their dual measures, and for transportation problems.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "meandim/common.hpp"

namespace meandim {

enum class RowSense { Ge, Eq };

struct LpProblem {
    // minimize c'x subject to per-row (a_i' x >= b_i) or (a_i' x == b_i), x >= 0
    std::size_t num_vars = 0;
    std::vector<double> objective;
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    std::vector<RowSense> sense;
};

struct LpResult {
    bool optimal = false;
    double value = 0.0;
    std::vector<double> x;
    std::vector<double> dual;  // one multiplier per original row
    double duality_gap = 0.0;  // |c'x - b'y| at the reported solution
    double primal_violation = 0.0;
    int iterations = 0;
};

class SimplexSolver {
  public:
    explicit SimplexSolver(const LpProblem& p) : p_(p) {
        m_ = p.rows.size();
        if (p.objective.size() != p.num_vars) throw validation_error("lp: objective size mismatch");
        for (const auto& r : p.rows)
            if (r.size() != p.num_vars) throw validation_error("lp: row size mismatch");
    }

    LpResult solve() {
        build_tableau();
        LpResult res;
        if (!phase1()) {
            throw numeric_error("lp: infeasible problem (phase 1 did not reach zero)");
        }
        phase2();
        extract(res);
        return res;
    }

  private:
    const LpProblem& p_;
    std::size_t m_ = 0;           // rows
    std::size_t nstruct_ = 0;     // structural + surplus columns
    std::size_t ncols_ = 0;       // structural + surplus + artificial
    std::vector<double> tab_;     // (m_+1) x (ncols_+1), row-major; last row = reduced costs
    std::vector<int> basis_;
    std::vector<double> cost_;    // phase-2 costs per column
    std::vector<int> rowsign_;    // +1 or -1 applied to original row i
    int iterations_ = 0;

    double& at(std::size_t r, std::size_t c) { return tab_[r * (ncols_ + 1) + c]; }

    void build_tableau() {
        std::size_t nsurplus = 0;
        for (auto s : p_.sense)
            if (s == RowSense::Ge) ++nsurplus;
        nstruct_ = p_.num_vars + nsurplus;
        ncols_ = nstruct_ + m_;
        tab_.assign((m_ + 1) * (ncols_ + 1), 0.0);
        basis_.assign(m_, -1);
        cost_.assign(ncols_, 0.0);
        rowsign_.assign(m_, 1);
        for (std::size_t j = 0; j < p_.num_vars; ++j) cost_[j] = p_.objective[j];

        std::size_t surplus = p_.num_vars;
        for (std::size_t i = 0; i < m_; ++i) {
            const double sign = (p_.rhs[i] < 0.0) ? -1.0 : 1.0;
            rowsign_[i] = static_cast<int>(sign);
            for (std::size_t j = 0; j < p_.num_vars; ++j) at(i, j) = sign * p_.rows[i][j];
            if (p_.sense[i] == RowSense::Ge) {
                at(i, surplus) = -sign;
                ++surplus;
            }
            at(i, nstruct_ + i) = 1.0;  // artificial
            basis_[i] = static_cast<int>(nstruct_ + i);
            at(i, ncols_) = sign * p_.rhs[i];
        }
    }

    void pivot(std::size_t pr, std::size_t pc) {
        const double pv = at(pr, pc);
        const double inv = 1.0 / pv;
        for (std::size_t j = 0; j <= ncols_; ++j) at(pr, j) *= inv;
        for (std::size_t i = 0; i <= m_; ++i) {
            if (i == pr) continue;
            const double f = at(i, pc);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= ncols_; ++j) at(i, j) -= f * at(pr, j);
            at(i, pc) = 0.0;
        }
        at(pr, pc) = 1.0;
        basis_[pr] = static_cast<int>(pc);
    }

    // returns false on unbounded
    bool run_simplex(bool allow_artificial_entering, long max_iters) {
        const double eps = 1e-11;
        long it = 0;
        const long bland_after = max_iters / 2;
        while (it++ < max_iters) {
            ++iterations_;
            // entering column: z_j - c_j > 0
            std::size_t pc = ncols_;
            double best = eps;
            const std::size_t jmax = allow_artificial_entering ? ncols_ : nstruct_;
            if (it < bland_after) {
                for (std::size_t j = 0; j < jmax; ++j) {
                    const double v = at(m_, j);
                    if (v > best) {
                        best = v;
                        pc = j;
                    }
                }
            } else {  // Bland
                for (std::size_t j = 0; j < jmax; ++j) {
                    if (at(m_, j) > eps) {
                        pc = j;
                        break;
                    }
                }
            }
            if (pc == ncols_) return true;  // optimal
            // ratio test with Bland tie-break
            std::size_t pr = m_;
            double bestRatio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m_; ++i) {
                const double a = at(i, pc);
                if (a > eps) {
                    const double ratio = at(i, ncols_) / a;
                    if (ratio < bestRatio - 1e-12 ||
                        (ratio < bestRatio + 1e-12 && pr < m_ && basis_[i] < basis_[pr])) {
                        bestRatio = ratio;
                        pr = i;
                    }
                }
            }
            if (pr == m_) return false;  // unbounded
            pivot(pr, pc);
        }
        throw numeric_error("lp: iteration limit reached without convergence");
    }

    bool phase1() {
        std::vector<double> c1(ncols_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) c1[nstruct_ + i] = 1.0;
        // objective row for phase 1: maximize -(sum artificials) => z_j - c_j with c = c1
        for (std::size_t j = 0; j <= ncols_; ++j) at(m_, j) = 0.0;
        set_reduced_costs_negated(c1);
        if (!run_simplex(true, 200000)) throw numeric_error("lp: phase 1 unbounded");
        double art = 0.0;
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] >= static_cast<int>(nstruct_)) art += at(i, ncols_);
        if (art > 1e-7) return false;
        // drive remaining artificials out of the basis where possible
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < static_cast<int>(nstruct_)) continue;
            std::size_t pc = ncols_;
            for (std::size_t j = 0; j < nstruct_; ++j) {
                if (std::abs(at(i, j)) > 1e-9) {
                    pc = j;
                    break;
                }
            }
            if (pc != ncols_) pivot(i, pc);
            // otherwise the row is redundant; leave the zero-valued artificial basic
        }
        return true;
    }

    void phase2() {
        for (std::size_t j = 0; j <= ncols_; ++j) at(m_, j) = 0.0;
        set_reduced_costs_negated(cost_);
        if (!run_simplex(false, 500000)) throw numeric_error("lp: unbounded objective");
    }

    // sets row m_ to (c_B B^-1 a_j - c_j) for all columns plus objective value at rhs
    void set_reduced_costs_negated(const std::vector<double>& c) {
        for (std::size_t j = 0; j < ncols_; ++j) at(m_, j) = -c[j];
        at(m_, ncols_) = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            const double cb = c[basis_[i]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j <= ncols_; ++j) at(m_, j) += cb * at(i, j);
        }
    }

    void extract(LpResult& res) {
        res.x.assign(p_.num_vars, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] >= 0 && basis_[i] < static_cast<int>(p_.num_vars))
                res.x[basis_[i]] = at(i, ncols_);
        }
        res.value = 0.0;
        for (std::size_t j = 0; j < p_.num_vars; ++j) res.value += p_.objective[j] * res.x[j];
        // dual: y_i = c_B B^-1 e_i = reduced-cost entry of artificial i (cost 0)
        res.dual.assign(m_, 0.0);
        double dualval = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            res.dual[i] = at(m_, nstruct_ + i) * rowsign_[i];
            dualval += res.dual[i] * p_.rhs[i];
        }
        res.duality_gap = std::abs(res.value - dualval);
        res.primal_violation = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            double lhs = 0.0;
            for (std::size_t j = 0; j < p_.num_vars; ++j) lhs += p_.rows[i][j] * res.x[j];
            const double viol = (p_.sense[i] == RowSense::Ge) ? std::max(0.0, p_.rhs[i] - lhs)
                                                              : std::abs(lhs - p_.rhs[i]);
            res.primal_violation = std::max(res.primal_violation, viol);
        }
        res.iterations = iterations_;
        res.optimal = true;
    }
};

inline LpResult solve_lp(const LpProblem& p) { return SimplexSolver(p).solve(); }

// Transportation problem: minimize sum pi_ij cost_ij with fixed marginals.
// Returns the joint plan row-major.
struct TransportResult {
    std::vector<double> plan;  // n*m row-major
    double cost = 0.0;
    int iterations = 0;
};

inline TransportResult solve_transport(const std::vector<double>& mu, const std::vector<double>& nu,
                                       const std::vector<std::vector<double>>& cost) {
    const std::size_t n = mu.size(), m = nu.size();
    if (cost.size() != n) throw validation_error("transport: cost rows mismatch");
    for (const auto& r : cost)
        if (r.size() != m) throw validation_error("transport: cost cols mismatch");
    LpProblem p;
    p.num_vars = n * m;
    p.objective.assign(n * m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) p.objective[i * m + j] = cost[i][j];
    // row marginals and all-but-one column marginals (the last is implied)
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> r(n * m, 0.0);
        for (std::size_t j = 0; j < m; ++j) r[i * m + j] = 1.0;
        p.rows.push_back(std::move(r));
        p.rhs.push_back(mu[i]);
        p.sense.push_back(RowSense::Eq);
    }
    for (std::size_t j = 0; j + 1 < m; ++j) {
        std::vector<double> r(n * m, 0.0);
        for (std::size_t i = 0; i < n; ++i) r[i * m + j] = 1.0;
        p.rows.push_back(std::move(r));
        p.rhs.push_back(nu[j]);
        p.sense.push_back(RowSense::Eq);
    }
    LpResult res = solve_lp(p);
    TransportResult t;
    t.plan = res.x;
    t.cost = res.value;
    t.iterations = res.iterations;
    return t;
}

}  // namespace meandim

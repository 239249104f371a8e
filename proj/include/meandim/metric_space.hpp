#pragma once

// Finite metric spaces and the covering / separating machinery on them.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "meandim/common.hpp"

namespace meandim {

struct FiniteMetricSpace {
    std::string label;
    std::vector<std::string> points;
    std::vector<double> dist;  // dense n*n, row-major

    std::size_t size() const { return points.size(); }
    double d(std::size_t i, std::size_t j) const { return dist[i * points.size() + j]; }
    double& d(std::size_t i, std::size_t j) { return dist[i * points.size() + j]; }

    double diameter() const {
        double m = 0.0;
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = i + 1; j < size(); ++j) m = std::max(m, d(i, j));
        return m;
    }

    static FiniteMetricSpace from_matrix(std::string label, std::vector<std::vector<double>> m) {
        FiniteMetricSpace s;
        s.label = std::move(label);
        const std::size_t n = m.size();
        s.points.reserve(n);
        for (std::size_t i = 0; i < n; ++i) s.points.push_back("p" + std::to_string(i));
        s.dist.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (m[i].size() != n) throw validation_error("metric: distance matrix is not square");
            for (std::size_t j = 0; j < n; ++j) s.d(i, j) = m[i][j];
        }
        return s;
    }
};

struct Cover {
    std::vector<std::vector<std::size_t>> blocks;
    std::vector<double> block_diameters;
};

inline double block_diameter(const FiniteMetricSpace& s, const std::vector<std::size_t>& blk) {
    double m = 0.0;
    for (std::size_t a = 0; a < blk.size(); ++a)
        for (std::size_t b = a + 1; b < blk.size(); ++b) m = std::max(m, s.d(blk[a], blk[b]));
    return m;
}

// Metric axiom check. Each violation names the offending pair/triple.
inline std::vector<std::string> validate_metric(const FiniteMetricSpace& s) {
    const std::size_t n = s.size();
    if (s.dist.size() != n * n) throw validation_error("metric: matrix does not match point count");
    std::vector<std::string> v;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(s.d(i, i)) > kDiamTol)
            v.push_back("nonzero self-distance at " + std::to_string(i));
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(s.d(i, j) - s.d(j, i)) > kDiamTol)
                v.push_back("symmetry violation at (" + std::to_string(i) + "," + std::to_string(j) + ")");
            if (s.d(i, j) < -kDiamTol)
                v.push_back("negative distance at (" + std::to_string(i) + "," + std::to_string(j) + ")");
            if (s.d(i, j) <= kDiamTol)
                v.push_back("indistinct points (" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                if (s.d(i, j) > s.d(i, k) + s.d(k, j) + kDiamTol)
                    v.push_back("triangle violation at (" + std::to_string(i) + "," +
                                std::to_string(j) + "," + std::to_string(k) + ")");
    return v;
}

enum class SolveMode { Exact, Greedy };

namespace detail {

// Branch and bound for minimum partition into blocks of diameter < eps
// (equivalently minimum clique cover of the compatibility graph).
class CliqueCoverSolver {
  public:
    CliqueCoverSolver(const FiniteMetricSpace& s, double eps) : s_(s), eps_(eps), n_(s.size()) {}

    Cover solve() {
        best_ = greedy();
        std::vector<std::vector<std::size_t>> blocks;
        descend(0, blocks);
        Cover c;
        c.blocks = best_blocks_;
        for (auto& b : c.blocks) c.block_diameters.push_back(block_diameter(s_, b));
        return c;
    }

  private:
    const FiniteMetricSpace& s_;
    double eps_;
    std::size_t n_;
    std::size_t best_ = 0;
    std::vector<std::vector<std::size_t>> best_blocks_;

    bool fits(const std::vector<std::size_t>& blk, std::size_t p) const {
        for (auto q : blk)
            if (s_.d(q, p) >= eps_ - kDiamTol) return false;
        return true;
    }

    std::size_t greedy() {
        std::vector<std::vector<std::size_t>> blocks;
        for (std::size_t p = 0; p < n_; ++p) {
            bool placed = false;
            for (auto& b : blocks) {
                if (fits(b, p)) {
                    b.push_back(p);
                    placed = true;
                    break;
                }
            }
            if (!placed) blocks.push_back({p});
        }
        best_blocks_ = blocks;
        return blocks.size();
    }

    void descend(std::size_t p, std::vector<std::vector<std::size_t>>& blocks) {
        if (blocks.size() >= best_) return;
        if (p == n_) {
            best_ = blocks.size();
            best_blocks_ = blocks;
            return;
        }
        const std::size_t nb = blocks.size();  // recursion reallocates the vector
        for (std::size_t bi = 0; bi < nb; ++bi) {
            if (fits(blocks[bi], p)) {
                blocks[bi].push_back(p);
                descend(p + 1, blocks);
                blocks[bi].pop_back();
            }
        }
        blocks.push_back({p});
        descend(p + 1, blocks);
        blocks.pop_back();
    }
};

// Max independent set in the "distance < eps" graph = max eps-separated subset.
class SeparatedSetSolver {
  public:
    SeparatedSetSolver(const FiniteMetricSpace& s, double eps) : s_(s), eps_(eps), n_(s.size()) {}

    std::vector<std::size_t> solve() {
        std::vector<std::size_t> cur;
        descend(0, cur);
        return best_;
    }

  private:
    const FiniteMetricSpace& s_;
    double eps_;
    std::size_t n_;
    std::vector<std::size_t> best_;

    bool compatible(const std::vector<std::size_t>& set, std::size_t p) const {
        for (auto q : set)
            if (s_.d(q, p) < eps_ - kDiamTol) return false;
        return true;
    }

    void descend(std::size_t p, std::vector<std::size_t>& cur) {
        if (cur.size() + (n_ - p) <= best_.size()) return;
        if (p == n_) {
            if (cur.size() > best_.size()) best_ = cur;
            return;
        }
        if (compatible(cur, p)) {
            cur.push_back(p);
            descend(p + 1, cur);
            cur.pop_back();
        }
        descend(p + 1, cur);
    }
};

}  // namespace detail

inline std::size_t default_exact_budget() { return 20; }

struct CoveringResult {
    std::size_t count = 0;
    Cover witness;
};

// Minimum number of blocks of diameter < eps covering the space.
// Exact via branch and bound (point budget applies); greedy gives an upper bound.
inline CoveringResult covering_number(const FiniteMetricSpace& s, double eps, SolveMode mode,
                                      std::size_t budget = default_exact_budget()) {
    if (eps <= 0) throw validation_error("covering_number: eps must be positive");
    if (s.size() == 0) throw validation_error("covering_number: empty space");
    CoveringResult r;
    if (mode == SolveMode::Exact) {
        if (s.size() > budget)
            throw capacity_error("covering_number: exact mode refused above " +
                                 std::to_string(budget) + " points; use greedy");
        detail::CliqueCoverSolver solver(s, eps);
        r.witness = solver.solve();
    } else {
        // largest-first greedy: repeatedly grow a block around the first uncovered point
        std::vector<bool> covered(s.size(), false);
        std::size_t left = s.size();
        while (left > 0) {
            std::size_t seed = 0;
            while (covered[seed]) ++seed;
            std::vector<std::size_t> blk{seed};
            covered[seed] = true;
            --left;
            for (std::size_t p = 0; p < s.size(); ++p) {
                if (covered[p]) continue;
                bool ok = true;
                for (auto q : blk)
                    if (s.d(q, p) >= eps - kDiamTol) {
                        ok = false;
                        break;
                    }
                if (ok) {
                    blk.push_back(p);
                    covered[p] = true;
                    --left;
                }
            }
            r.witness.blocks.push_back(std::move(blk));
        }
        for (auto& b : r.witness.blocks) r.witness.block_diameters.push_back(block_diameter(s, b));
    }
    r.count = r.witness.blocks.size();
    return r;
}

struct SeparatingResult {
    std::size_t count = 0;
    std::vector<std::size_t> witness;
};

// Maximum subset with pairwise distances >= eps.
inline SeparatingResult separating_number(const FiniteMetricSpace& s, double eps, SolveMode mode,
                                          std::size_t budget = default_exact_budget()) {
    if (eps <= 0) throw validation_error("separating_number: eps must be positive");
    if (s.size() == 0) throw validation_error("separating_number: empty space");
    SeparatingResult r;
    if (mode == SolveMode::Exact) {
        if (s.size() > budget)
            throw capacity_error("separating_number: exact mode refused above " +
                                 std::to_string(budget) + " points; use greedy");
        detail::SeparatedSetSolver solver(s, eps);
        r.witness = solver.solve();
    } else {
        for (std::size_t p = 0; p < s.size(); ++p) {
            bool ok = true;
            for (auto q : r.witness)
                if (s.d(q, p) < eps - kDiamTol) {
                    ok = false;
                    break;
                }
            if (ok) r.witness.push_back(p);
        }
    }
    r.count = r.witness.size();
    return r;
}

// Landmark embedding d'(x,y) = sum_i 2^{-i} |d(x, p_i) - d(y, p_i)| over all points
// in input order. Satisfies d' <= d and keeps distinct points apart.
inline FiniteMetricSpace tame_transform(const FiniteMetricSpace& s) {
    if (s.size() == 0) throw validation_error("tame_transform: empty space");
    FiniteMetricSpace out = s;
    out.label = s.label + "/tamed";
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double v = 0.0;
            double w = 0.5;
            for (std::size_t l = 0; l < n; ++l) {
                v += w * std::abs(s.d(i, l) - s.d(j, l));
                w *= 0.5;
            }
            out.d(i, j) = v;
        }
    }
    return out;
}

}  // namespace meandim

#pragma once

// Coarse Hausdorff content, the weighted (fractional-cover) content as an LP,
// Frostman measures from LP duality, and dimension profiles by bisection.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "meandim/common.hpp"
#include "meandim/lp.hpp"
#include "meandim/metric_space.hpp"
#include "meandim/systems.hpp"

namespace meandim {

enum class BlockFamily { AllSubsets, Balls };

struct ContentQuery {
    double s = 0.0;       // dimension exponent
    double eps = 0.0;     // strict max block diameter (delta for the LP variant)
    double tau = 0.0;     // coarseness offset
    BlockFamily family = BlockFamily::AllSubsets;
    SolveMode mode = SolveMode::Exact;
    std::size_t subset_budget = 15;  // all-subsets only up to this many points
};

// cost of one block: (tau + diam)^s with the 0^0 = 1 convention
inline double block_cost(double tau, double diam, double s) {
    const double base = tau + diam;
    if (s == 0.0) return 1.0;
    if (base <= 0.0) return 0.0;
    return std::pow(base, s);
}

namespace detail {

struct CandidateBlock {
    std::vector<std::size_t> points;
    double diam = 0.0;
};

// Candidate blocks with diam < eps: every subset, or every metric ball
// B(x, r) for r in the distance multiset. Deduplicated by member set.
inline std::vector<CandidateBlock> candidate_blocks(const FiniteMetricSpace& sp, double eps,
                                                    BlockFamily family, std::size_t subset_budget) {
    const std::size_t n = sp.size();
    std::vector<CandidateBlock> out;
    if (family == BlockFamily::AllSubsets) {
        if (n > subset_budget || n > 63)
            throw capacity_error("candidate blocks: all-subsets family needs <= " +
                                 std::to_string(subset_budget) + " points, got " + std::to_string(n));
        const std::uint64_t limit = 1ULL << n;
        for (std::uint64_t mask = 1; mask < limit; ++mask) {
            CandidateBlock b;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1ULL << i)) b.points.push_back(i);
            b.diam = block_diameter(sp, b.points);
            if (b.diam < eps - kDiamTol) out.push_back(std::move(b));
        }
        return out;
    }
    if (n > 220)
        throw capacity_error("candidate blocks: ball family limited to 220 points (LP size); sample fewer points");
    std::map<std::vector<std::size_t>, double> dedup;
    for (std::size_t c = 0; c < n; ++c) {
        std::vector<double> radii;
        for (std::size_t j = 0; j < n; ++j) radii.push_back(sp.d(c, j));
        std::sort(radii.begin(), radii.end());
        radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
        for (double r : radii) {
            std::vector<std::size_t> pts;
            for (std::size_t j = 0; j < n; ++j)
                if (sp.d(c, j) <= r + kDiamTol) pts.push_back(j);
            const double diam = block_diameter(sp, pts);
            if (diam < eps - kDiamTol) dedup.emplace(std::move(pts), diam);
        }
    }
    out.reserve(dedup.size());
    for (auto& [pts, diam] : dedup) {
        CandidateBlock b;
        b.points = pts;
        b.diam = diam;
        out.push_back(std::move(b));
    }
    return out;
}

// Deterministic weighted greedy cover (cost per newly covered point).
inline double greedy_cover(std::size_t n, const std::vector<CandidateBlock>& blocks,
                           const std::vector<double>& costs, std::vector<std::size_t>& chosen) {
    std::vector<char> covered(n, 0);
    std::size_t left = n;
    double total = 0.0;
    chosen.clear();
    while (left > 0) {
        double bestRatio = std::numeric_limits<double>::infinity();
        std::size_t pick = blocks.size();
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            std::size_t nw = 0;
            for (auto p : blocks[i].points)
                if (!covered[p]) ++nw;
            if (!nw) continue;
            const double ratio = costs[i] / static_cast<double>(nw);
            if (ratio < bestRatio - 1e-15) {
                bestRatio = ratio;
                pick = i;
            }
        }
        if (pick == blocks.size())
            throw numeric_error("content: candidate family fails to cover the space");
        for (auto p : blocks[pick].points)
            if (!covered[p]) {
                covered[p] = 1;
                --left;
            }
        total += costs[pick];
        chosen.push_back(pick);
    }
    return total;
}

// Exact min-cost set cover over the candidate family by branch and bound
// (small spaces; members fit a 64-bit mask).
class ContentSolver {
  public:
    ContentSolver(std::size_t n, const std::vector<CandidateBlock>& blocks,
                  const std::vector<double>& costs)
        : n_(n), blocks_(blocks), costs_(costs) {
        masks_.reserve(blocks.size());
        for (const auto& b : blocks) {
            std::uint64_t m = 0;
            for (auto p : b.points) m |= 1ULL << p;
            masks_.push_back(m);
        }
    }

    double solve(std::vector<std::size_t>* chosen) {
        best_ = greedy_cover(n_, blocks_, costs_, best_choice_) + 1e-15;
        std::vector<std::size_t> cur;
        descend(0, 0.0, cur, 0);
        if (chosen) *chosen = best_choice_;
        return cost_of(best_choice_);
    }

  private:
    std::size_t n_;
    const std::vector<CandidateBlock>& blocks_;
    const std::vector<double>& costs_;
    std::vector<std::uint64_t> masks_;
    double best_ = 0.0;
    std::vector<std::size_t> best_choice_;

    double cost_of(const std::vector<std::size_t>& choice) const {
        double t = 0.0;
        for (auto i : choice) t += costs_[i];
        return t;
    }

    void descend(std::size_t firstUncovered, double cost, std::vector<std::size_t>& cur,
                 std::uint64_t covered) {
        if (cost >= best_ - 1e-15) return;
        while (firstUncovered < n_ && (covered & (1ULL << firstUncovered))) ++firstUncovered;
        if (firstUncovered == n_) {
            best_ = cost;
            best_choice_ = cur;
            return;
        }
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            if (!(masks_[i] & (1ULL << firstUncovered))) continue;
            cur.push_back(i);
            descend(firstUncovered + 1, cost + costs_[i], cur, covered | masks_[i]);
            cur.pop_back();
        }
    }
};

}  // namespace detail

struct ContentResult {
    double value = 0.0;
    Cover cover;
};

// inf of sum (tau + diam E)^s over covers by family blocks with diam < eps.
// Exact via branch and bound within budgets, greedy upper bound otherwise.
inline ContentResult hausdorff_content(const FiniteMetricSpace& sp, const ContentQuery& q) {
    if (q.eps <= 0) throw validation_error("hausdorff_content: eps must be positive");
    if (q.tau < 0 || q.s < 0) throw validation_error("hausdorff_content: tau and s must be >= 0");
    const BlockFamily fam =
        (q.family == BlockFamily::AllSubsets && sp.size() <= q.subset_budget) ? BlockFamily::AllSubsets
                                                                              : BlockFamily::Balls;
    const auto blocks = detail::candidate_blocks(sp, q.eps, fam, q.subset_budget);
    std::vector<double> costs;
    costs.reserve(blocks.size());
    for (const auto& b : blocks) costs.push_back(block_cost(q.tau, b.diam, q.s));
    ContentResult res;
    std::vector<std::size_t> chosen;
    if (q.mode == SolveMode::Exact) {
        if (sp.size() > 24)
            throw capacity_error("hausdorff_content: exact mode refused above 24 points; use greedy");
        detail::ContentSolver solver(sp.size(), blocks, costs);
        res.value = solver.solve(&chosen);
    } else {
        res.value = detail::greedy_cover(sp.size(), blocks, costs, chosen);
    }
    for (auto i : chosen) {
        res.cover.blocks.push_back(blocks[i].points);
        res.cover.block_diameters.push_back(blocks[i].diam);
    }
    return res;
}

struct WeightedContentResult {
    double value = 0.0;
    std::vector<double> weights;  // c_n per candidate block
    std::vector<std::vector<std::size_t>> blocks;
    std::vector<double> block_diams;
    double duality_gap = 0.0;
    int lp_iterations = 0;
    std::vector<double> dual_measure;  // per point, the Frostman side
};

// Fractional cover LP: minimize sum c_E (tau + diam E)^s subject to
// sum_{E ∋ x} c_E >= 1 for every point x, c >= 0.
inline WeightedContentResult weighted_content(const FiniteMetricSpace& sp, const ContentQuery& q) {
    if (q.eps <= 0) throw validation_error("weighted_content: delta must be positive");
    const auto blocks = detail::candidate_blocks(sp, q.eps, q.family, q.subset_budget);
    if (blocks.empty()) throw numeric_error("weighted_content: no admissible blocks (delta too small)");
    const std::size_t n = sp.size();
    LpProblem p;
    p.num_vars = blocks.size();
    p.objective.reserve(blocks.size());
    for (const auto& b : blocks) p.objective.push_back(block_cost(q.tau, b.diam, q.s));
    p.rows.assign(n, std::vector<double>(blocks.size(), 0.0));
    p.rhs.assign(n, 1.0);
    p.sense.assign(n, RowSense::Ge);
    for (std::size_t j = 0; j < blocks.size(); ++j)
        for (auto pt : blocks[j].points) p.rows[pt][j] = 1.0;
    LpResult lp = solve_lp(p);
    WeightedContentResult res;
    res.value = lp.value;
    res.weights = lp.x;
    res.duality_gap = lp.duality_gap;
    res.lp_iterations = lp.iterations;
    res.dual_measure = lp.dual;
    for (const auto& b : blocks) {
        res.blocks.push_back(b.points);
        res.block_diams.push_back(b.diam);
    }
    return res;
}

struct FrostmanCertificate {
    double s = 0.0, delta = 0.0, tau = 0.0;
    BlockFamily family = BlockFamily::AllSubsets;
    std::vector<double> measure;
    double total_mass = 0.0;
    double lp_value = 0.0;
    double duality_gap = 0.0;
    double worst_slack = 0.0;  // min over blocks of (tau+diam)^s - mu(E); >= -tol when valid
    bool valid = false;
};

struct ScalingLawReport {
    bool pass = false;
    double worst_margin = 0.0;  // min over blocks of (tau+diam)^s - mu(E)
    std::vector<std::size_t> worst_block;
    double worst_block_diam = 0.0;
    std::size_t blocks_checked = 0;
};

// Exhaustive check of mu(E) <= (tau + diam E)^s over the candidate family.
inline ScalingLawReport verify_scaling_law(const FiniteMetricSpace& sp,
                                           const std::vector<double>& measure, double s, double delta,
                                           double tau,
                                           BlockFamily family = BlockFamily::AllSubsets,
                                           std::size_t subset_budget = 15) {
    if (measure.size() != sp.size()) throw validation_error("verify_scaling_law: measure size mismatch");
    const auto blocks = detail::candidate_blocks(sp, delta, family, subset_budget);
    ScalingLawReport rep;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (const auto& b : blocks) {
        double mass = 0.0;
        for (auto p : b.points) mass += measure[p];
        const double margin = block_cost(tau, b.diam, s) - mass;
        if (margin < rep.worst_margin) {
            rep.worst_margin = margin;
            rep.worst_block = b.points;
            rep.worst_block_diam = b.diam;
        }
    }
    rep.blocks_checked = blocks.size();
    rep.pass = rep.worst_margin >= -kLpFeasTol;
    return rep;
}

// Dual-optimal measure: maximize total mass subject to mu(E) <= (tau+diam E)^s
// over the family. Extracted from the weighted-content LP dual; strong duality
// certifies total mass == lambda^s_delta.
inline FrostmanCertificate frostman_measure(const FiniteMetricSpace& sp, double s, double delta,
                                            double tau, BlockFamily family,
                                            std::size_t subset_budget = 15) {
    ContentQuery q;
    q.s = s;
    q.eps = delta;
    q.tau = tau;
    q.family = family;
    q.subset_budget = subset_budget;
    WeightedContentResult w = weighted_content(sp, q);
    FrostmanCertificate cert;
    cert.s = s;
    cert.delta = delta;
    cert.tau = tau;
    cert.family = family;
    cert.measure = w.dual_measure;
    for (double m : cert.measure) cert.total_mass += m;
    cert.lp_value = w.value;
    cert.duality_gap = std::abs(cert.total_mass - w.value);
    const auto rep = verify_scaling_law(sp, cert.measure, s, delta, tau, family, subset_budget);
    cert.worst_slack = rep.worst_margin;
    bool nonneg = true;
    for (double m : cert.measure)
        if (m < -kLpFeasTol) nonneg = false;
    cert.valid = nonneg && rep.pass && cert.duality_gap <= 1e-7 * std::max(1.0, std::abs(w.value));
    if (!cert.valid && cert.duality_gap > kLpFeasTol * std::max(1.0, std::abs(w.value)) * 100)
        throw numeric_error("frostman_measure: solver tolerance breached (gap " +
                            std::to_string(cert.duality_gap) + ")");
    return cert;
}

// sup { s : content(s) >= 1 } by bisection; requires tau + diam <= 1 so the
// content is nonincreasing in s.
inline double dim_profile(const FiniteMetricSpace& sp, double eps, double tau,
                          SolveMode mode = SolveMode::Exact,
                          BlockFamily family = BlockFamily::AllSubsets, double s_tol = 1e-6) {
    if (tau + sp.diameter() > 1.0 + kDiamTol)
        throw validation_error("dim_profile: need tau + diam <= 1 (rescale the space)");
    if (eps <= tau) throw validation_error("dim_profile: need eps > tau");
    ContentQuery q;
    q.eps = eps;
    q.tau = tau;
    q.family = family;
    q.mode = mode;
    auto content = [&](double s) {
        q.s = s;
        return hausdorff_content(sp, q).value;
    };
    if (content(0.0) < 1.0 - 1e-12) return 0.0;
    double lo = 0.0, hi = 1.0;
    const double s_max = 64.0;
    while (hi < s_max && content(hi) >= 1.0) {
        lo = hi;
        hi *= 2;
    }
    if (hi >= s_max) return s_max;
    while (hi - lo > s_tol) {
        const double mid = (lo + hi) / 2;
        if (content(mid) >= 1.0)
            lo = mid;
        else
            hi = mid;
    }
    return (lo + hi) / 2;
}

struct MeanHausdorffPoint {
    double eps = 0.0;
    int N = 1;
    double dim = 0.0;       // dim_profile(orbit metric)/N
};

struct MeanHausdorffEstimate {
    std::vector<MeanHausdorffPoint> points;
    std::map<double, double> plateau;  // eps -> min over N of dim/N
    double truncation_error = 0.0;
};

// dim_profile of the orbit metrics over an (eps, N) grid, divided by N.
inline MeanHausdorffEstimate mean_hausdorff_estimate(const SystemSpec& sys,
                                                     const std::vector<double>& eps_grid,
                                                     const std::vector<int>& n_list, double tau,
                                                     OrbitKind kind,
                                                     SolveMode mode = SolveMode::Exact,
                                                     BlockFamily family = BlockFamily::AllSubsets) {
    if (eps_grid.empty() || n_list.empty())
        throw validation_error("mean_hausdorff_estimate: empty grids");
    MeanHausdorffEstimate est;
    est.truncation_error = sys.truncation_error();
    for (int N : n_list) {
        FiniteMetricSpace m = orbit_metric(sys, N, kind);
        // rescale so that tau + diam <= 1, as the profile demands
        const double diam = m.diameter();
        double scale = 1.0;
        if (tau + diam > 1.0) scale = (1.0 - tau) / (diam * (1 + 1e-9));
        FiniteMetricSpace ms = m;
        for (auto& v : ms.dist) v *= scale;
        for (double eps : eps_grid) {
            MeanHausdorffPoint p;
            p.eps = eps;
            p.N = N;
            p.dim = dim_profile(ms, eps * scale, tau, mode, family) / N;
            est.points.push_back(p);
        }
    }
    for (const auto& p : est.points) {
        auto it = est.plateau.find(p.eps);
        if (it == est.plateau.end() || p.dim < it->second) est.plateau[p.eps] = p.dim;
    }
    return est;
}

}  // namespace meandim

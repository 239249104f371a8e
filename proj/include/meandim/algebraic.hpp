#pragma once

// Algebraic actions on quantized torus shifts: constraint stacks, projective
// dimension by exact rank, Haar measure on the quantized solution subgroup,
// and the separating-number bound check.

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "meandim/common.hpp"
#include "meandim/intmat.hpp"
#include "meandim/metric_space.hpp"
#include "meandim/ratedist.hpp"
#include "meandim/systems.hpp"

namespace meandim {

struct AlgebraicActionSpec {
    int r = 1;        // torus dimension per coordinate
    int a = 1;        // constraint window length
    IntMatrix M;      // m x (r*a); empty means no constraints
    long long q = 2;  // quantization levels per torus coordinate
    int window = 1;   // W

    int constraints() const { return static_cast<int>(M.size()); }

    void validate() const {
        if (r < 1 || a < 1 || q < 1 || window < 0)
            throw validation_error("algebraic spec: r, a, q must be >= 1 and W >= 0");
        for (const auto& row : M)
            if (row.size() != static_cast<std::size_t>(r) * a)
                throw validation_error("algebraic spec: constraint row length must be r*a");
    }
};

// (N-a+1)-fold shifted stack of M acting on r*N coordinates.
inline IntMatrix constraint_stack(const AlgebraicActionSpec& spec, int N) {
    spec.validate();
    if (N < spec.a) throw validation_error("constraint_stack: need N >= a");
    IntMatrix out;
    const int m = spec.constraints();
    for (int n = 0; n + spec.a <= N; ++n) {
        for (int i = 0; i < m; ++i) {
            std::vector<long long> row(static_cast<std::size_t>(spec.r) * N, 0);
            for (int j = 0; j < spec.r * spec.a; ++j) row[spec.r * n + j] = spec.M[i][j];
            out.push_back(std::move(row));
        }
    }
    return out;
}

struct ProdimResult {
    std::map<int, long long> dims;  // N -> dim pi_N(X) = r*N - rank
    double min_ratio = 0.0;         // inf over the supplied N of dim/N
    long long increment = 0;        // dim(N_max) - dim(N_max - 1); exact limit once stable
    bool increment_stable = false;  // last two increments agree
};

inline long long projection_dim(const AlgebraicActionSpec& spec, int N) {
    if (spec.constraints() == 0) return static_cast<long long>(spec.r) * N;
    return static_cast<long long>(spec.r) * N -
           static_cast<long long>(rank_exact(constraint_stack(spec, N)));
}

// dim pi_N(X)/N is subadditive, so the supplied minimum is an upper bound for
// the limit; the tail increment equals the limit once the dimension growth is
// affine, which the stability flag certifies.
inline ProdimResult prodim(const AlgebraicActionSpec& spec, std::vector<int> n_list) {
    if (n_list.empty()) throw validation_error("prodim: empty N list");
    std::sort(n_list.begin(), n_list.end());
    ProdimResult res;
    res.min_ratio = std::numeric_limits<double>::infinity();
    for (int N : n_list) {
        const long long d = projection_dim(spec, N);
        res.dims[N] = d;
        res.min_ratio = std::min(res.min_ratio, static_cast<double>(d) / N);
    }
    const int nmax = n_list.back();
    if (nmax - 1 >= spec.a || spec.constraints() == 0) {
        const long long dm1 = projection_dim(spec, std::max(nmax - 1, 1));
        res.increment = res.dims[nmax] - dm1;
        if (nmax - 2 >= spec.a || spec.constraints() == 0) {
            const long long dm2 = projection_dim(spec, std::max(nmax - 2, 1));
            res.increment_stable = (dm1 - dm2) == res.increment;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------

struct HaarResult {
    SystemSpec system;   // torus alphabet with the subgroup enumeration
    DiscreteDistribution measure;  // uniform on the solution words at ext = 0
    double solution_count = 0.0;
};

namespace detail {

inline std::vector<Word> subgroup_words(const AlgebraicActionSpec& spec, int W, int ext,
                                        std::size_t budget) {
    const int P = 2 * W + 1 + ext;
    const std::size_t cols = static_cast<std::size_t>(spec.r) * P;
    IntMatrix stack = (spec.constraints() && P >= spec.a)
                          ? constraint_stack(AlgebraicActionSpec{spec.r, spec.a, spec.M, spec.q, W}, P)
                          : IntMatrix{};
    std::vector<std::vector<long long>> sols;
    if (stack.empty()) {
        // free: enumerate (Z_q)^{cols} directly
        double total = std::pow(static_cast<double>(spec.q), static_cast<double>(cols));
        if (total > static_cast<double>(budget))
            throw capacity_error("subgroup enumeration: " + std::to_string(total) +
                                 " words exceed budget");
        std::vector<long long> cur(cols, 0);
        bool done = false;
        while (!done) {
            sols.push_back(cur);
            done = true;
            for (std::size_t p = cols; p-- > 0;) {
                if (++cur[p] < spec.q) {
                    done = false;
                    break;
                }
                cur[p] = 0;
            }
        }
    } else {
        const SmithNormalForm snf = smith_normal_form(stack);
        sols = solve_mod(snf, spec.q, cols, budget);
        std::sort(sols.begin(), sols.end());
        sols.erase(std::unique(sols.begin(), sols.end()), sols.end());
    }
    std::vector<Word> words;
    words.reserve(sols.size());
    for (const auto& z : sols) {
        Word w(cols);
        for (std::size_t i = 0; i < cols; ++i) w[i] = static_cast<std::int16_t>(z[i]);
        words.push_back(std::move(w));
    }
    std::sort(words.begin(), words.end());
    return words;
}

}  // namespace detail

inline SystemSpec build_algebraic_system(const AlgebraicActionSpec& spec,
                                         std::size_t budget = 8192) {
    spec.validate();
    SystemSpec sys;
    sys.alphabet = AlphabetSpec::torus(spec.r, static_cast<int>(spec.q));
    sys.window = spec.window;
    sys.label = spec.constraints() ? "algebraic_action" : "torus_full_shift";
    sys.exhaustive_budget = budget;
    AlgebraicActionSpec copy = spec;
    sys.custom_points = [copy, budget](int ext) {
        return detail::subgroup_words(copy, copy.window, ext, budget);
    };
    return sys;
}

// Uniform (Haar) measure on the quantized solution subgroup within the window.
// The quantization is compatible iff every elementary divisor of the stack
// divides q; otherwise the error names a valid choice.
inline HaarResult haar_measure(const AlgebraicActionSpec& spec, std::size_t budget = 8192) {
    spec.validate();
    const int P = 2 * spec.window + 1;
    const std::size_t cols = static_cast<std::size_t>(spec.r) * P;
    if (spec.constraints() && P >= spec.a) {
        const SmithNormalForm snf = smith_normal_form(constraint_stack(spec, P));
        long long lcm = 1;
        bool ok = true;
        for (auto d : snf.divisors) {
            if (d != 0 && spec.q % d != 0) ok = false;
            if (d != 0) lcm = std::lcm(lcm, d);
        }
        if (!ok)
            throw validation_error("haar_measure: q=" + std::to_string(spec.q) +
                                   " incompatible with the constraint divisors; any multiple of " +
                                   std::to_string(lcm) + " works");
        // expected count q^dim * torsion
        const double expected = solution_count_mod(snf, spec.q, cols);
        HaarResult h;
        h.system = build_algebraic_system(spec, budget);
        const auto pts = h.system.points(0);
        if (std::abs(static_cast<double>(pts.size()) - expected) > 0.5)
            throw numeric_error("haar_measure: enumeration count " + std::to_string(pts.size()) +
                                " disagrees with the Smith-form count " + std::to_string(expected));
        h.measure = DiscreteDistribution::uniform(pts.size());
        h.solution_count = expected;
        return h;
    }
    HaarResult h;
    h.system = build_algebraic_system(spec, budget);
    const auto pts = h.system.points(0);
    h.measure = DiscreteDistribution::uniform(pts.size());
    h.solution_count = static_cast<double>(pts.size());
    return h;
}

// ---------------------------------------------------------------------------

struct SeparatingBoundReport {
    double lhs_log2 = 0.0;  // certified lower bound (or exact value) of log2 #sep
    double rhs_log2 = 0.0;  // log2 [ 4^{-N} (1/eps)^{(1-delta) dim pi_N} ]
    bool exact = false;
    bool pass = false;
    double margin_log2 = 0.0;
};

// #sep(X, dbar_N, eps) >= 4^{-N} (1/eps)^{(1-delta) dim pi_N(X)}.
// Exact max-separated set within the budget, otherwise the constructive
// product packing (still a certified lower bound on the left side).
inline SeparatingBoundReport separating_bound_check(const AlgebraicActionSpec& spec, int N,
                                                    double eps, double delta,
                                                    std::size_t exact_budget = 4096) {
    if (delta <= 0 || delta >= 1) throw validation_error("separating_bound_check: delta in (0,1)");
    const long long dim = projection_dim(spec, std::max(N, spec.a));
    SeparatingBoundReport rep;
    rep.rhs_log2 = -2.0 * N + (1.0 - delta) * static_cast<double>(dim) * std::log2(1.0 / eps);
    SystemSpec sys = build_algebraic_system(spec, exact_budget);
    const auto pts = sys.points(N - 1);
    if (pts.size() <= 40) {
        FiniteMetricSpace m = orbit_metric(sys, N, OrbitKind::Avg);
        const auto sep = separating_number(m, eps, SolveMode::Exact, 40);
        rep.lhs_log2 = std::log2(static_cast<double>(sep.count));
        rep.exact = true;
    } else {
        FiniteMetricSpace m = orbit_metric(sys, N, OrbitKind::Avg);
        const auto sep = separating_number(m, eps, SolveMode::Greedy);
        rep.lhs_log2 = std::log2(static_cast<double>(sep.count));
        rep.exact = false;
    }
    rep.margin_log2 = rep.lhs_log2 - rep.rhs_log2;
    rep.pass = rep.margin_log2 >= -1e-9;
    return rep;
}

// ---------------------------------------------------------------------------
// Product parameterizations for the two example families: the unconstrained
// torus shift, and the linked action x_n^{(2)} = x_{n+1}^{(1)} whose points
// are the sliding pairs (z_n, z_{n+1}) of a free scalar sequence.

inline bool is_linked_pair_action(const AlgebraicActionSpec& spec) {
    if (spec.r != 2 || spec.a != 2 || spec.constraints() != 1) return false;
    const auto& row = spec.M[0];
    return (row[0] == 0 && row[3] == 0 && row[1] != 0 && row[1] == -row[2]);
}

// Orbit-metric product structure in the z parameterization of the linked
// action (position n carries (z_n, z_{n+1}), so each weighted term spans two
// neighboring z slots).
inline ProductStructure linked_product_structure(const AlgebraicActionSpec& spec, int N,
                                                 OrbitKind kind) {
    if (!is_linked_pair_action(spec))
        throw validation_error("linked_product_structure: spec is not the linked pair action");
    const int W = spec.window;
    const int P = 2 * W + 1 + (N - 1) + 1;  // z slots: one more than positions
    ProductStructure ps;
    for (int i = 0; i < P; ++i) {
        ProductSlot s;
        s.circle = true;
        s.q = static_cast<int>(spec.q);
        ps.slots.push_back(s);
    }
    auto make_window = [&](int j) {
        std::vector<WeightedTerm> win;
        for (int n = -W; n <= W; ++n) {
            WeightedTerm t;
            t.weight = std::pow(2.0, -std::abs(n));
            t.slots = {n + j + W, n + j + W + 1};
            win.push_back(std::move(t));
        }
        return win;
    };
    if (kind == OrbitKind::Max) {
        for (int j = 0; j < N; ++j) ps.windows.push_back(make_window(j));
    } else {
        std::map<std::pair<int, int>, double> acc;
        for (int j = 0; j < N; ++j)
            for (int n = -W; n <= W; ++n)
                acc[{n + j + W, n + j + W + 1}] += std::pow(2.0, -std::abs(n)) / N;
        std::vector<WeightedTerm> win;
        for (const auto& [k, w] : acc) {
            WeightedTerm t;
            t.weight = w;
            t.slots = {k.first, k.second};
            win.push_back(std::move(t));
        }
        ps.windows.push_back(std::move(win));
    }
    return ps;
}

// Scalar slots for the factorized rate-distortion of the linked action under
// the separable surrogate distortion (per-position max replaced by the sum,
// which brackets the metric within a factor of two).
inline std::vector<ScalarSlot> linked_rd_slots(const AlgebraicActionSpec& spec, int N) {
    if (!is_linked_pair_action(spec))
        throw validation_error("linked_rd_slots: spec is not the linked pair action");
    SystemSpec base;
    base.alphabet = AlphabetSpec::torus(1, static_cast<int>(spec.q));
    base.window = spec.window;
    return shift_rd_slots(base, N, /*taps_back=*/1);
}

struct RdimProdimReport {
    ProdimResult prodim;
    RDCurve rd_curve;              // per-step rates at the two block depths
    DimensionEstimate rdim;        // increment-slope estimate
    double cover_slope = 0.0;      // packing-increment proxy for the metric side
    double cover_slope_upper = 0.0;
    bool chain_ok = false;         // prodim <= rdim slope <= cover proxy, within tol
    double tolerance = 0.0;
};

// End-to-end comparison for the free torus shift and the linked pair action:
// exact projective dimension by rank, the Haar-measure rate slope via the
// factorized solver, and the covering-slope proxy from certified packings.
inline RdimProdimReport rdim_prodim_experiment(const AlgebraicActionSpec& spec,
                                               const std::vector<double>& rd_eps,
                                               const std::vector<double>& cover_eps,
                                               std::vector<int> n_list, double tolerance = 0.35) {
    spec.validate();
    const bool linked = is_linked_pair_action(spec);
    if (!linked && spec.constraints() != 0)
        throw validation_error(
            "rdim_prodim_experiment: supports the free torus shift and the linked pair action");
    RdimProdimReport rep;
    rep.tolerance = tolerance;
    rep.prodim = prodim(spec, std::move(n_list));

    const int n1 = 12, n2 = 24;
    std::function<std::vector<ScalarSlot>(int)> slots;
    std::function<ProductStructure(int)> structure;
    if (linked) {
        slots = [spec](int N) { return linked_rd_slots(spec, N); };
        structure = [spec](int N) { return linked_product_structure(spec, N, OrbitKind::Max); };
    } else {
        SystemSpec base;
        base.alphabet = AlphabetSpec::torus(spec.r, static_cast<int>(spec.q));
        base.window = spec.window;
        slots = [base](int N) { return shift_rd_slots(base, N); };
        structure = [base](int N) { return product_structure(base, N, OrbitKind::Max); };
    }
    // rate side
    {
        std::vector<double> grid = rd_eps;
        std::sort(grid.begin(), grid.end(), std::greater<>());
        for (const int N : {n1, n2}) {
            ProductRdSolver solver(slots(N));
            for (double eps : grid) {
                const ProductRdPoint p = solver.at_eps(eps);
                RDPoint pt;
                pt.eps = eps;
                pt.N = N;
                pt.rate_bits = p.total_rate_bits / N;
                pt.converged = p.converged;
                pt.iterations = p.iterations;
                rep.rd_curve.points.push_back(pt);
            }
        }
        rep.rdim = rdim_estimate(rep.rd_curve);
    }
    // covering side: packing and cover increments between depths 1 and 5
    {
        const ProductStructure p1 = structure(1);
        const ProductStructure p5 = structure(5);
        std::vector<double> xs, pack, cover;
        for (double eps : cover_eps) {
            xs.push_back(std::log2(1.0 / eps));
            pack.push_back((product_packing_bits(p5, eps) - product_packing_bits(p1, eps)) / 4.0);
            double partner = 0.0;
            const double c5 = product_cover_bits(p5, eps, &p1, &partner);
            cover.push_back((c5 - partner) / 4.0);
        }
        rep.cover_slope = fit_line(xs, pack).slope;
        rep.cover_slope_upper = fit_line(xs, cover).slope;
    }
    const double pd = static_cast<double>(rep.prodim.increment);
    rep.chain_ok = (pd <= rep.rdim.slope + tolerance) &&
                   (rep.rdim.slope <= rep.cover_slope + tolerance);
    return rep;
}

}  // namespace meandim

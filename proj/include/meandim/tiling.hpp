#pragma once

// Dynamical Voronoi tiling of the line: sites (a, 1/phi(T^a x)) for marker
// values phi > 0 generate closed-interval cells on R x {0}; equivariance and
// boundary-density diagnostics.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "meandim/common.hpp"

namespace meandim {

struct MarkerTrace {
    int begin = 0;                // inclusive
    std::vector<double> values;   // phi(T^a x) for a = begin .. begin+size-1

    int end() const { return begin + static_cast<int>(values.size()); }  // exclusive
    double value_at(int a) const { return values[static_cast<std::size_t>(a - begin)]; }

    void validate() const {
        bool positive = false;
        for (double v : values) {
            if (v < 0.0 || v > 1.0) throw validation_error("marker trace: values must lie in [0,1]");
            if (v > 0.0) positive = true;
        }
        if (!positive) throw validation_error("marker trace: needs at least one positive value");
    }
};

struct Interval {
    double lo = 0.0, hi = 0.0;
    bool empty() const { return lo > hi + kDiamTol; }
    double length() const { return std::max(0.0, hi - lo); }
};

struct Tiling {
    std::map<int, Interval> cells;     // only nonempty cells
    std::map<int, bool> trusted;       // per nonempty cell
    std::vector<double> boundary;      // endpoints of trusted cells, sorted
    double trusted_lo = 0.0, trusted_hi = 0.0;
};

// Closed-form cells from pairwise bisectors: site (a, h_a) beats (b, h_b) at u iff
//   (u-a)^2 + h_a^2 <= (u-b)^2 + h_b^2.
// Cells near the trace boundary that a hypothetical outside site (height >= 1)
// could still influence are marked untrusted.
inline Tiling tile(const MarkerTrace& trace) {
    trace.validate();
    struct Site {
        int a;
        double h;
    };
    std::vector<Site> sites;
    for (int a = trace.begin; a < trace.end(); ++a) {
        const double v = trace.value_at(a);
        if (v > 0.0) sites.push_back({a, 1.0 / v});
    }
    Tiling t;
    double hmax = 0.0;
    for (const auto& s : sites) hmax = std::max(hmax, s.h);
    t.trusted_lo = trace.begin + hmax;
    t.trusted_hi = (trace.end() - 1) - hmax;
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const double a = sites[i].a, ha = sites[i].h;
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < sites.size(); ++j) {
            if (i == j) continue;
            const double b = sites[j].a, hb = sites[j].h;
            const double bound = (b * b - a * a + hb * hb - ha * ha) / (2.0 * (b - a));
            if (b > a)
                hi = std::min(hi, bound);
            else
                lo = std::max(lo, bound);
        }
        if (lo > hi + kDiamTol) continue;
        Interval cell{lo, hi};
        // trust: no site outside [begin, end) could reach into this cell.
        // d(u, outside site)^2 >= (u - boundary)^2 + 1, so compare against the
        // realized distance to the owning site.
        bool ok = std::isfinite(lo) && std::isfinite(hi);
        if (ok) {
            for (double u : {cell.lo, cell.hi}) {
                const double own = std::sqrt((u - a) * (u - a) + ha * ha);
                const double dl = u - (trace.begin - 1);
                const double dr = trace.end() - u;
                if (own * own >= dl * dl + 1.0 - kDiamTol || own * own >= dr * dr + 1.0 - kDiamTol)
                    ok = false;
            }
        }
        t.cells[sites[i].a] = cell;
        t.trusted[sites[i].a] = ok;
    }
    for (const auto& [a, cell] : t.cells) {
        if (!t.trusted[a]) continue;
        t.boundary.push_back(cell.lo);
        t.boundary.push_back(cell.hi);
    }
    std::sort(t.boundary.begin(), t.boundary.end());
    t.boundary.erase(std::unique(t.boundary.begin(), t.boundary.end(),
                                 [](double x, double y) { return std::abs(x - y) < 1e-9; }),
                     t.boundary.end());
    return t;
}

struct EquivarianceReport {
    double max_discrepancy = 0.0;
    std::size_t cells_compared = 0;
    bool pass = false;
};

// I(T^n x, a) == -n + I(x, a+n) on cells trusted in both tilings.
inline EquivarianceReport check_equivariance(const Tiling& t_x, const Tiling& t_shifted, int n,
                                             double tol = 1e-9) {
    EquivarianceReport rep;
    for (const auto& [a, cell] : t_shifted.cells) {
        if (!t_shifted.trusted.at(a)) continue;
        auto it = t_x.cells.find(a + n);
        if (it == t_x.cells.end() || !t_x.trusted.at(a + n)) continue;
        const double dlo = std::abs(cell.lo - (it->second.lo - n));
        const double dhi = std::abs(cell.hi - (it->second.hi - n));
        rep.max_discrepancy = std::max({rep.max_discrepancy, dlo, dhi});
        ++rep.cells_compared;
    }
    if (rep.cells_compared == 0)
        throw validation_error("check_equivariance: no overlapping trusted cells");
    rep.pass = rep.max_discrepancy <= tol;
    return rep;
}

struct BoundaryDensityReport {
    double density = 0.0;       // max over traces of |boundary ∩ [0,R]| / R
    double empirical_m = 0.0;   // max over cells of max(a - lo, hi - a)
};

inline BoundaryDensityReport boundary_density(const std::vector<Tiling>& tilings, double R) {
    if (R <= 0) throw validation_error("boundary_density: R must be positive");
    BoundaryDensityReport rep;
    for (const auto& t : tilings) {
        std::size_t count = 0;
        for (double b : t.boundary)
            if (b >= 0.0 && b <= R) ++count;
        rep.density = std::max(rep.density, static_cast<double>(count) / R);
        for (const auto& [a, cell] : t.cells) {
            if (!t.trusted.at(a)) continue;
            rep.empirical_m = std::max({rep.empirical_m, a - cell.lo, cell.hi - a});
        }
    }
    return rep;
}

// Marker trace with full-height sites and gaps drawn from (N, M]; keeps the
// boundary density below 1/N.
inline MarkerTrace spaced_marker_trace(int begin, int end, int N, int M, Rng& rng) {
    if (M <= N) throw validation_error("spaced_marker_trace: need M > N");
    MarkerTrace t;
    t.begin = begin;
    t.values.assign(static_cast<std::size_t>(end - begin), 0.0);
    int pos = begin + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(N)));
    while (pos < end) {
        t.values[static_cast<std::size_t>(pos - begin)] = 1.0;
        pos += N + 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(M - N)));
    }
    if (t.values.empty() || *std::max_element(t.values.begin(), t.values.end()) == 0.0)
        t.values[t.values.size() / 2] = 1.0;
    return t;
}

}  // namespace meandim

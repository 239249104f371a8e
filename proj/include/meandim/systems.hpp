#pragma once

// Finitely quantized, window-truncated shift systems: full shifts over
// quantized / explicit / torus alphabets, orbit metrics d_N and dbar_N,
// and per-coordinate product bounds for unconstrained shifts.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "meandim/common.hpp"
#include "meandim/metric_space.hpp"

namespace meandim {

enum class AlphabetKind { QuantizedInterval, ExplicitSet, TorusQuantized };

struct AlphabetSpec {
    AlphabetKind kind = AlphabetKind::QuantizedInterval;
    int levels = 2;                 // QuantizedInterval
    std::vector<double> values;     // ExplicitSet (values in [0,1])
    int torus_dim = 1;              // TorusQuantized: r
    int torus_levels = 2;           // TorusQuantized: q

    static AlphabetSpec quantized_interval(int k) {
        if (k < 1) throw validation_error("alphabet: levels must be >= 1");
        AlphabetSpec a;
        a.kind = AlphabetKind::QuantizedInterval;
        a.levels = k;
        return a;
    }
    static AlphabetSpec explicit_set(std::vector<double> vals) {
        if (vals.empty()) throw validation_error("alphabet: empty value set");
        for (double v : vals)
            if (v < 0.0 || v > 1.0) throw validation_error("alphabet: values must lie in [0,1]");
        std::sort(vals.begin(), vals.end());
        for (std::size_t i = 0; i + 1 < vals.size(); ++i)
            if (vals[i + 1] - vals[i] <= 0) throw validation_error("alphabet: values must be distinct");
        AlphabetSpec a;
        a.kind = AlphabetKind::ExplicitSet;
        a.values = std::move(vals);
        return a;
    }
    static AlphabetSpec torus(int r, int q) {
        if (r < 1 || q < 1) throw validation_error("alphabet: torus r, q must be >= 1");
        AlphabetSpec a;
        a.kind = AlphabetKind::TorusQuantized;
        a.torus_dim = r;
        a.torus_levels = q;
        return a;
    }

    int slots_per_position() const { return kind == AlphabetKind::TorusQuantized ? torus_dim : 1; }

    int levels_per_slot() const {
        switch (kind) {
            case AlphabetKind::QuantizedInterval: return levels;
            case AlphabetKind::ExplicitSet: return static_cast<int>(values.size());
            case AlphabetKind::TorusQuantized: return torus_levels;
        }
        return 0;
    }

    double slot_value(int level) const {
        switch (kind) {
            case AlphabetKind::QuantizedInterval:
                return levels == 1 ? 0.0 : static_cast<double>(level) / (levels - 1);
            case AlphabetKind::ExplicitSet: return values[level];
            case AlphabetKind::TorusQuantized:
                return static_cast<double>(level) / torus_levels;
        }
        return 0.0;
    }

    bool circular() const { return kind == AlphabetKind::TorusQuantized; }

    // distance between two per-slot levels
    double slot_distance(int a, int b) const {
        const double x = slot_value(a), y = slot_value(b);
        if (!circular()) return std::abs(x - y);
        const double d0 = std::abs(x - y);
        return std::min(d0, 1.0 - d0);
    }

    // point metric rho on one position (sup over torus components, plain |.| otherwise)
    double position_distance(const std::int16_t* a, const std::int16_t* b) const {
        const int r = slots_per_position();
        double m = 0.0;
        for (int i = 0; i < r; ++i) m = std::max(m, slot_distance(a[i], b[i]));
        return m;
    }

    double position_diameter() const {
        const int L = levels_per_slot();
        if (L <= 1) return 0.0;
        if (!circular()) return slot_value(L - 1) - slot_value(0);
        return static_cast<double>(L / 2) / torus_levels;
    }

    double position_count() const {
        return std::pow(static_cast<double>(levels_per_slot()), slots_per_position());
    }
};

struct EnumerationPolicy {
    bool exhaustive = true;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;

    static EnumerationPolicy all() { return {}; }
    static EnumerationPolicy sample(std::size_t count, std::uint64_t seed) {
        EnumerationPolicy p;
        p.exhaustive = false;
        p.sample_count = count;
        p.seed = seed;
        return p;
    }
};

using Word = std::vector<std::int16_t>;  // levels per (position, slot), row-major in position

struct SystemSpec {
    AlphabetSpec alphabet;
    int window = 1;  // W: coordinates -W..W retained
    EnumerationPolicy policy;
    std::string label = "system";
    std::string transform;  // informational tag for derived alphabets
    std::size_t exhaustive_budget = 8192;
    // optional custom point generator (e.g. algebraic subgroup enumeration);
    // receives ext and must return words of length (2W+1+ext) positions
    std::function<std::vector<Word>(int ext)> custom_points;

    int positions(int ext) const { return 2 * window + 1 + ext; }

    double truncation_error() const {
        return std::pow(2.0, 1 - window) * alphabet.position_diameter();
    }

    // windowed base metric between sigma^j-shifts of two words
    double shifted_distance(const Word& x, const Word& y, int j) const {
        const int r = alphabet.slots_per_position();
        double v = 0.0;
        for (int n = -window; n <= window; ++n) {
            const int pos = n + j + window;  // index into the word
            const double w = std::pow(2.0, -std::abs(n));
            v += w * alphabet.position_distance(&x[pos * r], &y[pos * r]);
        }
        return v;
    }

    std::vector<Word> points(int ext) const {
        if (custom_points) return custom_points(ext);
        const int P = positions(ext);
        const int r = alphabet.slots_per_position();
        const int L = alphabet.levels_per_slot();
        if (policy.exhaustive) {
            double total = std::pow(static_cast<double>(L), static_cast<double>(P) * r);
            if (total > static_cast<double>(exhaustive_budget))
                throw capacity_error("system enumeration: " + std::to_string(total) +
                                     " words exceed the exhaustive budget " +
                                     std::to_string(exhaustive_budget) +
                                     " (MEANDIM_BUDGET_POINTS); use a sampling policy");
            std::vector<Word> out;
            out.reserve(static_cast<std::size_t>(total));
            Word w(static_cast<std::size_t>(P) * r, 0);
            while (true) {
                out.push_back(w);
                int i = static_cast<int>(w.size()) - 1;
                while (i >= 0 && w[i] == L - 1) {
                    w[i] = 0;
                    --i;
                }
                if (i < 0) break;
                ++w[i];
            }
            return out;
        }
        // sampled, per-word streams so that right-extension is prefix-consistent
        std::vector<Word> out;
        out.reserve(policy.sample_count);
        for (std::size_t i = 0; i < policy.sample_count; ++i) {
            Rng rng(policy.seed * 0x9e3779b97f4a7c15ULL + i + 1);
            Word w(static_cast<std::size_t>(P) * r);
            for (auto& lvl : w) lvl = static_cast<std::int16_t>(rng.next_below(L));
            out.push_back(std::move(w));
        }
        // distinct points only: duplicates would violate the metric axioms
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    std::string word_id(const Word& w) const {
        static const char* digits = "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
        const int r = alphabet.slots_per_position();
        std::string s;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (i > 0 && i % r == 0) s += '.';
            if (w[i] < 62)
                s += digits[w[i]];
            else
                s += "(" + std::to_string(w[i]) + ")";
        }
        return s;
    }
};

inline SystemSpec build_full_shift(AlphabetSpec alphabet, int W, EnumerationPolicy policy,
                                   std::size_t budget = 8192) {
    if (W < 0) throw validation_error("build_full_shift: window must be >= 0");
    SystemSpec s;
    s.alphabet = std::move(alphabet);
    s.window = W;
    s.policy = policy;
    s.exhaustive_budget = budget;
    s.label = "full_shift";
    if (policy.exhaustive) {
        const double total =
            std::pow(s.alphabet.position_count(), static_cast<double>(s.positions(0)));
        if (total > static_cast<double>(budget))
            throw capacity_error("build_full_shift: exhaustive enumeration needs " +
                                 std::to_string(total) + " > budget " + std::to_string(budget) +
                                 " (MEANDIM_BUDGET_POINTS)");
    }
    return s;
}

enum class SequenceVariant { Harmonic, Geometric };

// Alphabets {1, 1/2, ..., 1/k, 0} and {1, 2^-1, ..., 2^-k, 0}.
inline SystemSpec build_sequence_example(int k, SequenceVariant variant, int W = 3,
                                         EnumerationPolicy policy = EnumerationPolicy::sample(256, 1)) {
    if (k < 2) throw validation_error("build_sequence_example: k must be >= 2");
    std::vector<double> vals{0.0};
    for (int i = 1; i <= k; ++i)
        vals.push_back(variant == SequenceVariant::Harmonic ? 1.0 / i : std::pow(2.0, -i));
    if (variant == SequenceVariant::Geometric) vals.push_back(1.0);  // 2^0; harmonic has 1/1 already
    SystemSpec s = build_full_shift(AlphabetSpec::explicit_set(vals), W, policy);
    s.label = variant == SequenceVariant::Harmonic ? "harmonic_shift" : "geometric_shift";
    if (variant == SequenceVariant::Geometric) s.transform = "n -> 2^-n";
    return s;
}

inline double truncation_error(const SystemSpec& s) { return s.truncation_error(); }

enum class OrbitKind { Max, Avg };

// d_N (max over the first N shifts) or dbar_N (average) on the system's point set.
inline FiniteMetricSpace orbit_metric(const SystemSpec& sys, int N, OrbitKind kind) {
    if (N < 1) throw validation_error("orbit_metric: N must be >= 1");
    const auto pts = sys.points(N - 1);
    FiniteMetricSpace out;
    out.label = sys.label + (kind == OrbitKind::Max ? "/d_" : "/dbar_") + std::to_string(N);
    out.points.reserve(pts.size());
    for (const auto& w : pts) out.points.push_back(sys.word_id(w));
    const std::size_t n = pts.size();
    out.dist.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = 0.0;
            if (kind == OrbitKind::Max) {
                for (int t = 0; t < N; ++t)
                    v = std::max(v, sys.shifted_distance(pts[i], pts[j], t));
            } else {
                for (int t = 0; t < N; ++t) v += sys.shifted_distance(pts[i], pts[j], t);
                v /= N;
            }
            out.d(i, j) = v;
            out.d(j, i) = v;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Structural product bounds.
//
// For unconstrained shifts the orbit metric is a max over window functionals
//   d_N(x,y) = max_j sum_n 2^-|n| rho(x_{n+j}, y_{n+j}),
// each functional a sum of weighted per-position terms (a term takes the max
// over the torus components of one position). Per-coordinate packings give a
// certified lower bound on the separating number and product covers give a
// certified upper bound on the covering number.

struct ProductSlot {
    bool circle = false;
    int q = 0;                   // circle levels
    std::vector<double> values;  // line values, sorted
};

struct WeightedTerm {
    double weight = 0.0;
    std::vector<int> slots;
};

struct ProductStructure {
    std::vector<ProductSlot> slots;
    std::vector<std::vector<WeightedTerm>> windows;
};

namespace detail {

inline std::size_t separated_count_line(const std::vector<double>& vs, double delta) {
    std::size_t cnt = 0;
    double last = 0.0;
    bool first = true;
    for (double v : vs) {
        if (first || v - last >= delta - kDiamTol) {
            ++cnt;
            last = v;
            first = false;
        }
    }
    return cnt;
}

inline std::size_t separated_count_circle(int q, double delta) {
    if (delta <= 1.0 / q + kDiamTol) return static_cast<std::size_t>(q);
    if (delta > 0.5 + kDiamTol) return 1;
    const int step = static_cast<int>(std::ceil(q * delta - 1e-12));
    return static_cast<std::size_t>(std::max(1, q / step));
}

inline std::size_t cover_groups_line(const std::vector<double>& vs, double span) {
    std::size_t i = 0, g = 0;
    while (i < vs.size()) {
        std::size_t j = i;
        while (j + 1 < vs.size() && vs[j + 1] - vs[i] <= span + kDiamTol) ++j;
        ++g;
        i = j + 1;
    }
    return g;
}

// smallest achievable max-span when splitting into exactly the group count
// produced by cover_groups_line at the target
inline double realized_span_line(const std::vector<double>& vs, std::size_t groups) {
    std::vector<double> cand;
    for (std::size_t i = 0; i < vs.size(); ++i)
        for (std::size_t j = i; j < vs.size(); ++j) cand.push_back(vs[j] - vs[i]);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    double best = cand.back();
    std::size_t lo = 0, hi = cand.size() - 1;
    while (lo <= hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (cover_groups_line(vs, cand[mid]) <= groups) {
            best = cand[mid];
            if (mid == 0) break;
            hi = mid - 1;
        } else {
            lo = mid + 1;
        }
    }
    return best;
}

struct SlotAlloc {
    std::size_t groups = 1;
    double span = 0.0;
};

inline SlotAlloc allocate_slot(const ProductSlot& s, double target) {
    SlotAlloc a;
    if (s.circle) {
        int m = static_cast<int>(std::floor(target * s.q + 1e-12)) + 1;  // levels per arc
        m = std::min(m, s.q);
        a.groups = static_cast<std::size_t>((s.q + m - 1) / m);
        const int worst = static_cast<int>((s.q + a.groups - 1) / a.groups);
        a.span = std::min(static_cast<double>(worst - 1) / s.q, 0.5);
    } else {
        a.groups = cover_groups_line(s.values, target);
        a.span = realized_span_line(s.values, a.groups);
    }
    return a;
}

}  // namespace detail

// log2 of a certified packing: product of per-slot separated sets is
// eps-separated under every window functional.
inline double product_packing_bits(const ProductStructure& ps, double eps) {
    std::vector<double> taut(ps.slots.size(), 0.0);
    for (const auto& w : ps.windows)
        for (const auto& t : w)
            for (int s : t.slots) taut[s] = std::max(taut[s], t.weight);
    double bits = 0.0;
    for (std::size_t c = 0; c < ps.slots.size(); ++c) {
        if (taut[c] <= 0) continue;
        const double delta = eps / taut[c];
        const auto& slot = ps.slots[c];
        const std::size_t n = slot.circle ? detail::separated_count_circle(slot.q, delta)
                                          : detail::separated_count_line(slot.values, delta);
        bits += std::log2(static_cast<double>(n));
    }
    return bits;
}

namespace detail {

inline double window_cost(const ProductStructure& ps, const std::vector<double>& spans) {
    double worst = 0.0;
    for (const auto& w : ps.windows) {
        double c = 0.0;
        for (const auto& t : w) {
            double m = 0.0;
            for (int s : t.slots) m = std::max(m, spans[s]);
            c += t.weight * m;
        }
        worst = std::max(worst, c);
    }
    return worst;
}

inline std::vector<double> slot_budget_weights(const ProductStructure& ps) {
    std::vector<double> taub(ps.slots.size(), 0.0);
    for (const auto& w : ps.windows) {
        std::vector<double> acc(ps.slots.size(), 0.0);
        for (const auto& t : w)
            for (int s : t.slots) acc[s] += t.weight;
        for (std::size_t c = 0; c < ps.slots.size(); ++c) taub[c] = std::max(taub[c], acc[c]);
    }
    return taub;
}

inline double alloc_bits(const ProductStructure& ps, const std::vector<double>& taub, double theta,
                         double eps, std::vector<double>* spans_out) {
    double bits = 0.0;
    std::vector<double> spans(ps.slots.size(), 0.0);
    for (std::size_t c = 0; c < ps.slots.size(); ++c) {
        if (taub[c] <= 0) continue;
        const SlotAlloc a = allocate_slot(ps.slots[c], theta * eps / taub[c]);
        bits += std::log2(static_cast<double>(a.groups));
        spans[c] = a.span;
    }
    if (spans_out) *spans_out = spans;
    return bits;
}

}  // namespace detail

// log2 of a certified product cover: proportional per-slot allocation with the
// global scale theta pushed up by bisection while every window stays < eps.
// When `partner` is given, the same theta must stay feasible for it too, so the
// two bounds share the allocation structure (used by increment estimators).
inline double product_cover_bits(const ProductStructure& ps, double eps,
                                 const ProductStructure* partner = nullptr,
                                 double* partner_bits = nullptr) {
    const auto taub = detail::slot_budget_weights(ps);
    const auto taub2 = partner ? detail::slot_budget_weights(*partner) : std::vector<double>{};
    double lo = 0.0, hi = 4.0;
    // theta = 0 gives singleton covers (span 0), always feasible for eps > 0
    double best = 0.0, best2 = 0.0;
    {
        std::vector<double> sp;
        best = detail::alloc_bits(ps, taub, 0.0, eps, &sp);
        if (partner) best2 = detail::alloc_bits(*partner, taub2, 0.0, eps, &sp);
    }
    for (int it = 0; it < 60; ++it) {
        const double mid = (lo + hi) / 2;
        std::vector<double> sp1, sp2;
        const double b1 = detail::alloc_bits(ps, taub, mid, eps, &sp1);
        bool ok = detail::window_cost(ps, sp1) < eps - kDiamTol;
        double b2 = 0.0;
        if (ok && partner) {
            b2 = detail::alloc_bits(*partner, taub2, mid, eps, &sp2);
            ok = detail::window_cost(*partner, sp2) < eps - kDiamTol;
        }
        if (ok) {
            best = b1;
            best2 = b2;
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (partner && partner_bits) *partner_bits = best2;
    return best;
}

// Product structure of an unconstrained shift's orbit metric.
inline ProductStructure product_structure(const SystemSpec& sys, int N, OrbitKind kind) {
    if (sys.custom_points)
        throw validation_error("product_structure: system has a custom point set; product bounds apply to unconstrained shifts");
    if (N < 1) throw validation_error("product_structure: N must be >= 1");
    ProductStructure ps;
    const int W = sys.window;
    const int P = sys.positions(N - 1);
    const int r = sys.alphabet.slots_per_position();
    ps.slots.reserve(static_cast<std::size_t>(P) * r);
    for (int p = 0; p < P; ++p) {
        for (int i = 0; i < r; ++i) {
            ProductSlot s;
            if (sys.alphabet.circular()) {
                s.circle = true;
                s.q = sys.alphabet.torus_levels;
            } else {
                const int L = sys.alphabet.levels_per_slot();
                s.values.reserve(L);
                for (int l = 0; l < L; ++l) s.values.push_back(sys.alphabet.slot_value(l));
                std::sort(s.values.begin(), s.values.end());
            }
            ps.slots.push_back(std::move(s));
        }
    }
    auto term = [&](int pos, double w) {
        WeightedTerm t;
        t.weight = w;
        for (int i = 0; i < r; ++i) t.slots.push_back(pos * r + i);
        return t;
    };
    if (kind == OrbitKind::Max) {
        for (int j = 0; j < N; ++j) {
            std::vector<WeightedTerm> win;
            for (int n = -W; n <= W; ++n) win.push_back(term(n + j + W, std::pow(2.0, -std::abs(n))));
            ps.windows.push_back(std::move(win));
        }
    } else {
        std::vector<WeightedTerm> win;
        std::vector<double> acc(P, 0.0);
        for (int j = 0; j < N; ++j)
            for (int n = -W; n <= W; ++n) acc[n + j + W] += std::pow(2.0, -std::abs(n)) / N;
        for (int p = 0; p < P; ++p)
            if (acc[p] > 0) win.push_back(term(p, acc[p]));
        ps.windows.push_back(std::move(win));
    }
    return ps;
}

}  // namespace meandim

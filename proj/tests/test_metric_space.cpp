#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "meandim/metric_space.hpp"
#include "meandim/systems.hpp"

#include <functional>
#include <vector>

using namespace meandim;

namespace {

FiniteMetricSpace random_euclidean(Rng& rng, std::size_t n, int dim = 3) {
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (auto& p : pts)
        for (auto& c : p) c = rng.next_unit();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0;
            for (int c = 0; c < dim; ++c) s += (pts[i][c] - pts[j][c]) * (pts[i][c] - pts[j][c]);
            d[i][j] = std::sqrt(s);
        }
    return FiniteMetricSpace::from_matrix("rnd", d);
}

// brute force: smallest partition into blocks of diameter < eps, all set
// partitions of up to ~8 points
std::size_t cover_oracle(const FiniteMetricSpace& s, double eps) {
    const std::size_t n = s.size();
    std::vector<int> assign(n, -1);
    std::size_t best = n + 1;
    std::function<void(std::size_t, int)> rec = [&](std::size_t p, int blocks) {
        if (static_cast<std::size_t>(blocks) >= best) return;
        if (p == n) {
            best = blocks;
            return;
        }
        for (int b = 0; b < blocks; ++b) {
            bool ok = true;
            for (std::size_t q = 0; q < p; ++q)
                if (assign[q] == b && s.d(p, q) >= eps - kDiamTol) ok = false;
            if (ok) {
                assign[p] = b;
                rec(p + 1, blocks);
            }
        }
        assign[p] = blocks;
        rec(p + 1, blocks + 1);
        assign[p] = -1;
    };
    rec(0, 0);
    return best;
}

std::size_t separating_oracle(const FiniteMetricSpace& s, double eps) {
    const std::size_t n = s.size();
    std::size_t best = 0;
    for (std::uint64_t mask = 1; mask < (1ULL << n); ++mask) {
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i)
            for (std::size_t j = i + 1; j < n && ok; ++j)
                if ((mask >> i & 1) && (mask >> j & 1) && s.d(i, j) < eps - kDiamTol) ok = false;
        if (ok) best = std::max<std::size_t>(best, __builtin_popcountll(mask));
    }
    return best;
}

}  // namespace

TEST_CASE("metric axiom diagnostics") {
    auto valid = FiniteMetricSpace::from_matrix("two", {{0, 1}, {1, 0}});
    CHECK(validate_metric(valid).empty());

    auto asym = FiniteMetricSpace::from_matrix("asym", {{0, 1}, {2, 0}});
    bool found = false;
    for (const auto& v : validate_metric(asym))
        if (v.find("symmetry") != std::string::npos) found = true;
    CHECK(found);

    auto tri = FiniteMetricSpace::from_matrix("tri", {{0, 1, 3}, {1, 0, 1}, {3, 1, 0}});
    found = false;
    for (const auto& v : validate_metric(tri))
        if (v.find("triangle") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("covering and separating numbers on the harmonic four-point set") {
    // {1, 1/2, 1/3, 0} with |.|
    std::vector<double> vals{1.0, 0.5, 1.0 / 3.0, 0.0};
    std::vector<std::vector<double>> d(4, std::vector<double>(4));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) d[i][j] = std::abs(vals[i] - vals[j]);
    auto s = FiniteMetricSpace::from_matrix("A3", d);

    CHECK(covering_number(s, 0.2, SolveMode::Exact).count == cover_oracle(s, 0.2));
    CHECK(cover_oracle(s, 0.2) == 3);
    CHECK(separating_number(s, 0.2, SolveMode::Exact).count == separating_oracle(s, 0.2));
    CHECK(separating_oracle(s, 0.2) == 3);

    auto two = FiniteMetricSpace::from_matrix("two", {{0, 1}, {1, 0}});
    CHECK(covering_number(two, 0.5, SolveMode::Exact).count == 2);
    CHECK(covering_number(two, 1.5, SolveMode::Exact).count == 1);
    CHECK(separating_number(two, 0.5, SolveMode::Exact).count == 2);
    auto one = FiniteMetricSpace::from_matrix("one", {{0.0}});
    CHECK(separating_number(one, 0.7, SolveMode::Exact).count == 1);
}

TEST_CASE("exact solvers match brute force on random spaces") {
    Rng rng(11);
    for (int t = 0; t < 25; ++t) {
        auto s = random_euclidean(rng, 4 + rng.next_below(4));  // up to 7 points
        const double eps = 0.1 + 0.8 * rng.next_unit();
        CHECK(covering_number(s, eps, SolveMode::Exact).count == cover_oracle(s, eps));
        CHECK(separating_number(s, eps, SolveMode::Exact).count == separating_oracle(s, eps));
    }
}

TEST_CASE("sandwich inequality and greedy bound directions") {
    Rng rng(12);
    for (int t = 0; t < 50; ++t) {
        auto s = random_euclidean(rng, 3 + rng.next_below(10));
        const double diam = s.diameter();
        const double eps = diam * (0.15 + 0.7 * rng.next_unit());
        const double delta = eps / 2 * (0.3 + 0.6 * rng.next_unit());
        const auto sepE = separating_number(s, eps, SolveMode::Exact).count;
        const auto cov = covering_number(s, eps, SolveMode::Exact).count;
        const auto sepD = separating_number(s, delta, SolveMode::Exact).count;
        CHECK(sepE <= cov);
        CHECK(cov <= sepD);
        CHECK(covering_number(s, eps, SolveMode::Greedy).count >= cov);
        CHECK(separating_number(s, eps, SolveMode::Greedy).count <= sepE);
    }
}

TEST_CASE("greedy is optimal on evenly spaced points") {
    std::vector<std::vector<double>> d(6, std::vector<double>(6));
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) d[i][j] = std::abs(i - j) * 0.2;
    auto s = FiniteMetricSpace::from_matrix("grid", d);
    for (double eps : {0.15, 0.25, 0.45, 0.65}) {
        CHECK(covering_number(s, eps, SolveMode::Greedy).count ==
              covering_number(s, eps, SolveMode::Exact).count);
        CHECK(separating_number(s, eps, SolveMode::Greedy).count ==
              separating_number(s, eps, SolveMode::Exact).count);
    }
}

TEST_CASE("exact mode refuses oversized spaces") {
    Rng rng(13);
    auto s = random_euclidean(rng, 25);
    CHECK_THROWS_AS(covering_number(s, 0.3, SolveMode::Exact), capacity_error);
    CHECK_THROWS_AS(separating_number(s, 0.3, SolveMode::Exact), capacity_error);
    CHECK_NOTHROW(covering_number(s, 0.3, SolveMode::Greedy));
}

TEST_CASE("cover witness blocks have the stated diameters and cover everything") {
    Rng rng(14);
    auto s = random_euclidean(rng, 9);
    const auto res = covering_number(s, 0.5, SolveMode::Exact);
    std::vector<bool> seen(s.size(), false);
    for (std::size_t b = 0; b < res.witness.blocks.size(); ++b) {
        CHECK(res.witness.block_diameters[b] ==
              doctest::Approx(block_diameter(s, res.witness.blocks[b])).epsilon(1e-12));
        CHECK(res.witness.block_diameters[b] < 0.5);
        for (auto p : res.witness.blocks[b]) seen[p] = true;
    }
    for (bool v : seen) CHECK(v);
}

TEST_CASE("covering of the quantized square dominates the volume bound") {
    // 32x32 grid in [0,1]^2 under the sup metric: #(eps) >= (1/eps)^2 for eps
    // well above the grid spacing, witnessed through a greedy packing (a
    // separated set lower-bounds any cover)
    const int k = 32;
    std::vector<std::vector<double>> d(k * k, std::vector<double>(k * k));
    for (int i = 0; i < k * k; ++i)
        for (int j = 0; j < k * k; ++j) {
            const double dx = std::abs(i / k - j / k) / double(k - 1);
            const double dy = std::abs(i % k - j % k) / double(k - 1);
            d[i][j] = std::max(dx, dy);
        }
    auto s = FiniteMetricSpace::from_matrix("square", d);
    for (double eps : {0.51, 0.26, 0.15}) {
        const auto pack = separating_number(s, eps, SolveMode::Greedy);
        CHECK(static_cast<double>(pack.count) >= std::pow(1.0 / eps, 2.0) - 1e-9);
    }
}

TEST_CASE("tame transform: landmark sum on two points") {
    auto two = FiniteMetricSpace::from_matrix("two", {{0, 1}, {1, 0}});
    auto t = tame_transform(two);
    // 2^-1 |0-1| + 2^-2 |1-0| = 0.75
    CHECK(t.d(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(validate_metric(t).empty());

    auto one = FiniteMetricSpace::from_matrix("one", {{0.0}});
    CHECK(tame_transform(one).d(0, 0) == 0.0);
}

TEST_CASE("tame transform contracts and stays a metric") {
    Rng rng(15);
    for (int t = 0; t < 10; ++t) {
        auto s = random_euclidean(rng, 3 + rng.next_below(8));
        auto ts = tame_transform(s);
        CHECK(validate_metric(ts).empty());
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = 0; j < s.size(); ++j) CHECK(ts.d(i, j) <= s.d(i, j) + kDiamTol);
    }
}

TEST_CASE("orbit metrics: depth one, fixed points, averaging") {
    SystemSpec sys = build_full_shift(AlphabetSpec::quantized_interval(2), 1, EnumerationPolicy::all());
    const auto base_max = orbit_metric(sys, 1, OrbitKind::Max);
    const auto base_avg = orbit_metric(sys, 1, OrbitKind::Avg);
    for (std::size_t i = 0; i < base_max.size(); ++i)
        for (std::size_t j = 0; j < base_max.size(); ++j)
            CHECK(base_max.d(i, j) == doctest::Approx(base_avg.d(i, j)).epsilon(1e-12));

    // constant words are fixed points of the shift; their distance is flat in N
    for (int N : {2, 3}) {
        const auto m = orbit_metric(sys, N, OrbitKind::Max);
        const auto ma = orbit_metric(sys, N, OrbitKind::Avg);
        const auto pts = sys.points(N - 1);
        std::size_t zeros = 0, ones = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            bool all0 = true, all1 = true;
            for (auto v : pts[i]) {
                all0 = all0 && v == 0;
                all1 = all1 && v == 1;
            }
            if (all0) zeros = i;
            if (all1) ones = i;
        }
        const double c = 2.0;  // window weights 0.5 + 1 + 0.5
        CHECK(m.d(zeros, ones) == doctest::Approx(c).epsilon(1e-12));
        CHECK(ma.d(zeros, ones) == doctest::Approx(c).epsilon(1e-12));
    }
}

TEST_CASE("orbit metric monotonicity: avg <= max, max nondecreasing in N") {
    SystemSpec sys = build_full_shift(AlphabetSpec::quantized_interval(2), 2, EnumerationPolicy::all());
    const auto m2 = orbit_metric(sys, 2, OrbitKind::Max);
    const auto a2 = orbit_metric(sys, 2, OrbitKind::Avg);
    for (std::size_t i = 0; i < m2.size(); ++i)
        for (std::size_t j = 0; j < m2.size(); ++j) CHECK(a2.d(i, j) <= m2.d(i, j) + kDiamTol);

    // pointwise in N on a common extended word set
    const auto pts = sys.points(2);
    Rng rng(5);
    for (int t = 0; t < 200; ++t) {
        const auto& x = pts[rng.next_below(pts.size())];
        const auto& y = pts[rng.next_below(pts.size())];
        double prev = 0.0;
        for (int N = 1; N <= 3; ++N) {
            double dn = 0.0;
            for (int j = 0; j < N; ++j) dn = std::max(dn, sys.shifted_distance(x, y, j));
            CHECK(dn >= prev - kDiamTol);
            prev = dn;
        }
    }
}

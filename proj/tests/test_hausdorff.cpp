#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "meandim/hausdorff.hpp"
#include "meandim/systems.hpp"

#include <functional>

using namespace meandim;

namespace {

FiniteMetricSpace random_space(Rng& rng, std::size_t n, double scale = 1.0) {
    std::vector<std::vector<double>> pts(n, std::vector<double>(3));
    for (auto& p : pts)
        for (auto& c : p) c = rng.next_unit();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    double diam = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0;
            for (int c = 0; c < 3; ++c) s += (pts[i][c] - pts[j][c]) * (pts[i][c] - pts[j][c]);
            d[i][j] = std::sqrt(s);
            diam = std::max(diam, d[i][j]);
        }
    for (auto& row : d)
        for (auto& v : row) v *= scale / diam;
    return FiniteMetricSpace::from_matrix("rnd", d);
}

FiniteMetricSpace uniform_simplex(std::size_t n, double dist) {
    std::vector<std::vector<double>> d(n, std::vector<double>(n, dist));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
    return FiniteMetricSpace::from_matrix("simplex", d);
}

// exhaustive cover oracle over the same candidate family
double content_oracle(const FiniteMetricSpace& s, const ContentQuery& q) {
    const auto blocks = detail::candidate_blocks(s, q.eps, q.family, q.subset_budget);
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = s.size();
    std::function<void(std::uint64_t, double)> rec = [&](std::uint64_t covered, double cost) {
        if (cost >= best) return;
        if (covered == (1ULL << n) - 1) {
            best = cost;
            return;
        }
        std::size_t first = 0;
        while (covered & (1ULL << first)) ++first;
        for (const auto& b : blocks) {
            bool hit = false;
            for (auto p : b.points)
                if (p == first) hit = true;
            if (!hit) continue;
            std::uint64_t c2 = covered;
            for (auto p : b.points) c2 |= 1ULL << p;
            rec(c2, cost + block_cost(q.tau, b.diam, q.s));
        }
    };
    rec(0, 0.0);
    return best;
}

}  // namespace

TEST_CASE("content reference values") {
    auto two = FiniteMetricSpace::from_matrix("two", {{0, 1}, {1, 0}});
    ContentQuery q;
    q.s = 1.0;
    q.tau = 0.0;
    q.eps = 2.0;
    CHECK(hausdorff_content(two, q).value == doctest::Approx(0.0).epsilon(1e-12));

    q.tau = 0.1;
    CHECK(hausdorff_content(two, q).value == doctest::Approx(0.2).epsilon(1e-12));

    // s = 0 recovers the covering number
    Rng rng(21);
    auto s = random_space(rng, 8);
    ContentQuery q0;
    q0.s = 0.0;
    q0.eps = 0.35;
    CHECK(hausdorff_content(s, q0).value ==
          doctest::Approx(static_cast<double>(covering_number(s, 0.35, SolveMode::Exact).count)));
}

TEST_CASE("exact content matches the exhaustive oracle") {
    Rng rng(22);
    for (int t = 0; t < 12; ++t) {
        auto s = random_space(rng, 4 + rng.next_below(3));
        ContentQuery q;
        q.s = 0.3 + 1.5 * rng.next_unit();
        q.tau = 0.1 * rng.next_unit();
        q.eps = 0.3 + 0.6 * rng.next_unit();
        CHECK(hausdorff_content(s, q).value == doctest::Approx(content_oracle(s, q)).epsilon(1e-10));
    }
}

TEST_CASE("weighted content: reference values and fractional advantage") {
    auto one = FiniteMetricSpace::from_matrix("one", {{0.0}});
    ContentQuery q1;
    q1.s = 1.0;
    q1.eps = 0.5;
    CHECK(weighted_content(one, q1).value == doctest::Approx(0.0).epsilon(1e-12));

    auto two = FiniteMetricSpace::from_matrix("two", {{0, 1}, {1, 0}});
    ContentQuery q2;
    q2.s = 1.0;
    q2.tau = 0.1;
    q2.eps = 2.0;
    const auto w = weighted_content(two, q2);
    CHECK(w.value == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(w.duality_gap < 1e-9);

    ContentQuery q0;
    q0.s = 0.0;
    q0.eps = 2.0;
    CHECK(weighted_content(two, q0).value == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("lambda <= H for the same family, balls only raise the LP value") {
    Rng rng(23);
    for (int t = 0; t < 10; ++t) {
        auto s = random_space(rng, 5 + rng.next_below(5));
        ContentQuery q;
        q.s = 0.2 + 1.5 * rng.next_unit();
        q.tau = 0.05 * rng.next_unit();
        q.eps = 0.25 + 0.5 * rng.next_unit();
        const double lp = weighted_content(s, q).value;
        const double h = hausdorff_content(s, q).value;
        CHECK(lp <= h + 1e-9);
        ContentQuery qb = q;
        qb.family = BlockFamily::Balls;
        CHECK(weighted_content(s, qb).value >= lp - 1e-9);
    }
}

TEST_CASE("six-delta comparison between content and weighted content") {
    Rng rng(24);
    for (int t = 0; t < 10; ++t) {
        auto s = random_space(rng, 5 + rng.next_below(5), 0.9);
        const double s_exp = 0.3 + 1.2 * rng.next_unit();
        const double delta = 0.05 + 0.1 * rng.next_unit();
        ContentQuery qh;
        qh.s = s_exp;
        qh.eps = 6 * delta;
        ContentQuery ql = qh;
        ql.eps = delta;
        const double h6 = hausdorff_content(s, qh).value;
        const double lam = weighted_content(s, ql).value;
        CHECK(h6 <= std::pow(6.0, s_exp) * lam + 1e-9);
    }
}

TEST_CASE("content monotone in s (while tau + diam <= 1) and in eps") {
    Rng rng(25);
    auto s = random_space(rng, 8, 0.8);
    ContentQuery q;
    q.tau = 0.1;
    q.eps = 0.4;
    double prev = std::numeric_limits<double>::infinity();
    for (double ss : {0.0, 0.5, 1.0, 1.5, 2.0}) {
        q.s = ss;
        const double v = hausdorff_content(s, q).value;
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
    q.s = 1.0;
    double preve = std::numeric_limits<double>::infinity();
    for (double e : {0.2, 0.3, 0.5, 0.8}) {
        q.eps = e;
        const double v = hausdorff_content(s, q).value;
        CHECK(v <= preve + 1e-12);
        preve = v;
    }
}

TEST_CASE("dimension profile: crossing point inverted analytically") {
    auto one = FiniteMetricSpace::from_matrix("one", {{0.0}});
    CHECK(dim_profile(one, 0.5, 0.0) == doctest::Approx(0.0).epsilon(2e-6));

    // n tau^s = 1  =>  s0 = log n / log(1/tau)
    const std::size_t n = 16;
    const double s0 = 2.0;
    const double tau = std::pow(1.0 / n, 1.0 / s0);
    auto simplex = uniform_simplex(n, 0.5);
    const double got = dim_profile(simplex, 0.4, tau);
    CHECK(got == doctest::Approx(s0).epsilon(2e-6));

    // rescaling by c moves the crossing to the solution of n (c tau)^s = 1
    const double c = 0.6;
    auto scaled = uniform_simplex(n, 0.5 * c);
    const double expected = std::log(double(n)) / std::log(1.0 / (c * tau));
    CHECK(dim_profile(scaled, 0.4 * c, tau * c) == doctest::Approx(expected).epsilon(2e-6));

    auto big = uniform_simplex(4, 1.2);
    CHECK_THROWS_AS(dim_profile(big, 0.4, 0.0), validation_error);
}

TEST_CASE("frostman certificates") {
    auto two = FiniteMetricSpace::from_matrix("two", {{0, 1}, {1, 0}});
    const auto c = frostman_measure(two, 1.0, 2.0, 0.1, BlockFamily::AllSubsets);
    CHECK(c.valid);
    CHECK(c.total_mass == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(c.measure[0] == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(c.measure[1] == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(c.duality_gap <= 1e-9);

    // s=0, tau=0, delta > diam: the whole-space constraint binds at mass 1
    const auto c0 = frostman_measure(two, 0.0, 2.0, 0.0, BlockFamily::AllSubsets);
    CHECK(c0.total_mass == doctest::Approx(1.0).epsilon(1e-9));

    auto one = FiniteMetricSpace::from_matrix("one", {{0.0}});
    const auto c1 = frostman_measure(one, 1.0, 1.0, 0.0, BlockFamily::AllSubsets);
    CHECK(c1.total_mass == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("scaling law verification flags violations") {
    auto two = FiniteMetricSpace::from_matrix("two", {{0, 1}, {1, 0}});
    // point mass violates mu({x}) <= 0 at s=1, tau=0
    const auto rep = verify_scaling_law(two, {1.0, 0.0}, 1.0, 1.0, 0.0);
    CHECK_FALSE(rep.pass);
    CHECK(rep.worst_margin == doctest::Approx(-1.0).epsilon(1e-12));

    const auto uni = verify_scaling_law(two, {0.5, 0.5}, 0.0, 2.0, 0.0);
    CHECK(uni.pass);  // mu(E) <= 1 with the whole space at the boundary
}

TEST_CASE("mean dimension profile estimates") {
    SystemSpec single = build_full_shift(AlphabetSpec::quantized_interval(1), 2, EnumerationPolicy::all());
    const auto est = mean_hausdorff_estimate(single, {0.3, 0.1}, {1, 2}, 0.0, OrbitKind::Max);
    for (const auto& p : est.points) CHECK(p.dim == doctest::Approx(0.0).epsilon(2e-6));

    SystemSpec sys = build_full_shift(AlphabetSpec::quantized_interval(2), 2, EnumerationPolicy::all());
    const auto e2 = mean_hausdorff_estimate(sys, {0.05, 0.1, 0.2}, {1, 2}, 1e-3, OrbitKind::Max,
                                            SolveMode::Greedy, BlockFamily::Balls);
    // plateau values nonincreasing as eps grows
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& [eps, v] : e2.plateau) {
        CHECK(v <= prev + 1e-9);
        prev = v;
    }
    CHECK(e2.truncation_error == doctest::Approx(sys.truncation_error()));

    // direct-construction oracle at N=1: rescale and bisect by hand
    FiniteMetricSpace m = orbit_metric(sys, 1, OrbitKind::Max);
    const double scale = (1.0 - 1e-3) / (m.diameter() * (1 + 1e-9));
    for (auto& v : m.dist) v *= scale;
    const double direct = dim_profile(m, 0.1 * scale, 1e-3, SolveMode::Greedy, BlockFamily::Balls);
    for (const auto& p : e2.points)
        if (p.N == 1 && p.eps == 0.1) CHECK(p.dim == doctest::Approx(direct).epsilon(1e-9));
}

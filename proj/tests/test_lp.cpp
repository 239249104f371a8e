#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "meandim/lp.hpp"
#include "meandim/common.hpp"

#include <cmath>
#include <vector>

using namespace meandim;

namespace {

// Brute-force oracle for min c'x, Ax >= b, x >= 0 with few variables: vertex
// enumeration over all choices of tight constraints (including x_j = 0).
double lp_oracle(const LpProblem& p) {
    const std::size_t n = p.num_vars;
    const std::size_t m = p.rows.size();
    std::vector<std::vector<double>> all_rows = p.rows;
    std::vector<double> all_rhs = p.rhs;
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> r(n, 0.0);
        r[j] = 1.0;
        all_rows.push_back(r);
        all_rhs.push_back(0.0);
    }
    const std::size_t total = all_rows.size();
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> idx(n);
    // iterate over all n-subsets of constraints
    std::vector<std::size_t> comb;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        if (comb.size() == n) {
            // solve the n x n system
            std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) a[i][j] = all_rows[comb[i]][j];
                a[i][n] = all_rhs[comb[i]];
            }
            // gaussian elimination
            std::vector<double> x(n, 0.0);
            bool singular = false;
            for (std::size_t col = 0, row = 0; col < n && !singular; ++col, ++row) {
                std::size_t piv = row;
                for (std::size_t i = row + 1; i < n; ++i)
                    if (std::abs(a[i][col]) > std::abs(a[piv][col])) piv = i;
                if (std::abs(a[piv][col]) < 1e-11) {
                    singular = true;
                    break;
                }
                std::swap(a[piv], a[row]);
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == row) continue;
                    const double f = a[i][col] / a[row][col];
                    for (std::size_t j = col; j <= n; ++j) a[i][j] -= f * a[row][j];
                }
            }
            if (!singular) {
                for (std::size_t i = 0; i < n; ++i) x[i] = a[i][n] / a[i][i];
                bool feasible = true;
                for (std::size_t j = 0; j < n && feasible; ++j)
                    if (x[j] < -1e-9) feasible = false;
                for (std::size_t i = 0; i < m && feasible; ++i) {
                    double lhs = 0.0;
                    for (std::size_t j = 0; j < n; ++j) lhs += p.rows[i][j] * x[j];
                    if (p.sense[i] == RowSense::Ge && lhs < p.rhs[i] - 1e-9) feasible = false;
                    if (p.sense[i] == RowSense::Eq && std::abs(lhs - p.rhs[i]) > 1e-9) feasible = false;
                }
                if (feasible) {
                    double v = 0.0;
                    for (std::size_t j = 0; j < n; ++j) v += p.objective[j] * x[j];
                    best = std::min(best, v);
                }
            }
            return;
        }
        for (std::size_t i = start; i < total; ++i) {
            comb.push_back(i);
            rec(i + 1);
            comb.pop_back();
        }
    };
    rec(0);
    return best;
}

}  // namespace

TEST_CASE("two-point fractional cover by hand") {
    // blocks: {0}, {1}, {0,1}; costs 0.1, 0.1, 1.1 ; coverage >= 1 each point
    LpProblem p;
    p.num_vars = 3;
    p.objective = {0.1, 0.1, 1.1};
    p.rows = {{1, 0, 1}, {0, 1, 1}};
    p.rhs = {1, 1};
    p.sense = {RowSense::Ge, RowSense::Ge};
    const LpResult r = solve_lp(p);
    CHECK(r.value == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(r.duality_gap < 1e-9);
    CHECK(r.primal_violation < 1e-9);
    // dual: one multiplier per point, both 0.1
    CHECK(r.dual[0] == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(r.dual[1] == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("random covering LPs match the vertex-enumeration oracle") {
    Rng rng(20240817);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + rng.next_below(3);  // variables
        const std::size_t m = 1 + rng.next_below(3);  // rows
        LpProblem p;
        p.num_vars = n;
        for (std::size_t j = 0; j < n; ++j) p.objective.push_back(0.05 + rng.next_unit());
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<double> row;
            bool nonzero = false;
            for (std::size_t j = 0; j < n; ++j) {
                const double v = rng.next_unit() < 0.4 ? 0.0 : 0.2 + rng.next_unit();
                if (v > 0) nonzero = true;
                row.push_back(v);
            }
            if (!nonzero) row[rng.next_below(n)] = 1.0;
            p.rows.push_back(row);
            p.rhs.push_back(0.5 + rng.next_unit());
            p.sense.push_back(RowSense::Ge);
        }
        const double oracle = lp_oracle(p);
        const LpResult r = solve_lp(p);
        REQUIRE(std::isfinite(oracle));
        CHECK(r.value == doctest::Approx(oracle).epsilon(1e-7));
        CHECK(r.duality_gap < 1e-8 * std::max(1.0, std::abs(r.value)));
        CHECK(r.primal_violation < 1e-9);
    }
}

TEST_CASE("equality rows: tiny transportation plans") {
    // mu=(0.5,0.5), nu=(0.75,0.25), 0/1 cost -> expected cost 0.25
    TransportResult t = solve_transport({0.5, 0.5}, {0.75, 0.25}, {{0, 1}, {1, 0}});
    CHECK(t.cost == doctest::Approx(0.25).epsilon(1e-10));
    // marginals exact
    CHECK(t.plan[0] + t.plan[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(t.plan[2] + t.plan[3] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(t.plan[0] + t.plan[2] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("transport optimality spot-check against random feasible plans") {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 2 + rng.next_below(3), m = 2 + rng.next_below(3);
        std::vector<double> mu(n), nu(m);
        double sm = 0;
        for (auto& v : mu) {
            v = 0.1 + rng.next_unit();
            sm += v;
        }
        for (auto& v : mu) v /= sm;
        sm = 0;
        for (auto& v : nu) {
            v = 0.1 + rng.next_unit();
            sm += v;
        }
        for (auto& v : nu) v /= sm;
        std::vector<std::vector<double>> cost(n, std::vector<double>(m));
        for (auto& row : cost)
            for (auto& v : row) v = rng.next_unit();
        const TransportResult t = solve_transport(mu, nu, cost);
        // random feasible plan: independent coupling, then greedy mass shuffles
        double indep = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) indep += mu[i] * nu[j] * cost[i][j];
        CHECK(t.cost <= indep + 1e-9);
    }
}

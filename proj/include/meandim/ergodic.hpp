#pragma once

// Invariant-measure construction pipeline: Frostman measures on the averaged
// orbit metric, shift push-forward averaging, cylinder-marginal comparison,
// optimal couplings, and the end-to-end report.

#include <map>
#include <string>
#include <vector>

#include "meandim/common.hpp"
#include "meandim/hausdorff.hpp"
#include "meandim/information.hpp"
#include "meandim/lp.hpp"
#include "meandim/ratedist.hpp"
#include "meandim/systems.hpp"

namespace meandim {

struct MeasureOnSystem {
    int ext = 0;  // defined on sys.points(ext)
    std::vector<double> mass;
    std::string provenance;
    int boundary_fill_count = 0;  // positions filled during shifting

    void validate() const {
        double t = 0.0;
        for (double m : mass) {
            if (m < -kMassTol) throw validation_error("measure: negative mass");
            t += m;
        }
        if (std::abs(t - 1.0) > 1e-9)
            throw validation_error("measure: mass sums to " + std::to_string(t));
    }
};

namespace detail {

inline std::map<Word, std::size_t> word_index(const std::vector<Word>& pts) {
    std::map<Word, std::size_t> idx;
    for (std::size_t i = 0; i < pts.size(); ++i) idx.emplace(pts[i], i);
    return idx;
}

// base-window word of sigma^j x: exact while the right extension lasts,
// first-symbol fill beyond it
inline Word shift_to_base(const Word& w, int j, int base_positions, int ext, int slots_per_pos) {
    Word out(static_cast<std::size_t>(base_positions) * slots_per_pos, 0);
    const int avail = base_positions + ext - j;
    for (int p = 0; p < std::min(base_positions, avail); ++p)
        for (int s = 0; s < slots_per_pos; ++s)
            out[static_cast<std::size_t>(p) * slots_per_pos + s] =
                w[static_cast<std::size_t>(p + j) * slots_per_pos + s];
    return out;
}

}  // namespace detail

// (1/n) sum_{j<n} T^j_* nu, reported on the base window. Shifts consume the
// words' right extension exactly; only shifts past the extension fill with the
// first alphabet symbol, and the fill count records how often that happened.
inline MeasureOnSystem pushforward_average(const SystemSpec& sys, const MeasureOnSystem& nu, int n) {
    if (n < 1) throw validation_error("pushforward_average: n must be >= 1");
    nu.validate();
    const auto pts = sys.points(nu.ext);
    if (pts.size() != nu.mass.size())
        throw validation_error("pushforward_average: measure does not match the point set");
    const auto base = sys.points(0);
    const auto idx = detail::word_index(base);
    const int r = sys.alphabet.slots_per_position();
    const int P = sys.positions(0);
    MeasureOnSystem out;
    out.ext = 0;
    out.mass.assign(base.size(), 0.0);
    out.provenance = "averaged(" + std::to_string(n) + ")<-" + nu.provenance;
    for (int j = 0; j < n; ++j) {
        if (j > nu.ext) out.boundary_fill_count += j - nu.ext;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (nu.mass[i] == 0.0) continue;
            const Word w = detail::shift_to_base(pts[i], j, P, nu.ext, r);
            auto it = idx.find(w);
            if (it == idx.end())
                throw validation_error("pushforward_average: shifted word leaves the point set (" +
                                       sys.word_id(w) + "); the system must be exhaustively enumerated");
            out.mass[it->second] += nu.mass[i] / n;
        }
    }
    return out;
}

// Total-variation distance between the two measures' marginals on the m
// central positions of the window.
inline double cylinder_distance(const SystemSpec& sys, const MeasureOnSystem& mu,
                                const MeasureOnSystem& nu, int m) {
    if (m < 1 || m > 2 * sys.window + 1)
        throw validation_error("cylinder_distance: depth must lie within the window");
    if (mu.ext != nu.ext) throw validation_error("cylinder_distance: measures live on different extensions");
    const auto pts = sys.points(mu.ext);
    if (pts.size() != mu.mass.size() || pts.size() != nu.mass.size())
        throw validation_error("cylinder_distance: measure size mismatch");
    const int r = sys.alphabet.slots_per_position();
    const int start = sys.window - (m - 1) / 2;
    auto marginal = [&](const MeasureOnSystem& meas) {
        std::map<Word, double> marg;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            Word key(pts[i].begin() + static_cast<std::size_t>(start) * r,
                     pts[i].begin() + static_cast<std::size_t>(start + m) * r);
            marg[key] += meas.mass[i];
        }
        return marg;
    };
    const auto ma = marginal(mu);
    const auto mb = marginal(nu);
    double tv = 0.0;
    for (const auto& [k, v] : ma) {
        auto it = mb.find(k);
        tv += std::abs(v - (it == mb.end() ? 0.0 : it->second));
    }
    for (const auto& [k, v] : mb)
        if (ma.find(k) == ma.end()) tv += v;
    return tv / 2.0;
}

struct Coupling {
    std::size_t rows = 0, cols = 0;
    std::vector<double> plan;  // row-major joint mass
    double expected_cost = 0.0;

    double at(std::size_t i, std::size_t j) const { return plan[i * cols + j]; }
};

// Transportation-LP optimum between two distributions of equal total mass.
inline Coupling optimal_coupling(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                                 const std::vector<std::vector<double>>& cost) {
    mu.validate();
    nu.validate();
    for (const auto& r : cost)
        for (double c : r)
            if (c < 0) throw validation_error("optimal_coupling: negative cost");
    TransportResult t = solve_transport(mu.mass, nu.mass, cost);
    Coupling c;
    c.rows = mu.size();
    c.cols = nu.size();
    c.plan = t.plan;
    c.expected_cost = t.cost;
    return c;
}

// ---------------------------------------------------------------------------

struct PipelineStage {
    int N = 1;
    double exponent = 0.0;  // s * N
    double frostman_mass = 0.0;
    double lp_value = 0.0;
    double duality_gap = 0.0;
    bool scaling_law_pass = false;
    double scaling_law_margin = 0.0;
    std::vector<RDPoint> rd_points;
    // per epsilon: gmt admissibility and the bound comparison
    struct BoundCheck {
        double eps = 0.0;
        bool admissible = false;     // preconditions + lambda feasibility
        double gmt_bits = 0.0;       // total-information bound
        double ba_bits = 0.0;        // N * per-step rate
        bool dominated = false;      // ba >= gmt - tol
    };
    std::vector<BoundCheck> bound_checks;
};

struct PipelineReport {
    double s = 0.0, delta = 0.0, tau = 0.0;
    std::vector<PipelineStage> stages;
    std::vector<double> cylinder_trajectory;  // TV between consecutive averaged measures
    MeasureOnSystem final_measure;
    DimensionEstimate rdim;
    double truncation_error = 0.0;
};

// End-to-end: per N, a Frostman measure on (X, dbar_N) at exponent s*N,
// normalized and re-verified; push-forward averaging; the TV trajectory of
// consecutive averaged measures; block rate-distortion of the stage measures
// with the scaling-law lower bound checked wherever it is admissible.
inline PipelineReport nice_measure_pipeline(const SystemSpec& sys, double s, double delta, double tau,
                                            const std::vector<int>& schedule,
                                            const std::vector<double>& eps_grid,
                                            BlockFamily family = BlockFamily::Balls) {
    if (schedule.empty() || eps_grid.empty())
        throw validation_error("nice_measure_pipeline: empty schedule or grid");
    PipelineReport rep;
    rep.s = s;
    rep.delta = delta;
    rep.tau = tau;
    rep.truncation_error = sys.truncation_error();
    std::vector<MeasureOnSystem> averaged;
    RDCurve curve;
    curve.source = sys.label + " pipeline";
    for (int N : schedule) {
        PipelineStage stage;
        stage.N = N;
        stage.exponent = s * N;
        const FiniteMetricSpace m = orbit_metric(sys, N, OrbitKind::Avg);
        FrostmanCertificate cert = frostman_measure(m, s * N, delta, tau, family);
        stage.lp_value = cert.lp_value;
        stage.duality_gap = cert.duality_gap;
        stage.frostman_mass = cert.total_mass;
        if (cert.total_mass <= 0)
            throw numeric_error("nice_measure_pipeline: stage N=" + std::to_string(N) +
                                " produced zero mass; lower s or enlarge delta");
        MeasureOnSystem nu;
        nu.ext = N - 1;
        nu.provenance = "frostman(N=" + std::to_string(N) + ")";
        nu.mass = cert.measure;
        for (auto& v : nu.mass) v /= cert.total_mass;
        const auto law = verify_scaling_law(m, nu.mass, s * N, delta, tau, family);
        stage.scaling_law_pass = law.pass;
        stage.scaling_law_margin = law.worst_margin;

        // rate-distortion of the stage measure with the duality-certified bound
        std::vector<std::vector<double>> rho(m.size(), std::vector<double>(m.size()));
        for (std::size_t i = 0; i < m.size(); ++i)
            for (std::size_t j = 0; j < m.size(); ++j) rho[i][j] = m.d(i, j);
        DiscreteDistribution src;
        src.mass = nu.mass;
        for (double eps : eps_grid) {
            BaResult ba = blahut_arimoto(src, rho, eps);
            RDPoint pt;
            pt.eps = eps;
            pt.N = N;
            pt.rate_bits = ba.rate_bits / N;
            pt.converged = ba.converged;
            pt.iterations = ba.iterations;
            stage.rd_points.push_back(pt);
            if (N == schedule.back()) curve.points.push_back(pt);

            PipelineStage::BoundCheck bc;
            bc.eps = eps;
            bc.ba_bits = ba.rate_bits;
            const bool pre_ok = (2 * eps * std::log2(1.0 / eps) <= delta + 1e-15) &&
                                (tau <= std::min(eps / 3.0, delta / 2.0) + 1e-15);
            if (pre_ok && stage.scaling_law_pass) {
                GmtBound g = gmt_lower_bound(s * N, eps, delta, tau);
                std::vector<double> lambda(src.size(), g.lambda_constant);
                const DualityBound db = duality_lower_bound(src, rho, lambda, g.slope, eps);
                bc.admissible = db.feasible;
                bc.gmt_bits = g.bound_bits;
                bc.dominated = ba.rate_bits >= g.bound_bits - 1e-9;
            }
            stage.bound_checks.push_back(bc);
        }
        averaged.push_back(pushforward_average(sys, nu, N));
        rep.stages.push_back(std::move(stage));
    }
    for (std::size_t i = 0; i + 1 < averaged.size(); ++i)
        rep.cylinder_trajectory.push_back(
            cylinder_distance(sys, averaged[i], averaged[i + 1], 2 * sys.window + 1));
    rep.final_measure = averaged.back();
    rep.rdim = rdim_estimate(curve);
    return rep;
}

}  // namespace meandim

#pragma once

// JSON / CSV forms of the public types (nlohmann::json).

#include <sstream>
#include <string>

#include <json.hpp>

#include "meandim/algebraic.hpp"
#include "meandim/ergodic.hpp"
#include "meandim/experiments.hpp"
#include "meandim/hausdorff.hpp"
#include "meandim/metric_space.hpp"
#include "meandim/ratedist.hpp"
#include "meandim/systems.hpp"
#include "meandim/tiling.hpp"

namespace meandim {

using json = nlohmann::json;

inline json to_json(const FiniteMetricSpace& s) {
    json m = json::array();
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < n; ++j) row.push_back(s.d(i, j));
        m.push_back(std::move(row));
    }
    return json{{"label", s.label}, {"points", s.points}, {"dist", m}};
}

inline FiniteMetricSpace metric_space_from_json(const json& j) {
    FiniteMetricSpace s;
    s.label = j.value("label", "space");
    s.points = j.at("points").get<std::vector<std::string>>();
    const auto& m = j.at("dist");
    const std::size_t n = s.points.size();
    if (m.size() != n) throw validation_error("metric json: dist rows != points");
    s.dist.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (m[i].size() != n) throw validation_error("metric json: dist is not square");
        for (std::size_t j2 = 0; j2 < n; ++j2) s.d(i, j2) = m[i][j2].get<double>();
    }
    return s;
}

inline json to_json(const AlphabetSpec& a) {
    switch (a.kind) {
        case AlphabetKind::QuantizedInterval:
            return json{{"kind", "quantized-interval"}, {"levels", a.levels}};
        case AlphabetKind::ExplicitSet:
            return json{{"kind", "explicit-set"}, {"values", a.values}};
        case AlphabetKind::TorusQuantized:
            return json{{"kind", "torus"}, {"r", a.torus_dim}, {"q", a.torus_levels}};
    }
    throw validation_error("alphabet json: bad kind");
}

inline AlphabetSpec alphabet_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "quantized-interval") return AlphabetSpec::quantized_interval(j.at("levels").get<int>());
    if (kind == "explicit-set") return AlphabetSpec::explicit_set(j.at("values").get<std::vector<double>>());
    if (kind == "torus") return AlphabetSpec::torus(j.at("r").get<int>(), j.at("q").get<int>());
    throw validation_error("alphabet json: unknown kind '" + kind + "'");
}

inline json to_json(const EnumerationPolicy& p) {
    if (p.exhaustive) return json{{"exhaustive", true}};
    return json{{"sample", p.sample_count}, {"seed", p.seed}};
}

inline EnumerationPolicy policy_from_json(const json& j) {
    if (j.value("exhaustive", false)) return EnumerationPolicy::all();
    if (j.contains("sample")) {
        if (!j.contains("seed"))
            throw validation_error("policy json: sampling requires an explicit seed");
        return EnumerationPolicy::sample(j.at("sample").get<std::size_t>(),
                                         j.at("seed").get<std::uint64_t>());
    }
    throw validation_error("policy json: expected {exhaustive:true} or {sample, seed}");
}

inline json to_json(const SystemSpec& s) {
    json j{{"alphabet", to_json(s.alphabet)}, {"W", s.window}, {"policy", to_json(s.policy)}};
    if (!s.transform.empty()) j["transform"] = s.transform;
    return j;
}

inline json to_json(const AlgebraicActionSpec& a) {
    return json{{"r", a.r}, {"a", a.a}, {"M", a.M}, {"q", a.q}, {"W", a.window}};
}

inline AlgebraicActionSpec algebraic_from_json(const json& j) {
    AlgebraicActionSpec a;
    a.r = j.at("r").get<int>();
    a.a = j.at("a").get<int>();
    a.M = j.value("M", IntMatrix{});
    a.q = j.at("q").get<long long>();
    a.window = j.at("W").get<int>();
    a.validate();
    return a;
}

// {alphabet, W, policy, transform?, constraint?}; a constraint block turns the
// system into the corresponding quantized solution subgroup.
inline SystemSpec system_from_json(const json& j, std::size_t budget = 8192) {
    if (j.contains("constraint")) {
        json cj = j.at("constraint");
        if (!cj.contains("W")) cj["W"] = j.at("W");
        const AlphabetSpec alpha = alphabet_from_json(j.at("alphabet"));
        if (alpha.kind != AlphabetKind::TorusQuantized)
            throw validation_error("system json: constraints need a torus alphabet");
        if (!cj.contains("r")) cj["r"] = alpha.torus_dim;
        if (!cj.contains("q")) cj["q"] = alpha.torus_levels;
        AlgebraicActionSpec spec = algebraic_from_json(cj);
        if (spec.r != alpha.torus_dim || spec.q != alpha.torus_levels)
            throw validation_error("system json: constraint r/q conflict with the alphabet");
        SystemSpec s = build_algebraic_system(spec, budget);
        s.transform = j.value("transform", "");
        return s;
    }
    SystemSpec s = build_full_shift(alphabet_from_json(j.at("alphabet")), j.at("W").get<int>(),
                                    policy_from_json(j.at("policy")), budget);
    s.transform = j.value("transform", "");
    return s;
}

inline json to_json(const FrostmanCertificate& c) {
    return json{{"s", c.s},
                {"delta", c.delta},
                {"tau", c.tau},
                {"family", c.family == BlockFamily::AllSubsets ? "all-subsets" : "balls"},
                {"measure", c.measure},
                {"mass", c.total_mass},
                {"lp_value", c.lp_value},
                {"gap", c.duality_gap},
                {"worst_slack", c.worst_slack},
                {"valid", c.valid}};
}

inline json to_json(const RDCurve& c) {
    json pts = json::array();
    for (const auto& p : c.points)
        pts.push_back(json{{"epsilon", p.eps},
                           {"N", p.N},
                           {"R_bits", p.rate_bits},
                           {"converged", p.converged},
                           {"iterations", p.iterations}});
    return json{{"source", c.source}, {"points", pts}};
}

inline std::string to_csv(const RDCurve& c) {
    std::ostringstream os;
    os << "epsilon,N,R_bits,converged,iterations\n";
    for (const auto& p : c.points)
        os << p.eps << ',' << p.N << ',' << p.rate_bits << ',' << (p.converged ? 1 : 0) << ','
           << p.iterations << '\n';
    return os.str();
}

inline json to_json(const DimensionEstimate& e) {
    json per = json::object();
    for (const auto& [n, s] : e.per_n_slopes) per[std::to_string(n)] = s;
    return json{{"slope", e.slope},
                {"intercept", e.intercept},
                {"max_residual", e.max_residual},
                {"method", e.method},
                {"per_N", per},
                {"points_used", e.points_used}};
}

inline json to_json(const Tiling& t) {
    json cells = json::object();
    json trusted = json::object();
    for (const auto& [a, cell] : t.cells) {
        cells[std::to_string(a)] = json::array({cell.lo, cell.hi});
        trusted[std::to_string(a)] = t.trusted.at(a);
    }
    return json{{"cells", cells},
                {"trusted", trusted},
                {"boundary", t.boundary},
                {"trusted_lo", t.trusted_lo},
                {"trusted_hi", t.trusted_hi}};
}

inline json to_json(const CoverSlopeReport& r) {
    json pts = json::array();
    for (const auto& p : r.points)
        pts.push_back(json{{"variant", p.variant},
                           {"epsilon", p.eps},
                           {"N1", p.n1},
                           {"N2", p.n2},
                           {"pack_bits_N1", p.pack_bits_n1},
                           {"pack_bits_N2", p.pack_bits_n2},
                           {"cover_bits_N1", p.cover_bits_n1},
                           {"cover_bits_N2", p.cover_bits_n2},
                           {"pack_increment", p.pack_increment},
                           {"cover_increment", p.cover_increment}});
    return json{{"points", pts}, {"pack_slope", r.pack_slope}, {"cover_slope", r.cover_slope}};
}

inline std::string to_csv(const CoverSlopeReport& r) {
    std::ostringstream os;
    os << "variant,epsilon,N1,N2,pack_bits_N1,pack_bits_N2,cover_bits_N1,cover_bits_N2,"
          "pack_increment,cover_increment\n";
    for (const auto& p : r.points)
        os << p.variant << ',' << p.eps << ',' << p.n1 << ',' << p.n2 << ',' << p.pack_bits_n1
           << ',' << p.pack_bits_n2 << ',' << p.cover_bits_n1 << ',' << p.cover_bits_n2 << ','
           << p.pack_increment << ',' << p.cover_increment << '\n';
    return os.str();
}

inline json to_json(const ExampleReport& r) {
    json out = json::array();
    for (const auto& o : r.outcomes)
        out.push_back(json{{"quantity", o.quantity},
                           {"measured", o.measured},
                           {"target_lo", o.target_lo},
                           {"target_hi", o.target_hi},
                           {"pass", o.pass}});
    return json{{"name", r.name}, {"outcomes", out}, {"pass", r.pass}};
}

inline json to_json(const PipelineReport& r) {
    json stages = json::array();
    for (const auto& st : r.stages) {
        json bc = json::array();
        for (const auto& b : st.bound_checks)
            bc.push_back(json{{"epsilon", b.eps},
                              {"admissible", b.admissible},
                              {"gmt_bits", b.gmt_bits},
                              {"ba_bits", b.ba_bits},
                              {"dominated", b.dominated}});
        json rd = json::array();
        for (const auto& p : st.rd_points)
            rd.push_back(json{{"epsilon", p.eps}, {"N", p.N}, {"R_bits", p.rate_bits},
                              {"converged", p.converged}});
        stages.push_back(json{{"N", st.N},
                              {"exponent", st.exponent},
                              {"frostman_mass", st.frostman_mass},
                              {"lp_value", st.lp_value},
                              {"duality_gap", st.duality_gap},
                              {"scaling_law_pass", st.scaling_law_pass},
                              {"scaling_law_margin", st.scaling_law_margin},
                              {"rd_points", rd},
                              {"bound_checks", bc}});
    }
    return json{{"s", r.s},
                {"delta", r.delta},
                {"tau", r.tau},
                {"stages", stages},
                {"cylinder_trajectory", r.cylinder_trajectory},
                {"final_measure", r.final_measure.mass},
                {"rdim", to_json(r.rdim)},
                {"truncation_error", r.truncation_error}};
}

// FNV-1a over the canonical dump; stable across runs for the manifest.
inline std::string config_hash(const json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

}  // namespace meandim

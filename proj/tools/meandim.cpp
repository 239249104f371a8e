// Experiment runner: configuration in, results/manifest out.
//
//   meandim <subcommand> --config <path> [--jobs N] [--out DIR]
//
// Subcommands: covering-profile, dim-profile, rd-curve, frostman,
// nice-measure, tiling, algebraic, example-suite, run (kind read from the
// config). Exit codes: 0 ok, 2 validation error, 3 capacity error,
// 4 numeric/solver error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "meandim/meandim.hpp"

namespace md = meandim;
using md::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Outputs {
    json results;
    std::string csv;
};

std::vector<double> parse_grid(const json& j) {
    if (j.is_array()) {
        auto g = j.get<std::vector<double>>();
        if (g.empty()) throw md::validation_error("config: empty grid");
        return g;
    }
    return md::geometric_grid(j.at("from").get<double>(), j.at("to").get<double>(),
                              j.at("count").get<std::size_t>());
}

md::SolveMode parse_mode(const json& cfg, const char* def = "greedy") {
    const std::string m = cfg.value("mode", def);
    if (m == "exact") return md::SolveMode::Exact;
    if (m == "greedy") return md::SolveMode::Greedy;
    throw md::validation_error("config: mode must be exact|greedy");
}

md::BlockFamily parse_family(const json& cfg, const char* def = "balls") {
    const std::string f = cfg.value("family", def);
    if (f == "all-subsets") return md::BlockFamily::AllSubsets;
    if (f == "balls") return md::BlockFamily::Balls;
    throw md::validation_error("config: family must be all-subsets|balls");
}

std::size_t budget_from(const json& cfg) {
    std::size_t budget = cfg.value("budget_points", std::size_t{8192});
    if (const char* env = std::getenv("MEANDIM_BUDGET_POINTS")) budget = std::strtoull(env, nullptr, 10);
    return budget;
}

// deterministic fan-out over grid indices; results land by index
template <typename F>
void parallel_over(std::size_t count, unsigned jobs, F&& f) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::vector<std::future<void>> futs;
    std::atomic<std::size_t> next{0};
    const unsigned workers = std::min<unsigned>(jobs, static_cast<unsigned>(count));
    for (unsigned w = 0; w < workers; ++w) {
        futs.push_back(std::async(std::launch::async, [&]() {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) f(i);
        }));
    }
    for (auto& fu : futs) fu.get();
}

md::SystemSpec system_from_config(const json& cfg, std::size_t budget) {
    if (cfg.contains("system")) return md::system_from_json(cfg.at("system"), budget);
    if (cfg.contains("algebraic"))
        return md::build_algebraic_system(md::algebraic_from_json(cfg.at("algebraic")), budget);
    throw md::validation_error("config: expected a 'system' or 'algebraic' block");
}

Outputs run_covering_profile(const json& cfg, unsigned jobs) {
    const std::size_t budget = budget_from(cfg);
    const auto eps = parse_grid(cfg.at("eps"));
    const auto ns = cfg.at("N").get<std::vector<int>>();
    const std::string est = cfg.value("estimator", "structural");
    Outputs out;
    if (est == "structural") {
        md::SystemSpec sys = system_from_config(cfg, budget);
        const int n1 = *std::min_element(ns.begin(), ns.end());
        const int n2 = *std::max_element(ns.begin(), ns.end());
        std::vector<std::pair<std::string, std::function<md::ProductStructure(int)>>> variants{
            {sys.label, [sys](int N) { return md::product_structure(sys, N, md::OrbitKind::Max); }}};
        const auto rep = md::cover_slope_profile(variants, {eps}, n1, n2);
        out.results = md::to_json(rep);
        out.csv = md::to_csv(rep);
        return out;
    }
    if (est != "enumerated") throw md::validation_error("config: estimator must be structural|enumerated");
    md::SystemSpec sys = system_from_config(cfg, budget);
    const auto mode = parse_mode(cfg);
    std::vector<md::EnumeratedCoverPoint> pts(eps.size() * ns.size());
    parallel_over(pts.size(), jobs, [&](std::size_t i) {
        const int N = ns[i / eps.size()];
        const double e = eps[i % eps.size()];
        const md::FiniteMetricSpace m = md::orbit_metric(sys, N, md::OrbitKind::Max);
        md::EnumeratedCoverPoint p;
        p.eps = e;
        p.N = N;
        p.covering = md::covering_number(m, e, mode).count;
        p.separating = md::separating_number(m, e, mode).count;
        pts[i] = p;
    });
    json rows = json::array();
    std::ostringstream csv;
    csv << "epsilon,N,covering,separating\n";
    for (const auto& p : pts) {
        rows.push_back(json{{"epsilon", p.eps},
                            {"N", p.N},
                            {"covering", p.covering},
                            {"separating", p.separating}});
        csv << p.eps << ',' << p.N << ',' << p.covering << ',' << p.separating << '\n';
    }
    out.results = json{{"points", rows}};
    out.csv = csv.str();
    return out;
}

Outputs run_dim_profile(const json& cfg, unsigned jobs) {
    (void)jobs;
    const std::size_t budget = budget_from(cfg);
    md::SystemSpec sys = system_from_config(cfg, budget);
    const auto eps = parse_grid(cfg.at("eps"));
    const auto ns = cfg.at("N").get<std::vector<int>>();
    const double tau = cfg.value("tau", 0.0);
    const md::OrbitKind kind = cfg.value("orbit", "max") == std::string("max") ? md::OrbitKind::Max
                                                                              : md::OrbitKind::Avg;
    const auto est = md::mean_hausdorff_estimate(sys, eps, ns, tau, kind, parse_mode(cfg, "exact"),
                                                 parse_family(cfg, "all-subsets"));
    json rows = json::array();
    std::ostringstream csv;
    csv << "epsilon,N,dim\n";
    for (const auto& p : est.points) {
        rows.push_back(json{{"epsilon", p.eps}, {"N", p.N}, {"dim", p.dim}});
        csv << p.eps << ',' << p.N << ',' << p.dim << '\n';
    }
    json plateau = json::array();
    for (const auto& [e, v] : est.plateau) plateau.push_back(json{{"epsilon", e}, {"dim", v}});
    Outputs out;
    out.results = json{{"points", rows},
                       {"plateau", plateau},
                       {"truncation_error", est.truncation_error}};
    out.csv = csv.str();
    return out;
}

Outputs run_rd_curve(const json& cfg, unsigned jobs) {
    const std::size_t budget = budget_from(cfg);
    const auto eps = parse_grid(cfg.at("eps"));
    const auto ns = cfg.at("N").get<std::vector<int>>();
    const std::string est = cfg.value("estimator", "structural");
    Outputs out;
    if (est == "structural") {
        const int n1 = *std::min_element(ns.begin(), ns.end());
        const int n2 = *std::max_element(ns.begin(), ns.end());
        std::function<std::vector<md::ScalarSlot>(int)> slots;
        std::string label;
        if (cfg.contains("algebraic")) {
            const auto spec = md::algebraic_from_json(cfg.at("algebraic"));
            if (spec.constraints() == 0) {
                md::SystemSpec base;
                base.alphabet = md::AlphabetSpec::torus(spec.r, static_cast<int>(spec.q));
                base.window = spec.window;
                slots = [base](int N) { return md::shift_rd_slots(base, N); };
                label = "torus_full_shift";
            } else {
                slots = [spec](int N) { return md::linked_rd_slots(spec, N); };
                label = "linked_action";
            }
        } else {
            md::SystemSpec sys = md::system_from_json(cfg.at("system"), budget);
            if (sys.alphabet.kind == md::AlphabetKind::ExplicitSet)
                throw md::validation_error(
                    "rd-curve: the structural path needs a uniform alphabet; use estimator=enumerated");
            slots = [sys](int N) { return md::shift_rd_slots(sys, N); };
            label = sys.label;
        }
        const auto rep = md::rd_slope_profile(slots, n1, n2, eps, label);
        out.results = json{{"curve", md::to_json(rep.curve)}, {"estimate", md::to_json(rep.estimate)}};
        out.csv = md::to_csv(rep.curve);
        return out;
    }
    if (est != "enumerated") throw md::validation_error("config: estimator must be structural|enumerated");
    md::SystemSpec sys = system_from_config(cfg, budget);
    md::RDCurve curve;
    curve.source = sys.label;
    std::vector<md::RDPoint> pts(eps.size() * ns.size());
    parallel_over(pts.size(), jobs, [&](std::size_t i) {
        const int N = ns[i / eps.size()];
        const double e = eps[i % eps.size()];
        const auto m = md::DiscreteDistribution::uniform(sys.points(N - 1).size());
        pts[i] = md::dynamical_rd(sys, m, N, e).point;
    });
    for (const auto& p : pts) curve.points.push_back(p);
    Outputs o;
    o.results = json{{"curve", md::to_json(curve)}};
    try {
        o.results["estimate"] = md::to_json(md::rdim_estimate(curve));
    } catch (const md::validation_error& e) {
        o.results["estimate_error"] = e.what();
    }
    o.csv = md::to_csv(curve);
    return o;
}

Outputs run_frostman(const json& cfg, unsigned) {
    const std::size_t budget = budget_from(cfg);
    md::FiniteMetricSpace space;
    if (cfg.contains("space")) {
        space = md::metric_space_from_json(cfg.at("space"));
    } else {
        md::SystemSpec sys = system_from_config(cfg, budget);
        const int N = cfg.value("N", 1);
        const md::OrbitKind kind = cfg.value("orbit", "avg") == std::string("max")
                                       ? md::OrbitKind::Max
                                       : md::OrbitKind::Avg;
        space = md::orbit_metric(sys, N, kind);
    }
    const double s = cfg.at("s").get<double>();
    const double delta = cfg.at("delta").get<double>();
    const double tau = cfg.value("tau", 0.0);
    const auto family = parse_family(cfg);
    const auto cert = md::frostman_measure(space, s, delta, tau, family);
    const auto law = md::verify_scaling_law(space, cert.measure, s, delta, tau, family);
    Outputs out;
    out.results = json{{"certificate", md::to_json(cert)},
                       {"scaling_law",
                        json{{"pass", law.pass},
                             {"worst_margin", law.worst_margin},
                             {"blocks_checked", law.blocks_checked}}}};
    std::ostringstream csv;
    csv << "point,measure\n";
    for (std::size_t i = 0; i < cert.measure.size(); ++i)
        csv << space.points[i] << ',' << cert.measure[i] << '\n';
    out.csv = csv.str();
    return out;
}

Outputs run_nice_measure(const json& cfg, unsigned) {
    const std::size_t budget = budget_from(cfg);
    md::SystemSpec sys = system_from_config(cfg, budget);
    const auto rep = md::nice_measure_pipeline(
        sys, cfg.at("s").get<double>(), cfg.at("delta").get<double>(), cfg.value("tau", 0.0),
        cfg.at("N").get<std::vector<int>>(), parse_grid(cfg.at("eps")), parse_family(cfg));
    Outputs out;
    out.results = md::to_json(rep);
    std::ostringstream csv;
    csv << "N,epsilon,R_bits,gmt_bits,admissible,dominated\n";
    for (const auto& st : rep.stages)
        for (std::size_t i = 0; i < st.bound_checks.size(); ++i) {
            const auto& b = st.bound_checks[i];
            csv << st.N << ',' << b.eps << ',' << b.ba_bits << ',' << b.gmt_bits << ','
                << (b.admissible ? 1 : 0) << ',' << (b.dominated ? 1 : 0) << '\n';
        }
    out.csv = csv.str();
    return out;
}

Outputs run_tiling(const json& cfg, unsigned) {
    const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
    const int count = cfg.value("traces", 10);
    const int lo = cfg.value("range_lo", -40);
    const int hi = cfg.value("range_hi", 40);
    const std::string recipe = cfg.value("recipe", "random");
    md::Rng rng(seed);
    std::vector<md::Tiling> tilings;
    json traces = json::array();
    std::ostringstream csv;
    csv << "trace,a,lo,hi,trusted\n";
    for (int t = 0; t < count; ++t) {
        md::MarkerTrace trace;
        if (recipe == "spaced") {
            trace = md::spaced_marker_trace(lo, hi, cfg.value("N", 5), cfg.value("M", 15), rng);
        } else {
            trace.begin = lo;
            trace.values.assign(static_cast<std::size_t>(hi - lo), 0.0);
            for (auto& v : trace.values)
                v = rng.next_unit() < 0.4 ? 0.2 + 0.8 * rng.next_unit() : 0.0;
            if (*std::max_element(trace.values.begin(), trace.values.end()) == 0.0)
                trace.values[trace.values.size() / 2] = 1.0;
        }
        md::Tiling til = md::tile(trace);
        for (const auto& [a, cell] : til.cells)
            csv << t << ',' << a << ',' << cell.lo << ',' << cell.hi << ','
                << (til.trusted.at(a) ? 1 : 0) << '\n';
        traces.push_back(md::to_json(til));
        tilings.push_back(std::move(til));
    }
    const double R = cfg.value("R", static_cast<double>(hi) / 2);
    const auto dens = md::boundary_density(tilings, R);
    Outputs out;
    out.results = json{{"tilings", traces},
                       {"density", dens.density},
                       {"empirical_M", dens.empirical_m},
                       {"R", R}};
    out.csv = csv.str();
    return out;
}

Outputs run_algebraic(const json& cfg, unsigned) {
    const auto spec = md::algebraic_from_json(cfg.at("algebraic"));
    const auto ns = cfg.value("N", std::vector<int>{2, 3, 4, 5, 6});
    const auto pd = md::prodim(spec, ns);
    Outputs out;
    json dims = json::object();
    for (const auto& [n, d] : pd.dims) dims[std::to_string(n)] = d;
    out.results = json{{"prodim",
                        json{{"dims", dims},
                             {"min_ratio", pd.min_ratio},
                             {"increment", pd.increment},
                             {"increment_stable", pd.increment_stable}}}};
    std::ostringstream csv;
    csv << "quantity,value\n";
    csv << "prodim_increment," << pd.increment << '\n';
    csv << "prodim_min_ratio," << pd.min_ratio << '\n';
    if (cfg.value("haar", true)) {
        try {
            const auto h = md::haar_measure(spec, budget_from(cfg));
            out.results["haar"] = json{{"solution_count", h.solution_count},
                                       {"points", h.measure.size()}};
            csv << "haar_solutions," << h.solution_count << '\n';
        } catch (const md::capacity_error& e) {
            out.results["haar"] = json{{"skipped", e.what()}};
        }
    }
    if (cfg.contains("sep_eps")) {
        const auto rep = md::separating_bound_check(spec, cfg.value("sep_N", 2),
                                                    cfg.at("sep_eps").get<double>(),
                                                    cfg.value("sep_delta", 0.5));
        out.results["separating_bound"] = json{{"lhs_log2", rep.lhs_log2},
                                               {"rhs_log2", rep.rhs_log2},
                                               {"exact", rep.exact},
                                               {"pass", rep.pass}};
        csv << "separating_margin_log2," << rep.margin_log2 << '\n';
    }
    if (cfg.value("rdim", false)) {
        const double q = static_cast<double>(spec.q);
        const auto rep = md::rdim_prodim_experiment(
            spec, md::geometric_grid(0.45, std::min(6.0 / q, 0.045), 6),
            md::geometric_grid(0.5, 1.0 / std::min<double>(q, 16.0), 6), ns);
        out.results["rdim_prodim"] = json{{"rdim_slope", rep.rdim.slope},
                                          {"cover_slope", rep.cover_slope},
                                          {"cover_slope_upper", rep.cover_slope_upper},
                                          {"prodim_increment", rep.prodim.increment},
                                          {"chain_ok", rep.chain_ok}};
        csv << "rdim_slope," << rep.rdim.slope << '\n';
        csv << "cover_slope," << rep.cover_slope << '\n';
    }
    out.csv = csv.str();
    return out;
}

Outputs run_example_suite(const json& cfg, unsigned) {
    const std::string name = cfg.at("example").get<std::string>();
    const auto rep = md::run_example_suite(name);
    Outputs out;
    out.results = md::to_json(rep);
    std::ostringstream csv;
    csv << "quantity,measured,target_lo,target_hi,pass\n";
    for (const auto& o : rep.outcomes)
        csv << o.quantity << ',' << o.measured << ',' << o.target_lo << ',' << o.target_hi << ','
            << (o.pass ? 1 : 0) << '\n';
    out.csv = csv.str();
    return out;
}

int dispatch(const std::string& kind, const json& cfg, unsigned jobs, const std::string& outdir) {
    const auto t0 = std::chrono::steady_clock::now();
    Outputs out;
    if (kind == "covering-profile") out = run_covering_profile(cfg, jobs);
    else if (kind == "dim-profile") out = run_dim_profile(cfg, jobs);
    else if (kind == "rd-curve") out = run_rd_curve(cfg, jobs);
    else if (kind == "frostman") out = run_frostman(cfg, jobs);
    else if (kind == "nice-measure") out = run_nice_measure(cfg, jobs);
    else if (kind == "tiling") out = run_tiling(cfg, jobs);
    else if (kind == "algebraic") out = run_algebraic(cfg, jobs);
    else if (kind == "example-suite") out = run_example_suite(cfg, jobs);
    else throw md::validation_error("unknown experiment kind '" + kind + "'");
    const auto t1 = std::chrono::steady_clock::now();

    std::filesystem::create_directories(outdir);
    {
        std::ofstream f(outdir + "/results.json");
        f << out.results.dump(2) << '\n';
    }
    {
        std::ofstream f(outdir + "/results.csv");
        f << out.csv;
    }
    json manifest{{"kind", kind},
                  {"config_hash", md::config_hash(cfg)},
                  {"version", kVersion},
                  {"wall_ms", std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()},
                  {"budget_points", budget_from(cfg)},
                  {"seed", cfg.value("seed", 0)},
                  {"tolerances", json{{"distance_abs", 1e-12},
                                      {"lp_feasibility", 1e-9},
                                      {"ba_gap_bits", 1e-8},
                                      {"scalar_gap_bits", 2e-5},
                                      {"dim_profile_s_abs", 1e-6}}}};
    {
        std::ofstream f(outdir + "/manifest.json");
        f << manifest.dump(2) << '\n';
    }
    std::cout << "wrote " << outdir << "/results.{json,csv} and manifest.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean-dimension laboratory"};
    app.require_subcommand(1);
    std::string config_path, outdir = ".";
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    const std::vector<std::string> kinds{"covering-profile", "dim-profile", "rd-curve",
                                         "frostman",         "nice-measure", "tiling",
                                         "algebraic",        "example-suite", "run"};
    for (const auto& k : kinds) {
        auto* sub = app.add_subcommand(k);
        sub->add_option("--config", config_path, "experiment configuration (JSON)")->required();
        sub->add_option("--jobs", jobs, "worker threads (default: hardware cores)");
        sub->add_option("--out", outdir, "output directory");
    }
    CLI11_PARSE(app, argc, argv);
    const std::string kind0 = app.get_subcommands().front()->get_name();

    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "error: cannot open config " << config_path << "\n";
        return 2;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    json cfg;
    try {
        cfg = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::cerr << "error: config parse failure at line " << line << ", column " << col << ": "
                  << e.what() << "\n";
        return 2;
    }
    const std::string kind = (kind0 == "run") ? cfg.value("kind", "") : kind0;
    try {
        return dispatch(kind, cfg, jobs, outdir);
    } catch (const md::validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const md::capacity_error& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return 3;
    } catch (const md::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const json::exception& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "meandim/serialize.hpp"

using namespace meandim;

TEST_CASE("metric space round trip") {
    auto s = FiniteMetricSpace::from_matrix("tri", {{0, 1, 2}, {1, 0, 1.5}, {2, 1.5, 0}});
    const json j = to_json(s);
    const auto back = metric_space_from_json(j);
    CHECK(back.label == s.label);
    CHECK(back.points == s.points);
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t k = 0; k < s.size(); ++k) CHECK(back.d(i, k) == s.d(i, k));
    CHECK_THROWS_AS(metric_space_from_json(json{{"points", json::array({"a", "b"})},
                                                {"dist", json::array({json::array({0.0})})}}),
                    validation_error);
}

TEST_CASE("system and alphabet round trips") {
    SystemSpec sys = build_sequence_example(4, SequenceVariant::Geometric, 2,
                                            EnumerationPolicy::sample(16, 3));
    const json j = to_json(sys);
    const auto back = system_from_json(j);
    CHECK(back.window == sys.window);
    CHECK(back.alphabet.kind == sys.alphabet.kind);
    CHECK(back.alphabet.values == sys.alphabet.values);
    CHECK(back.policy.sample_count == sys.policy.sample_count);
    CHECK(back.policy.seed == sys.policy.seed);
    CHECK(back.transform == sys.transform);
    CHECK(back.points(0) == sys.points(0));

    const json torus{{"kind", "torus"}, {"r", 2}, {"q", 5}};
    const auto a = alphabet_from_json(torus);
    CHECK(a.torus_dim == 2);
    CHECK(a.torus_levels == 5);
    CHECK_THROWS_AS(alphabet_from_json(json{{"kind", "mystery"}}), validation_error);
    // sampling policies demand an explicit seed
    CHECK_THROWS_AS(policy_from_json(json{{"sample", 10}}), validation_error);
}

TEST_CASE("constrained systems parse from the combined block") {
    const json j{{"alphabet", json{{"kind", "torus"}, {"r", 1}, {"q", 4}}},
                 {"W", 1},
                 {"constraint", json{{"a", 2}, {"M", json::array({json::array({1, -1})})}}}};
    const auto sys = system_from_json(j);
    const auto pts = sys.points(0);
    REQUIRE(pts.size() == 4);  // constant words of the x_{n+1} = x_n action
    for (const auto& w : pts)
        for (auto v : w) CHECK(v == w[0]);

    json bad = j;
    bad["alphabet"] = json{{"kind", "quantized-interval"}, {"levels", 4}};
    CHECK_THROWS_AS(system_from_json(bad), validation_error);
}

TEST_CASE("algebraic spec round trip") {
    AlgebraicActionSpec spec;
    spec.r = 2;
    spec.a = 2;
    spec.M = {{0, 1, -1, 0}};
    spec.q = 8;
    spec.window = 3;
    const auto back = algebraic_from_json(to_json(spec));
    CHECK(back.r == spec.r);
    CHECK(back.a == spec.a);
    CHECK(back.M == spec.M);
    CHECK(back.q == spec.q);
    CHECK(back.window == spec.window);
}

TEST_CASE("curve and certificate emissions") {
    RDCurve c;
    c.source = "demo";
    c.points.push_back({0.5, 2, 1.25, true, 42});
    const std::string csv = to_csv(c);
    CHECK(csv.find("epsilon,N,R_bits,converged,iterations") == 0);
    CHECK(csv.find("0.5,2,1.25,1,42") != std::string::npos);
    const json j = to_json(c);
    CHECK(j.at("points").size() == 1);

    auto two = FiniteMetricSpace::from_matrix("two", {{0, 1}, {1, 0}});
    const auto cert = frostman_measure(two, 1.0, 2.0, 0.1, BlockFamily::AllSubsets);
    const json cj = to_json(cert);
    CHECK(cj.at("mass").get<double>() == doctest::Approx(0.2));
    CHECK(cj.at("family").get<std::string>() == "all-subsets");
    CHECK(cj.at("measure").size() == 2);
}

TEST_CASE("config hash is stable and content sensitive") {
    const json a{{"kind", "tiling"}, {"seed", 7}};
    const json b{{"kind", "tiling"}, {"seed", 8}};
    CHECK(config_hash(a) == config_hash(a));
    CHECK(config_hash(a) != config_hash(b));
}

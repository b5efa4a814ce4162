#include <doctest.h>

#include <vmel/certificate.hpp>
#include <vmel/config.hpp>

using namespace vmel;

TEST_CASE("clause json round trip is bit exact") {
    Clause c = Clause::less("mu_s1 < 0", Interval(-0.97531, -0.9753), 0.0);
    Clause back = Clause::from_json(c.to_json());
    CHECK(back.enclosure.lo == c.enclosure.lo);
    CHECK(back.enclosure.hi == c.enclosure.hi);
    CHECK(back.bound == c.bound);
    CHECK(back.holds == c.holds);
    CHECK(back.recheck());
}

TEST_CASE("recheck flags a flipped clause") {
    Json cert;
    cert["format"] = "vmel-certificate-1";
    cert["pass"] = true;
    Json cell;
    cell["clauses"] = clauses_to_json({Clause::greater("d_eps(tau2) > 0", Interval(0.1, 0.2), 0.0)});
    cert["cells"] = Json::array({cell});
    CHECK(recheck_certificate(cert).empty());

    // flip the stored sign of the enclosure
    cert["cells"][0]["clauses"][0]["enclosure"][0] = hex_double(-0.2);
    cert["cells"][0]["clauses"][0]["enclosure"][1] = hex_double(-0.1);
    auto bad = recheck_certificate(cert);
    REQUIRE(!bad.empty());
    CHECK(bad[0].find("d_eps(tau2)") != std::string::npos);
}

TEST_CASE("unknown clause relation is a schema error") {
    Json cert;
    cert["format"] = "vmel-certificate-1";
    cert["pass"] = true;
    Clause c = Clause::greater("x", Interval(1.0, 2.0), 0.0);
    Json cj = c.to_json();
    cj["relation"] = "approx";
    Json cell;
    cell["clauses"] = Json::array({cj});
    cert["cells"] = Json::array({cell});
    auto bad = recheck_certificate(cert);
    REQUIRE(!bad.empty());
    CHECK(bad[0].find("unknown clause relation") != std::string::npos);
}

TEST_CASE("config parse and semantic hash") {
    Json j;
    j["problem"] = "fish-problem.json";
    j["threads"] = 4;
    j["schedule"] = Json::array({Json{{"mode", "melnikov"},
                                      {"eps", Json::array({0.0, 1e-3})},
                                      {"tau1", 4.6},
                                      {"tau2", 4.8},
                                      {"grid", 16}},
                                 Json{{"mode", "direct"},
                                      {"eps", Json::array({1e-3, 1e-2})},
                                      {"cells", 90}}});
    RunConfig c = config_from_json(j, "/data");
    CHECK(c.problem_path == "/data/fish-problem.json");
    CHECK(c.threads == 4);
    REQUIRE(c.schedule.size() == 2);
    CHECK(c.schedule[0].mode == "melnikov");
    CHECK(c.schedule[1].cells == 90);

    // thread count does not change the semantic fingerprint
    RunConfig c2 = c;
    c2.threads = 1;
    CHECK(c.semantic_hash() == c2.semantic_hash());
    // but the schedule does
    c2.schedule[0].tau1 = 4.61;
    CHECK(c.semantic_hash() != c2.semantic_hash());
}

TEST_CASE("schedule gaps are rejected") {
    Json j;
    j["problem"] = "p.json";
    j["schedule"] = Json::array({Json{{"mode", "melnikov"}, {"eps", Json::array({0.0, 1e-3})}},
                                 Json{{"mode", "direct"}, {"eps", Json::array({2e-3, 1e-2})}}});
    CHECK_THROWS_AS(config_from_json(j), error);
}

TEST_CASE("interval json helpers") {
    Interval x(-1.2345678901234567e-6, 9.876543210987654e+5);
    Interval back = interval_from_json(json_interval(x));
    CHECK(back.lo == x.lo);
    CHECK(back.hi == x.hi);
}

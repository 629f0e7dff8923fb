#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ebm/config.hpp"
#include "ebm/errors.hpp"
#include "ebm/params.hpp"

#include <cmath>
#include <numbers>

using namespace ebm;
using doctest::Approx;
using std::numbers::pi;

TEST_CASE("nondimensionalize with default parameters")
{
    PhysicalParams p;
    auto dp = nondimensionalize(p, 247);
    CHECK(dp.beta == Approx(1 / 0.208).epsilon(1e-12));
    CHECK(dp.beta == Approx(4.807692).epsilon(1e-6));
    CHECK(dp.gamma_water == Approx(22.59615).epsilon(1e-6));
    CHECK(dp.gamma_land == Approx(0.769231).epsilon(1e-6));
    CHECK(dp.eta == Approx(247 / (10 * 0.43472)).epsilon(1e-12));
    CHECK(dp.eta == Approx(56.8182).epsilon(1e-5));
    CHECK(dp.alpha == Approx(203 / (10 * 0.43472)).epsilon(1e-12));
    CHECK(dp.T_c == Approx(0.1));
    CHECK(dp.beta > 0.25);
}

TEST_CASE("nondimensionalize is homogeneous in Q")
{
    PhysicalParams p;
    auto a = nondimensionalize(p, 250), b = nondimensionalize(p, 500);
    CHECK(b.eta == Approx(2 * a.eta).epsilon(1e-14));
    CHECK(b.alpha == a.alpha);
    CHECK(b.beta == a.beta);
    CHECK(b.gamma_water == a.gamma_water);
    CHECK(b.gamma_land == a.gamma_land);

    PhysicalParams q;
    q.D = q.B;
    CHECK(nondimensionalize(q, 247).beta == 1.0);
}

TEST_CASE("invalid parameters")
{
    PhysicalParams p;
    CHECK_THROWS_AS(nondimensionalize(p, 0), InvalidParameter);
    p.D = 0;
    CHECK_THROWS_AS(nondimensionalize(p, 247), InvalidParameter);
    PhysicalParams r;
    r.a1 = 0.7;
    CHECK_THROWS_AS(r.validate(), InvalidParameter);
    PhysicalParams s;
    s.T_s_land = -1;
    CHECK_THROWS_AS(s.validate(), InvalidParameter);
}

TEST_CASE("insolation")
{
    PhysicalParams p;
    CHECK(insolation(0, p) == Approx(0.523).epsilon(1e-14));
    CHECK(insolation(pi / 2, p) == Approx(1.239).epsilon(1e-14));
    for (double th = 0; th <= pi; th += 0.1)
        CHECK(insolation(th, p) == Approx(insolation(pi - th, p)).epsilon(1e-14));
}

TEST_CASE("step albedo")
{
    PhysicalParams p;
    CHECK(albedo_step(0, Surface::water, p) == 0.06);
    CHECK(albedo_step(-2, Surface::water, p) == 0.6);
    CHECK(albedo_step(0, Surface::land, p) == 0.3);
    CHECK(albedo_step(-0.5, Surface::land, p) == 0.6);
    CHECK_THROWS_AS(albedo_step(-1, Surface::water, p), InvalidParameter);
    CHECK_THROWS_AS(albedo_step(-0.1, Surface::land, p), InvalidParameter);
    CHECK(threshold(Surface::water, p) == -1);
    CHECK(threshold(Surface::land, p) == Approx(-0.1));
}

TEST_CASE("smooth albedo")
{
    PhysicalParams p;
    CHECK(albedo_smooth(-1, Surface::water, p) == Approx(0.33).epsilon(1e-15));
    CHECK(albedo_smooth(-0.1, Surface::land, p) == Approx(0.45).epsilon(1e-15));
    CHECK(std::abs(albedo_smooth(10, Surface::water, p) - 0.06) < 1e-8);
    CHECK(std::abs(albedo_smooth(-10, Surface::water, p) - 0.6) < 1e-8);

    // pointwise limit of the step away from the threshold, and monotonicity
    double prev = 1;
    for (double T = -4; T <= 3; T += 0.01) {
        for (auto s : {Surface::water, Surface::land}) {
            double thr = threshold(s, p);
            if (std::abs(T - thr) > 0.5)
                CHECK(std::abs(albedo_smooth(T, s, p) - albedo_step(T, s, p)) < 1e-6);
        }
        double a = albedo_smooth(T, Surface::water, p);
        CHECK(a <= prev);
        prev = a;
    }

    // derivative against central differences
    for (double T : {-1.3, -1.02, -1.0, -0.97, -0.5}) {
        double e = 1e-6;
        double fd = (albedo_smooth(T + e, Surface::water, p) - albedo_smooth(T - e, Surface::water, p)) / (2 * e);
        CHECK(albedo_smooth_derivative(T, Surface::water, p) == Approx(fd).epsilon(1e-6).scale(1));
    }
}

TEST_CASE("source term")
{
    PhysicalParams p;
    auto dp = nondimensionalize(p, 247);
    CHECK(source_term(pi / 2, false, Surface::water, dp, p) == Approx(19.47).epsilon(1e-3));
    CHECK(source_term(0, true, Surface::water, dp, p) == Approx(-34.81).epsilon(1e-3));
    double expected = dp.eta * 0.523 * 0.4 - dp.alpha;
    CHECK(source_term(0, true, Surface::water, dp, p) == Approx(expected).epsilon(1e-14));
    for (double th = 0; th <= pi; th += 0.2) {
        CHECK(source_term(th, true, Surface::water, dp, p) < source_term(th, false, Surface::water, dp, p));
        CHECK(source_term(th, true, Surface::land, dp, p) < source_term(th, false, Surface::land, dp, p));
    }
}

TEST_CASE("continent geometry")
{
    auto c = continent_config(pi / 4, 0);
    CHECK(c.theta_l1 == Approx(3 * pi / 8).epsilon(1e-15));
    CHECK(c.theta_l2 == Approx(5 * pi / 8).epsilon(1e-15));
    CHECK(c.theta_l1 + c.theta_l2 == Approx(pi).epsilon(1e-15));
    CHECK(c.symmetric());
    auto s = continent_config(pi / 4, 0.1);
    CHECK(s.theta_l1 == Approx(3 * pi / 8 - 0.1).epsilon(1e-15));
    CHECK(s.theta_l2 == Approx(5 * pi / 8 - 0.1).epsilon(1e-15));
    CHECK(s.theta_l2 - s.theta_l1 == Approx(pi / 4).epsilon(1e-14));
    CHECK(!s.symmetric());
    CHECK(s.surface_at(pi / 2) == Surface::land);
    CHECK(s.surface_at(0.2) == Surface::water);
    CHECK_THROWS_AS(continent_config(0, 0), InvalidParameter);
    CHECK_THROWS_AS(continent_config(pi, 0), InvalidParameter);
    CHECK_THROWS_AS(continent_config(pi / 4, 1.5), InvalidParameter);
    CHECK(aquaplanet_config().surface_at(pi / 2) == Surface::water);
}

TEST_CASE("config documents")
{
    auto rc = parse_config(R"({"A": 210, "Q": 300, "continent.l": 0.7, "continent.epsilon": 0.1})");
    CHECK(rc.p.A == 210);
    CHECK(rc.Q == 300);
    CHECK(rc.cfg.has_land());
    CHECK(rc.cfg.l == Approx(0.7));

    auto nested = parse_config(R"({"continent": {"kind": "continent", "epsilon": 0}})");
    CHECK(nested.cfg.has_land());
    CHECK(nested.cfg.theta_l1 == Approx(3 * pi / 8));
    CHECK(nested.p.B == PhysicalParams{}.B);

    auto empty = parse_config("{}");
    CHECK(!empty.cfg.has_land());
    CHECK(empty.Q == 247);

    CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), InvalidParameter);
    CHECK_THROWS_AS(parse_config(R"({"A": "x"})"), InvalidParameter);
    CHECK_THROWS_AS(parse_config(R"({"continent.kind": "moon"})"), InvalidParameter);
    CHECK_THROWS_AS(parse_config("{\n\"A\": 1,\n}"), InvalidParameter);
    CHECK_THROWS_AS(parse_config(R"({"a1": 0.9})"), InvalidParameter);
    try {
        parse_config("{\n  \"A\": 203,\n  \"sigmaa\": 50\n}");
        FAIL("no exception");
    } catch (const InvalidParameter& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        CHECK(std::string(e.what()).find("sigmaa") != std::string::npos);
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ebm/bim.hpp"
#include "ebm/errors.hpp"
#include "ebm/fdm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace ebm;
using std::numbers::pi;

namespace {

double max_err_cos(double (*st)(double, double, double, double, double), int N)
{
    double h = pi / N, e = 0;
    for (int i = 1; i < N; ++i) {
        double th = i * h;
        double v = st(std::cos(th - h), std::cos(th), std::cos(th + h), th, h);
        e = std::max(e, std::abs(v - 2 * std::cos(th)));
    }
    return e;
}

double linf(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("grid")
{
    auto g = make_grid(100);
    CHECK(g.theta.size() == 101);
    CHECK(g.theta.front() == 0);
    CHECK(g.theta.back() == pi);
    CHECK(g.h == doctest::Approx(pi / 100));
    CHECK_THROWS_AS(make_grid(32), InvalidParameter);
}

TEST_CASE("stencils annihilate constants")
{
    for (auto st : {stencil_centered, stencil_biased, stencil_forward, stencil_backward})
        CHECK(std::abs(st(3.0, 3.0, 3.0, 1.0, 1e-2)) < 1e-12);
    CHECK_THROWS_AS(stencil_centered(1, 1, 1, 0.0, 1e-2), InvalidParameter);
    CHECK_THROWS_AS(stencil_forward(1, 1, 1, pi, 1e-2), InvalidParameter);
}

TEST_CASE("centered stencil on the first spherical harmonic")
{
    double e400 = max_err_cos(stencil_centered, 400), e800 = max_err_cos(stencil_centered, 800);
    CHECK(e400 < 1e-3);
    CHECK(e400 / e800 == doctest::Approx(4).epsilon(0.05));
}

TEST_CASE("one-sided and as-derived stencils")
{
    const double h = 1e-3, th = 1.0;
    for (auto st : {stencil_forward, stencil_backward, stencil_biased})
        CHECK(std::abs(st(std::cos(th - h), std::cos(th), std::cos(th + h), th, h) - 2 * std::cos(th)) < 1e-2);

    // forward and biased are first order; their distance to centered halves with h
    for (auto st : {stencil_forward, stencil_biased}) {
        auto gap = [&](double hh) {
            return std::abs(st(std::cos(th - hh), std::cos(th), std::cos(th + hh), th, hh) -
                            stencil_centered(std::cos(th - hh), std::cos(th), std::cos(th + hh), th, hh));
        };
        CHECK(gap(1e-3) / gap(5e-4) == doctest::Approx(2).epsilon(0.02));
    }
}

TEST_CASE("rhs of a uniform field is the local source balance")
{
    PhysicalParams p;
    auto cfg = continent_config(pi / 4, 0.1);
    auto dp = nondimensionalize(p, 280);
    FdmModel m(200, p, dp, cfg);
    std::vector<double> T(201, 0.4), d;
    m.rhs(T, d, 0);
    for (int i = 1; i < 200; ++i) {
        double expect = (-dp.beta * 0.4 + m.source(0.4, i)) / m.gamma_at(i);
        CHECK(d[i] == doctest::Approx(expect).epsilon(1e-12));
        auto s = cfg.surface_at(m.grid().theta[i]);
        CHECK(m.gamma_at(i) == doctest::Approx(s == Surface::land ? dp.gamma_land : dp.gamma_water));
        double a = albedo_smooth(0.4, s, p);
        CHECK(m.source(0.4, i) ==
              doctest::Approx(dp.eta * insolation(m.grid().theta[i], p) * (1 - a) - dp.alpha).epsilon(1e-12));
    }
    CHECK(d[0] == d[2]);
    CHECK(d[200] == d[198]);
}

TEST_CASE("nodes on a continent edge are half land")
{
    PhysicalParams p;
    auto dp = nondimensionalize(p, 294);
    FdmModel m(400, p, dp, continent_config(pi / 4, 0));
    CHECK(m.land_weight(150) == 0.5);
    CHECK(m.land_weight(250) == 0.5);
    CHECK(m.land_weight(149) == 0);
    CHECK(m.land_weight(151) == 1);
    for (double T : {-0.5, 0.3}) {
        double mean = 0.5 * (albedo_smooth(T, Surface::land, p) + albedo_smooth(T, Surface::water, p));
        CHECK(m.source(T, 150) == doctest::Approx(dp.eta * insolation(m.grid().theta[150], p) * (1 - mean) - dp.alpha));
        CHECK(m.source(T, 250) == doctest::Approx(m.source(T, 150)));
    }
    CHECK(m.gamma_at(150) == doctest::Approx(0.5 * (dp.gamma_land + dp.gamma_water)));

    FdmModel off(404, p, dp, continent_config(pi / 4, 0));
    for (int i = 0; i <= 404; ++i)
        CHECK((off.land_weight(i) == 0 || off.land_weight(i) == 1));
}

TEST_CASE("ghost rules hold along trajectories")
{
    PhysicalParams p;
    auto dp = nondimensionalize(p, 280);
    FdmModel m(100, p, dp, continent_config(pi / 4, 0.1));
    auto s0 = make_state(m, [](double th) { return 0.5 * std::cos(3 * th) - 0.2 * th; });
    CHECK(s0.T[0] == s0.T[2]);
    auto traj = integrate(s0, 0.5, m, {0.1, 0.2, 0.3});
    REQUIRE(traj.size() == 4);
    for (const auto& s : traj) {
        CHECK(s.T[0] == s.T[2]);
        CHECK(s.T[100] == s.T[98]);
    }
    auto echo = integrate(s0, 0.0, m);
    REQUIRE(echo.size() == 1);
    CHECK(echo[0].T == s0.T);
}

TEST_CASE("comparison principle")
{
    PhysicalParams p;
    auto dp = nondimensionalize(p, 300);
    FdmModel m(200, p, dp, aquaplanet_config());
    auto lo = make_state(m, [](double th) { return -1.2 + 0.6 * std::sin(th); });
    auto hi = make_state(m, [](double th) { return -1.1 + 0.6 * std::sin(th) + 0.05 * std::cos(th); });
    std::vector<double> times;
    for (int k = 1; k <= 10; ++k)
        times.push_back(0.1 * k);
    auto a = integrate(lo, 1.0, m, times), b = integrate(hi, 1.0, m, times);
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t i = 0; i < a[k].T.size(); ++i)
            CHECK(a[k].T[i] <= b[k].T[i]);
}

TEST_CASE("meridional symmetry is preserved")
{
    PhysicalParams p;
    auto dp = nondimensionalize(p, 290);
    FdmModel m(200, p, dp, continent_config(pi / 4, 0));
    auto s0 = make_state(m, [](double th) { return -0.8 + 1.2 * std::sin(th) * std::sin(th); });
    auto traj = integrate(s0, 2.0, m, {0.5, 1.0, 1.5});
    for (const auto& s : traj)
        for (int i = 0; i <= 200; ++i)
            CHECK(std::abs(s.T[i] - s.T[200 - i]) < 1e-8);
}

TEST_CASE("assumed solutions and their forcing")
{
    PhysicalParams p;
    auto dp = nondimensionalize(p, 1.0);
    for (auto w : {AssumedSolution::gauss_pulse, AssumedSolution::moving_gauss}) {
        for (double th : {0.4, 1.2, 2.0, 2.9})
            for (double t : {0.0, 0.7, 1.9}) {
                auto f = [&](double x, double tt) { return assumed_solution(w, x, tt).T; };
                auto v = assumed_solution(w, th, t);
                const double e = 1e-3;
                double Tt = (-f(th, t + 2 * e) + 8 * f(th, t + e) - 8 * f(th, t - e) + f(th, t - 2 * e)) / (12 * e);
                double Tth = (-f(th + 2 * e, t) + 8 * f(th + e, t) - 8 * f(th - e, t) + f(th - 2 * e, t)) / (12 * e);
                double Tthth = (-f(th + 2 * e, t) + 16 * f(th + e, t) - 30 * f(th, t) + 16 * f(th - e, t) -
                                f(th - 2 * e, t)) /
                               (12 * e * e);
                auto close = [](double a, double b) { return std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(b)); };
                CHECK(close(v.T_t, Tt));
                CHECK(close(v.T_th, Tth));
                CHECK(close(v.T_thth, Tthth));
                double rho = dp.gamma_water * Tt - Tthth - std::cos(th) / std::sin(th) * Tth + dp.beta * v.T;
                CHECK(close(artificial_forcing(w, th, t, dp), rho));
            }
        // sin * dT/dtheta vanishes at both poles
        for (double th : {0.0, pi})
            CHECK(std::abs(std::sin(th) * assumed_solution(w, th, 0.3).T_th) < 1e-12);
    }
}

TEST_CASE("artificial source convergence")
{
    std::vector<ArtificialSourceReport> runs;
    for (int N : {100, 200})
        runs.push_back(artificial_source_run(AssumedSolution::moving_gauss, N, 2.0));
    CHECK(convergence_order(runs) > 1.7);
    CHECK(runs[1].linf < 1e-2);
    CHECK(runs[0].linf / runs[1].linf == doctest::Approx(4).epsilon(0.1));

    auto g = artificial_source_run(AssumedSolution::gauss_pulse, 200, 2.0);
    CHECK(g.linf < 1e-2);
    CHECK(g.l2 <= g.linf);
    CHECK(!g.times.empty());
    CHECK(g.times.size() == g.linf_history.size());

    std::vector<ArtificialSourceReport> single{runs[0]};
    CHECK(std::isnan(convergence_order(single)));
    auto synth = runs;
    synth[0].linf = 4e-4;
    synth[1].linf = 1e-4;
    CHECK(convergence_order(synth) == doctest::Approx(2).epsilon(1e-12));
}

TEST_CASE("snowball relaxation reaches the all-ice solution")
{
    PhysicalParams p;
    const double Q = 240;
    auto dp = nondimensionalize(p, Q);
    // the default tolerances leave a rate floor near 1e-3 through the stiff modes
    FdmOptions tight;
    tight.rtol = 1e-10;
    tight.atol = 1e-12;
    FdmModel m(200, p, dp, aquaplanet_config(), tight);
    auto s = relax(make_state(m, [](double) { return -3.0; }), m, 1e-6, 300);
    CHECK(m.rhs_norm(s.T) < 1e-6);

    GreenKernel k(dp.beta);
    auto ctx = make_context(p, aquaplanet_config(), Q, k);
    auto sols = enumerate_equilibria(Q, ctx);
    auto it = std::find_if(sols.begin(), sols.end(), [](auto& x) { return x.label.code() == "oi0"; });
    REQUIRE(it != sols.end());
    auto ref = sample_profile(m.grid().theta, *it, ctx);
    CHECK(linf(s.T, ref) < 5e-3);
    CHECK(std::abs(s.T[100] - ref[100]) < 5e-3);
}

TEST_CASE("fixed points stay put and the smooth albedo approaches the step")
{
    PhysicalParams p;
    auto dp = nondimensionalize(p, 320);
    FdmOptions smooth_opt;
    smooth_opt.rtol = 1e-10;
    smooth_opt.atol = 1e-12;
    FdmOptions step_opt = smooth_opt;
    step_opt.albedo = AlbedoMode::step;
    FdmModel smooth(200, p, dp, aquaplanet_config(), smooth_opt), step(200, p, dp, aquaplanet_config(), step_opt);
    auto warm = [](double th) { return 1.0 + std::sin(th); };
    auto a = relax(make_state(smooth, warm), smooth, 1e-7, 300);
    auto b = relax(make_state(step, warm), step, 1e-7, 300);
    CHECK(linf(a.T, b.T) < 1e-2);

    auto later = integrate(a, a.t + 10, smooth);
    CHECK(linf(later.back().T, a.T) < 1e-4);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ebm/bim.hpp"
#include "ebm/errors.hpp"
#include "ebm/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace ebm;
using std::numbers::pi;

namespace {

double linf(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

FdmOptions tight()
{
    FdmOptions o;
    o.rtol = 1e-10;
    o.atol = 1e-12;
    return o;
}

} // namespace

TEST_CASE("albedo feedback coefficient")
{
    PhysicalParams p;
    auto dp = nondimensionalize(p, 280);
    for (double th : {0.2, 1.0, 2.5}) {
        for (double T : {-1.3, -1.05, -0.9, 0.4}) {
            // central difference of the smooth-albedo source in T
            auto h = [&](double x) { return dp.eta * insolation(th, p) * (1 - albedo_smooth(x, Surface::water, p)); };
            double e = 1e-6, fd = (h(T + e) - h(T - e)) / (2 * e);
            double v = source_jacobian_hT(T, th, Surface::water, p, dp);
            CHECK(v >= 0);
            CHECK(v == doctest::Approx(fd).epsilon(1e-6).scale(1));
        }
        // at the threshold the tanh slope is sigma / 2 times the albedo jump
        double at = source_jacobian_hT(-1, th, Surface::water, p, dp);
        CHECK(at == doctest::Approx(dp.eta * insolation(th, p) * (p.a2 - p.a1) * p.sigma / 2).epsilon(1e-12));
        CHECK(source_jacobian_hT(-3, th, Surface::water, p, dp) < 1e-60);
        CHECK(source_jacobian_hT(3, th, Surface::land, p, dp) < 1e-60);
    }
}

TEST_CASE("perturbation matrix is the Jacobian of the discrete right-hand side")
{
    PhysicalParams p;
    auto dp = nondimensionalize(p, 280);
    const int N = 64;
    // with epsilon = 0 both continent edges fall on nodes
    for (double eps : {0.1, 0.0}) {
        CAPTURE(eps);
        FdmModel m(N, p, dp, continent_config(pi / 4, eps));
        auto s = make_state(m, [](double th) { return -1 + 0.8 * std::cos(th) + 0.3 * std::sin(2 * th); });
        auto H = build_H(s.T, m);
        REQUIRE(H.rows() == N - 1);

        std::vector<double> dp_, dm;
        double worst = 0, scale = H.cwiseAbs().maxCoeff();
        for (int j = 1; j < N; ++j) {
            const double e = 1e-6;
            auto up = s.T, dn = s.T;
            up[j] += e;
            dn[j] -= e;
            apply_ghost(up);
            apply_ghost(dn);
            m.rhs(up, dp_, 0);
            m.rhs(dn, dm, 0);
            for (int i = 1; i < N; ++i) {
                double fd = (dp_[i] - dm[i]) / (2 * e);
                worst = std::max(worst, std::abs(fd - H(i - 1, j - 1)));
            }
        }
        CHECK(worst < 1e-3 * scale);

        // tridiagonal, with every off-diagonal product positive
        for (int i = 0; i < N - 1; ++i)
            for (int j = 0; j < N - 1; ++j)
                if (std::abs(i - j) > 1)
                    CHECK(H(i, j) == 0);
        auto t = build_H_tridiagonal(s.T, m);
        for (std::size_t i = 0; i < t.sub.size(); ++i)
            CHECK(t.sub[i] * t.sup[i] > 0);
    }
}

TEST_CASE("without albedo feedback the constant mode decays at beta over gamma")
{
    PhysicalParams p;
    auto dp = nondimensionalize(p, 247);
    FdmModel m(400, p, dp, aquaplanet_config());
    auto s = make_state(m, [](double th) { return -0.9 + 0.5 * std::sin(th); });
    auto r = eigen_classify(s.T, m, 1e-6, true);
    CHECK(r.max_real_eig == doctest::Approx(-dp.beta / dp.gamma_water).epsilon(1e-9));
    CHECK(r.verdict == Verdict::stable);
    CHECK(r.spectrum.size() == 399);

    // the same coupled through a continent: the slowest mode is still a pure decay
    FdmModel c(400, p, dp, continent_config(pi / 4, 0.1));
    auto rc = eigen_classify(s.T, c, 1e-6, true);
    CHECK(rc.max_real_eig < 0);
    CHECK(rc.max_real_eig > -dp.beta / dp.gamma_land);
}

TEST_CASE("spectra from the dense and tridiagonal paths agree")
{
    PhysicalParams p;
    auto dp = nondimensionalize(p, 290);
    FdmModel m(80, p, dp, continent_config(pi / 4, 0.0));
    auto s = make_state(m, [](double th) { return -1 + 0.6 * std::sin(th); });
    auto t = build_H_tridiagonal(s.T, m);
    auto a = spectrum(t), b = spectrum(build_H(s.T, m), false);
    REQUIRE(a.size() == 79);
    REQUIRE(b.size() == 79);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::abs(a[i].imag()) == 0);
        CHECK(std::abs(a[i] - b[i]) < 1e-8 * std::abs(a.back()));
    }
    CHECK(max_real_eigenvalue(t) == doctest::Approx(a.front().real()).epsilon(1e-10));
    for (std::size_t i = 1; i < a.size(); ++i)
        CHECK(a[i - 1].real() >= a[i].real());
}

TEST_CASE("complex eigenvalues come in conjugate pairs")
{
    Tridiagonal t;
    for (int i = 0; i < 12; ++i)
        t.diag.push_back(-1.0 - 0.1 * i);
    for (int i = 0; i < 11; ++i) {
        t.sub.push_back(i % 2 ? 0.7 : -0.7);
        t.sup.push_back(0.9);
    }
    auto ev = spectrum(t);
    REQUIRE(ev.size() == 12);
    int complex_count = 0;
    for (auto z : ev) {
        if (std::abs(z.imag()) < 1e-12)
            continue;
        ++complex_count;
        auto it = std::find_if(ev.begin(), ev.end(), [&](auto w) { return std::abs(w - std::conj(z)) < 1e-10; });
        CHECK(it != ev.end());
    }
    CHECK(complex_count > 0);
    CHECK(complex_count % 2 == 0);
    CHECK(max_real_eigenvalue(t) == doctest::Approx(ev.front().real()).epsilon(1e-12));
}

TEST_CASE("verdict thresholds")
{
    CHECK(verdict_from_eigen(1e-5, 1e-6) == Verdict::unstable);
    CHECK(verdict_from_eigen(-1e-5, 1e-6) == Verdict::stable);
    CHECK(verdict_from_eigen(5e-7, 1e-6) == Verdict::marginal);
    CHECK(verdict_from_eigen(-5e-7, 1e-6) == Verdict::marginal);
    CHECK(to_string(Verdict::marginal) == "marginal");
    CHECK(to_string(StabilityMethod::slope) == "slope");
}

TEST_CASE("slope theorem verdicts")
{
    std::vector<SlopeSample> rising, falling, fold;
    for (int k = 0; k < 5; ++k) {
        rising.push_back({250.0 + k, 2.0 * k});
        falling.push_back({250.0 + k, -2.0 * k});
    }
    for (auto v : slope_classify(rising))
        CHECK(v == Verdict::stable);
    for (auto v : slope_classify(falling))
        CHECK(v == Verdict::unstable);

    // Q = 260 - (T - 5)^2 / 4 sampled through its turning point
    for (int k = 0; k <= 10; ++k) {
        double T = k;
        fold.push_back({260 - (T - 5) * (T - 5) / 4, T});
    }
    auto v = slope_classify(fold);
    for (int k = 0; k < 5; ++k)
        CHECK(v[k] == Verdict::stable);
    CHECK(v[5] == Verdict::marginal);
    for (int k = 6; k <= 10; ++k)
        CHECK(v[k] == Verdict::unstable);

    CHECK_THROWS_AS(slope_classify({{250, 1}, {251, 2}}), InvalidParameter);
}

TEST_CASE("heuristic perturbation runs")
{
    PhysicalParams p;
    auto dp = nondimensionalize(p, 240);
    FdmModel m(200, p, dp, aquaplanet_config(), tight());
    auto s = relax(make_state(m, [](double) { return -3.0; }), m, 1e-6, 300);

    HeuristicOptions zero;
    zero.amplitude = 0;
    CHECK(heuristic_run(s.T, m, zero).verdict == Verdict::stable);
    auto r = heuristic_run(s.T, m);
    CHECK(r.verdict == Verdict::stable);
    CHECK(r.method == StabilityMethod::heuristic);
}

TEST_CASE("leading eigenvalue is the decay rate of a perturbed steady state")
{
    PhysicalParams p;
    auto dp = nondimensionalize(p, 320);
    FdmModel m(200, p, dp, aquaplanet_config(), tight());
    auto s = relax(make_state(m, [](double th) { return 1.0 + std::sin(th); }), m, 1e-8, 400);
    double lam = eigen_classify(s.T, m).max_real_eig;
    REQUIRE(lam < 0);

    auto kicked = s;
    for (int i = 0; i <= 200; ++i)
        kicked.T[i] += 1e-3 * (1 + 0.5 * std::cos(s.grid.theta[i]));
    apply_ghost(kicked.T);
    kicked.t = 0;
    auto traj = integrate(kicked, 40, m, {30.0, 40.0});
    REQUIRE(traj.size() == 2);
    double rate = std::log(linf(traj[1].T, s.T) / linf(traj[0].T, s.T)) / 10;
    CHECK(rate == doctest::Approx(lam).epsilon(0.05));
}

TEST_CASE("snowball and warm states")
{
    PhysicalParams p;
    const double Q = 247;
    auto dp = nondimensionalize(p, Q);
    GreenKernel k(dp.beta);
    auto ctx = make_context(p, aquaplanet_config(), Q, k);
    auto sols = enumerate_equilibria(Q, ctx);
    auto ice = std::find_if(sols.begin(), sols.end(), [](auto& x) { return x.label.code() == "oi0"; });
    REQUIRE(ice != sols.end());

    FdmModel m(1600, p, dp, aquaplanet_config());
    auto T = sample_profile(m.grid().theta, *ice, ctx);
    auto r = eigen_classify(T, m, 1e-6, false, false);
    CHECK(r.verdict == Verdict::stable);
    // deep in the ice the feedback is negligible and the constant mode leads
    CHECK(r.max_real_eig == doctest::Approx(-dp.beta / dp.gamma_water).epsilon(1e-6));
    CHECK(r.spectrum.empty());
}

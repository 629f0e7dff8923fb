#include "ebm/params.hpp"
#include "ebm/errors.hpp"

#include <cmath>
#include <string>

namespace ebm {

void PhysicalParams::validate() const
{
    auto positive = [](double v, const char* name) {
        if (!(v > 0))
            throw InvalidParameter(std::string(name) + " must be strictly positive");
    };
    positive(B, "B");
    positive(D, "D");
    positive(C_water, "C_water");
    positive(C_land, "C_land");
    positive(t0, "t0");
    positive(T_s, "T_s");
    positive(T_s_land, "T_s_land");
    if (!(0 <= a1 && a1 < a2 && a2 <= 1))
        throw InvalidParameter("water albedos must satisfy 0 <= a1 < a2 <= 1");
    if (!(0 <= a1_land && a1_land < a2_land && a2_land <= 1))
        throw InvalidParameter("land albedos must satisfy 0 <= a1_land < a2_land <= 1");
    if (!(sigma > 0))
        throw InvalidParameter("sigma must be strictly positive");
}

DimensionlessParams nondimensionalize(const PhysicalParams& p, double Q)
{
    p.validate();
    if (!(Q > 0))
        throw InvalidParameter("solar constant Q must be positive");
    DimensionlessParams dp;
    dp.alpha = p.A / (p.T_s * p.D);
    dp.beta = p.B / p.D;
    dp.eta = Q / (p.T_s * p.D);
    dp.gamma_water = p.C_water / (p.t0 * p.D);
    dp.gamma_land = p.C_land / (p.t0 * p.D);
    dp.T_c = p.T_s_land / p.T_s;
    return dp;
}

double insolation(double theta, const PhysicalParams& p)
{
    double c = std::cos(theta - std::numbers::pi / 2);
    return p.s0 + p.s1 * c * c;
}

double threshold(Surface surface, const PhysicalParams& p)
{
    return surface == Surface::water ? -1.0 : -p.T_s_land / p.T_s;
}

double albedo_ice_flag(bool ice, Surface surface, const PhysicalParams& p)
{
    if (surface == Surface::water)
        return ice ? p.a2 : p.a1;
    return ice ? p.a2_land : p.a1_land;
}

double albedo_step(double T, Surface surface, const PhysicalParams& p)
{
    double thr = threshold(surface, p);
    if (T == thr)
        throw InvalidParameter("step albedo is ambiguous at the ice threshold");
    return albedo_ice_flag(T < thr, surface, p);
}

double albedo_smooth(double T, Surface surface, const PhysicalParams& p)
{
    double lo = albedo_ice_flag(false, surface, p);
    double hi = albedo_ice_flag(true, surface, p);
    double x = -p.sigma * (T - threshold(surface, p));
    // tanh is exactly +-1 in double precision beyond |x| = 20
    double th = x > 20 ? 1.0 : x < -20 ? -1.0 : std::tanh(x);
    return lo + 0.5 * (hi - lo) * (1.0 + th);
}

double albedo_smooth_derivative(double T, Surface surface, const PhysicalParams& p)
{
    double lo = albedo_ice_flag(false, surface, p);
    double hi = albedo_ice_flag(true, surface, p);
    double thr = threshold(surface, p);
    double ch = std::cosh(p.sigma * (T - thr));
    if (!std::isfinite(ch))
        return 0.0;
    return -0.5 * p.sigma * (hi - lo) / (ch * ch);
}

double source_term(double theta, bool ice, Surface surface,
                   const DimensionlessParams& dp, const PhysicalParams& p)
{
    return dp.eta * insolation(theta, p) * (1.0 - albedo_ice_flag(ice, surface, p)) - dp.alpha;
}

Surface ContinentConfig::surface_at(double theta) const
{
    if (kind == Geometry::continent && theta >= theta_l1 && theta <= theta_l2)
        return Surface::land;
    return Surface::water;
}

ContinentConfig continent_config(double l, double epsilon)
{
    constexpr double pi = std::numbers::pi;
    if (!(l > 0 && l < pi))
        throw InvalidParameter("continent extent must lie in (0, pi)");
    ContinentConfig c;
    c.kind = Geometry::continent;
    c.l = l;
    c.epsilon = epsilon;
    c.theta_l1 = pi / 2 - l / 2 - epsilon;
    c.theta_l2 = pi / 2 + l / 2 - epsilon;
    if (!(c.theta_l1 > 0 && c.theta_l2 < pi))
        throw InvalidParameter("continent shift pushes an edge past a pole");
    return c;
}

ContinentConfig aquaplanet_config()
{
    ContinentConfig c;
    c.kind = Geometry::aquaplanet;
    c.l = 0;
    c.epsilon = 0;
    return c;
}

} // namespace ebm

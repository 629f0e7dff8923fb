#pragma once

#include <numbers>

namespace ebm {

enum class Surface { water, land };

// Dimensional model parameters. Heat capacities are stored in
// W m^-2 C^-1 yr (i.e. already multiplied by B * t0).
struct PhysicalParams {
    double A = 203.0;
    double B = 2.09;
    double D = 0.208 * 2.09;
    double C_water = 4.7 * 2.09;
    double C_land = 0.16 * 2.09;
    double t0 = 1.0;
    double T_s = 10.0;
    double T_s_land = 1.0;
    double a1 = 0.06;
    double a2 = 0.6;
    double a1_land = 0.3;
    double a2_land = 0.6;
    double s0 = 0.523;
    double s1 = 0.716;
    double sigma = 50.0;

    void validate() const;
};

struct DimensionlessParams {
    double alpha = 0;
    double beta = 0;
    double gamma_water = 0;
    double gamma_land = 0;
    double eta = 0;
    double T_c = 0;
};

DimensionlessParams nondimensionalize(const PhysicalParams& p, double Q);

double insolation(double theta, const PhysicalParams& p);

// Critical (threshold) temperature of a surface, dimensionless: -1 or -T_c.
double threshold(Surface surface, const PhysicalParams& p);

// Throws InvalidParameter when T sits exactly on the threshold.
double albedo_step(double T, Surface surface, const PhysicalParams& p);
double albedo_ice_flag(bool ice, Surface surface, const PhysicalParams& p);
double albedo_smooth(double T, Surface surface, const PhysicalParams& p);
double albedo_smooth_derivative(double T, Surface surface, const PhysicalParams& p);

// eta * s(theta) * (1 - a) - alpha with the albedo fixed by the ice flag.
double source_term(double theta, bool ice, Surface surface,
                   const DimensionlessParams& dp, const PhysicalParams& p);

enum class Geometry { aquaplanet, continent };

struct ContinentConfig {
    Geometry kind = Geometry::aquaplanet;
    double l = std::numbers::pi / 4;
    double epsilon = 0.0;
    double theta_l1 = 0.0;
    double theta_l2 = 0.0;

    bool has_land() const { return kind == Geometry::continent; }
    bool symmetric() const { return kind == Geometry::aquaplanet || epsilon == 0.0; }
    Surface surface_at(double theta) const;
};

ContinentConfig continent_config(double l, double epsilon);
ContinentConfig aquaplanet_config();

} // namespace ebm

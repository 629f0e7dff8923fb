#include "ebm/greenfn.hpp"
#include "ebm/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ebm {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double euler_gamma = 0.57721566490153286061;
constexpr int max_terms = 5000;
// both series converge like 2^-n at the switch point
constexpr double series_switch = pi / 2;

std::string where(double theta)
{
    return " (theta = " + std::to_string(theta) + ")";
}

} // namespace

ConicalDegree conical_degree(double beta)
{
    if (!(beta > 0))
        throw InvalidParameter("beta must be positive");
    ConicalDegree d;
    std::complex<double> disc = std::sqrt(std::complex<double>(1.0 - 4.0 * beta, 0.0));
    d.lambda = 0.5 * (disc - 1.0);
    d.conical = beta > 0.25;
    d.mu = d.conical ? 0.5 * std::sqrt(4.0 * beta - 1.0) : 0.0;
    if (d.conical)
        d.lambda = {-0.5, d.mu};
    return d;
}

std::complex<double> digamma(std::complex<double> z)
{
    if (z.real() <= 0 && z.imag() == 0 && z.real() == std::floor(z.real()))
        throw NumericError("digamma pole at non-positive integer");
    std::complex<double> shift = 0;
    // reflection keeps the recurrence short for far-left arguments
    if (z.real() < -10) {
        std::complex<double> pz = pi * z;
        return digamma(1.0 - z) - pi * std::cos(pz) / std::sin(pz);
    }
    while (std::abs(z) < 12 || z.real() < 12) {
        shift -= 1.0 / z;
        z += 1.0;
    }
    std::complex<double> iz2 = 1.0 / (z * z);
    // Bernoulli B_2k / (2k)
    static const double c[] = {1.0 / 12, -1.0 / 120, 1.0 / 252, -1.0 / 240,
                               1.0 / 132, -691.0 / 32760, 1.0 / 12};
    std::complex<double> tail = 0, p = iz2;
    for (double ck : c) {
        tail += ck * p;
        p *= iz2;
    }
    return shift + std::log(z) - 0.5 / z - tail;
}

GreenKernel::GreenKernel(double beta) : beta_(beta), deg_(conical_degree(beta))
{
    pa_ = -deg_.lambda;
    pb_ = deg_.lambda + 1.0;
    std::complex<double> s = std::sin(pi * deg_.lambda);
    // Gamma(a) Gamma(b) = -pi / sin(pi lambda)
    log_prefactor_ = (-s / pi).real();
    c_ = (-pi / (2.0 * s)).real();
    psi_sum0_ = (digamma(pa_) + digamma(pb_)).real();
}

void GreenKernel::u0_both(double theta, double& u, double& du) const
{
    if (!(theta >= 0 && theta < pi))
        throw NumericError("u0 evaluated outside [0, pi)" + where(theta));
    const double b = beta_;
    if (theta <= series_switch) {
        // 2F1(a, b; 1; z) with z = sin^2(theta/2); coefficient ratios are real
        double sh = std::sin(theta / 2);
        double z = sh * sh;
        double sum = 1.0, term = 1.0;
        double dsum = 0.0, dterm = b; // n * c_n * z^(n-1), starting at n = 1
        int n = 0;
        for (; n < max_terms; ++n) {
            double r = (n * (n + 1.0) + b) / ((n + 1.0) * (n + 1.0));
            term *= r * z;
            sum += term;
            dsum += dterm;
            double next = (n + 2.0) / (n + 1.0) * ((n + 1.0) * (n + 2.0) + b) /
                          ((n + 2.0) * (n + 2.0)) * z;
            dterm *= next;
            if (std::abs(term) < 1e-17 * std::abs(sum) && std::abs(dterm) < 1e-17 * std::abs(dsum))
                break;
        }
        if (n == max_terms)
            throw NumericError("hypergeometric series did not converge" + where(theta));
        u = sum;
        du = 0.5 * std::sin(theta) * dsum;
        return;
    }
    // logarithmic a + b = c connection series in w = cos^2(theta/2)
    double ch = std::cos(theta / 2);
    double w = ch * ch;
    double lw = std::log(w);
    double e = 1.0;
    double k = -2.0 * euler_gamma - psi_sum0_;
    double wn = 1.0;   // w^n
    double wn1 = 0.0;  // w^(n-1), zero for n = 0
    double sum = 0.0, dsum = 0.0;
    int n = 0;
    for (; n < max_terms; ++n) {
        double t = e * (k - lw) * wn;
        double dt = e * (n * (k - lw) * wn1 - (n == 0 ? 1.0 / w : wn1));
        sum += t;
        dsum += dt;
        if (n > 2 && std::abs(t) < 1e-17 * std::abs(sum) && std::abs(dt) < 1e-17 * std::abs(dsum))
            break;
        double q = n * (n + 1.0) + b;
        e *= q / ((n + 1.0) * (n + 1.0));
        k += 2.0 / (n + 1.0) - (2.0 * n + 1.0) / q;
        wn1 = wn;
        wn *= w;
    }
    if (n == max_terms)
        throw NumericError("logarithmic series did not converge" + where(theta));
    u = log_prefactor_ * sum;
    // dw/dtheta = -sin(theta)/2
    du = -0.5 * std::sin(theta) * log_prefactor_ * dsum;
}

double GreenKernel::u0(double theta) const
{
    double u, du;
    u0_both(theta, u, du);
    return u;
}

double GreenKernel::du0(double theta) const
{
    double u, du;
    u0_both(theta, u, du);
    return du;
}

void GreenKernel::upi_both(double theta, double& u, double& du) const
{
    u0_both(pi - theta, u, du);
    du = -du;
}

double GreenKernel::upi(double theta) const { return u0(pi - theta); }
double GreenKernel::dupi(double theta) const { return -du0(pi - theta); }

double GreenKernel::K(double theta, double xi) const
{
    double lo = std::min(theta, xi), hi = std::max(theta, xi);
    return c_ * u0(lo) * upi(hi);
}

double GreenKernel::dK(double theta, double xi, Side side) const
{
    bool upper = theta > xi || (theta == xi && side == Side::right);
    if (upper)
        return c_ * u0(xi) * dupi(theta);
    return c_ * du0(theta) * upi(xi);
}

GreenKernel::Point GreenKernel::point(double theta) const
{
    Point p;
    p.theta = theta;
    if (theta < pi)
        u0_both(theta, p.u0, p.du0);
    else
        p.u0_ok = false;
    if (theta > 0)
        upi_both(theta, p.upi, p.dupi);
    else
        p.upi_ok = false;
    return p;
}

// sin * w' and sin^2 * w; at the far pole w is log-singular but these
// products have finite limits (2 * prefactor and 0).
static void flux(int which, const GreenKernel::Point& p, double pref, double& sdu, double& s2u)
{
    bool ok = which == 0 ? p.u0_ok : p.upi_ok;
    if (!ok) {
        sdu = which == 0 ? 2.0 * pref : -2.0 * pref;
        s2u = 0.0;
        return;
    }
    double s = std::sin(p.theta);
    double u = which == 0 ? p.u0 : p.upi;
    double du = which == 0 ? p.du0 : p.dupi;
    sdu = s * du;
    s2u = s * s * u;
}

double GreenKernel::antider0(int which, const Point& p) const
{
    // (sin w')' = beta sin w
    double sdu, s2u;
    flux(which, p, log_prefactor_, sdu, s2u);
    return sdu / beta_;
}

double GreenKernel::antider2(int which, const Point& p) const
{
    // x = cos(theta), F = (1 - x^2) w_x = -sin * w'
    //   int w dx       = F / beta
    //   int x^2 w dx   = (x^2 F - 2x(1 - x^2) w + 2F/beta) / (beta + 6)
    // and d(theta) sin^3 w = -(1 - x^2) w dx
    double sdu, s2u;
    flux(which, p, log_prefactor_, sdu, s2u);
    double x = std::cos(p.theta);
    double F = -sdu;
    double g1 = F / beta_;
    double g2 = (x * x * F - 2.0 * x * s2u + 2.0 * F / beta_) / (beta_ + 6.0);
    return -(g1 - g2);
}

double GreenKernel::moment0(int which, double a, double b) const
{
    return antider0(which, point(b)) - antider0(which, point(a));
}

double GreenKernel::moment2(int which, double a, double b) const
{
    return antider2(which, point(b)) - antider2(which, point(a));
}

std::vector<KernelTableRow> kernel_table(const GreenKernel& g,
                                         const std::vector<double>& thetas,
                                         const std::vector<double>& xis)
{
    std::vector<KernelTableRow> rows;
    rows.reserve(thetas.size() * xis.size());
    for (double t : thetas)
        for (double x : xis)
            rows.push_back({t, x, g.K(t, x), g.dK(t, x, Side::left), g.dK(t, x, Side::right)});
    return rows;
}

} // namespace ebm

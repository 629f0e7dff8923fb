#pragma once

#include <complex>
#include <vector>

namespace ebm {

struct ConicalDegree {
    std::complex<double> lambda;
    double mu = 0; // imaginary part when beta > 1/4, else 0
    bool conical = false;
};

ConicalDegree conical_degree(double beta);

std::complex<double> digamma(std::complex<double> z);

enum class Side { left, right };

// Green's kernel of L = -(1/sin) d/dtheta (sin d/dtheta) + beta on (0, pi)
// with bounded solutions at both poles, normalised so that
// dK/dtheta jumps by -1/sin(xi) across theta = xi.
//
//     K(theta, xi) = c * u0(min(theta, xi)) * upi(max(theta, xi))
//
// with u0(theta) = P_lambda(cos theta) regular at the north pole and
// upi(theta) = u0(pi - theta) regular at the south pole.
class GreenKernel {
public:
    explicit GreenKernel(double beta);

    double beta() const { return beta_; }
    const ConicalDegree& degree() const { return deg_; }
    double c() const { return c_; }

    double u0(double theta) const;
    double du0(double theta) const;
    // value and theta-derivative in one pass
    void u0_both(double theta, double& u, double& du) const;

    double upi(double theta) const;
    double dupi(double theta) const;
    void upi_both(double theta, double& u, double& du) const;

    double K(double theta, double xi) const;
    // dK/dtheta; at theta == xi the side picks the one-sided limit
    double dK(double theta, double xi, Side side = Side::left) const;

    // Exact integrals of sin(theta) * w(theta) and sin^3(theta) * w(theta)
    // over [a, b] where w is u0 (which = 0) or upi (which = 1).
    // Closed forms follow from the Legendre equation satisfied by w.
    double moment0(int which, double a, double b) const;
    double moment2(int which, double a, double b) const;

    // Everything the moment formulas need at one point, so callers that
    // reuse a point pay for the series once.
    struct Point {
        double theta = 0;
        double u0 = 0, du0 = 0, upi = 0, dupi = 0;
        bool u0_ok = true, upi_ok = true; // false at the far pole
    };
    Point point(double theta) const;
    // antiderivatives (in theta) of sin*w and sin^3*w
    double antider0(int which, const Point& p) const;
    double antider2(int which, const Point& p) const;

private:

    double beta_;
    ConicalDegree deg_;
    double c_;
    // 2F1 parameters a = -lambda, b = lambda + 1, a*b = beta
    std::complex<double> pa_, pb_;
    double log_prefactor_; // -sin(pi lambda)/pi
    double psi_sum0_;      // Re(psi(a) + psi(b))
};

struct KernelTableRow {
    double theta, xi, K, dK_left, dK_right;
};

std::vector<KernelTableRow> kernel_table(const GreenKernel& g,
                                         const std::vector<double>& thetas,
                                         const std::vector<double>& xis);

} // namespace ebm

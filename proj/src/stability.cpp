#include "ebm/stability.hpp"
#include "ebm/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ebm {

std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::unstable: return "unstable";
    case Verdict::marginal: return "marginal";
    default: return "inconclusive";
    }
}

std::string to_string(StabilityMethod m)
{
    switch (m) {
    case StabilityMethod::eigen: return "eigen";
    case StabilityMethod::slope: return "slope";
    default: return "heuristic";
    }
}

double source_jacobian_hT(double T0, double theta, Surface s, const PhysicalParams& p,
                          const DimensionlessParams& dp)
{
    return -dp.eta * insolation(theta, p) * albedo_smooth_derivative(T0, s, p);
}

Tridiagonal build_H_tridiagonal(const std::vector<double>& T0, const FdmModel& model, bool zero_hT)
{
    const Grid& g = model.grid();
    int N = g.N;
    if ((int)T0.size() != N + 1)
        throw InvalidParameter("profile size does not match the grid");
    if (model.options().closure != PoleClosure::ghost)
        throw InvalidParameter("the perturbation matrix is defined for the ghost closure");
    const auto& dp = model.dimensionless();
    int n = N - 1;
    Tridiagonal H;
    H.diag.assign(n, 0.0);
    H.sub.assign(n - 1, 0.0);
    H.sup.assign(n - 1, 0.0);
    // unit vectors through the stencil give its coefficients
    std::vector<double> e(N + 1, 0.0);
    auto coeff = [&](int i, int j) {
        e[j] = 1.0;
        double v = model.diffusion(e, i);
        e[j] = 0.0;
        return v;
    };
    for (int i = 1; i < N; ++i) {
        double ig = 1.0 / model.gamma_at(i);
        double hT = zero_hT ? 0.0 : model.source_slope(T0[i], i);
        int r = i - 1;
        H.diag[r] += ig * (hT - dp.beta - coeff(i, i));
        // delta_0 = delta_2 and delta_N = delta_{N-2} fold into the neighbours
        double left = -ig * coeff(i, i - 1), right = -ig * coeff(i, i + 1);
        if (i == 1)
            H.sup[r] += left + right;
        else if (i == N - 1)
            H.sub[r - 1] += left + right;
        else {
            H.sub[r - 1] += left;
            H.sup[r] += right;
        }
    }
    return H;
}

Eigen::MatrixXd build_H(const std::vector<double>& T0, const FdmModel& model, bool zero_hT)
{
    Tridiagonal t = build_H_tridiagonal(T0, model, zero_hT);
    int n = (int)t.diag.size();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        H(i, i) = t.diag[i];
        if (i + 1 < n) {
            H(i, i + 1) = t.sup[i];
            H(i + 1, i) = t.sub[i];
        }
    }
    return H;
}

namespace {

void sort_spectrum(std::vector<std::complex<double>>& ev)
{
    std::sort(ev.begin(), ev.end(), [](auto a, auto b) {
        if (a.real() != b.real())
            return a.real() > b.real();
        return a.imag() > b.imag();
    });
}

} // namespace

std::vector<std::complex<double>> spectrum(const Tridiagonal& H)
{
    int n = (int)H.diag.size();
    bool sym = true;
    for (int i = 0; i + 1 < n; ++i)
        sym = sym && H.sub[i] * H.sup[i] > 0;
    if (!sym) {
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            D(i, i) = H.diag[i];
            if (i + 1 < n) {
                D(i, i + 1) = H.sup[i];
                D(i + 1, i) = H.sub[i];
            }
        }
        return spectrum(D, false);
    }
    // diagonal similarity to a symmetric tridiagonal matrix
    Eigen::VectorXd d(n), s(std::max(0, n - 1));
    for (int i = 0; i < n; ++i)
        d(i) = H.diag[i];
    for (int i = 0; i + 1 < n; ++i)
        s(i) = std::sqrt(H.sub[i] * H.sup[i]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, s, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericError("tridiagonal eigensolver failed");
    std::vector<std::complex<double>> ev;
    for (int i = 0; i < n; ++i)
        ev.emplace_back(es.eigenvalues()(i), 0.0);
    sort_spectrum(ev);
    return ev;
}

std::vector<std::complex<double>> spectrum(const Eigen::MatrixXd& H, bool allow_symmetrize)
{
    int n = (int)H.rows();
    bool tri = allow_symmetrize;
    for (int i = 0; tri && i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (std::abs(i - j) > 1 && H(i, j) != 0.0) {
                tri = false;
                break;
            }
    if (tri) {
        Tridiagonal t;
        for (int i = 0; i < n; ++i) {
            t.diag.push_back(H(i, i));
            if (i + 1 < n) {
                t.sup.push_back(H(i, i + 1));
                t.sub.push_back(H(i + 1, i));
            }
        }
        bool pos = true;
        for (int i = 0; i + 1 < n; ++i)
            pos = pos && t.sub[i] * t.sup[i] > 0;
        if (pos)
            return spectrum(t);
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(H, false);
    if (es.info() != Eigen::Success)
        throw NumericError("eigensolver failed");
    std::vector<std::complex<double>> ev;
    for (int i = 0; i < n; ++i)
        ev.push_back(es.eigenvalues()(i));
    sort_spectrum(ev);
    return ev;
}

double max_real_eigenvalue(const Tridiagonal& H)
{
    int n = (int)H.diag.size();
    std::vector<double> e2(std::max(0, n - 1));
    for (int i = 0; i + 1 < n; ++i) {
        e2[i] = H.sub[i] * H.sup[i];
        if (!(e2[i] > 0))
            return spectrum(H).front().real();
    }
    double lo = H.diag[0], hi = H.diag[0];
    for (int i = 0; i < n; ++i) {
        double r = (i > 0 ? std::sqrt(e2[i - 1]) : 0.0) + (i + 1 < n ? std::sqrt(e2[i]) : 0.0);
        lo = std::min(lo, H.diag[i] - r);
        hi = std::max(hi, H.diag[i] + r);
    }
    // number of eigenvalues below x
    auto below = [&](double x) {
        int count = 0;
        double q = 1.0;
        for (int i = 0; i < n; ++i) {
            q = H.diag[i] - x - (i > 0 ? e2[i - 1] / q : 0.0);
            if (q == 0.0)
                q = -1e-300;
            count += q < 0;
        }
        return count;
    };
    double scale = std::max(std::abs(lo), std::abs(hi));
    while (hi - lo > 1e-13 * scale) {
        double mid = 0.5 * (lo + hi);
        if (below(mid) == n)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

Verdict verdict_from_eigen(double max_real, double tol_zero)
{
    if (max_real > tol_zero)
        return Verdict::unstable;
    if (max_real < -tol_zero)
        return Verdict::stable;
    return Verdict::marginal;
}

StabilityReport eigen_classify(const std::vector<double>& T0, const FdmModel& model,
                               double tol_zero, bool zero_hT, bool full_spectrum)
{
    StabilityReport r;
    r.method = StabilityMethod::eigen;
    r.N = model.grid().N;
    Tridiagonal H = build_H_tridiagonal(T0, model, zero_hT);
    if (full_spectrum) {
        r.spectrum = spectrum(H);
        r.max_real_eig = r.spectrum.front().real();
    } else {
        r.max_real_eig = max_real_eigenvalue(H);
    }
    r.verdict = verdict_from_eigen(r.max_real_eig, tol_zero);
    return r;
}

std::vector<Verdict> slope_classify(const std::vector<SlopeSample>& branch, double slope_tol)
{
    int n = (int)branch.size();
    if (n < 3)
        throw InvalidParameter("slope classification needs at least 3 branch points");
    std::vector<Verdict> out(n);
    // one-sided slopes; a sign change between them marks a fold neighbourhood
    auto sgn = [&](int i, int j) {
        double q = branch[j].Q - branch[i].Q, t = branch[j].T_mean - branch[i].T_mean;
        if (t == 0.0 || std::abs(q / t) < slope_tol)
            return 0;
        return q / t > 0 ? 1 : -1;
    };
    for (int k = 0; k < n; ++k) {
        int s;
        if (k == 0)
            s = sgn(0, 1);
        else if (k == n - 1)
            s = sgn(n - 2, n - 1);
        else {
            int s1 = sgn(k - 1, k), s2 = sgn(k, k + 1);
            s = s1 == s2 ? s1 : 0;
        }
        out[k] = s > 0 ? Verdict::stable : s < 0 ? Verdict::unstable : Verdict::marginal;
    }
    return out;
}

StabilityReport heuristic_run(const std::vector<double>& T0, const FdmModel& model,
                              const HeuristicOptions& opt)
{
    const Grid& g = model.grid();
    StabilityReport r;
    r.method = StabilityMethod::heuristic;
    r.N = g.N;
    if (opt.amplitude == 0.0) {
        r.verdict = Verdict::stable;
        r.details = "zero amplitude";
        return r;
    }
    // off-centre bump so that symmetric and antisymmetric modes are both excited
    double dev_max = 0;
    bool departed = false;
    for (int sign : {1, -1}) {
        SimulationState s;
        s.grid = g;
        s.T = T0;
        for (int i = 0; i <= g.N; ++i) {
            double d = (g.theta[i] - 1.0) / 0.4;
            s.T[i] += sign * opt.amplitude * std::exp(-d * d);
        }
        apply_ghost(s.T);
        std::vector<double> samples;
        for (int k = 1; k <= 40; ++k)
            samples.push_back(opt.t_end * k / 40);
        auto traj = integrate(s, opt.t_end, model, samples);
        for (const auto& st : traj) {
            double dev = 0;
            for (int i = 0; i <= g.N; ++i)
                dev = std::max(dev, std::abs(st.T[i] - T0[i]));
            departed = departed || dev > opt.depart;
            dev_max = std::max(dev_max, dev);
        }
    }
    if (departed)
        r.verdict = Verdict::unstable;
    else if (dev_max <= opt.band * opt.amplitude)
        r.verdict = Verdict::stable;
    else
        r.verdict = Verdict::inconclusive;
    r.details = "max deviation " + std::to_string(dev_max);
    return r;
}

} // namespace ebm

#include "ebm/bim.hpp"
#include "ebm/errors.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ebm {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double feasibility_margin = 1e-7;

struct Interval {
    double lo, hi;
};

std::vector<Interval> segment_bounds(const CaseLabel& c, const ContinentConfig& cfg)
{
    double end = c.truncated ? pi / 2 : pi;
    if (c.geometry == Geometry::aquaplanet)
        return {{0.0, end}};
    if (c.truncated)
        return {{0.0, cfg.theta_l1}, {cfg.theta_l1, end}};
    return {{0.0, cfg.theta_l1}, {cfg.theta_l1, cfg.theta_l2}, {cfg.theta_l2, pi}};
}

const char* count_word(int k)
{
    static const char* words[] = {"no", "one", "two", "three", "four", "five", "six", "seven", "eight"};
    return k >= 0 && k <= 8 ? words[k] : "many";
}

} // namespace

int CaseLabel::n_unknown() const
{
    int k = 0;
    for (const auto& s : segments)
        k += s.n_crit;
    return k;
}

int CaseLabel::n_critical() const
{
    return truncated ? 2 * n_unknown() : n_unknown();
}

std::string CaseLabel::code() const
{
    std::string s = truncated ? "sym:" : "";
    for (size_t i = 0; i < segments.size(); ++i) {
        if (i)
            s += '-';
        s += segments[i].surface == Surface::water ? 'o' : 'l';
        s += segments[i].ice_first ? 'i' : 'f';
        s += std::to_string(segments[i].n_crit);
    }
    return s;
}

std::string CaseLabel::name() const
{
    std::string c = code();
    std::string word;
    if (geometry == Geometry::aquaplanet) {
        if (c == "of0")
            word = "all-water";
        else if (c == "oi0")
            word = "all-ice";
        else if (c == "oi2")
            word = "two-edges";
        else
            word = std::string(count_word(n_critical())) + "-crit";
        return word + "[" + c + "]";
    }
    int k = n_critical();
    if (k == 0) {
        bool n = segments[0].ice_first, l = segments[1].ice_first, s = segments[2].ice_first;
        if (!n && !l && !s)
            word = "no-crit-all-warm";
        else if (n && l && s)
            word = "no-crit-all-ice";
        else if (!n && l && !s)
            word = "no-crit-ice-continent-only";
        else if (n && l)
            word = "no-crit-north+continent-ice";
        else
            word = "no-crit-south+continent-ice";
    } else if (truncated) {
        word = std::string(count_word(k)) + "-crit-symmetric";
    } else {
        static const char* where[] = {"north-ocean", "continent", "south-ocean"};
        std::string loc;
        for (int i = 0; i < 3; ++i) {
            if (!segments[i].n_crit)
                continue;
            if (!loc.empty())
                loc += '+';
            if (segments[i].n_crit > 1)
                loc += std::to_string(segments[i].n_crit) + "x";
            loc += where[i];
        }
        word = std::string(count_word(k)) + "-crit-" + loc;
    }
    return word + "[" + c + "]";
}

std::vector<CaseLabel> case_list(const ContinentConfig& cfg, int max_full)
{
    std::vector<CaseLabel> out;
    if (cfg.kind == Geometry::aquaplanet) {
        auto one = [&](bool ice, int k) {
            CaseLabel c;
            c.geometry = Geometry::aquaplanet;
            c.segments = {{Surface::water, ice, k}};
            out.push_back(c);
        };
        one(false, 0);
        one(true, 0);
        one(true, 2);
        return out;
    }
    auto end_state = [](const Segment& s) { return s.ice_first ^ (s.n_crit % 2 == 1); };
    // ocean ice next to ice-free land is impossible: T < -1 < -T_c
    auto edge_ok = [](bool ocean_ice, bool land_ice) { return !(ocean_ice && !land_ice); };

    for (int total = 0; total <= max_full; ++total)
        for (int k1 = 0; k1 <= total; ++k1)
            for (int k2 = 0; k1 + k2 <= total; ++k2) {
                int k3 = total - k1 - k2;
                for (int m = 0; m < 8; ++m) {
                    Segment n{Surface::water, bool(m & 1), k1};
                    Segment l{Surface::land, bool(m & 2), k2};
                    Segment s{Surface::water, bool(m & 4), k3};
                    if (!edge_ok(end_state(n), l.ice_first) || !edge_ok(s.ice_first, end_state(l)))
                        continue;
                    CaseLabel c;
                    c.geometry = Geometry::continent;
                    c.segments = {n, l, s};
                    out.push_back(c);
                }
            }
    if (cfg.epsilon == 0.0) {
        for (int half = 2; half <= 3; ++half)
            for (int k1 = 0; k1 <= half; ++k1) {
                int k2 = half - k1;
                for (int m = 0; m < 4; ++m) {
                    Segment n{Surface::water, bool(m & 1), k1};
                    Segment l{Surface::land, bool(m & 2), k2};
                    if (!edge_ok(end_state(n), l.ice_first))
                        continue;
                    CaseLabel c;
                    c.geometry = Geometry::continent;
                    c.truncated = true;
                    c.segments = {n, l};
                    out.push_back(c);
                }
            }
    }
    return out;
}

bool feasible(const CaseLabel& c, const ContinentConfig& cfg, const std::vector<double>& theta_c)
{
    if ((int)theta_c.size() != c.n_unknown())
        return false;
    auto bounds = segment_bounds(c, cfg);
    size_t k = 0;
    for (size_t j = 0; j < c.segments.size(); ++j) {
        double prev = bounds[j].lo;
        for (int i = 0; i < c.segments[j].n_crit; ++i, ++k) {
            double t = theta_c[k];
            if (!(t > prev + feasibility_margin && t < bounds[j].hi - feasibility_margin))
                return false;
            prev = t;
        }
    }
    return true;
}

Partition partition_regions(const CaseLabel& c, const ContinentConfig& cfg,
                            const std::vector<double>& theta_c)
{
    if (c.geometry == Geometry::continent && cfg.kind != Geometry::continent)
        throw InvalidParameter("continent case used with an aquaplanet configuration");
    if (c.truncated && cfg.kind == Geometry::continent && cfg.epsilon != 0.0)
        throw InvalidParameter("symmetric truncation requires epsilon = 0");
    if (!feasible(c, cfg, theta_c))
        throw InvalidParameter("critical latitudes outside their required intervals");
    auto bounds = segment_bounds(c, cfg);
    Partition part;
    part.end = c.truncated ? pi / 2 : pi;
    part.nodes.push_back({NodeKind::pole, 0.0, c.segments.front().surface});
    size_t k = 0;
    for (size_t j = 0; j < c.segments.size(); ++j) {
        const Segment& s = c.segments[j];
        bool ice = s.ice_first;
        for (int i = 0; i < s.n_crit; ++i, ++k) {
            part.nodes.push_back({NodeKind::critical, theta_c[k], s.surface});
            int n = (int)part.nodes.size() - 1;
            part.regions.push_back({part.nodes[n - 1].theta, theta_c[k], s.surface, ice, n - 1, n});
            ice = !ice;
        }
        NodeKind kind = j + 1 < c.segments.size() ? NodeKind::landmark
                        : c.truncated             ? NodeKind::symmetry
                                                  : NodeKind::pole;
        part.nodes.push_back({kind, bounds[j].hi, s.surface});
        int n = (int)part.nodes.size() - 1;
        part.regions.push_back({part.nodes[n - 1].theta, bounds[j].hi, s.surface, ice, n - 1, n});
    }
    return part;
}

BimContext make_context(const PhysicalParams& p, const ContinentConfig& cfg, double Q,
                        const GreenKernel& kernel)
{
    BimContext ctx;
    ctx.p = p;
    ctx.dp = nondimensionalize(p, Q);
    ctx.cfg = cfg;
    ctx.kernel = &kernel;
    std::vector<double> fixed{0.0, pi / 2, pi};
    if (cfg.has_land()) {
        fixed.push_back(cfg.theta_l1);
        fixed.push_back(cfg.theta_l2);
    }
    for (double t : fixed)
        ctx.fixed_points.push_back(kernel.point(t));
    return ctx;
}

GreenKernel::Point BimContext::point(double theta) const
{
    for (const auto& p : fixed_points)
        if (p.theta == theta)
            return p;
    return kernel->point(theta);
}

namespace {

using Basis = GreenKernel::Point;

double region_efficiency(const Region& r, const BimContext& ctx)
{
    return ctx.dp.eta * (1.0 - albedo_ice_flag(r.ice, r.surface, ctx.p));
}

// integral over [a, b] of sin(theta) * w(theta) * h(theta) for the region's source
double weighted_source(int which, const Basis& A, const Basis& B, const Region& r,
                       const BimContext& ctx)
{
    double a = A.theta, b = B.theta;
    if (a == b)
        return 0.0;
    const GreenKernel& g = *ctx.kernel;
    double e = region_efficiency(r, ctx);
    if (ctx.quad == Quadrature::closed_form) {
        double m0 = g.antider0(which, B) - g.antider0(which, A);
        double m2 = g.antider2(which, B) - g.antider2(which, A);
        return (e * ctx.p.s0 - ctx.dp.alpha) * m0 + e * ctx.p.s1 * m2;
    }
    auto f = [&](double t) {
        if ((which == 0 && t >= pi) || (which == 1 && t <= 0))
            return 0.0;
        double w = which == 0 ? g.u0(t) : g.upi(t);
        double s = std::sin(t);
        return s * w * (e * (ctx.p.s0 + ctx.p.s1 * s * s) - ctx.dp.alpha);
    };
    double err = 0;
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15,
                                                                              ctx.quad_tol, &err);
    if (!(err <= std::max(1e-8, 1e3 * ctx.quad_tol * std::max(1.0, std::abs(v))))) {
        std::ostringstream os;
        os << "quadrature did not converge on panel [" << a << ", " << b << "], error estimate " << err;
        throw NumericError(os.str());
    }
    return v;
}

struct Term {
    int node;
    bool is_D;
    double coef;
};

// One boundary integral equation: sum(coef * X) = rhs, X the node value or slope.
struct Equation {
    std::array<Term, 5> buf;
    int n = 0;
    double rhs = 0;
    void add(Term t) { buf[n++] = t; }
    const Term* begin() const { return buf.data(); }
    const Term* end() const { return buf.data() + n; }
};

// bounded sizes keep the inner Newton loop off the heap
using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 32, 32>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 32, 1>;

struct Assembly {
    Partition part;
    std::vector<Basis> basis;
    std::vector<double> J0, Jpi; // per region: int sin*u0*h, int sin*upi*h
};

Assembly prepare(const CaseLabel& c, const std::vector<double>& theta_c, const BimContext& ctx)
{
    Assembly as;
    as.part = partition_regions(c, ctx.cfg, theta_c);
    for (const auto& n : as.part.nodes)
        as.basis.push_back(ctx.point(n.theta));
    for (const auto& r : as.part.regions) {
        as.J0.push_back(weighted_source(0, as.basis[r.lo], as.basis[r.hi], r, ctx));
        as.Jpi.push_back(weighted_source(1, as.basis[r.lo], as.basis[r.hi], r, ctx));
    }
    return as;
}

// Equation for region r at xi -> a+ (upper_end = false) or xi -> b- (true).
//   T(xi) = int_a^b sin K h + [sin K T' - T sin dK/dtheta]_a^b
Equation make_equation(const Assembly& as, int r, bool upper_end, const BimContext& ctx)
{
    const Region& reg = as.part.regions[r];
    const double c = ctx.kernel->c();
    const Basis& A = as.basis[reg.lo];
    const Basis& B = as.basis[reg.hi];
    const Basis& X = upper_end ? B : A;
    Equation eq;
    eq.add({upper_end ? reg.hi : reg.lo, false, 1.0});
    eq.rhs = upper_end ? c * B.upi * as.J0[r] : c * A.u0 * as.Jpi[r];
    const Node& nb = as.part.nodes[reg.hi];
    if (nb.kind != NodeKind::pole) {
        double s = std::sin(reg.b);
        double k = s * c * X.u0;
        eq.add({reg.hi, true, -k * B.upi});
        eq.add({reg.hi, false, k * B.dupi});
    }
    const Node& na = as.part.nodes[reg.lo];
    if (na.kind != NodeKind::pole) {
        double s = std::sin(reg.a);
        double k = s * c * X.upi;
        eq.add({reg.lo, true, k * A.u0});
        eq.add({reg.lo, false, -k * A.du0});
    }
    return eq;
}

struct Layout {
    std::vector<int> var_T, var_D; // -1: known
    std::vector<double> known_T, known_D;
    int n = 0;
};

Layout make_layout(const Partition& part, const BimContext& ctx)
{
    Layout L;
    size_t m = part.nodes.size();
    L.var_T.assign(m, -1);
    L.var_D.assign(m, -1);
    L.known_T.assign(m, 0.0);
    L.known_D.assign(m, 0.0);
    for (size_t i = 0; i < m; ++i) {
        switch (part.nodes[i].kind) {
        case NodeKind::pole:
            L.var_T[i] = L.n++;
            break;
        case NodeKind::critical:
            L.known_T[i] = threshold(part.nodes[i].surface, ctx.p);
            L.var_D[i] = L.n++;
            break;
        case NodeKind::landmark:
            L.var_T[i] = L.n++;
            L.var_D[i] = L.n++;
            break;
        case NodeKind::symmetry:
            L.var_T[i] = L.n++;
            break;
        }
    }
    return L;
}

double evaluate(const Equation& eq, const std::vector<double>& T, const std::vector<double>& D)
{
    double s = -eq.rhs;
    for (const auto& t : eq)
        s += t.coef * (t.is_D ? D[t.node] : T[t.node]);
    return s;
}

struct Solved {
    Assembly as;
    std::vector<double> T, D;
    std::vector<double> f;
    double rcond = 0;
};

Solved solve_system(const CaseLabel& c, const std::vector<double>& theta_c, const BimContext& ctx)
{
    Solved out;
    out.as = prepare(c, theta_c, ctx);
    const Partition& part = out.as.part;
    Layout L = make_layout(part, ctx);
    int R = (int)part.regions.size();
    std::vector<Equation> kept, dropped;
    for (int r = 0; r < R; ++r) {
        kept.push_back(make_equation(out.as, r, false, ctx));
        Equation up = make_equation(out.as, r, true, ctx);
        if (part.nodes[part.regions[r].hi].kind == NodeKind::critical)
            dropped.push_back(std::move(up));
        else
            kept.push_back(std::move(up));
    }
    if ((int)kept.size() != L.n)
        throw NumericError("boundary integral system is not square");
    if (L.n > 32)
        throw NumericError("too many boundary unknowns");
    SmallMatrix M = SmallMatrix::Zero(L.n, L.n);
    SmallVector rhs(L.n);
    for (int i = 0; i < L.n; ++i) {
        rhs(i) = kept[i].rhs;
        for (const auto& t : kept[i]) {
            int v = t.is_D ? L.var_D[t.node] : L.var_T[t.node];
            if (v >= 0)
                M(i, v) += t.coef;
            else
                rhs(i) -= t.coef * (t.is_D ? L.known_D[t.node] : L.known_T[t.node]);
        }
    }
    Eigen::FullPivLU<SmallMatrix> lu(M);
    // pivot ratio as a cheap condition estimate
    auto piv = lu.matrixLU().diagonal().cwiseAbs();
    out.rcond = L.n ? piv.minCoeff() / piv.maxCoeff() : 1.0;
    if (!(out.rcond > 1e-14)) {
        std::ostringstream os;
        os << "degenerate boundary integral system (rcond " << out.rcond << ")";
        throw NumericError(os.str());
    }
    SmallVector x = lu.solve(rhs);
    out.T = L.known_T;
    out.D = L.known_D;
    for (size_t i = 0; i < part.nodes.size(); ++i) {
        if (L.var_T[i] >= 0)
            out.T[i] = x(L.var_T[i]);
        if (L.var_D[i] >= 0)
            out.D[i] = x(L.var_D[i]);
    }
    for (const auto& eq : dropped)
        out.f.push_back(evaluate(eq, out.T, out.D));
    return out;
}

BoundaryUnknowns pack(const Partition& part, const std::vector<double>& T, const std::vector<double>& D,
                      const std::vector<double>& theta_c, const ContinentConfig& cfg)
{
    BoundaryUnknowns u;
    u.theta_c = theta_c;
    u.node_T = T;
    u.node_dT = D;
    for (size_t i = 0; i < part.nodes.size(); ++i) {
        const Node& n = part.nodes[i];
        switch (n.kind) {
        case NodeKind::critical:
            u.dT_at_c.push_back(D[i]);
            break;
        case NodeKind::pole:
            (n.theta == 0 ? u.T_north : u.T_south) = T[i];
            break;
        case NodeKind::landmark:
            if (n.theta == cfg.theta_l1) {
                u.T_l1 = T[i];
                u.dT_l1 = D[i];
            } else {
                u.T_l2 = T[i];
                u.dT_l2 = D[i];
            }
            break;
        case NodeKind::symmetry:
            u.T_equator = T[i];
            u.T_south = T[0];
            break;
        }
    }
    if (part.end < pi && cfg.has_land()) {
        // mirror values for the southern edge
        u.T_l2 = u.T_l1;
        u.dT_l2 = -u.dT_l1;
    }
    return u;
}

} // namespace

ResidualResult assemble_residual(const CaseLabel& c, const std::vector<double>& theta_c,
                                 const BimContext& ctx)
{
    Solved s = solve_system(c, theta_c, ctx);
    ResidualResult res;
    res.f = s.f;
    res.rcond = s.rcond;
    res.unknowns = pack(s.as.part, s.T, s.D, theta_c, ctx.cfg);
    return res;
}

double bie_residual(const CaseLabel& c, const BoundaryUnknowns& u, const BimContext& ctx)
{
    Assembly as = prepare(c, u.theta_c, ctx);
    double worst = 0;
    for (int r = 0; r < (int)as.part.regions.size(); ++r)
        for (bool up : {false, true}) {
            Equation eq = make_equation(as, r, up, ctx);
            // known critical values enter through node_T as stored
            worst = std::max(worst, std::abs(evaluate(eq, u.node_T, u.node_dT)));
        }
    // the stored critical values must themselves sit on the threshold
    for (size_t i = 0; i < as.part.nodes.size(); ++i)
        if (as.part.nodes[i].kind == NodeKind::critical)
            worst = std::max(worst, std::abs(u.node_T[i] - threshold(as.part.nodes[i].surface, ctx.p)));
    return worst;
}

void solution_and_slope(double xi, const CaseLabel& c, const BoundaryUnknowns& u,
                        const BimContext& ctx, double& T, double& dT, Side near_side)
{
    if (!(xi >= 0 && xi <= pi))
        throw InvalidParameter("evaluation point outside [0, pi]");
    Partition part = partition_regions(c, ctx.cfg, u.theta_c);
    if (xi > part.end) {
        solution_and_slope(pi - xi, c, u, ctx, T, dT, near_side == Side::left ? Side::right : Side::left);
        dT = -dT;
        return;
    }
    int R = (int)part.regions.size();
    int r = 0;
    while (r < R - 1 && xi > part.regions[r].b)
        ++r;
    if (near_side == Side::right && r < R - 1 && xi == part.regions[r].b)
        ++r;
    const Region& reg = part.regions[r];
    const GreenKernel& g = *ctx.kernel;
    const double cc = g.c();
    Basis X = ctx.point(xi);
    Basis A = ctx.point(reg.a);
    Basis B = ctx.point(reg.b);
    double T0 = 0, T1 = 0;
    if (xi > reg.a) {
        double J = weighted_source(0, A, X, reg, ctx);
        T0 += cc * X.upi * J;
        T1 += cc * X.dupi * J;
    }
    if (xi < reg.b) {
        double J = weighted_source(1, X, B, reg, ctx);
        T0 += cc * X.u0 * J;
        T1 += cc * X.du0 * J;
    }
    if (part.nodes[reg.hi].kind != NodeKind::pole) {
        double k = std::sin(reg.b) * cc * (B.upi * u.node_dT[reg.hi] - u.node_T[reg.hi] * B.dupi);
        T0 += k * X.u0;
        T1 += k * X.du0;
    }
    if (part.nodes[reg.lo].kind != NodeKind::pole) {
        double k = std::sin(reg.a) * cc * (A.u0 * u.node_dT[reg.lo] - u.node_T[reg.lo] * A.du0);
        T0 -= k * X.upi;
        T1 -= k * X.dupi;
    }
    // exact pole values come straight from the unknowns
    if (xi == reg.a && part.nodes[reg.lo].kind == NodeKind::pole) {
        T0 = u.node_T[reg.lo];
        T1 = 0;
    }
    if (xi == reg.b && part.nodes[reg.hi].kind == NodeKind::pole) {
        T0 = u.node_T[reg.hi];
        T1 = 0;
    }
    T = T0;
    dT = T1;
}

double solution_at(double xi, const CaseLabel& c, const BoundaryUnknowns& u, const BimContext& ctx)
{
    double T, dT;
    solution_and_slope(xi, c, u, ctx, T, dT);
    return T;
}

std::vector<double> sample_profile(const std::vector<double>& thetas, const StationarySolution& s,
                                   const BimContext& ctx)
{
    std::vector<double> T(thetas.size());
    for (size_t i = 0; i < thetas.size(); ++i)
        T[i] = solution_at(thetas[i], s.label, s.unknowns, ctx);
    return T;
}

NewtonResult newton_find(const CaseLabel& c, std::vector<double> x, const BimContext& ctx,
                         double tol, int max_iter)
{
    NewtonResult res;
    const int k = c.n_unknown();
    if (!feasible(c, ctx.cfg, x)) {
        res.reason = "infeasible guess";
        return res;
    }
    auto eval = [&](const std::vector<double>& t, std::vector<double>& f) {
        if (!feasible(c, ctx.cfg, t))
            return false;
        try {
            f = assemble_residual(c, t, ctx).f;
        } catch (const NumericError&) {
            return false;
        }
        return true;
    };
    auto norm = [](const std::vector<double>& f) {
        double m = 0;
        for (double v : f)
            m = std::max(m, std::abs(v));
        return m;
    };
    std::vector<double> f;
    if (!eval(x, f)) {
        res.reason = "residual evaluation failed at guess";
        return res;
    }
    const double step = 1e-6;
    for (int it = 0; it <= max_iter; ++it) {
        res.iterations = it;
        res.residual = norm(f);
        if (res.residual < tol) {
            Solved s = solve_system(c, x, ctx);
            res.unknowns = pack(s.as.part, s.T, s.D, x, ctx.cfg);
            res.converged = true;
            return res;
        }
        if (it == max_iter)
            break;
        Eigen::MatrixXd J(k, k);
        for (int j = 0; j < k; ++j) {
            std::vector<double> xp = x, xm = x, fp, fm;
            xp[j] += step;
            xm[j] -= step;
            bool okp = eval(xp, fp), okm = eval(xm, fm);
            double denom = 2 * step;
            if (!okp && !okm) {
                res.reason = "jacobian stencil left feasible set";
                return res;
            }
            if (!okp) {
                fp = f;
                denom = step;
            } else if (!okm) {
                fm = f;
                denom = step;
            }
            for (int i = 0; i < k; ++i)
                J(i, j) = (fp[i] - fm[i]) / denom;
        }
        Eigen::VectorXd rhs(k);
        for (int i = 0; i < k; ++i)
            rhs(i) = -f[i];
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (lu.rank() < k || !(lu.rcond() > 1e-15)) {
            res.reason = "singular jacobian";
            return res;
        }
        Eigen::VectorXd dx = lu.solve(rhs);
        double lam = 1.0, fn = res.residual;
        bool accepted = false;
        for (int h = 0; h < 12; ++h, lam *= 0.5) {
            std::vector<double> xt = x, ft;
            for (int i = 0; i < k; ++i)
                xt[i] += lam * dx(i);
            if (eval(xt, ft) && norm(ft) < fn) {
                x = xt;
                f = ft;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            res.reason = "line search failed";
            return res;
        }
    }
    res.reason = "max iterations exceeded";
    return res;
}

bool sign_consistent(const CaseLabel& c, const BoundaryUnknowns& u, const BimContext& ctx)
{
    Partition part = partition_regions(c, ctx.cfg, u.theta_c);
    const int samples = 64;
    for (const auto& r : part.regions) {
        double thr = threshold(r.surface, ctx.p);
        for (int i = 1; i <= samples; ++i) {
            double t = r.a + (r.b - r.a) * i / (samples + 1.0);
            double T = solution_at(t, c, u, ctx);
            if (r.ice ? !(T < thr) : !(T > thr))
                return false;
        }
        // node values against this region's threshold (critical nodes sit on it)
        for (int n : {r.lo, r.hi}) {
            if (part.nodes[n].kind == NodeKind::critical)
                continue;
            double T = u.node_T[n];
            if (r.ice ? !(T < thr) : !(T > thr))
                return false;
        }
    }
    return true;
}

StationarySolution make_solution(const CaseLabel& c, const BoundaryUnknowns& u, double Q,
                                 const BimContext& ctx, int n_profile)
{
    StationarySolution s;
    s.label = c;
    s.Q = Q;
    s.unknowns = u;
    Partition part = partition_regions(c, ctx.cfg, u.theta_c);
    std::vector<double> pts;
    for (int i = 0; i < n_profile; ++i)
        pts.push_back(pi * i / (n_profile - 1));
    for (const auto& n : part.nodes) {
        pts.push_back(n.theta);
        if (c.truncated)
            pts.push_back(pi - n.theta);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    for (double t : pts) {
        s.theta.push_back(t);
        s.T.push_back(solution_at(t, c, u, ctx));
    }
    s.residual_norm = bie_residual(c, u, ctx);
    for (size_t i = 0; i < part.nodes.size(); ++i) {
        const Node& n = part.nodes[i];
        if (n.kind == NodeKind::pole)
            continue;
        double Tl, dl, Tr, dr;
        solution_and_slope(n.theta, c, u, ctx, Tl, dl, Side::left);
        solution_and_slope(n.theta, c, u, ctx, Tr, dr, Side::right);
        s.c1_mismatch = std::max(s.c1_mismatch, std::abs(dl - dr));
        s.continuity = std::max({s.continuity, std::abs(Tl - Tr), std::abs(Tl - u.node_T[i])});
    }
    return s;
}

namespace {

void combos(int m, int k, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out)
{
    if ((int)cur.size() == k) {
        out.push_back(cur);
        return;
    }
    for (int i = start; i < m; ++i) {
        cur.push_back(i);
        combos(m, k, i + 1, cur, out);
        cur.pop_back();
    }
}

std::vector<std::vector<double>> seed_grid(const CaseLabel& c, const ContinentConfig& cfg, int density)
{
    auto bounds = segment_bounds(c, cfg);
    std::vector<std::vector<double>> seeds{{}};
    for (size_t j = 0; j < c.segments.size(); ++j) {
        int k = c.segments[j].n_crit;
        if (!k)
            continue;
        std::vector<std::vector<int>> idx;
        std::vector<int> cur;
        combos(density, k, 0, cur, idx);
        std::vector<std::vector<double>> next;
        for (const auto& s : seeds)
            for (const auto& ix : idx) {
                auto t = s;
                for (int i : ix)
                    t.push_back(bounds[j].lo + (i + 0.5) * (bounds[j].hi - bounds[j].lo) / density);
                next.push_back(std::move(t));
            }
        seeds = std::move(next);
    }
    return seeds;
}

} // namespace

std::vector<StationarySolution> enumerate_equilibria(double Q, const BimContext& ctx,
                                                     const EnumerateOptions& opt)
{
    struct Job {
        CaseLabel label;
        std::vector<double> guess;
    };
    std::vector<Job> jobs;
    for (const auto& c : case_list(ctx.cfg, opt.max_full)) {
        if (c.n_unknown() == 0) {
            jobs.push_back({c, {}});
            continue;
        }
        for (auto& s : seed_grid(c, ctx.cfg, std::max(1, opt.seed_density)))
            jobs.push_back({c, std::move(s)});
    }
    for (const auto& w : opt.warm_starts)
        if (feasible(w.first, ctx.cfg, w.second))
            jobs.push_back({w.first, w.second});

    std::vector<std::optional<BoundaryUnknowns>> found(jobs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, opt.threads))
#endif
    for (long i = 0; i < (long)jobs.size(); ++i) {
        const Job& job = jobs[i];
        try {
            if (job.label.n_unknown() == 0) {
                found[i] = assemble_residual(job.label, {}, ctx).unknowns;
            } else {
                NewtonResult nr = newton_find(job.label, job.guess, ctx, opt.tol);
                if (nr.converged)
                    found[i] = std::move(nr.unknowns);
            }
        } catch (const NumericError&) {
        } catch (const InvalidParameter&) {
        }
    }

    // sort by (case, theta_c) and merge roots closer than 1e-4
    std::vector<std::pair<const CaseLabel*, BoundaryUnknowns*>> roots;
    for (size_t i = 0; i < jobs.size(); ++i)
        if (found[i])
            roots.push_back({&jobs[i].label, &*found[i]});
    std::stable_sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) {
        std::string ca = a.first->code(), cb = b.first->code();
        if (ca != cb)
            return ca < cb;
        return a.second->theta_c < b.second->theta_c;
    });
    std::vector<std::pair<const CaseLabel*, BoundaryUnknowns*>> unique;
    for (const auto& r : roots) {
        bool dup = false;
        for (const auto& o : unique) {
            if (o.first->code() != r.first->code())
                continue;
            double d = 0;
            for (size_t k = 0; k < r.second->theta_c.size(); ++k)
                d = std::max(d, std::abs(r.second->theta_c[k] - o.second->theta_c[k]));
            if (d < 1e-4) {
                dup = true;
                break;
            }
        }
        if (!dup)
            unique.push_back(r);
    }

    std::vector<std::optional<StationarySolution>> sols(unique.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, opt.threads))
#endif
    for (long i = 0; i < (long)unique.size(); ++i) {
        try {
            if (sign_consistent(*unique[i].first, *unique[i].second, ctx))
                sols[i] = make_solution(*unique[i].first, *unique[i].second, Q, ctx, opt.n_profile);
        } catch (const NumericError&) {
        }
    }
    std::vector<StationarySolution> out;
    for (auto& s : sols)
        if (s)
            out.push_back(std::move(*s));
    return out;
}

} // namespace ebm

#include "ebm/fdm.hpp"
#include "ebm/errors.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ebm {

namespace {

constexpr double pi = std::numbers::pi;

void check_interior(double theta)
{
    if (std::sin(theta) <= 1e-300 || theta <= 0 || theta >= pi)
        throw InvalidParameter("difference stencil evaluated at a pole; use the ghost rules");
}

using State = std::vector<double>;

} // namespace

Grid make_grid(int N)
{
    if (N < 64)
        throw InvalidParameter("grid needs N >= 64");
    Grid g;
    g.N = N;
    g.h = pi / N;
    g.theta.resize(N + 1);
    for (int i = 0; i <= N; ++i)
        g.theta[i] = i * g.h;
    g.theta[N] = pi;
    return g;
}

double stencil_centered(double fm, double f, double fp, double theta, double h)
{
    check_interior(theta);
    double ct = std::cos(theta) / std::sin(theta);
    return -(2 * (fm - 2 * f + fp) + (fp - fm) * h * ct) / (2 * h * h);
}

double stencil_biased(double fm, double f, double fp, double theta, double h)
{
    check_interior(theta);
    double ct = std::cos(theta) / std::sin(theta);
    return -(2 * (fm - 2 * f + fp) + (fm - 4 * f + 3 * fp) * h * ct) / (2 * h * h);
}

double stencil_forward(double fm, double f, double fp, double theta, double h)
{
    check_interior(theta);
    double ct = std::cos(theta) / std::sin(theta);
    return (-2 * (fm - 2 * f + fp) + (5 * fm - 8 * f + 3 * fp) * h * ct) / (2 * h * h);
}

double stencil_backward(double fm, double f, double fp, double theta, double h)
{
    check_interior(theta);
    double ct = std::cos(theta) / std::sin(theta);
    return (-2 * (fm - 2 * f + fp) + (fm - fp) * h * ct) / (2 * h * h);
}

void apply_ghost(std::vector<double>& T)
{
    int N = (int)T.size() - 1;
    T[0] = T[2];
    T[N] = T[N - 2];
}

FdmModel::FdmModel(int N, const PhysicalParams& p, const DimensionlessParams& dp,
                   const ContinentConfig& cfg, FdmOptions opt)
    : grid_(make_grid(N)), p_(p), dp_(dp), cfg_(cfg), opt_(opt)
{
    double h = grid_.h;
    inv_gamma_.assign(N + 1, 0.0);
    insol_.assign(N + 1, 0.0);
    cm_.assign(N + 1, 0.0);
    c0_.assign(N + 1, 0.0);
    cp_.assign(N + 1, 0.0);
    surface_.assign(N + 1, Surface::water);
    land_weight_.assign(N + 1, 0.0);
    // A node on a continent edge (up to rounding, both edges alike) stands for
    // a cell that is half land; giving it all-land parameters costs first order.
    const double edge_tol = 1e-9 * h;
    for (int i = 0; i <= N; ++i) {
        double th = grid_.theta[i];
        bool land = cfg.has_land() && th >= cfg.theta_l1 - edge_tol && th <= cfg.theta_l2 + edge_tol;
        bool edge = land && (std::abs(th - cfg.theta_l1) <= edge_tol || std::abs(th - cfg.theta_l2) <= edge_tol);
        surface_[i] = land ? Surface::land : Surface::water;
        land_weight_[i] = edge ? 0.5 : land ? 1.0 : 0.0;
        inv_gamma_[i] =
            1.0 / (land_weight_[i] * dp.gamma_land + (1 - land_weight_[i]) * dp.gamma_water);
        insol_[i] = insolation(th, p);
        if (i == 0 || i == N)
            continue;
        double ct = std::cos(th) / std::sin(th);
        double s = 1.0 / (2 * h * h);
        if (opt.form == StencilForm::centered) {
            cm_[i] = -(2 - h * ct) * s;
            c0_[i] = 4 * s;
            cp_[i] = -(2 + h * ct) * s;
        } else {
            cm_[i] = -(2 + h * ct) * s;
            c0_[i] = (4 + 4 * h * ct) * s;
            cp_[i] = -(2 + 3 * h * ct) * s;
        }
    }
}

double FdmModel::diffusion(const std::vector<double>& T, int i) const
{
    return cm_[i] * T[i - 1] + c0_[i] * T[i] + cp_[i] * T[i + 1];
}

double FdmModel::source(double T, int i) const
{
    auto albedo = [&](Surface s) {
        return opt_.albedo == AlbedoMode::smooth ? albedo_smooth(T, s, p_)
                                                 : albedo_ice_flag(T < threshold(s, p_), s, p_);
    };
    double w = land_weight_[i];
    double a = w == 0 ? albedo(Surface::water) : w == 1 ? albedo(Surface::land)
                                                       : w * albedo(Surface::land) + (1 - w) * albedo(Surface::water);
    return dp_.eta * insol_[i] * (1.0 - a) - dp_.alpha;
}

double FdmModel::source_slope(double T, int i) const
{
    double w = land_weight_[i];
    double da = w * (w > 0 ? albedo_smooth_derivative(T, Surface::land, p_) : 0.0) +
                (1 - w) * (w < 1 ? albedo_smooth_derivative(T, Surface::water, p_) : 0.0);
    return -dp_.eta * insol_[i] * da;
}

void FdmModel::rhs(const std::vector<double>& T, std::vector<double>& dTdt, double t) const
{
    int N = grid_.N;
    dTdt.resize(N + 1);
    for (int i = 1; i < N; ++i) {
        double src = forcing ? forcing(grid_.theta[i], t) : source(T[i], i);
        dTdt[i] = inv_gamma_[i] * (-diffusion(T, i) - dp_.beta * T[i] + src);
    }
    if (opt_.closure == PoleClosure::ghost) {
        dTdt[0] = dTdt[2];
        dTdt[N] = dTdt[N - 2];
        return;
    }
    double s = 4.0 / (grid_.h * grid_.h);
    for (int i : {0, N}) {
        int nb = i == 0 ? 1 : N - 1;
        double src = forcing ? forcing(grid_.theta[i], t) : source(T[i], i);
        dTdt[i] = inv_gamma_[i] * (s * (T[nb] - T[i]) - dp_.beta * T[i] + src);
    }
}

void FdmModel::close(std::vector<double>& T) const
{
    if (opt_.closure == PoleClosure::ghost)
        apply_ghost(T);
}

double FdmModel::rhs_norm(const std::vector<double>& T) const
{
    std::vector<double> d;
    rhs(T, d, 0.0);
    double m = 0;
    int lo = opt_.closure == PoleClosure::ghost ? 1 : 0;
    for (int i = lo; i <= grid_.N - lo; ++i)
        m = std::max(m, std::abs(d[i]));
    return m;
}

SimulationState make_state(const FdmModel& model, const std::function<double(double)>& f, double t)
{
    SimulationState s;
    s.grid = model.grid();
    s.t = t;
    s.T.resize(s.grid.N + 1);
    for (int i = 0; i <= s.grid.N; ++i)
        s.T[i] = f(s.grid.theta[i]);
    model.close(s.T);
    return s;
}

namespace {

namespace odeint = boost::numeric::odeint;
using Stepper = odeint::runge_kutta_dopri5<State>;
using Controlled = odeint::controlled_runge_kutta<Stepper>;

struct Advancer {
    const FdmModel& model;
    Controlled stepper;
    double dt;
    long steps = 0;

    explicit Advancer(const FdmModel& m)
        : model(m),
          stepper(odeint::default_error_checker<double, odeint::range_algebra,
                                                odeint::default_operations>(
              m.options().atol, m.options().rtol)),
          dt(1e-4)
    {
    }

    void advance(State& x, double& t, double t_target)
    {
        auto sys = [this](const State& T, State& d, double tt) { model.rhs(T, d, tt); };
        while (t < t_target) {
            double remaining = t_target - t;
            bool clipped = dt >= remaining;
            double trial = clipped ? remaining : dt;
            double dt_before = dt;
            double t_before = t;
            if (stepper.try_step(sys, x, t, trial) == odeint::success) {
                model.close(x);
                if (clipped)
                    t = t_target;
                // keep the controller's proposal unless the step was shortened to hit a sample
                dt = clipped ? std::max(dt_before, trial) : trial;
                if (++steps > model.options().max_steps)
                    throw NumericError("step budget exhausted; the problem looks stiff, "
                                       "try a smaller N");
            } else {
                t = t_before;
                dt = trial;
                if (dt < 1e-13 * std::max(1.0, std::abs(t)))
                    throw NumericError("step size underflow; the problem looks stiff, "
                                       "try a smaller N or an implicit method");
            }
        }
    }
};

} // namespace

std::vector<SimulationState> integrate(const SimulationState& s0, double t_end,
                                       const FdmModel& model,
                                       const std::vector<double>& sample_times)
{
    if ((int)s0.T.size() != model.grid().N + 1)
        throw InvalidParameter("state size does not match the grid");
    std::vector<double> times;
    for (double ts : sample_times)
        if (ts >= s0.t && ts <= t_end)
            times.push_back(ts);
    std::sort(times.begin(), times.end());
    if (times.empty() || times.back() < t_end)
        times.push_back(t_end);

    Advancer adv(model);
    State x = s0.T;
    model.close(x);
    double t = s0.t;
    std::vector<SimulationState> out;
    for (double ts : times) {
        adv.advance(x, t, ts);
        SimulationState s;
        s.grid = model.grid();
        s.t = ts;
        s.T = x;
        out.push_back(std::move(s));
    }
    return out;
}

SimulationState relax(const SimulationState& s0, const FdmModel& model, double rhs_tol,
                      double t_max)
{
    Advancer adv(model);
    State x = s0.T;
    model.close(x);
    double t = s0.t;
    double chunk = 1.0;
    while (t < s0.t + t_max && model.rhs_norm(x) >= rhs_tol)
        adv.advance(x, t, std::min(t + chunk, s0.t + t_max));
    SimulationState s;
    s.grid = model.grid();
    s.t = t;
    s.T = std::move(x);
    return s;
}

AssumedValue assumed_solution(AssumedSolution which, double theta, double t)
{
    AssumedValue v{};
    if (which == AssumedSolution::gauss_pulse) {
        double d = theta - pi / 2;
        double g = std::exp(-3 * d * d);
        double amp = 3 - std::sin(t);
        v.T = amp * g - 1;
        v.T_t = -std::cos(t) * g;
        v.T_th = amp * (-6 * d) * g;
        v.T_thth = amp * (36 * d * d - 6) * g;
    } else {
        double c = (pi / 2) * std::cos(0.2 * t);
        double dc = -(pi / 2) * 0.2 * std::sin(0.2 * t);
        double d = theta - c;
        double g = 2 * std::exp(-5 * d * d);
        v.T = g;
        v.T_t = g * (10 * d) * dc;
        v.T_th = g * (-10 * d);
        v.T_thth = g * (100 * d * d - 10);
    }
    return v;
}

double artificial_forcing(AssumedSolution which, double theta, double t,
                          const DimensionlessParams& dp)
{
    AssumedValue v = assumed_solution(which, theta, t);
    double sn = std::sin(theta);
    // at a pole use the regular limit -2 T''; exact only when T' vanishes there
    double diff = sn > 1e-12 ? -v.T_thth - std::cos(theta) / sn * v.T_th : -2 * v.T_thth;
    return dp.gamma_water * v.T_t + diff + dp.beta * v.T;
}

ArtificialSourceReport artificial_source_run(AssumedSolution which, int N, double t_end,
                                             const PhysicalParams& p, StencilForm form,
                                             PoleClosure closure)
{
    // Q only enters the physical source, which the forcing replaces
    DimensionlessParams dp = nondimensionalize(p, 1.0);
    FdmOptions opt;
    opt.form = form;
    opt.closure = closure;
    opt.rtol = 1e-8;
    opt.atol = 1e-10;
    FdmModel model(N, p, dp, aquaplanet_config(), opt);
    model.forcing = [which, dp](double th, double t) { return artificial_forcing(which, th, t, dp); };

    SimulationState s0 = make_state(model, [which](double th) {
        return assumed_solution(which, th, 0.0).T;
    });

    ArtificialSourceReport r;
    r.which = which;
    r.N = N;
    r.t_end = t_end;
    std::vector<double> samples;
    int n_samples = 20;
    for (int k = 1; k <= n_samples; ++k)
        samples.push_back(t_end * k / n_samples);
    auto traj = integrate(s0, t_end, model, samples);
    const Grid& g = model.grid();
    for (const auto& s : traj) {
        double linf = 0, l2 = 0;
        for (int i = 0; i <= N; ++i) {
            double e = s.T[i] - assumed_solution(which, g.theta[i], s.t).T;
            linf = std::max(linf, std::abs(e));
            double w = (i == 0 || i == N) ? 0.5 : 1.0;
            l2 += w * e * e * std::sin(g.theta[i]) * g.h;
        }
        l2 = std::sqrt(0.5 * l2);
        r.times.push_back(s.t);
        r.linf_history.push_back(linf);
        r.linf = std::max(r.linf, linf);
        r.l2 = std::max(r.l2, l2);
    }
    return r;
}

double convergence_order(const std::vector<ArtificialSourceReport>& runs)
{
    if (runs.size() < 2)
        return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& r : runs) {
        double x = std::log(pi / r.N), y = std::log(r.linf);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string to_string(AssumedSolution which)
{
    return which == AssumedSolution::gauss_pulse ? "gauss_pulse" : "moving_gauss";
}

} // namespace ebm

#pragma once

#include "ebm/params.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ebm {

struct Grid {
    int N = 0;
    double h = 0;
    std::vector<double> theta; // N + 1 nodes, pole to pole
};

Grid make_grid(int N);

struct SimulationState {
    Grid grid;
    double t = 0;
    std::vector<double> T; // N + 1 values, ghost rules applied
};

// Diffusion part of L, i.e. -(1/sin)(sin f')' at theta_i, from f_{i-1}, f_i, f_{i+1}.
// Second-order centered form.
double stencil_centered(double fm, double f, double fp, double theta, double h);
// The as-derived centered variant whose first-derivative part is one-sided;
// only first order accurate, kept for comparison.
double stencil_biased(double fm, double f, double fp, double theta, double h);
// One-sided derivations; both return an approximation of the operator at theta.
double stencil_forward(double fm, double f, double fp, double theta, double h);
double stencil_backward(double fm, double f, double fp, double theta, double h);

void apply_ghost(std::vector<double>& T);

enum class AlbedoMode { step, smooth };
enum class StencilForm { centered, biased };
// ghost: T_0 = T_2, T_N = T_{N-2}. pole_limit: the pole nodes carry their own
// equation with the regular-pole limit -2 f'' of the diffusion operator
// (second order; diagnostic alternative).
enum class PoleClosure { ghost, pole_limit };

struct FdmOptions {
    AlbedoMode albedo = AlbedoMode::smooth;
    StencilForm form = StencilForm::centered;
    PoleClosure closure = PoleClosure::ghost;
    double rtol = 1e-6;
    double atol = 1e-9;
    long max_steps = 20'000'000;
};

class FdmModel {
public:
    FdmModel(int N, const PhysicalParams& p, const DimensionlessParams& dp,
             const ContinentConfig& cfg, FdmOptions opt = {});

    const Grid& grid() const { return grid_; }
    const FdmOptions& options() const { return opt_; }
    const PhysicalParams& physical() const { return p_; }
    const DimensionlessParams& dimensionless() const { return dp_; }
    const ContinentConfig& config() const { return cfg_; }

    double gamma_at(int i) const { return 1.0 / inv_gamma_[i]; }
    Surface surface_at(int i) const { return surface_[i]; }
    // 1 on the continent, 0 on the ocean, 1/2 on a node that sits on a continent edge
    double land_weight(int i) const { return land_weight_[i]; }

    // Diffusion stencil at interior node i applied to T.
    double diffusion(const std::vector<double>& T, int i) const;
    // Source eta s (1 - a(T)) - alpha at node i.
    double source(double T, int i) const;
    // d(source)/dT at node i, smooth albedo
    double source_slope(double T, int i) const;

    // dT/dt; endpoints copy the rate of their mirror node so that
    // the ghost rules are preserved by any linear update.
    void rhs(const std::vector<double>& T, std::vector<double>& dTdt, double t) const;
    double rhs_norm(const std::vector<double>& T) const; // max over evolved nodes
    void close(std::vector<double>& T) const; // apply the pole closure

    // Replaces the physical source by a prescribed forcing of (theta, t).
    std::function<double(double, double)> forcing;

private:
    Grid grid_;
    PhysicalParams p_;
    DimensionlessParams dp_;
    ContinentConfig cfg_;
    FdmOptions opt_;
    std::vector<double> inv_gamma_, insol_, cm_, c0_, cp_;
    std::vector<Surface> surface_;
    std::vector<double> land_weight_;
};

// Adaptive Dormand-Prince integration; returns the state at each requested
// sample time (sorted, within [t0, t_end]) and at t_end.
std::vector<SimulationState> integrate(const SimulationState& s0, double t_end,
                                       const FdmModel& model,
                                       const std::vector<double>& sample_times = {});

// Integrate until max |dT/dt| < rhs_tol or t_max is reached.
SimulationState relax(const SimulationState& s0, const FdmModel& model, double rhs_tol,
                      double t_max);

SimulationState make_state(const FdmModel& model, const std::function<double(double)>& f,
                           double t = 0);

enum class AssumedSolution { gauss_pulse, moving_gauss };

// Exact assumed solution and its derivatives.
struct AssumedValue {
    double T, T_t, T_th, T_thth;
};
AssumedValue assumed_solution(AssumedSolution which, double theta, double t);

// gamma T_t + L T for the assumed solution
double artificial_forcing(AssumedSolution which, double theta, double t,
                          const DimensionlessParams& dp);

struct ArtificialSourceReport {
    AssumedSolution which;
    int N = 0;
    double t_end = 0;
    double linf = 0;
    double l2 = 0;
    std::vector<double> times, linf_history;
};

ArtificialSourceReport artificial_source_run(AssumedSolution which, int N, double t_end,
                                             const PhysicalParams& p = {},
                                             StencilForm form = StencilForm::centered,
                                             PoleClosure closure = PoleClosure::ghost);

// Least-squares slope of log error against log h, NaN if fewer than two runs.
double convergence_order(const std::vector<ArtificialSourceReport>& runs);

std::string to_string(AssumedSolution which);

} // namespace ebm

#pragma once

#include "ebm/bim.hpp"
#include "ebm/stability.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ebm {

struct BranchPoint {
    double Q = 0;
    double T_mean = 0; // degrees C
    CaseLabel label;
    std::vector<double> theta_c;
    Verdict stability = Verdict::inconclusive;
    double max_real_eig = 0;
    double residual = 0;
};

struct Branch {
    int id = 0;
    std::string code;
    std::vector<int> points; // indices into Diagram::points, ordered along the curve
    bool ambiguous = false;
};

struct Fold {
    int branch_id = 0;
    double Q_fold = 0;
    double T_mean_fold = 0;
};

struct Diagram {
    ContinentConfig config;
    std::vector<BranchPoint> points; // sorted by (case, Q)
    std::vector<Branch> branches;
    std::vector<Fold> folds;
    double Q_min = 0, Q_max = 0, step = 0;
    int seed_density = 0;
    std::vector<std::string> log; // per-Q failures and dropped points
};

// T_s * (1/2) * integral of T sin(theta) over the sphere, by adaptive
// Gauss-Kronrod on every region of the solution.
double mean_temperature(const StationarySolution& s, const BimContext& ctx);

struct SweepOptions {
    double Q_min = 240, Q_max = 320, step = 0.5;
    int seed_density = 8;
    int threads = 1;
    double tol = 1e-9;
    bool classify = true; // eigen classification of every point
    int N_stability = 1600;
    double tol_zero = 1e-6;
    bool warm_start = true;
};

// Q grid of a sweep: Q_min + k * step up to Q_max inclusive.
std::vector<double> sweep_values(double Q_min, double Q_max, double step);

Diagram sweep(const PhysicalParams& p, const ContinentConfig& cfg, const SweepOptions& opt,
              const std::function<void(double, int)>& progress = {});

// Greedy chaining of same-case points at neighbouring Q, then joining of
// chain ends that meet at a fold.
std::vector<Branch> assemble_branches(const std::vector<BranchPoint>& points, double step,
                                      bool symmetric_config);

std::vector<Fold> detect_folds(const Branch& b, const std::vector<BranchPoint>& points);

// Largest number of equilibria found at any single Q, and that Q.
int max_coexisting(const Diagram& d, double* at_Q = nullptr);

// Verdicts of the slope theorem for the points of every branch with three or
// more points; entries stay inconclusive elsewhere.
std::vector<Verdict> slope_verdicts(const Diagram& d, double slope_tol = 1e-3);

struct AgreementStats {
    int compared = 0;
    int agree = 0;
    double rate() const { return compared ? double(agree) / compared : 1.0; }
};

AgreementStats eigen_slope_agreement(const Diagram& d, double slope_tol = 1e-3);

// Number of stable equilibria at every Q of the sweep.
std::vector<std::pair<double, int>> stable_counts(const Diagram& d);

} // namespace ebm

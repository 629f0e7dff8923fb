#pragma once

#include "ebm/greenfn.hpp"
#include "ebm/params.hpp"

#include <string>
#include <vector>

namespace ebm {

// One surface interval of the partition (north ocean, continent, south
// ocean; a single ocean interval for the aquaplanet). ice_first is the ice
// state at the northern end, n_crit the number of critical latitudes inside.
struct Segment {
    Surface surface = Surface::water;
    bool ice_first = false;
    int n_crit = 0;
};

struct CaseLabel {
    Geometry geometry = Geometry::aquaplanet;
    bool truncated = false; // symmetric half domain [0, pi/2]
    std::vector<Segment> segments;

    int n_unknown() const;  // Newton dimension
    int n_critical() const; // critical latitudes on the whole sphere
    std::string code() const;
    std::string name() const;
    bool operator==(const CaseLabel& o) const { return code() == o.code(); }
};

// Every ice pattern attempted for a configuration: the three aquaplanet
// cases, or all continent patterns with up to max_full critical latitudes
// on the full domain plus 4- and 6-latitude symmetric truncations (epsilon = 0).
std::vector<CaseLabel> case_list(const ContinentConfig& cfg, int max_full = 3);

enum class NodeKind { pole, critical, landmark, symmetry };

struct Node {
    NodeKind kind;
    double theta;
    Surface surface; // surface whose threshold applies (critical nodes)
};

struct Region {
    double a, b;
    Surface surface;
    bool ice;
    int lo, hi; // node indices
};

struct Partition {
    std::vector<Node> nodes;
    std::vector<Region> regions;
    double end = 0; // pi, or pi/2 when truncated
};

Partition partition_regions(const CaseLabel& c, const ContinentConfig& cfg,
                            const std::vector<double>& theta_c);

enum class Quadrature { closed_form, gauss_kronrod };

struct BimContext {
    PhysicalParams p;
    DimensionlessParams dp;
    ContinentConfig cfg;
    const GreenKernel* kernel = nullptr;
    Quadrature quad = Quadrature::closed_form;
    double quad_tol = 1e-10;
    // basis values at the poles, continent edges and equator, filled by make_context
    std::vector<GreenKernel::Point> fixed_points;

    GreenKernel::Point point(double theta) const;
};

struct BoundaryUnknowns {
    std::vector<double> theta_c;
    std::vector<double> dT_at_c;
    double T_north = 0, T_south = 0; // T(0), T(pi)
    double T_l1 = 0, T_l2 = 0, dT_l1 = 0, dT_l2 = 0;
    double T_equator = 0; // symmetric truncation only
    std::vector<double> node_T, node_dT; // per partition node
};

struct ResidualResult {
    std::vector<double> f;
    BoundaryUnknowns unknowns;
    double rcond = 0;
};

ResidualResult assemble_residual(const CaseLabel& c, const std::vector<double>& theta_c,
                                 const BimContext& ctx);

// Max |residual| over every boundary integral equation of the case.
double bie_residual(const CaseLabel& c, const BoundaryUnknowns& u, const BimContext& ctx);

double solution_at(double xi, const CaseLabel& c, const BoundaryUnknowns& u,
                   const BimContext& ctx);
// value and slope; near_side picks the region when xi sits on a node
void solution_and_slope(double xi, const CaseLabel& c, const BoundaryUnknowns& u,
                        const BimContext& ctx, double& T, double& dT, Side near_side = Side::left);

struct NewtonResult {
    bool converged = false;
    int iterations = 0;
    double residual = 0;
    std::string reason;
    BoundaryUnknowns unknowns;
};

NewtonResult newton_find(const CaseLabel& c, std::vector<double> guess, const BimContext& ctx,
                         double tol = 1e-9, int max_iter = 50);

bool feasible(const CaseLabel& c, const ContinentConfig& cfg, const std::vector<double>& theta_c);

struct StationarySolution {
    CaseLabel label;
    double Q = 0;
    BoundaryUnknowns unknowns;
    std::vector<double> theta, T; // sampled profile over [0, pi]
    double residual_norm = 0;     // max BIE residual
    double c1_mismatch = 0;       // max slope jump at critical latitudes and edges
    double continuity = 0;        // max value jump at nodes
};

StationarySolution make_solution(const CaseLabel& c, const BoundaryUnknowns& u, double Q,
                                 const BimContext& ctx, int n_profile = 401);

// Evaluate a solution on arbitrary nodes, e.g. a finite-difference grid.
std::vector<double> sample_profile(const std::vector<double>& thetas, const StationarySolution& s,
                                   const BimContext& ctx);

// Profile signs agree with the ice pattern of every region.
bool sign_consistent(const CaseLabel& c, const BoundaryUnknowns& u, const BimContext& ctx);

struct EnumerateOptions {
    int seed_density = 8;
    int threads = 1;
    int max_full = 3;
    double tol = 1e-9;
    int n_profile = 401;
    // extra Newton starts (e.g. roots from a neighbouring Q), matched by case code
    std::vector<std::pair<CaseLabel, std::vector<double>>> warm_starts;
};

std::vector<StationarySolution> enumerate_equilibria(double Q, const BimContext& ctx,
                                                     const EnumerateOptions& opt = {});

BimContext make_context(const PhysicalParams& p, const ContinentConfig& cfg, double Q,
                        const GreenKernel& kernel);

} // namespace ebm

#pragma once

#include "ebm/fdm.hpp"
#include "ebm/params.hpp"

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

namespace ebm {

enum class Verdict { stable, unstable, marginal, inconclusive };
enum class StabilityMethod { eigen, slope, heuristic };

std::string to_string(Verdict v);
std::string to_string(StabilityMethod m);

struct StabilityReport {
    StabilityMethod method = StabilityMethod::eigen;
    Verdict verdict = Verdict::inconclusive;
    double max_real_eig = 0; // eigen only
    std::vector<std::complex<double>> spectrum; // eigen only, sorted by decreasing real part
    int N = 0;
    std::string details;
};

// dh/dT of the smooth-albedo source, >= 0 because the albedo decreases with T.
double source_jacobian_hT(double T0, double theta, Surface s, const PhysicalParams& p,
                          const DimensionlessParams& dp);

// Jacobian of the finite-difference right-hand side at T0 (length N+1) on the
// N-1 interior nodes, pole values eliminated through the ghost rules.
// With zero_hT the albedo feedback is dropped.
Eigen::MatrixXd build_H(const std::vector<double>& T0, const FdmModel& model,
                        bool zero_hT = false);

// The same Jacobian in its three diagonals (the ghost folding keeps it
// tridiagonal); sub[i] = H(i+1, i), sup[i] = H(i, i+1).
struct Tridiagonal {
    std::vector<double> sub, diag, sup;
};
Tridiagonal build_H_tridiagonal(const std::vector<double>& T0, const FdmModel& model,
                                bool zero_hT = false);
std::vector<std::complex<double>> spectrum(const Tridiagonal& H);
// Largest real part of the spectrum; bisection on Sturm counts when the
// matrix is symmetrizable, full spectrum otherwise.
double max_real_eigenvalue(const Tridiagonal& H);

// Full spectrum of H. Tridiagonal matrices whose off-diagonal products are
// positive are similar to symmetric ones and are solved as such; anything
// else goes through the general real eigensolver.
std::vector<std::complex<double>> spectrum(const Eigen::MatrixXd& H, bool allow_symmetrize = true);

// With full_spectrum false only max_real_eig is filled.
StabilityReport eigen_classify(const std::vector<double>& T0, const FdmModel& model,
                               double tol_zero = 1e-6, bool zero_hT = false,
                               bool full_spectrum = true);

struct SlopeSample {
    double Q;
    double T_mean;
};

// Slope-stability verdict per branch point: dQ/dTmean > 0 stable.
std::vector<Verdict> slope_classify(const std::vector<SlopeSample>& branch,
                                    double slope_tol = 1e-3);

Verdict verdict_from_eigen(double max_real, double tol_zero);

struct HeuristicOptions {
    double amplitude = 1e-2;
    double t_end = 20;
    double band = 5;     // stable if within band * amplitude
    double depart = 0.5; // unstable beyond this L-inf distance
};

StabilityReport heuristic_run(const std::vector<double>& T0, const FdmModel& model,
                              const HeuristicOptions& opt = {});

} // namespace ebm

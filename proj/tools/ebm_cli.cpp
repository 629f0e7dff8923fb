#include "ebm/bifurcation.hpp"
#include "ebm/bim.hpp"
#include "ebm/config.hpp"
#include "ebm/errors.hpp"
#include "ebm/fdm.hpp"
#include "ebm/greenfn.hpp"
#include "ebm/output.hpp"
#include "ebm/stability.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

using namespace ebm;
using nlohmann::json;

namespace {

enum Exit { ok = 0, config_error = 2, reference_error = 3, numeric_error = 4 };

struct Globals {
    std::string config;
    std::string out_dir = ".";
    int threads = 0;
    int seed_density = 8;
    double tol = 1e-9;
};

RunConfig read_config(const Globals& g)
{
    return g.config.empty() ? RunConfig{} : load_config(g.config);
}

int thread_count(const Globals& g)
{
    if (g.threads > 0)
        return g.threads;
    if (const char* e = std::getenv("EBM_THREADS")) {
        char* end = nullptr;
        long n = std::strtol(e, &end, 10);
        if (end != e && *end == '\0' && n > 0)
            return (int)n;
        throw InvalidParameter(std::string("EBM_THREADS must be a positive integer, got '") + e + "'");
    }
    return 1;
}

std::string utc_now()
{
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json base_manifest(const std::string& cmd, const RunConfig& rc, const Globals& g)
{
    json m;
    m["command"] = cmd;
    m["config"] = to_json(rc);
    m["config_path"] = g.config;
    m["started"] = utc_now();
    m["tolerances"] = {{"newton", g.tol}};
    m["seed_density"] = g.seed_density;
    return m;
}

std::vector<StationarySolution> solve_all(const RunConfig& rc, const GreenKernel& kernel,
                                          const Globals& g, BimContext& ctx)
{
    ctx = make_context(rc.p, rc.cfg, rc.Q, kernel);
    EnumerateOptions eo;
    eo.seed_density = g.seed_density;
    eo.threads = thread_count(g);
    eo.tol = g.tol;
    return enumerate_equilibria(rc.Q, ctx, eo);
}

const StationarySolution& pick(const std::vector<StationarySolution>& sols, int id, double Q)
{
    if (id < 0 || id >= (int)sols.size())
        throw ReferenceError("no equilibrium with id " + std::to_string(id) + " at Q = " +
                             format_number(Q) + " (" + std::to_string(sols.size()) + " found)");
    return sols[id];
}

// --- solve ---------------------------------------------------------------

struct SolveArgs {
    double Q = NAN;
    std::string case_filter;
    int n_profile = 401;
};

int cmd_solve(const Globals& g, const SolveArgs& a)
{
    RunConfig rc = read_config(g);
    if (!std::isnan(a.Q))
        rc.Q = a.Q;
    GreenKernel kernel(nondimensionalize(rc.p, rc.Q).beta);
    auto ctx0 = make_context(rc.p, rc.cfg, rc.Q, kernel);
    EnumerateOptions eo;
    eo.seed_density = g.seed_density;
    eo.threads = thread_count(g);
    eo.tol = g.tol;
    eo.n_profile = a.n_profile;
    auto sols = enumerate_equilibria(rc.Q, ctx0, eo);

    OutputSet out(g.out_dir);
    json m = base_manifest("solve", rc, g);
    json list = json::array();
    int id = 0;
    for (const auto& s : sols) {
        if (!a.case_filter.empty() && s.label.code() != a.case_filter && s.label.name() != a.case_filter) {
            ++id;
            continue;
        }
        std::string stem = "solution_" + std::to_string(id);
        out.write(stem + ".csv", profile_csv(s, rc.p.T_s));
        auto j = solution_json(s, id, rc.p);
        j["T_mean_C"] = mean_temperature(s, ctx0);
        out.write_json(stem + ".json", j);
        list.push_back(j);
        ++id;
    }
    m["solutions"] = list;
    if (list.empty())
        m["note"] = "no equilibria found";
    out.write_manifest(m);
    std::cout << list.size() << " equilibria at Q = " << format_number(rc.Q) << "\n";
    for (const auto& j : list)
        std::cout << "  " << j["id"].get<int>() << "  " << j["case_name"].get<std::string>()
                  << "  residual " << j["residual"].get<double>() << "\n";
    return ok;
}

// --- simulate ------------------------------------------------------------

struct SimulateArgs {
    std::string ic;
    double Q = NAN;
    double t_end = 10;
    int N = 400;
    int samples = 10;
    std::string albedo = "smooth";
    double perturb = 0;
};

std::vector<double> read_profile_file(const std::string& path, const Grid& grid)
{
    std::ifstream f(path);
    if (!f)
        throw ReferenceError("cannot open initial-condition file " + path);
    std::string line;
    std::getline(f, line);
    std::vector<std::string> head;
    {
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ','))
            head.push_back(c);
    }
    auto col = [&](std::initializer_list<const char*> names) {
        for (const char* n : names)
            for (std::size_t i = 0; i < head.size(); ++i)
                if (head[i] == n)
                    return (int)i;
        return -1;
    };
    int ct = col({"theta_rad", "theta"});
    int cT = col({"T_dimensionless", "T"});
    if (ct < 0 || cT < 0)
        throw InvalidParameter(path + ": header needs theta_rad and T_dimensionless columns");
    std::vector<double> th, T;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ','))
            cells.push_back(c);
        if ((int)cells.size() <= std::max(ct, cT))
            throw InvalidParameter(path + ": line " + std::to_string(lineno) + " has too few columns");
        try {
            th.push_back(std::stod(cells[ct]));
            T.push_back(std::stod(cells[cT]));
        } catch (const std::exception&) {
            throw InvalidParameter(path + ": line " + std::to_string(lineno) + " is not numeric");
        }
    }
    if (th.size() < 2 || !std::is_sorted(th.begin(), th.end()))
        throw InvalidParameter(path + ": need at least two rows with increasing theta");
    std::vector<double> out(grid.theta.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double x = grid.theta[i];
        auto it = std::lower_bound(th.begin(), th.end(), x);
        if (it == th.begin()) {
            out[i] = T.front();
        } else if (it == th.end()) {
            out[i] = T.back();
        } else {
            std::size_t k = it - th.begin();
            double w = (x - th[k - 1]) / (th[k] - th[k - 1]);
            out[i] = (1 - w) * T[k - 1] + w * T[k];
        }
    }
    return out;
}

AlbedoMode albedo_mode(const std::string& s)
{
    if (s == "smooth")
        return AlbedoMode::smooth;
    if (s == "step")
        return AlbedoMode::step;
    throw InvalidParameter("albedo must be smooth or step");
}

int cmd_simulate(const Globals& g, const SimulateArgs& a)
{
    RunConfig rc = read_config(g);
    if (!std::isnan(a.Q))
        rc.Q = a.Q;
    if (a.t_end < 0)
        throw InvalidParameter("t-end must be non-negative");
    auto dp = nondimensionalize(rc.p, rc.Q);
    FdmOptions fo;
    fo.albedo = albedo_mode(a.albedo);
    FdmModel model(a.N, rc.p, dp, rc.cfg, fo);
    const auto& grid = model.grid();

    std::vector<double> T0;
    const std::string& ic = a.ic;
    if (ic.rfind("uniform:", 0) == 0) {
        double v;
        try {
            v = std::stod(ic.substr(8));
        } catch (const std::exception&) {
            throw InvalidParameter("bad uniform value in --ic " + ic);
        }
        T0.assign(grid.theta.size(), v);
    } else if (ic.rfind("file:", 0) == 0) {
        T0 = read_profile_file(ic.substr(5), grid);
    } else if (ic.rfind("equilibrium:", 0) == 0) {
        int id;
        try {
            std::size_t used = 0;
            id = std::stoi(ic.substr(12), &used);
            if (used != ic.size() - 12)
                throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ReferenceError("bad equilibrium id in --ic " + ic);
        }
        GreenKernel kernel(dp.beta);
        BimContext ctx;
        auto sols = solve_all(rc, kernel, g, ctx);
        T0 = sample_profile(grid.theta, pick(sols, id, rc.Q), ctx);
    } else {
        throw InvalidParameter("--ic must be uniform:<value>, file:<path> or equilibrium:<id>");
    }
    for (std::size_t i = 0; i < T0.size(); ++i) {
        double x = (grid.theta[i] - 1.0) / 0.4;
        T0[i] += a.perturb * std::exp(-x * x);
    }

    SimulationState s0{grid, 0.0, T0};
    std::vector<double> times;
    int ns = std::max(1, a.samples);
    for (int k = 0; k <= ns; ++k)
        times.push_back(a.t_end * k / ns);
    auto states = integrate(s0, a.t_end, model, times);
    states.erase(std::unique(states.begin(), states.end(),
                             [](const SimulationState& x, const SimulationState& y) { return x.t == y.t; }),
                 states.end());

    OutputSet out(g.out_dir);
    out.write("trajectory.csv", trajectory_csv(states));
    json m = base_manifest("simulate", rc, g);
    m["ic"] = ic;
    m["N"] = a.N;
    m["t_end"] = a.t_end;
    m["albedo"] = a.albedo;
    m["perturbation"] = a.perturb;
    m["tolerances"]["rtol"] = fo.rtol;
    m["tolerances"]["atol"] = fo.atol;
    m["final_rhs_norm"] = model.rhs_norm(states.back().T);
    out.write_manifest(m);
    std::cout << states.size() << " states written, final max|dT/dt| = "
              << model.rhs_norm(states.back().T) << "\n";
    return ok;
}

// --- verify --------------------------------------------------------------

struct VerifyArgs {
    std::vector<int> N{100, 200, 400};
    double t_end = 2;
    std::string source = "both";
    double min_order = 1.7;
};

int cmd_verify(const Globals& g, const VerifyArgs& a)
{
    if (a.N.empty())
        throw InvalidParameter("--N needs at least one value");
    std::vector<AssumedSolution> which;
    if (a.source == "both" || a.source == "gauss_pulse")
        which.push_back(AssumedSolution::gauss_pulse);
    if (a.source == "both" || a.source == "moving_gauss")
        which.push_back(AssumedSolution::moving_gauss);
    if (which.empty())
        throw InvalidParameter("--source must be both, gauss_pulse or moving_gauss");
    RunConfig rc = read_config(g);

    json table = json::array();
    bool pass = true;
    for (auto w : which) {
        std::vector<ArtificialSourceReport> runs, runs_l2;
        json rows = json::array();
        for (int N : a.N) {
            auto r = artificial_source_run(w, N, a.t_end, rc.p);
            rows.push_back({{"N", N}, {"linf", r.linf}, {"l2", r.l2}});
            runs.push_back(r);
            r.linf = r.l2;
            runs_l2.push_back(r);
        }
        json e{{"source", to_string(w)}, {"runs", rows}};
        double order = convergence_order(runs);
        if (std::isnan(order)) {
            e["order"] = nullptr;
            e["order_l2"] = nullptr;
        } else {
            e["order"] = order;
            e["order_l2"] = convergence_order(runs_l2);
            if (order < a.min_order)
                pass = false;
        }
        table.push_back(e);
        std::cout << to_string(w) << ": order "
                  << (std::isnan(order) ? std::string("n/a") : format_number(order)) << "\n";
    }
    json report{{"t_end", a.t_end}, {"min_order", a.min_order}, {"sources", table}, {"pass", pass}};
    OutputSet out(g.out_dir);
    out.write_json("verify.json", report);
    json m = base_manifest("verify", rc, g);
    m["pass"] = pass;
    out.write_manifest(m);
    return pass ? ok : numeric_error;
}

// --- bifurcate -----------------------------------------------------------

struct BifurcateArgs {
    double Q_min = 240, Q_max = 320, step = 0.5;
    int N_stability = 1600;
    bool no_classify = false;
    bool quiet = false;
};

int cmd_bifurcate(const Globals& g, const BifurcateArgs& a)
{
    RunConfig rc = read_config(g);
    if (!(a.Q_min < a.Q_max) || !(a.step > 0))
        throw InvalidParameter("need Q-min < Q-max and step > 0");
    SweepOptions so;
    so.Q_min = a.Q_min;
    so.Q_max = a.Q_max;
    so.step = a.step;
    so.seed_density = g.seed_density;
    so.threads = thread_count(g);
    so.tol = g.tol;
    so.classify = !a.no_classify;
    so.N_stability = a.N_stability;
    auto progress = [&](double Q, int n) {
        if (!a.quiet)
            std::cerr << "Q = " << format_number(Q) << ": " << n << " equilibria\n";
    };
    Diagram d = sweep(rc.p, rc.cfg, so, progress);

    OutputSet out(g.out_dir);
    out.write("diagram.csv", diagram_csv(d));
    out.write("folds.csv", folds_csv(d));
    json m = base_manifest("bifurcate", rc, g);
    double qmax = 0;
    int nmax = max_coexisting(d, &qmax);
    m["sweep"] = {{"Q_min", d.Q_min}, {"Q_max", d.Q_max}, {"step", d.step},
                  {"seed_density", d.seed_density}, {"N_stability", so.N_stability},
                  {"classified", so.classify}};
    m["summary"] = {{"points", d.points.size()}, {"branches", d.branches.size()},
                    {"folds", d.folds.size()}, {"max_coexisting", nmax}, {"max_coexisting_Q", qmax}};
    m["log"] = d.log;
    out.write_manifest(m);
    std::cout << d.points.size() << " points, " << d.branches.size() << " branches, "
              << d.folds.size() << " folds, up to " << nmax << " equilibria at Q = "
              << format_number(qmax) << "\n";
    return ok;
}

// --- stability -----------------------------------------------------------

struct StabilityArgs {
    double Q = NAN;
    int solution = -1;
    std::string method = "eigen";
    int N = 1600;
    double dQ = 0.5;
    bool write_spectrum = false;
    double amplitude = 1e-2;
    double t_end = 20;
};

int cmd_stability(const Globals& g, const StabilityArgs& a)
{
    RunConfig rc = read_config(g);
    if (!std::isnan(a.Q))
        rc.Q = a.Q;
    auto dp = nondimensionalize(rc.p, rc.Q);
    GreenKernel kernel(dp.beta);
    BimContext ctx;
    auto sols = solve_all(rc, kernel, g, ctx);
    const auto& sol = pick(sols, a.solution, rc.Q);

    StabilityReport rep;
    json extra;
    if (a.method == "eigen" || a.method == "heuristic") {
        FdmModel model(a.N, rc.p, dp, rc.cfg);
        auto T0 = sample_profile(model.grid().theta, sol, ctx);
        if (a.method == "eigen") {
            rep = eigen_classify(T0, model, 1e-6, false, a.write_spectrum);
        } else {
            HeuristicOptions ho;
            ho.amplitude = a.amplitude;
            ho.t_end = a.t_end;
            rep = heuristic_run(T0, model, ho);
        }
    } else if (a.method == "slope") {
        // follow the branch two steps each way from the selected root
        std::vector<SlopeSample> pts{{rc.Q, mean_temperature(sol, ctx)}};
        for (int dir : {-1, 1}) {
            std::vector<double> guess = sol.unknowns.theta_c;
            for (int k = 1; k <= 2; ++k) {
                double Q = rc.Q + dir * k * a.dQ;
                auto c = make_context(rc.p, rc.cfg, Q, kernel);
                auto nr = newton_find(sol.label, guess, c, g.tol);
                if (!nr.converged || !sign_consistent(sol.label, nr.unknowns, c))
                    break;
                auto s = make_solution(sol.label, nr.unknowns, Q, c, 2);
                SlopeSample sp{Q, mean_temperature(s, c)};
                if (dir < 0)
                    pts.insert(pts.begin(), sp);
                else
                    pts.push_back(sp);
                guess = nr.unknowns.theta_c;
            }
        }
        if (pts.size() < 3)
            throw NumericError("branch could not be continued to three points");
        auto v = slope_classify(pts);
        std::size_t centre = 0;
        while (pts[centre].Q != rc.Q)
            ++centre;
        rep.method = StabilityMethod::slope;
        rep.verdict = v[centre];
        json br = json::array();
        for (std::size_t i = 0; i < pts.size(); ++i)
            br.push_back({{"Q", pts[i].Q}, {"T_mean_C", pts[i].T_mean}, {"verdict", to_string(v[i])}});
        extra["branch"] = br;
    } else {
        throw InvalidParameter("--method must be eigen, slope or heuristic");
    }

    json r = report_json(rep);
    r["Q"] = rc.Q;
    r["solution"] = a.solution;
    r["case"] = sol.label.code();
    for (auto it = extra.begin(); it != extra.end(); ++it)
        r[it.key()] = *it;
    OutputSet out(g.out_dir);
    out.write_json("stability.json", r);
    if (a.write_spectrum && !rep.spectrum.empty())
        out.write("spectrum.csv", spectrum_csv(rep.spectrum));
    json m = base_manifest("stability", rc, g);
    m["method"] = a.method;
    out.write_manifest(m);
    std::cout << sol.label.name() << ": " << to_string(rep.verdict) << "\n";
    return ok;
}

// --- greenfn-table -------------------------------------------------------

struct TableArgs {
    double beta = NAN;
    int n_theta = 20, n_xi = 20;
};

int cmd_table(const Globals& g, const TableArgs& a)
{
    RunConfig rc = read_config(g);
    double beta = std::isnan(a.beta) ? nondimensionalize(rc.p, rc.Q).beta : a.beta;
    if (a.n_theta < 1 || a.n_xi < 1)
        throw InvalidParameter("table sizes must be positive");
    GreenKernel kernel(beta);
    auto nodes = [](int n) {
        std::vector<double> v;
        for (int i = 1; i <= n; ++i)
            v.push_back(std::numbers::pi * i / (n + 1));
        return v;
    };
    auto rows = kernel_table(kernel, nodes(a.n_theta), nodes(a.n_xi));
    OutputSet out(g.out_dir);
    out.write("kernel_table.csv", kernel_table_csv(rows));
    json m = base_manifest("greenfn-table", rc, g);
    m["beta"] = beta;
    m["mu"] = kernel.degree().mu;
    m["c"] = kernel.c();
    out.write_manifest(m);
    std::cout << rows.size() << " kernel values written\n";
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Energy balance model: equilibria, dynamics, stability and bifurcation diagrams"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "JSON parameter file");
    app.add_option("--out-dir", g.out_dir, "output directory");
    app.add_option("--threads", g.threads, "worker threads (EBM_THREADS if unset)");
    app.add_option("--seed-density", g.seed_density, "Newton seeds per unknown");
    app.add_option("--tol", g.tol, "Newton tolerance");

    SolveArgs sa;
    auto* solve = app.add_subcommand("solve", "enumerate stationary solutions at one Q");
    solve->add_option("--Q", sa.Q, "solar constant, W m^-2");
    solve->add_option("--case", sa.case_filter, "keep only this case code or name");
    solve->add_option("--n-profile", sa.n_profile, "profile samples");

    SimulateArgs si;
    auto* sim = app.add_subcommand("simulate", "time-integrate the finite-difference model");
    sim->add_option("--ic", si.ic, "uniform:<T>, file:<csv> or equilibrium:<id>")->required();
    sim->add_option("--Q", si.Q, "solar constant, W m^-2");
    sim->add_option("--t-end", si.t_end, "final time");
    sim->add_option("--N", si.N, "grid intervals");
    sim->add_option("--samples", si.samples, "output intervals");
    sim->add_option("--albedo", si.albedo, "smooth or step");
    sim->add_option("--perturb", si.perturb, "amplitude of a bump at theta = 1 added to the ic");

    VerifyArgs va;
    auto* ver = app.add_subcommand("verify", "artificial-source convergence test");
    ver->add_option("--N", va.N, "grid sizes")->delimiter(',');
    ver->add_option("--t-end", va.t_end, "final time");
    ver->add_option("--source", va.source, "both, gauss_pulse or moving_gauss");
    ver->add_option("--min-order", va.min_order, "required convergence order");

    BifurcateArgs ba;
    auto* bif = app.add_subcommand("bifurcate", "sweep Q and build the bifurcation diagram");
    bif->add_option("--Q-min", ba.Q_min);
    bif->add_option("--Q-max", ba.Q_max);
    bif->add_option("--step", ba.step);
    bif->add_option("--N-stability", ba.N_stability, "grid used for eigen classification");
    bif->add_flag("--no-classify", ba.no_classify);
    bif->add_flag("--quiet", ba.quiet);

    StabilityArgs st;
    auto* stab = app.add_subcommand("stability", "classify one equilibrium");
    stab->add_option("--Q", st.Q, "solar constant, W m^-2");
    stab->add_option("--solution", st.solution, "id as listed by solve")->required();
    stab->add_option("--method", st.method, "eigen, slope or heuristic");
    stab->add_option("--N", st.N, "grid intervals");
    stab->add_option("--dQ", st.dQ, "Q spacing of the slope method");
    stab->add_flag("--spectrum", st.write_spectrum, "write the full spectrum");
    stab->add_option("--amplitude", st.amplitude, "heuristic perturbation amplitude");
    stab->add_option("--t-end", st.t_end, "heuristic integration time");

    TableArgs ta;
    auto* tab = app.add_subcommand("greenfn-table", "tabulate the Green's kernel");
    tab->add_option("--beta", ta.beta, "decay coefficient (default from the config)");
    tab->add_option("--n-theta", ta.n_theta);
    tab->add_option("--n-xi", ta.n_xi);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? ok : config_error;
    }

    try {
        if (*solve) return cmd_solve(g, sa);
        if (*sim) return cmd_simulate(g, si);
        if (*ver) return cmd_verify(g, va);
        if (*bif) return cmd_bifurcate(g, ba);
        if (*stab) return cmd_stability(g, st);
        if (*tab) return cmd_table(g, ta);
    } catch (const InvalidParameter& e) {
        std::cerr << "error: " << e.what() << "\n";
        return config_error;
    } catch (const ReferenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return reference_error;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return numeric_error;
    }
    return ok;
}

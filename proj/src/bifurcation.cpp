#include "ebm/bifurcation.hpp"
#include "ebm/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

namespace ebm {

namespace {

constexpr double pi = std::numbers::pi;

// per-step link bound in the (theta_c, T_mean) metric used for chaining
constexpr double link_bound = 0.35;
constexpr double join_bound = 0.6;

double point_distance(const BranchPoint& a, const BranchPoint& b)
{
    double d = std::abs(a.T_mean - b.T_mean) / 10.0;
    double m = 0;
    for (size_t k = 0; k < a.theta_c.size() && k < b.theta_c.size(); ++k)
        m = std::max(m, std::abs(a.theta_c[k] - b.theta_c[k]));
    return d + m;
}

std::vector<double> mirrored(const std::vector<double>& th)
{
    std::vector<double> m(th.rbegin(), th.rend());
    for (double& v : m)
        v = pi - v;
    return m;
}

double theta_distance(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0;
    for (size_t k = 0; k < a.size() && k < b.size(); ++k)
        m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

} // namespace

double mean_temperature(const StationarySolution& s, const BimContext& ctx)
{
    Partition part = partition_regions(s.label, ctx.cfg, s.unknowns.theta_c);
    std::set<double> cuts{0.0, pi};
    for (const auto& n : part.nodes) {
        cuts.insert(n.theta);
        if (s.label.truncated)
            cuts.insert(pi - n.theta);
    }
    std::vector<double> c(cuts.begin(), cuts.end());
    auto f = [&](double th) { return std::sin(th) * solution_at(th, s.label, s.unknowns, ctx); };
    double integral = 0;
    for (size_t i = 0; i + 1 < c.size(); ++i) {
        if (c[i + 1] - c[i] < 1e-14)
            continue;
        integral += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
            f, c[i], c[i + 1], 10, 1e-12);
    }
    return ctx.p.T_s * 0.5 * integral;
}

std::vector<double> sweep_values(double Q_min, double Q_max, double step)
{
    if (!(Q_min < Q_max) || !(step > 0))
        throw InvalidParameter("sweep needs Q_min < Q_max and a positive step");
    std::vector<double> qs;
    int n = (int)std::floor((Q_max - Q_min) / step + 1e-9);
    for (int k = 0; k <= n; ++k)
        qs.push_back(Q_min + k * step);
    if (qs.size() < 2)
        throw InvalidParameter("sweep needs at least two Q values");
    return qs;
}

Diagram sweep(const PhysicalParams& p, const ContinentConfig& cfg, const SweepOptions& opt,
              const std::function<void(double, int)>& progress)
{
    Diagram d;
    d.config = cfg;
    d.Q_min = opt.Q_min;
    d.Q_max = opt.Q_max;
    d.step = opt.step;
    d.seed_density = opt.seed_density;
    std::vector<double> qs = sweep_values(opt.Q_min, opt.Q_max, opt.step);

    DimensionlessParams dp0 = nondimensionalize(p, qs.front());
    GreenKernel kernel(dp0.beta);
    std::vector<std::pair<CaseLabel, std::vector<double>>> previous;

    for (double Q : qs) {
        std::vector<StationarySolution> sols;
        BimContext ctx;
        try {
            ctx = make_context(p, cfg, Q, kernel);
            EnumerateOptions eo;
            eo.seed_density = opt.seed_density;
            eo.threads = opt.threads;
            eo.tol = opt.tol;
            eo.n_profile = 2;
            if (opt.warm_start)
                eo.warm_starts = previous;
            sols = enumerate_equilibria(Q, ctx, eo);
        } catch (const std::exception& e) {
            d.log.push_back("Q=" + std::to_string(Q) + ": " + e.what());
            continue;
        }
        previous.clear();
        for (const auto& s : sols)
            if (!s.unknowns.theta_c.empty())
                previous.push_back({s.label, s.unknowns.theta_c});

        std::vector<BranchPoint> pts(sols.size());
        std::vector<char> keep(sols.size(), 1);
        FdmModel model(opt.N_stability, p, ctx.dp, cfg);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, opt.threads))
#endif
        for (long i = 0; i < (long)sols.size(); ++i) {
            const auto& s = sols[i];
            BranchPoint& bp = pts[i];
            bp.Q = Q;
            bp.label = s.label;
            bp.theta_c = s.unknowns.theta_c;
            bp.residual = s.residual_norm;
            if (!(s.residual_norm < 1e-6)) {
                keep[i] = 0;
                continue;
            }
            bp.T_mean = mean_temperature(s, ctx);
            if (opt.classify) {
                try {
                    auto T0 = sample_profile(model.grid().theta, s, ctx);
                    auto rep = eigen_classify(T0, model, opt.tol_zero, false, false);
                    bp.stability = rep.verdict;
                    bp.max_real_eig = rep.max_real_eig;
                } catch (const NumericError&) {
                    bp.stability = Verdict::inconclusive;
                }
            }
        }
        for (size_t i = 0; i < sols.size(); ++i) {
            if (keep[i])
                d.points.push_back(std::move(pts[i]));
            else
                d.log.push_back("Q=" + std::to_string(Q) + ": dropped " + sols[i].label.name() +
                                " (residual " + std::to_string(sols[i].residual_norm) + ")");
        }
        if (progress)
            progress(Q, (int)sols.size());
    }

    std::stable_sort(d.points.begin(), d.points.end(), [](const BranchPoint& a, const BranchPoint& b) {
        std::string ca = a.label.code(), cb = b.label.code();
        if (ca != cb)
            return ca < cb;
        if (a.Q != b.Q)
            return a.Q < b.Q;
        return a.theta_c < b.theta_c;
    });
    d.branches = assemble_branches(d.points, opt.step, cfg.symmetric());
    for (const auto& b : d.branches) {
        auto f = detect_folds(b, d.points);
        d.folds.insert(d.folds.end(), f.begin(), f.end());
    }
    return d;
}

std::vector<Branch> assemble_branches(const std::vector<BranchPoint>& points, double step,
                                      bool symmetric_config)
{
    std::vector<Branch> out;
    if (points.empty())
        return out;
    double Q0 = points.front().Q;
    for (const auto& p : points)
        Q0 = std::min(Q0, p.Q);
    auto qidx = [&](const BranchPoint& p) { return (long)std::llround((p.Q - Q0) / step); };

    std::map<std::string, std::map<long, std::vector<int>>> groups;
    for (int i = 0; i < (int)points.size(); ++i)
        groups[points[i].label.code()][qidx(points[i])].push_back(i);

    for (auto& [code, byq] : groups) {
        std::map<int, int> next, prev;
        std::set<int> ambiguous;
        for (auto it = byq.begin(); it != byq.end(); ++it) {
            auto jt = byq.find(it->first + 1);
            if (jt == byq.end())
                continue;
            struct Cand {
                double d;
                int a, b;
            };
            std::vector<Cand> cands;
            std::map<int, int> count_a, count_b;
            for (int a : it->second)
                for (int b : jt->second) {
                    double dd = point_distance(points[a], points[b]);
                    if (dd < link_bound) {
                        cands.push_back({dd, a, b});
                        ++count_a[a];
                        ++count_b[b];
                    }
                }
            std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) { return x.d < y.d; });
            for (const auto& c : cands) {
                if (next.count(c.a) || prev.count(c.b))
                    continue;
                next[c.a] = c.b;
                prev[c.b] = c.a;
                if (count_a[c.a] > 1 || count_b[c.b] > 1) {
                    ambiguous.insert(c.a);
                    ambiguous.insert(c.b);
                }
            }
        }
        std::vector<std::vector<int>> chains;
        for (auto& [q, idx] : byq)
            for (int i : idx) {
                if (prev.count(i))
                    continue;
                std::vector<int> ch{i};
                while (next.count(ch.back()))
                    ch.push_back(next[ch.back()]);
                chains.push_back(std::move(ch));
            }

        // join chain ends meeting at the same Q: a fold. Mirror-image pairs
        // meeting at a symmetry-breaking point are left apart.
        bool joined = true;
        while (joined) {
            joined = false;
            struct End {
                int chain;
                bool at_start;
            };
            double best = join_bound;
            int bi = -1, bj = -1;
            bool bsi = false, bsj = false;
            for (int i = 0; i < (int)chains.size(); ++i)
                for (int j = i + 1; j < (int)chains.size(); ++j)
                    for (bool si : {true, false})
                        for (bool sj : {true, false}) {
                            if (si != sj)
                                continue; // a start meeting an end is a gap, not a fold
                            const auto& A = chains[i];
                            const auto& B = chains[j];
                            int ea = si ? A.front() : A.back();
                            int eb = sj ? B.front() : B.back();
                            if (qidx(points[ea]) != qidx(points[eb]))
                                continue;
                            double dd = point_distance(points[ea], points[eb]);
                            if (dd >= best)
                                continue;
                            if (symmetric_config && A.size() > 1 && B.size() > 1) {
                                int pa = si ? A[1] : A[A.size() - 2];
                                int pb = sj ? B[1] : B[B.size() - 2];
                                if (qidx(points[pa]) == qidx(points[pb]) &&
                                    theta_distance(points[pa].theta_c, mirrored(points[pb].theta_c)) < 1e-3)
                                    continue;
                            }
                            best = dd;
                            bi = i;
                            bj = j;
                            bsi = si;
                            bsj = sj;
                        }
            if (bi >= 0) {
                std::vector<int> A = chains[bi], B = chains[bj];
                if (bsi)
                    std::reverse(A.begin(), A.end()); // A now ends at the fold
                if (!bsj)
                    std::reverse(B.begin(), B.end()); // B now starts at the fold
                A.insert(A.end(), B.begin(), B.end());
                chains.erase(chains.begin() + bj);
                chains[bi] = std::move(A);
                joined = true;
            }
        }
        for (auto& ch : chains) {
            Branch b;
            b.id = (int)out.size();
            b.code = code;
            b.points = ch;
            for (int i : ch)
                b.ambiguous = b.ambiguous || ambiguous.count(i);
            out.push_back(std::move(b));
        }
    }
    return out;
}

std::vector<Fold> detect_folds(const Branch& b, const std::vector<BranchPoint>& points)
{
    std::vector<Fold> out;
    const auto& ix = b.points;
    int n = (int)ix.size();
    if (n < 3)
        return out;
    int last_sign = 0, last_k = -1;
    for (int k = 0; k + 1 < n; ++k) {
        double dq = points[ix[k + 1]].Q - points[ix[k]].Q;
        int s = dq > 1e-12 ? 1 : dq < -1e-12 ? -1 : 0;
        if (s == 0)
            continue;
        if (last_sign != 0 && s != last_sign) {
            // the extreme-Q points sit between steps last_k and k
            int a = last_k, mid = last_k + 1, c = k + 1;
            double x0 = points[ix[a]].T_mean, y0 = points[ix[a]].Q;
            double x1 = points[ix[mid]].T_mean, y1 = points[ix[mid]].Q;
            double x2 = points[ix[c]].T_mean, y2 = points[ix[c]].Q;
            Fold f;
            f.branch_id = b.id;
            f.Q_fold = y1;
            f.T_mean_fold = x1;
            double den = (x0 - x1) * (x0 - x2) * (x1 - x2);
            if (std::abs(den) > 1e-14) {
                double A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den;
                double B = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den;
                double C = y0 - A * x0 * x0 - B * x0;
                if (A != 0.0) {
                    double xv = -B / (2 * A);
                    double lo = std::min({x0, x1, x2}), hi = std::max({x0, x1, x2});
                    if (xv >= lo && xv <= hi) {
                        f.T_mean_fold = xv;
                        f.Q_fold = C - B * B / (4 * A);
                    }
                }
            }
            out.push_back(f);
        }
        last_sign = s;
        last_k = k;
    }
    return out;
}

int max_coexisting(const Diagram& d, double* at_Q)
{
    std::map<double, int> count;
    for (const auto& p : d.points)
        ++count[p.Q];
    int best = 0;
    double q = 0;
    for (auto& [Q, c] : count)
        if (c > best) {
            best = c;
            q = Q;
        }
    if (at_Q)
        *at_Q = q;
    return best;
}

std::vector<Verdict> slope_verdicts(const Diagram& d, double slope_tol)
{
    std::vector<Verdict> v(d.points.size(), Verdict::inconclusive);
    for (const auto& b : d.branches) {
        if (b.points.size() < 3)
            continue;
        std::vector<SlopeSample> samples;
        for (int i : b.points)
            samples.push_back({d.points[i].Q, d.points[i].T_mean});
        auto s = slope_classify(samples, slope_tol);
        for (size_t k = 0; k < b.points.size(); ++k)
            v[b.points[k]] = s[k];
    }
    return v;
}

AgreementStats eigen_slope_agreement(const Diagram& d, double slope_tol)
{
    auto sv = slope_verdicts(d, slope_tol);
    AgreementStats st;
    for (size_t i = 0; i < d.points.size(); ++i) {
        Verdict e = d.points[i].stability, s = sv[i];
        auto decided = [](Verdict v) { return v == Verdict::stable || v == Verdict::unstable; };
        if (!decided(e) || !decided(s))
            continue;
        ++st.compared;
        st.agree += e == s;
    }
    return st;
}

std::vector<std::pair<double, int>> stable_counts(const Diagram& d)
{
    std::map<double, int> count;
    for (const auto& p : d.points) {
        count.emplace(p.Q, 0);
        if (p.stability == Verdict::stable)
            ++count[p.Q];
    }
    return {count.begin(), count.end()};
}

} // namespace ebm

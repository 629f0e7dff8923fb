#include "ebm/output.hpp"

#include "ebm/errors.hpp"

#include <boost/crc.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

namespace ebm {

std::string format_number(double x)
{
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

std::uint32_t crc32(const std::string& bytes)
{
    boost::crc_32_type c;
    c.process_bytes(bytes.data(), bytes.size());
    return c.checksum();
}

void write_atomic(const std::filesystem::path& path, const std::string& content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f)
            throw ReferenceError("cannot open " + tmp.string() + " for writing");
        f.write(content.data(), std::streamsize(content.size()));
        if (!f)
            throw ReferenceError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw ReferenceError("cannot rename " + tmp.string() + ": " + ec.message());
}

namespace {

std::string join_theta(const std::vector<double>& th)
{
    std::string s;
    for (std::size_t i = 0; i < th.size(); ++i) {
        if (i) s += ' ';
        s += format_number(th[i]);
    }
    return s;
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

std::string hex32(std::uint32_t v)
{
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

} // namespace

std::string profile_csv(const StationarySolution& s, double T_s)
{
    std::string out = "theta_rad,T_dimensionless,T_celsius\n";
    for (std::size_t i = 0; i < s.theta.size(); ++i)
        out += format_number(s.theta[i]) + ',' + format_number(s.T[i]) + ',' +
               format_number(T_s * s.T[i]) + '\n';
    return out;
}

nlohmann::json solution_json(const StationarySolution& s, int id, const PhysicalParams& p)
{
    nlohmann::json j;
    j["id"] = id;
    j["Q"] = s.Q;
    j["case"] = s.label.code();
    j["case_name"] = s.label.name();
    j["n_critical_latitudes"] = s.label.n_critical();
    j["theta_c"] = s.unknowns.theta_c;
    j["dT_at_c"] = s.unknowns.dT_at_c;
    j["T_north"] = s.unknowns.T_north;
    j["T_south"] = s.unknowns.T_south;
    j["residual"] = s.residual_norm;
    j["c1_mismatch"] = s.c1_mismatch;
    j["continuity"] = s.continuity;
    j["T_s"] = p.T_s;
    return j;
}

std::string diagram_csv(const Diagram& d)
{
    std::vector<int> branch_of(d.points.size(), -1);
    for (const auto& b : d.branches)
        for (int k : b.points)
            branch_of[k] = b.id;
    std::string out = "Q,T_mean_C,case,stability,n_critical_latitudes,branch_id,max_real_eig,theta_c\n";
    for (std::size_t i = 0; i < d.points.size(); ++i) {
        const auto& pt = d.points[i];
        out += format_number(pt.Q) + ',' + format_number(pt.T_mean) + ',' + pt.label.code() + ',' +
               to_string(pt.stability) + ',' + std::to_string(pt.label.n_critical()) + ',' +
               std::to_string(branch_of[i]) + ',' + format_number(pt.max_real_eig) + ',' +
               join_theta(pt.theta_c) + '\n';
    }
    return out;
}

std::string folds_csv(const Diagram& d)
{
    std::string out = "branch_id,Q_fold,T_mean_fold\n";
    for (const auto& f : d.folds)
        out += std::to_string(f.branch_id) + ',' + format_number(f.Q_fold) + ',' +
               format_number(f.T_mean_fold) + '\n';
    return out;
}

std::string spectrum_csv(const std::vector<std::complex<double>>& ev)
{
    std::string out = "re,im\n";
    for (auto z : ev)
        out += format_number(z.real()) + ',' + format_number(z.imag()) + '\n';
    return out;
}

std::string trajectory_csv(const std::vector<SimulationState>& states)
{
    std::string out = "t,theta_rad,T\n";
    for (const auto& s : states)
        for (std::size_t i = 0; i < s.T.size(); ++i)
            out += format_number(s.t) + ',' + format_number(s.grid.theta[i]) + ',' +
                   format_number(s.T[i]) + '\n';
    return out;
}

std::string kernel_table_csv(const std::vector<KernelTableRow>& rows)
{
    std::string out = "theta,xi,K,dK_left,dK_right\n";
    for (const auto& r : rows)
        out += format_number(r.theta) + ',' + format_number(r.xi) + ',' + format_number(r.K) + ',' +
               format_number(r.dK_left) + ',' + format_number(r.dK_right) + '\n';
    return out;
}

nlohmann::json report_json(const StabilityReport& r)
{
    nlohmann::json j;
    j["method"] = to_string(r.method);
    j["verdict"] = to_string(r.verdict);
    if (r.method == StabilityMethod::eigen) {
        j["max_real_eig"] = r.max_real_eig;
        j["N"] = r.N;
        j["n_eigenvalues"] = r.spectrum.size();
    }
    j["details"] = r.details;
    return j;
}

nlohmann::json to_json(const PhysicalParams& p)
{
    return {{"A", p.A},         {"B", p.B},           {"D", p.D},
            {"C_water", p.C_water}, {"C_land", p.C_land}, {"t0", p.t0},
            {"T_s", p.T_s},     {"T_s_land", p.T_s_land}, {"a1", p.a1},
            {"a2", p.a2},       {"a1_land", p.a1_land}, {"a2_land", p.a2_land},
            {"s0", p.s0},       {"s1", p.s1},         {"sigma", p.sigma}};
}

nlohmann::json to_json(const ContinentConfig& cfg)
{
    nlohmann::json j;
    j["kind"] = cfg.has_land() ? "continent" : "aquaplanet";
    if (cfg.has_land()) {
        j["l"] = cfg.l;
        j["epsilon"] = cfg.epsilon;
        j["theta_l1"] = cfg.theta_l1;
        j["theta_l2"] = cfg.theta_l2;
    }
    return j;
}

OutputSet::OutputSet(std::filesystem::path dir) : dir_(std::move(dir))
{
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec)
        throw ReferenceError("cannot create output directory " + dir_.string() + ": " + ec.message());
}

void OutputSet::write(const std::string& name, const std::string& content)
{
    write_atomic(dir_ / name, content);
    files_.push_back({name, content.size(), crc32(content)});
}

void OutputSet::write_json(const std::string& name, const nlohmann::json& j)
{
    write(name, j.dump(2) + '\n');
}

void OutputSet::write_manifest(nlohmann::json meta, const std::string& name)
{
    auto list = nlohmann::json::array();
    for (const auto& f : files_)
        list.push_back({{"name", f.name}, {"bytes", f.bytes}, {"crc32", hex32(f.crc)}});
    meta["files"] = list;
    meta["tool_version"] = tool_version();
    meta["written"] = utc_now();
    write_atomic(dir_ / name, meta.dump(2) + '\n');
}

std::string tool_version() { return "ebm 1.0.0"; }

} // namespace ebm

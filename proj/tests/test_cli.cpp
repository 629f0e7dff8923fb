#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <boost/crc.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name)
    {
        dir = fs::temp_directory_path() / ("ebm_cli_" + name + "_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// exit status of the CLI; stderr goes to err.txt in the scratch directory
int run(const Scratch& s, const std::string& args, const std::string& out = "out")
{
    std::string cmd = std::string("\"") + EBM_CLI_PATH + "\" --out-dir \"" + (s.dir / out).string() + "\" " +
                      args + " > \"" + (s.dir / "stdout.txt").string() + "\" 2> \"" +
                      (s.dir / "err.txt").string() + "\"";
    int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

} // namespace

TEST_CASE("solve writes profiles and a manifest that describes them")
{
    Scratch s("solve");
    REQUIRE(run(s, "solve --Q 247") == 0);
    auto out = s.dir / "out";
    auto m = json::parse(slurp(out / "manifest.json"));
    CHECK(m["command"] == "solve");
    CHECK(m["config"]["Q"] == 247.0);
    REQUIRE(m["files"].size() == 14);
    for (const auto& f : m["files"]) {
        auto path = out / f["name"].get<std::string>();
        REQUIRE(fs::exists(path));
        auto bytes = slurp(path);
        CHECK(f["bytes"] == bytes.size());
        boost::crc_32_type crc;
        crc.process_bytes(bytes.data(), bytes.size());
        char hex[9];
        std::snprintf(hex, sizeof hex, "%08x", crc.checksum());
        CHECK(f["crc32"] == std::string(hex));
    }
    auto csv = slurp(out / "solution_0.csv");
    CHECK(csv.rfind("theta_rad,T_dimensionless,T_celsius\n", 0) == 0);

    // identical inputs give identical bytes
    REQUIRE(run(s, "solve --Q 247", "again") == 0);
    for (int i = 0; i < 7; ++i) {
        auto name = "solution_" + std::to_string(i) + ".csv";
        CHECK(slurp(out / name) == slurp(s.dir / "again" / name));
    }
}

TEST_CASE("configuration errors exit with status 2 and name the line")
{
    Scratch s("config");
    auto cfg = s.dir / "bad.json";
    std::ofstream(cfg) << "{\n  \"A\": 203,\n  \"bogus\": 1\n}\n";
    CHECK(run(s, "--config \"" + cfg.string() + "\" solve") == 2);
    auto err = slurp(s.dir / "err.txt");
    CHECK(err.find("line 3") != std::string::npos);
    CHECK(err.find("bogus") != std::string::npos);

    CHECK(run(s, "--config \"" + (s.dir / "missing.json").string() + "\" solve") == 2);
    CHECK(run(s, "simulate --t-end 1") == 2);
    CHECK(run(s, "solve --Q -5") == 2);
    CHECK(run(s, "no-such-command") == 2);
}

TEST_CASE("an unknown equilibrium reference exits with status 3")
{
    Scratch s("ref");
    CHECK(run(s, "simulate --ic equilibrium:99 --t-end 1 --N 100") == 3);
    CHECK(run(s, "stability --Q 247 --solution 99 --N 100") == 3);
}

TEST_CASE("simulate echoes the initial state at zero duration")
{
    Scratch s("sim");
    REQUIRE(run(s, "simulate --ic uniform:0.5 --t-end 0 --N 100") == 0);
    auto csv = slurp(s.dir / "out" / "trajectory.csv");
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,theta_rad,T");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(line.substr(line.rfind(',') + 1) == "0.5");
    }
    CHECK(rows == 101);
}

TEST_CASE("verify with one resolution reports no order")
{
    Scratch s("verify");
    REQUIRE(run(s, "verify --N 100 --t-end 0.5 --source moving_gauss") == 0);
    auto v = json::parse(slurp(s.dir / "out" / "verify.json"));
    REQUIRE(v["sources"].size() == 1);
    CHECK(v["sources"][0]["order"].is_null());
    CHECK(v["sources"][0]["runs"][0]["N"] == 100);

    // an unreachable order is a numerical failure
    CHECK(run(s, "verify --N 100,200 --t-end 0.5 --source moving_gauss --min-order 5") == 4);
    auto w = json::parse(slurp(s.dir / "out" / "verify.json"));
    CHECK(w["sources"][0]["order"].get<double>() > 1.7);
    CHECK(w["pass"] == false);
}

TEST_CASE("stability and kernel table")
{
    Scratch s("stab");
    REQUIRE(run(s, "stability --Q 247 --solution 0 --N 400 --spectrum") == 0);
    auto r = json::parse(slurp(s.dir / "out" / "stability.json"));
    CHECK(r["method"] == "eigen");
    CHECK(r["max_real_eig"].get<double>() < 0);
    CHECK(fs::exists(s.dir / "out" / "spectrum.csv"));

    REQUIRE(run(s, "greenfn-table --n-theta 3 --n-xi 2") == 0);
    auto t = slurp(s.dir / "out" / "kernel_table.csv");
    CHECK(t.rfind("theta,xi,K,dK_left,dK_right\n", 0) == 0);
    CHECK(std::count(t.begin(), t.end(), '\n') == 7);
}

#include "ebm/config.hpp"

#include "ebm/errors.hpp"
#include "ebm/output.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace ebm {

namespace {

int line_of(const std::string& text, std::size_t pos)
{
    pos = std::min(pos, text.size());
    return 1 + (int)std::count(text.begin(), text.begin() + (std::ptrdiff_t)pos, '\n');
}

std::string where(const std::string& text, const std::string& key)
{
    auto pos = text.find('"' + key + '"');
    if (pos == std::string::npos)
        return "key '" + key + "'";
    return "line " + std::to_string(line_of(text, pos)) + ", key '" + key + "'";
}

std::map<std::string, double PhysicalParams::*> param_fields()
{
    return {{"A", &PhysicalParams::A},
            {"B", &PhysicalParams::B},
            {"D", &PhysicalParams::D},
            {"C_water", &PhysicalParams::C_water},
            {"C_land", &PhysicalParams::C_land},
            {"t0", &PhysicalParams::t0},
            {"T_s", &PhysicalParams::T_s},
            {"T_s_land", &PhysicalParams::T_s_land},
            {"a1", &PhysicalParams::a1},
            {"a2", &PhysicalParams::a2},
            {"a1_land", &PhysicalParams::a1_land},
            {"a2_land", &PhysicalParams::a2_land},
            {"s0", &PhysicalParams::s0},
            {"s1", &PhysicalParams::s1},
            {"sigma", &PhysicalParams::sigma}};
}

double number(const nlohmann::json& v, const std::string& text, const std::string& key)
{
    if (!v.is_number())
        throw InvalidParameter(where(text, key) + ": expected a number");
    return v.get<double>();
}

} // namespace

RunConfig parse_config(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidParameter("config syntax error at line " + std::to_string(line_of(text, e.byte)) +
                               ": " + e.what());
    }
    if (!j.is_object())
        throw InvalidParameter("config must be a JSON object");

    RunConfig rc;
    const auto fields = param_fields();
    double l = std::numbers::pi / 4, eps = 0;
    std::string kind;
    bool land_keys = false;

    auto continent_key = [&](const std::string& sub, const nlohmann::json& v, const std::string& shown) {
        if (sub == "l") {
            l = number(v, text, shown);
            land_keys = true;
        } else if (sub == "epsilon") {
            eps = number(v, text, shown);
            land_keys = true;
        } else if (sub == "kind") {
            if (!v.is_string())
                throw InvalidParameter(where(text, shown) + ": expected \"aquaplanet\" or \"continent\"");
            kind = v.get<std::string>();
            if (kind != "aquaplanet" && kind != "continent")
                throw InvalidParameter(where(text, shown) + ": unknown kind '" + kind + "'");
        } else {
            throw InvalidParameter(where(text, shown) + ": unknown key");
        }
    };

    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (auto f = fields.find(key); f != fields.end()) {
            rc.p.*(f->second) = number(*it, text, key);
        } else if (key == "Q") {
            rc.Q = number(*it, text, key);
        } else if (key.rfind("continent.", 0) == 0) {
            continent_key(key.substr(10), *it, key);
        } else if (key == "continent") {
            if (!it->is_object())
                throw InvalidParameter(where(text, key) + ": expected an object");
            for (auto c = it->begin(); c != it->end(); ++c)
                continent_key(c.key(), *c, c.key());
        } else {
            throw InvalidParameter(where(text, key) + ": unknown key");
        }
    }

    rc.p.validate();
    if (!(rc.Q > 0))
        throw InvalidParameter(where(text, "Q") + ": Q must be positive");
    if (kind == "continent" || (kind.empty() && land_keys))
        rc.cfg = continent_config(l, eps);
    return rc;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw InvalidParameter("cannot read config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

nlohmann::json to_json(const RunConfig& rc)
{
    auto j = to_json(rc.p);
    j["Q"] = rc.Q;
    j["continent"] = to_json(rc.cfg);
    return j;
}

} // namespace ebm

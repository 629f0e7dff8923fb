#pragma once

#include "ebm/bifurcation.hpp"
#include "ebm/bim.hpp"
#include "ebm/fdm.hpp"
#include "ebm/greenfn.hpp"
#include "ebm/stability.hpp"

#include <json.hpp>

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ebm {

// 17 significant digits, '.' decimal point, independent of the locale.
std::string format_number(double x);

std::uint32_t crc32(const std::string& bytes);

// Write to a temporary sibling and rename over the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string profile_csv(const StationarySolution& s, double T_s);
nlohmann::json solution_json(const StationarySolution& s, int id, const PhysicalParams& p);
std::string diagram_csv(const Diagram& d);
std::string folds_csv(const Diagram& d);
std::string spectrum_csv(const std::vector<std::complex<double>>& ev);
std::string trajectory_csv(const std::vector<SimulationState>& states);
std::string kernel_table_csv(const std::vector<KernelTableRow>& rows);
nlohmann::json report_json(const StabilityReport& r);

nlohmann::json to_json(const PhysicalParams& p);
nlohmann::json to_json(const ContinentConfig& cfg);

// Files of one run inside an output directory. The manifest goes last and
// lists every file with its size and checksum.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir);

    void write(const std::string& name, const std::string& content);
    void write_json(const std::string& name, const nlohmann::json& j);
    // meta is merged into the manifest (command, config, tolerances, notes).
    void write_manifest(nlohmann::json meta, const std::string& name = "manifest.json");

    const std::filesystem::path& dir() const { return dir_; }

private:
    struct Record {
        std::string name;
        std::size_t bytes;
        std::uint32_t crc;
    };
    std::filesystem::path dir_;
    std::vector<Record> files_;
};

std::string tool_version();

} // namespace ebm

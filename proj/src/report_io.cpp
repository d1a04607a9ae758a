#include "cdx/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cdx/errors.hpp"

namespace cdx {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string rows_to_csv(const std::vector<ResidualRow>& rows) {
    std::string out = "schema_version,equation_id,h,res_Linf,res_L2,tail,order_est,exact\n";
    for (const auto& r : rows) {
        out += std::to_string(kReportSchemaVersion);
        out += ',';
        out += r.equation_id;
        out += ',';
        out += num(r.h);
        out += ',';
        out += num(r.res_linf);
        out += ',';
        out += num(r.res_l2);
        out += ',';
        out += num(r.tail);
        out += ',';
        out += num(r.order_est);
        out += ',';
        out += r.exact ? '1' : '0';
        out += '\n';
    }
    return out;
}

const char* closure_name(Closure c) {
    switch (c) {
        case Closure::Real: return "real";
        case Closure::Planar: return "planar";
        default: return "full";
    }
}

std::string report_to_json(const std::string& run_id, const Scenario& sc, const SolveStats& stats,
                           const std::vector<ResidualRow>& rows) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["run_id"] = run_id;
    j["equation"] = sc.equation;
    j["level"] = sc.level;
    j["s"] = sc.s;
    j["p"] = sc.p;
    j["stats"] = {
        {"closure", closure_name(stats.closure)}, {"rcond_min", stats.rcond_min},
        {"spectral_max", stats.spectral_max},     {"neumann_gap", stats.neumann_gap},
        {"tail_ratio", stats.tail_ratio},         {"solves", stats.solves},
    };
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        j["rows"].push_back({
            {"equation_id", r.equation_id},
            {"h", r.h},
            {"res_Linf", r.res_linf},
            {"res_L2", r.res_l2},
            {"tail", r.tail},
            {"order_est", r.order_est},
            {"exact", r.exact},
        });
    }
    return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open for writing: " + path);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw ConfigError("short write: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace cdx

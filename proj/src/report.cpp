#include <fstream>

#include "sparsebnb/data_io.hpp"

namespace sparsebnb {

nlohmann::ordered_json report_to_json(const SolveReport<double>& report, const nlohmann::ordered_json& config) {
    nlohmann::ordered_json out;
    out["status"] = to_string(report.status);
    out["objective"] = report.best_objective;
    out["lower_bound"] = report.global_lb;
    out["gap"] = report.gap;
    out["support"] = nlohmann::ordered_json::array();
    out["coefficients"] = nlohmann::ordered_json::array();
    for (Index j : report.support) {
        out["support"].push_back(j);
        out["coefficients"].push_back(report.best_beta[j]);
    }
    out["nodes"] = report.nodes_solved;
    out["rounds"] = report.iterations;
    out["heuristic_objective"] = report.heuristic_objective;
    out["wall_time"] = report.wall_time;
    out["config"] = config.is_null() ? nlohmann::ordered_json::object() : config;
    return out;
}

void write_report(const SolveReport<double>& report, const std::string& path, const nlohmann::ordered_json& config) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << report_to_json(report, config).dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path);
}

ReportRecord read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    ReportRecord rec;
    try {
        rec.status = j.at("status").get<std::string>();
        rec.objective = j.at("objective").get<double>();
        rec.lower_bound = j.at("lower_bound").get<double>();
        rec.gap = j.at("gap").get<double>();
        rec.support = j.at("support").get<IndexSet>();
        rec.coefficients = j.at("coefficients").get<std::vector<double>>();
        rec.nodes = j.at("nodes").get<Index>();
        rec.wall_time = j.at("wall_time").get<double>();
        rec.config = j.at("config");
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": malformed report: " + e.what());
    }
    return rec;
}

}  // namespace sparsebnb

#include <sstream>

#include <json.hpp>

#include "varlat/vartree.hpp"

namespace varlat {

namespace {

nlohmann::json factor_json(const Factor& f, const FunctionRegistry& reg) {
    return nlohmann::json{
        {"identity", factor_to_string(f.id, reg)},
        {"kind", f.id.is_cov ? "cov" : "var"},
        {"total_value", f.total_value},
        {"contribution", f.contribution},
        {"height", f.height},
        {"specificity", f.specificity},
        {"score", f.score},
    };
}

}  // namespace

std::string report_to_json(const AnalysisReport& report, const FunctionRegistry& reg) {
    nlohmann::json j;
    j["root"] = path_to_string(report.tree.root_path, reg);
    j["n_samples"] = report.tree.n_samples;
    j["root_variance_ns2"] = report.tree.root_variance;
    j["call_graph_height"] = report.heights.call_graph;
    nlohmann::json factors = nlohmann::json::array();
    for (const Factor& f : report.selected) factors.push_back(factor_json(f, reg));
    j["factors"] = factors;
    return j.dump(2);
}

std::string report_to_csv(const AnalysisReport& report, const FunctionRegistry& reg) {
    std::ostringstream out;
    out << "identity,kind,total_value,contribution,height,specificity,score\n";
    for (const Factor& f : report.selected) {
        out << '"' << factor_to_string(f.id, reg) << '"' << ','
            << (f.id.is_cov ? "cov" : "var") << ',' << f.total_value << ','
            << f.contribution << ',' << f.height << ',' << f.specificity << ','
            << f.score << '\n';
    }
    return out.str();
}

}  // namespace varlat

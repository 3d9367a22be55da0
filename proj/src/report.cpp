#include "neurodavis/report.hpp"

#include "neurodavis/error.hpp"

#include <cmath>

namespace neurodavis {

using nlohmann::json;

json to_json(const EvalReport& report) {
    json metrics = json::object();
    for (const auto& [name, value] : report.metrics) {
        if (!std::isfinite(value)) {
            throw NumericError("metric " + name + " is not finite", value);
        }
        metrics[name] = value;
    }
    return {{"schema_version", kReportSchemaVersion},
            {"dataset", report.dataset},
            {"seed", report.seed},
            {"config_hash", report.config_hash},
            {"metrics", std::move(metrics)}};
}

EvalReport eval_report_from_json(const json& j) {
    EvalReport report;
    report.dataset = j.value("dataset", "");
    report.seed = j.value("seed", std::uint64_t{0});
    report.config_hash = j.value("config_hash", "");
    for (const auto& [name, value] : j.at("metrics").items()) {
        report.metrics[name] = value.get<double>();
    }
    return report;
}

json to_json(const MetricSummary& summary) {
    return {{"median", summary.median}, {"min", summary.min}, {"max", summary.max}, {"count", summary.count}};
}

json to_json(const SuiteResult& suite) {
    json runs = json::array();
    for (const auto& r : suite.runs) {
        runs.push_back(to_json(r));
    }
    json summary = json::object();
    for (const auto& [name, s] : suite.summary) {
        summary[name] = to_json(s);
    }
    return {{"schema_version", kReportSchemaVersion}, {"runs", std::move(runs)}, {"summary", std::move(summary)}};
}

}  // namespace neurodavis

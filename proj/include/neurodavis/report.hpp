#ifndef NEURODAVIS_REPORT_HPP
#define NEURODAVIS_REPORT_HPP

#include "neurodavis/analysis.hpp"
#include "neurodavis/metrics.hpp"

#include "json.hpp"

namespace neurodavis {

/// Bumped whenever a key is renamed or its meaning changes.
inline constexpr int kReportSchemaVersion = 1;

nlohmann::json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MetricSummary& summary);
/// {"schema_version", "runs": [EvalReport...], "summary": {metric: {median, min, max, count}}}
nlohmann::json to_json(const SuiteResult& suite);

}  // namespace neurodavis

#endif

#pragma once

#include <string>

#include "json.hpp"

#include "cmiknn/dinfo.hpp"
#include "cmiknn/estimator.hpp"

namespace cmiknn {

/// Canonical report JSON. Deliberately excludes wall-clock timing and thread
/// counts so that reruns with the same master seed produce byte-identical
/// files regardless of parallelism; timing goes to a separate sidecar.
nlohmann::ordered_json report_to_json(const EstimateReport& report);
nlohmann::ordered_json report_to_json(const MidiffReport& report);
nlohmann::ordered_json digraph_to_json(const DIGraph& graph);
nlohmann::ordered_json timing_to_json(const StageSeconds& seconds);

nlohmann::ordered_json schedule_to_json(const BatchSchedule& schedule);
nlohmann::ordered_json net_to_json(const NetConfig& net);

void write_json(const nlohmann::ordered_json& doc, const std::string& path);

/// One row per trial, doubles at full precision.
void write_report_csv(const EstimateReport& report, const std::string& path);
void write_report_csv(const MidiffReport& report, const std::string& path);
void write_digraph_csv(const DIGraph& graph, const std::string& path);

}  // namespace cmiknn

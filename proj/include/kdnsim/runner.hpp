#pragma once

#include <memory>
#include <string>
#include <vector>

#include "kdnsim/controllers.hpp"
#include "kdnsim/metrics.hpp"
#include "kdnsim/scenario.hpp"

namespace kdnsim {

struct ReportBundle {
    std::string trace_csv;
    std::string metrics_json;
    std::string decisions_csv;
    std::string enforcement_csv;
    std::string timing_csv;
    std::string telemetry_csv;      // empty unless telemetry_dump
    std::string graph_edges_csv;    // empty unless graph_dump
    std::string graph_features_csv; // empty unless graph_dump
};

struct RunResult {
    ReportBundle bundle;
    MetricsReport metrics;
    RunTrace trace;
    double wall_seconds = 0.0;
};

// Builds the controller named by cfg.controller with resolved thresholds.
std::unique_ptr<Controller> make_controller(const ScenarioConfig& cfg, const Topology& topo);

// Runs the full closed loop: sample -> preprocess -> window -> graph ->
// decide -> compile -> enforce -> feedback -> step, once per tick, and writes
// every artifact under out_dir. Deterministic per (config, stream seed)
// apart from the wall-clock sidecar (timing_csv).
//
// stream_seed drives the stochastic run streams (controller exploration,
// enforcement latency draws) without regenerating the scenario's world;
// 0 means "use cfg.seed". Comparisons sweep stream seeds as replicates over
// the fixed testbed.
RunResult run_scenario(const ScenarioConfig& cfg, const std::string& out_dir_override = "",
                       std::uint64_t stream_seed = 0);

// Variant driving a caller-supplied controller (used to inspect controller
// internals after a run). No files are written when out_dir is empty.
RunResult run_scenario_with(const ScenarioConfig& cfg, Controller& controller,
                            const std::string& out_dir, std::uint64_t stream_seed = 0);

struct ComparisonRow {
    std::string controller;
    std::uint64_t seed = 0;
    std::string status; // "ok" or the failure message
    MetricsReport metrics;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
    std::string table_csv;
    std::vector<std::string> plot_files;
};

// Cross product of controllers x seeds over one scenario; aggregates metric
// reports into a CSV plus the four comparison charts. Failed runs keep their
// row with a status message.
ComparisonTable compare_controllers(const ScenarioConfig& cfg,
                                    const std::vector<std::string>& controllers,
                                    const std::vector<std::uint64_t>& seeds,
                                    const std::string& out_dir);

} // namespace kdnsim

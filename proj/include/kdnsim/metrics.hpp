#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kdnsim/actions.hpp"
#include "kdnsim/world.hpp"

namespace kdnsim {

// Anomaly onset: a node's epsilon flag flipped 0 -> 1 at `tick`. The touched
// set (node plus incident links) is what dispatches are matched against.
struct AnomalyEvent {
    Tick tick = 0;
    NodeId node = 0;
    std::vector<ResourceId> touched;
};

struct DispatchEvent {
    Tick tick = 0;
    std::vector<ResourceId> touched;
    double pipeline_latency_ms = 0.0; // simulated enforcement latency of the action
};

struct TraceRow {
    Tick tick = 0;
    double mean_delay_ms = 0.0;
    double throughput_pkts = 0.0;
    double mean_cpu = 0.0;
    double total_queue = 0.0;
    int anomaly_count = 0;
    int actions_selected = 0;
    double objective_value = 0.0;
    double enforcement_latency_ms = 0.0;
    double latency_increase_ms = 0.0; // mean-delay delta vs. last fault onset
};

struct RunTrace {
    std::vector<TraceRow> rows;
    std::vector<AnomalyEvent> anomalies;
    std::vector<DispatchEvent> dispatches;
    double dt_ms = 10.0;
};

struct LatencyStat {
    std::optional<double> mean_ms; // empty when no anomaly was ever matched
    std::vector<double> samples_ms;
    int unmatched = 0;
};

struct EffectivenessResult {
    double delay_reduction = 0.0;        // clamped to [0,1]
    double throughput_variability = 0.0; // coefficient of variation
    double effectiveness_score = 0.0;    // in [0,1]
};

struct StabilityResult {
    double jitter = 0.0;             // stddev of per-tick delay deltas
    double throughput_variance = 0.0;
    double stability_score = 0.0;    // in [0,1]
};

struct MetricsWeights {
    double effectiveness_delay = 0.5;
    double effectiveness_variability = 0.5;
    double stability_jitter = 1.0;
    double stability_variance = 1.0;
    // Reference scales for min-max normalizing the stability components.
    double jitter_norm_hi = 5.0;     // ms
    double variance_norm_hi = 20.0;  // packets^2
};

// Mean elapsed time from anomaly onset to the first subsequent dispatch that
// overlaps the anomaly's touched set within `timeout_ticks`. Unmatched
// anomalies are counted separately and excluded from the mean.
LatencyStat decision_latency(const RunTrace& trace, Tick timeout_ticks = 50);

// Delay reduction between the first and final `baseline_window` ticks,
// throughput coefficient of variation after warm-up, and their weighted
// composite.
EffectivenessResult effectiveness(const RunTrace& trace, std::size_t baseline_window,
                                  const MetricsWeights& weights = {});

// Delay jitter, throughput variance, and the composite
// 1 / (1 + w1*jhat + w2*vhat) with scale-free normalized components.
StabilityResult stability(const RunTrace& trace, const MetricsWeights& weights = {});

struct MetricsReport {
    std::string controller;
    std::string scenario;
    std::uint64_t seed = 0;
    std::int64_t steps = 0;
    std::string reproducibility_hash;
    LatencyStat latency;
    EffectivenessResult eff;
    StabilityResult stab;
    int actions_dispatched = 0;
};

std::string metrics_report_json(const MetricsReport& report);

// Population (not sample) statistics used throughout.
double mean_of(const std::vector<double>& xs);
double population_variance_of(const std::vector<double>& xs);

} // namespace kdnsim

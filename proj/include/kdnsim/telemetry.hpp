#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "kdnsim/world.hpp"

namespace kdnsim {

// Per-node observation: mean incident link delay, delivered throughput, cpu
// load, summed incident queue depth, and a binary anomaly flag.
struct TelemetryRecord {
    NodeId node_id = 0;
    double lambda = 0.0; // ms
    double delta = 0.0;  // packets/tick
    double gamma = 0.0;  // fraction in [0,1]
    double eta = 0.0;    // packets
    int epsilon = 0;     // 0 or 1
    Tick tick = 0;

    // Min-max scaled copies against the configured reference ranges,
    // clamped to [0,1]. Populated by preprocess.
    double norm_lambda = 0.0;
    double norm_delta = 0.0;
    double norm_gamma = 0.0;
    double norm_eta = 0.0;
};

struct TelemetrySnapshot {
    Tick tick = 0;
    std::vector<TelemetryRecord> records; // one per node, ascending node id
};

struct ValueRange {
    double lo = 0.0;
    double hi = 1.0;
};

struct PreprocessConfig {
    double alpha = 0.3; // exponential smoothing factor, in (0,1]
    double delay_thresh_ms = 0.0; // 0 -> auto: 3x base network mean delay
    double queue_thresh = 0.0;    // 0 -> auto: 0.8x max link capacity
    double cpu_thresh = 0.9;
    ValueRange lambda_range{0.0, 50.0};
    ValueRange delta_range{0.0, 200.0};
    ValueRange gamma_range{0.0, 1.0};
    ValueRange eta_range{0.0, 100.0};
    double penalty_delay_ms = 0.0; // 0 -> auto: 10x delay threshold
};

// Fills the zero-valued "auto" thresholds from the topology.
PreprocessConfig resolve_thresholds(PreprocessConfig cfg, const Topology& topo);

// Samples and preprocesses the per-node observation vectors. Owns the
// per-node smoothing state carried between ticks; one collector per run.
class TelemetryCollector {
public:
    explicit TelemetryCollector(PreprocessConfig cfg);

    const PreprocessConfig& config() const { return cfg_; }

    // Raw observation per node. Failed or isolated nodes report the penalty
    // delay so the record set keeps constant size.
    TelemetrySnapshot sample(const WorldState& world) const;

    // Smoothing, threshold marking, and normalization, in that order.
    // Carries one smoothing state per node across calls.
    TelemetrySnapshot preprocess(const TelemetrySnapshot& snapshot);

    TelemetrySnapshot collect(const WorldState& world) { return preprocess(sample(world)); }

    void reset_smoothing() { smooth_.clear(); }

private:
    struct Smoothed {
        bool primed = false;
        double lambda = 0.0, delta = 0.0, gamma = 0.0, eta = 0.0;
    };

    PreprocessConfig cfg_;
    std::vector<Smoothed> smooth_;
};

// CSV dump, header: tick,node_id,lambda,delta,gamma,eta,epsilon
void write_telemetry_header(std::ostream& out);
void append_telemetry_csv(std::ostream& out, const TelemetrySnapshot& snapshot);

} // namespace kdnsim
